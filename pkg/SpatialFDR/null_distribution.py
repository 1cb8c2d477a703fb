"""
Null distribution of aggregated p*-values.

Under the null a p-value is uniform, so the median of k independent
neighbor p-values follows Beta((k+1)/2, (k+1)/2) for odd k. On real data
neighbors are neither independent nor all null, so the null CDF G* is
estimated from the data instead:

    - Method I  (method1_ghat): symmetric empirical estimator that mirrors
      the upper tail of the p*-values, which is dominated by null sites.
    - Method II (method2_ghat): composite estimator that also models null
      sites on the boundary of the signal region, whose neighborhoods
      contain j signal p-values, as a mixture sum_j theta_j * Q_j.

All NullCdf variants evaluate vectorised on arrays, are nondecreasing and
equal 1 at t = 1. They serialise to JSON dicts through to_dict and
null_cdf_from_dict.
"""

from abc import ABC, abstractmethod
import logging

import numpy as np
from scipy import stats

from .aggregate import median_rows
from .errors import DegenerateNullError, UnsupportedAnalyticError
from .lattice_grid import Lattice, NeighborhoodTable, TruthMask
from .rng import get_rng

logger = logging.getLogger("spatialfdr.nulldist")

INIT_MONTE_CARLO_DRAWS = 200_000
INIT_METHOD2_REPS = 1
INIT_SUP_GRID_POINTS = 10_001


def _values(data) -> np.ndarray:
    if isinstance(data, Lattice):
        return data.values
    return np.asarray(data, dtype=np.float64).reshape(-1)


class NullCdf(ABC):
    """Evaluable CDF of a null p*-value."""
    variant = None

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=np.float64)
        out = self._evaluate(np.atleast_1d(t_arr))
        if t_arr.ndim == 0:
            return float(out[0])
        return out.reshape(t_arr.shape)

    @abstractmethod
    def _evaluate(self, t: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def to_dict(self) -> dict:
        ...


class BetaNullCdf(NullCdf):
    """
    Beta((k+1)/2, (k+1)/2) CDF, the law of the median of k uniforms, odd k.

    k = 1 is the uniform distribution and evaluates to t exactly.
    """
    variant = "beta"

    def __init__(self, k: int):
        if int(k) != k or k < 1 or k % 2 == 0:
            raise UnsupportedAnalyticError(
                f"Analytic median null needs odd k >= 1, got k={k}. "
                "Use monte_carlo_median_cdf for even k")
        self.k = int(k)
        self._dist = stats.beta((self.k + 1) / 2, (self.k + 1) / 2)

    def _evaluate(self, t):
        if self.k == 1:
            return np.clip(t, 0.0, 1.0)
        return self._dist.cdf(t)

    def to_dict(self):
        return {"variant": self.variant, "k": self.k}


class NormalNullCdf(NullCdf):
    """
    Normal approximation N(0.5, 1/(4(k+2))) of the median null, k >= 5.

    Censored to [0, 1]: 0 below t = 0 and exactly 1 from t = 1 on.
    """
    variant = "normal"

    def __init__(self, k: int):
        if k < 5:
            raise UnsupportedAnalyticError(
                f"Normal approximation needs k >= 5, got k={k}")
        self.k = int(k)
        self._dist = stats.norm(0.5, np.sqrt(1.0 / (4.0 * (self.k + 2))))

    @property
    def variance(self):
        return 1.0 / (4.0 * (self.k + 2))

    def _evaluate(self, t):
        out = self._dist.cdf(t)
        out = np.where(t >= 1.0, 1.0, out)
        return np.where(t < 0.0, 0.0, out)

    def to_dict(self):
        return {"variant": self.variant, "k": self.k}


class EmpiricalNullCdf(NullCdf):
    """
    Right-continuous step function: value values[i] on [knots[i], knots[i+1]).

    0 left of the first knot, 1 from t = 1 on.
    """
    variant = "empirical"

    def __init__(self, knots, values):
        knots = np.asarray(knots, dtype=np.float64)
        values = np.asarray(values, dtype=np.float64)
        if knots.shape != values.shape:
            raise ValueError("knots and values must have the same length")
        if knots.size > 1 and (np.diff(knots) <= 0).any():
            raise ValueError("knots must be strictly increasing")
        self.knots = knots
        self.values = values

    @classmethod
    def from_sample(cls, sample):
        """Empirical CDF of a sample."""
        sample = np.sort(_values(sample))
        if sample.size == 0:
            raise DegenerateNullError("Cannot build an empirical CDF "
                                      "from an empty sample")
        knots = np.unique(sample)
        counts = np.searchsorted(sample, knots, side="right")
        return cls(knots, counts / sample.size)

    def _evaluate(self, t):
        idx = np.searchsorted(self.knots, t, side="right") - 1
        out = np.where(idx >= 0, self.values[np.clip(idx, 0, None)], 0.0)
        return np.where(t >= 1.0, 1.0, out)

    def to_dict(self):
        return {"variant": self.variant, "knots": self.knots.tolist(),
                "values": self.values.tolist()}


class SymmetricNullCdf(NullCdf):
    """
    Method I estimate, evaluated exactly from the sorted p*-values.

    For 0 <= t <= 0.5:  #{p* >= 1 - t} / D
    For 0.5 < t <= 1:   1 - #{p* > t} / D
    with D = 2 #{p* > 0.5} + #{p* = 0.5}.
    """
    variant = "empirical"

    def __init__(self, sorted_pstar: np.ndarray, denominator: int):
        self.sorted_pstar = sorted_pstar
        self.denominator = denominator

    def _count_ge(self, x):
        n = self.sorted_pstar.size
        return n - np.searchsorted(self.sorted_pstar, x, side="left")

    def _count_gt(self, x):
        n = self.sorted_pstar.size
        return n - np.searchsorted(self.sorted_pstar, x, side="right")

    def _evaluate(self, t):
        d = self.denominator
        lower = self._count_ge(1.0 - t) / d
        upper = 1.0 - self._count_gt(t) / d
        out = np.where(t <= 0.5, lower, upper)
        out = np.where(t < 0.0, 0.0, out)
        return np.where(t >= 1.0, 1.0, out)

    def knots(self) -> np.ndarray:
        s = self.sorted_pstar
        high = s[s >= 0.5]
        candidates = np.concatenate([1.0 - high, s[s > 0.5], [0.5, 1.0]])
        candidates = candidates[(candidates >= 0.0) & (candidates <= 1.0)]
        return np.unique(candidates)

    def to_empirical(self) -> EmpiricalNullCdf:
        knots = self.knots()
        return EmpiricalNullCdf(knots, self._evaluate(knots))

    def to_dict(self):
        return self.to_empirical().to_dict()


class CompositeNullCdf(NullCdf):
    """
    Method II mixture sum_j weights[j] * components[j](t).

    components[j] is None where weights[j] == 0.
    """
    variant = "composite"

    def __init__(self, weights, components, fallback=False):
        weights = np.asarray(weights, dtype=np.float64)
        if len(components) != weights.size:
            raise ValueError("need one component per weight")
        if (weights < 0).any() or not np.isclose(weights.sum(), 1.0):
            raise ValueError(f"weights must be nonnegative and sum to 1, "
                             f"got {weights.tolist()}")
        for w, comp in zip(weights, components):
            if w > 0 and comp is None:
                raise ValueError("positive weight without a component")
        self.weights = weights
        self.components = list(components)
        self.fallback = bool(fallback)

    def _evaluate(self, t):
        active = [(w, c) for w, c in zip(self.weights, self.components)
                  if w > 0]
        if len(active) == 1:
            out = active[0][1](t)
        else:
            out = np.zeros_like(t)
            for w, comp in active:
                out = out + w * comp(t)
            out = np.minimum(out, 1.0)
        return np.where(t >= 1.0, 1.0, out)

    def to_dict(self):
        return {
            "variant": self.variant,
            "weights": self.weights.tolist(),
            "components": [None if c is None else c.to_dict()
                           for c in self.components],
            "fallback": self.fallback,
        }


def null_cdf_from_dict(data: dict) -> NullCdf:
    variant = data.get("variant")
    if variant == "beta":
        return BetaNullCdf(data["k"])
    if variant == "normal":
        return NormalNullCdf(data["k"])
    if variant == "empirical":
        return EmpiricalNullCdf(data["knots"], data["values"])
    if variant == "composite":
        components = [None if c is None else null_cdf_from_dict(c)
                      for c in data["components"]]
        return CompositeNullCdf(data["weights"], components,
                                fallback=data.get("fallback", False))
    raise ValueError(f"Unknown NullCdf variant '{variant}'")


def beta_median_cdf(k: int, t):
    """CDF of Beta((k+1)/2, (k+1)/2) at t; odd k >= 1 only."""
    return BetaNullCdf(k)(t)


def normal_approx_cdf(k: int, t):
    """CDF of N(0.5, 1/(4(k+2))) at t; k >= 5 only."""
    if k < 5:
        raise UnsupportedAnalyticError(
            f"Normal approximation needs k >= 5, got k={k}")
    sd = np.sqrt(1.0 / (4.0 * (k + 2)))
    out = stats.norm.cdf(np.asarray(t, dtype=np.float64), loc=0.5, scale=sd)
    return float(out) if np.ndim(out) == 0 else out


def monte_carlo_median_cdf(k: int, draws: int = INIT_MONTE_CARLO_DRAWS,
                           seed: int = 0) -> EmpiricalNullCdf:
    """Empirical law of the median of k i.i.d. uniforms (any k >= 1)."""
    if k < 1:
        raise UnsupportedAnalyticError(f"k must be >= 1, got {k}")
    rng = get_rng(seed, "monte_carlo")
    sample = median_rows(rng.random((draws, k)))
    return EmpiricalNullCdf.from_sample(sample)


def analytic_null_cdf(k: int, draws: int = INIT_MONTE_CARLO_DRAWS,
                      seed: int = 0) -> NullCdf:
    """Beta law for odd k, Monte Carlo median law for even k."""
    if k % 2:
        return BetaNullCdf(k)
    logger.info("No closed form for even k=%d, using %d Monte Carlo draws",
                k, draws)
    return monte_carlo_median_cdf(k, draws=draws, seed=seed)


def method1_ghat(pstar) -> SymmetricNullCdf:
    """
    Method I estimate of the null CDF of p*.

    Raises:
        DegenerateNullError: no p*-value is >= 0.5
    """
    s = np.sort(_values(pstar))
    n = s.size
    above = n - np.searchsorted(s, 0.5, side="right")
    at_half = np.searchsorted(s, 0.5, side="right") - np.searchsorted(
        s, 0.5, side="left")
    denominator = int(2 * above + at_half)
    if denominator == 0:
        raise DegenerateNullError(
            "Every p*-value is below 0.5, so the upper tail holds no null "
            "sites (all-signal saturation). Check the input or use a "
            "larger neighborhood / larger lambda")
    logger.debug("Method I: D=%d from %d p*-values", denominator, n)
    return SymmetricNullCdf(s, denominator)


def estimate_n0(pstar, lam: float, gstar: NullCdf) -> float:
    """
    Number of null sites: #{p* > lam} / (1 - G*(lam)), clamped to [0, n].
    """
    values = _values(pstar)
    g_lam = gstar(lam)
    if g_lam >= 1.0:
        raise DegenerateNullError(
            f"Estimated null CDF equals 1 at lambda={lam}; use a smaller "
            "lambda")
    w = np.count_nonzero(values > lam)
    n0 = w / (1.0 - g_lam)
    return float(min(max(n0, 0.0), values.size))


def _sample_without_replacement(rng, pool_size, rows, count):
    """
    count distinct indices in [0, pool_size) per row.

    Draw r picks the u-th index not chosen yet; shifting u past the sorted
    earlier picks maps it onto the full range.
    """
    chosen = np.empty((rows, count), dtype=np.int64)
    for r in range(count):
        u = rng.integers(0, pool_size - r, size=rows)
        previous = np.sort(chosen[:, :r], axis=1)
        for c in range(r):
            u = u + (previous[:, c] <= u)
        chosen[:, r] = u
    return chosen


def _contaminated_medians(rng, p, nbrs, sites, j, signal_pool):
    """
    Medians of neighborhoods of null interior sites after replacing j
    randomly chosen neighbor p-values with p-values drawn from the signal
    pool.
    """
    samples = []
    sizes = nbrs.sizes[sites]
    for k in np.unique(sizes):
        group = sites[sizes == k]
        j_eff = min(j, int(k))
        block = p[nbrs.index[group, :k]]

        # drop j_eff entries at random; self may be dropped
        order = np.argsort(rng.random(block.shape), axis=1)
        kept = np.take_along_axis(block, order[:, j_eff:], axis=1)

        if signal_pool.size >= j_eff:
            picks = _sample_without_replacement(rng, signal_pool.size,
                                                group.size, j_eff)
        else:
            picks = rng.integers(0, signal_pool.size,
                                 size=(group.size, j_eff))
        combined = np.concatenate([kept, signal_pool[picks]], axis=1)
        samples.append(median_rows(combined))
    return np.concatenate(samples)


def method2_ghat(p, pstar, nbrs: NeighborhoodTable, lam: float, seed: int,
                 reps: int = INIT_METHOD2_REPS, n0_lambda=None) -> NullCdf:
    """
    Method II composite estimate of the null CDF of p*.

    1. n0 from the Method I estimate at n0_lambda (defaults to lam),
       rounded and clamped to [0, n].
    2. Sites with p* <= p*_(n - n0) form the estimated signal set V1
       (ties go to V1); the rest form V0.
    3. theta_j = share of V0 sites with exactly j neighbors in V1.
    4. Q_0 is the Method I estimate. For j >= 1, every V0 site without
       V1 neighbors drops j of its neighbor p-values at random and takes
       j p-values sampled from V1 instead; Q_j is the empirical CDF of the
       resulting medians, pooled over reps draws.
    5. G*_c = sum_j theta_j Q_j.

    Falls back to Method I (weights [1], fallback=True) when n0 rounds to 0
    or no V0 site is free of V1 neighbors.

    Args:
        p: p-value lattice
        pstar: p*-value lattice aggregated from p over nbrs
        nbrs: Neighborhood table
        lam: Tuning constant for n0
        seed: Run seed; draws use the "resample" stream
        reps: Number of independent exclusion/resampling draws
        n0_lambda: Separate lambda for step 1, defaults to lam

    Returns:
        CompositeNullCdf
    """
    p_values = _values(p)
    pstar_values = _values(pstar)
    if p_values.size != pstar_values.size or p_values.size != nbrs.n_sites:
        raise ValueError("p, pstar and nbrs must describe the same lattice")
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    n = pstar_values.size

    q0 = method1_ghat(pstar_values)
    n0 = estimate_n0(pstar_values, lam if n0_lambda is None else n0_lambda,
                     q0)
    n0_int = int(min(max(np.rint(n0), 0), n))
    n1 = n - n0_int
    logger.info("Method II: n0=%.2f (rounded %d), n1=%d", n0, n0_int, n1)

    def fallback(reason):
        logger.warning("Method II falls back to Method I: %s", reason)
        return CompositeNullCdf([1.0], [q0], fallback=True)

    if n0_int == 0:
        return fallback("estimated number of null sites is 0")

    if n1 > 0:
        cutoff = np.sort(pstar_values)[n1 - 1]
        in_v1 = pstar_values <= cutoff
    else:
        in_v1 = np.zeros(n, dtype=bool)
    v0 = np.flatnonzero(~in_v1)
    if v0.size == 0:
        return fallback("no site left in the estimated null set")

    # signal neighbors per site; padding (-1) never counts
    padded = np.where(nbrs.index >= 0, in_v1[nbrs.index], False)
    signal_neighbors = padded.sum(axis=1)[v0]

    k = nbrs.interior_size
    counts = np.bincount(signal_neighbors, minlength=k)
    weights = counts / v0.size
    interior = v0[signal_neighbors == 0]
    if interior.size == 0:
        return fallback("every estimated null site touches the signal set")

    signal_pool = p_values[in_v1]
    rng = get_rng(seed, "resample")
    components = [q0] + [None] * (weights.size - 1)
    for j in range(1, weights.size):
        if weights[j] == 0:
            continue
        medians = [_contaminated_medians(rng, p_values, nbrs, interior, j,
                                         signal_pool)
                   for _ in range(reps)]
        components[j] = EmpiricalNullCdf.from_sample(np.concatenate(medians))
        logger.debug("Method II: Q_%d from %d medians, theta=%.4f", j,
                     sum(m.size for m in medians), weights[j])

    return CompositeNullCdf(weights, components)


def oracle_null_cdf(pstar, truth: TruthMask) -> EmpiricalNullCdf:
    """Empirical CDF of p* over the true null sites."""
    values = _values(pstar)
    return EmpiricalNullCdf.from_sample(values[~truth.values])


def sup_distance(a, b, grid=None) -> float:
    """sup_t |a(t) - b(t)| over a grid (default: 10001 points on [0, 1])."""
    if grid is None:
        grid = np.linspace(0.0, 1.0, INIT_SUP_GRID_POINTS)
    return float(np.max(np.abs(np.asarray(a(grid)) - np.asarray(b(grid)))))
