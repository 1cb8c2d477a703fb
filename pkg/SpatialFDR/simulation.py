"""
Synthetic spatial signals and detection metrics.

Observations follow Y(v) = mu(v) + eps(v) with mu > 0 on rectangular signal
regions and 0 elsewhere. Error fields:

    cross_ma  moving average of an i.i.d. N(0,1) parent field one cell
              larger per side over the axis cross, divided by sqrt(k)
    box_ma    7x7 moving average of a parent field six cells larger per
              side, divided by 7
    exp       i.i.d. Exp(1) - 1
    iid       i.i.d. N(0,1)

All errors have zero mean and unit variance. The noise stream of
SpatialFDR.rng drives every draw, so a seed fully determines the output.
"""

from dataclasses import dataclass, field, replace
import logging
from typing import Optional, Tuple

import numpy as np
from scipy import signal

from .errors import ConfigError, DimsMismatchError
from .lattice_grid import BooleanLattice, Lattice, TruthMask
from .lip_analysis import DistModel
from .rng import get_rng

logger = logging.getLogger("spatialfdr.sim")

SCENARIOS = ("example1", "example1-desk", "example2", "example3",
             "exponential", "block3d")
NOISE_KINDS = ("cross_ma", "box_ma", "exp", "iid")


@dataclass(frozen=True)
class SignalRegion:
    """Axis-aligned box of sites with mean mu, given by origin and shape."""
    origin: Tuple[int, ...]
    shape: Tuple[int, ...]
    mu: float

    def slices(self):
        return tuple(slice(o, o + s) for o, s in zip(self.origin, self.shape))


@dataclass(frozen=True)
class Scenario:
    kind: str
    dims: Tuple[int, ...]
    regions: Tuple[SignalRegion, ...] = field(default_factory=tuple)
    noise: str = "cross_ma"
    C: Optional[float] = None

    def __post_init__(self):
        if self.noise not in NOISE_KINDS:
            raise ConfigError(f"Unknown noise kind '{self.noise}'")
        for region in self.regions:
            if len(region.origin) != len(self.dims) or any(
                    o < 0 or o + s > d for o, s, d in
                    zip(region.origin, region.shape, self.dims)):
                raise ConfigError(
                    f"Signal region {region} does not fit in dims "
                    f"{list(self.dims)}")

    def model(self) -> DistModel:
        """Distribution model used to turn Y into p-values."""
        if self.noise == "exp":
            return DistModel.exponential_shift(self.C or 1.0)
        mus = [r.mu for r in self.regions] or [1.0]
        return DistModel.normal(max(mus))

    def scaled(self, dims):
        """Same layout with regions scaled proportionally to new dims."""
        dims = tuple(int(d) for d in dims)
        factors = [d / d0 for d, d0 in zip(dims, self.dims)]
        regions = tuple(
            SignalRegion(
                tuple(int(round(o * f)) for o, f in zip(r.origin, factors)),
                tuple(max(1, int(round(s * f)))
                      for s, f in zip(r.shape, factors)),
                r.mu)
            for r in self.regions)
        return replace(self, dims=dims, regions=regions)

    def to_dict(self):
        return {
            "kind": self.kind,
            "dims": list(self.dims),
            "noise": self.noise,
            "C": self.C,
            "regions": [{"origin": list(r.origin), "shape": list(r.shape),
                         "mu": r.mu} for r in self.regions],
        }


def example1(dims=None) -> Scenario:
    """Two squares (mu=4 and mu=2) in 5-point moving-average noise."""
    base = Scenario(
        "example1", (258, 258),
        (SignalRegion((40, 40), (60, 60), 4.0),
         SignalRegion((150, 160), (30, 30), 2.0)),
        noise="cross_ma")
    return base if dims is None else base.scaled(dims)


def example1_desk() -> Scenario:
    return example1((128, 128))


def example2(dims=None) -> Scenario:
    """example1 layout in 7x7 moving-average noise."""
    base = replace(example1(), kind="example2", noise="box_ma")
    return base if dims is None else base.scaled(dims)


def example3(dims=(258, 258), width=2, period=6, mu=4.0) -> Scenario:
    """Thin vertical stripes in the central region, so most null sites
    near signal are boundary sites."""
    rows, cols = dims
    top, left = rows // 4, cols // 4
    height = rows // 2
    regions = tuple(SignalRegion((top, c), (height, width), mu)
                    for c in range(left, left + cols // 2 - width + 1,
                                   period))
    return Scenario("example3", tuple(dims), regions, noise="cross_ma")


def exponential(C=float(np.log(8)), dims=None) -> Scenario:
    """50x50 shifted exponential scenario with 0.16 n signal sites."""
    base = Scenario(
        "exponential", (50, 50),
        (SignalRegion((8, 8), (20, 14), C),
         SignalRegion((30, 30), (12, 10), C)),
        noise="exp", C=float(C))
    return base if dims is None else base.scaled(dims)


def block3d(dims=(32, 32, 32), side=8, mu=3.0) -> Scenario:
    """Independent N(0,1) noise with one cubic signal block."""
    origin = tuple((d - side) // 2 for d in dims)
    return Scenario("block3d", tuple(dims),
                    (SignalRegion(origin, (side,) * len(dims), mu),),
                    noise="iid")


def scenario_from_name(name, C=None, dims=None) -> Scenario:
    """
    Build a named scenario; dims, when given, replaces the default size of
    every kind.
    """
    if name not in SCENARIOS:
        raise ConfigError(f"Unknown scenario '{name}'. "
                          f"Use one of: {', '.join(SCENARIOS)}")
    if dims is not None:
        dims = tuple(int(d) for d in dims)
        if not dims or any(d < 1 for d in dims):
            raise ConfigError(f"dims must be positive, got {list(dims)}")
        if name != "block3d" and len(dims) != 2:
            raise ConfigError(f"Scenario '{name}' is 2D, got dims "
                              f"{list(dims)}")
    if name == "example1":
        return example1(dims)
    if name == "example1-desk":
        return example1(dims or (128, 128))
    if name == "example2":
        return example2(dims)
    if name == "example3":
        return example3(dims or (258, 258))
    if name == "exponential":
        return exponential(C if C is not None else float(np.log(8)), dims)
    return block3d(dims or (32, 32, 32))


def _cross_kernel(ndim):
    kernel = np.zeros((3,) * ndim)
    centre = (1,) * ndim
    kernel[centre] = 1.0
    for axis in range(ndim):
        for step in (0, 2):
            index = list(centre)
            index[axis] = step
            kernel[tuple(index)] = 1.0
    return kernel


def error_field(noise: str, dims, rng: np.random.Generator) -> np.ndarray:
    dims = tuple(dims)
    if noise == "exp":
        return rng.exponential(1.0, size=dims) - 1.0
    if noise == "iid":
        return rng.standard_normal(dims)
    if noise == "cross_ma":
        parent = rng.standard_normal(tuple(d + 2 for d in dims))
        kernel = _cross_kernel(len(dims))
        if len(dims) == 2:
            summed = signal.convolve2d(parent, kernel, mode="valid")
        else:
            summed = signal.convolve(parent, kernel, mode="valid")
        return summed / np.sqrt(kernel.sum())
    if noise == "box_ma":
        parent = rng.standard_normal(tuple(d + 6 for d in dims))
        kernel = np.ones((7,) * len(dims))
        if len(dims) == 2:
            summed = signal.convolve2d(parent, kernel, mode="valid")
        else:
            summed = signal.convolve(parent, kernel, mode="valid")
        return summed / np.sqrt(kernel.size)
    raise ConfigError(f"Unknown noise kind '{noise}'")


def signal_means(scenario: Scenario) -> np.ndarray:
    mu = np.zeros(scenario.dims)
    for region in scenario.regions:
        mu[region.slices()] = region.mu
    return mu


def generate(scenario: Scenario, seed: int):
    """
    Draw one realization of a scenario.

    Returns:
        (Lattice of Y, TruthMask)
    """
    rng = get_rng(seed, "noise")
    mu = signal_means(scenario)
    y = mu + error_field(scenario.noise, scenario.dims, rng)
    truth = TruthMask(scenario.dims, (mu > 0).reshape(-1))
    logger.debug("Generated %s seed=%d: %d signal sites of %d",
                 scenario.kind, seed, truth.count, truth.size)
    return Lattice(scenario.dims, y.reshape(-1)), truth


def pvalues_one_sided(y: Lattice, model: DistModel) -> Lattice:
    """p(v) = 1 - F0(Y(v)), clamped to [0, 1]."""
    p = np.clip(model.null.sf(y.values), 0.0, 1.0)
    return Lattice(y.dims, p)


def pvalues_two_sided(y: Lattice, model: DistModel) -> Lattice:
    """p(v) = 2 min(F0(Y(v)), 1 - F0(Y(v))), clamped to [0, 1]."""
    null = model.null
    p = 2.0 * np.minimum(null.cdf(y.values), null.sf(y.values))
    return Lattice(y.dims, np.clip(p, 0.0, 1.0))


@dataclass
class MetricsReport:
    """
    Counts of a rejection mask against the truth:

                     retained   rejected
        null            U          V       n0
        signal          T          S       n1
                        W          R       n
    """
    U: int
    V: int
    T: int
    S: int
    W: int
    R: int
    n0: int
    n1: int
    sensitivity: Optional[float]
    specificity: Optional[float]
    fdp: float

    def to_dict(self):
        return {
            "U": self.U, "V": self.V, "T": self.T, "S": self.S,
            "W": self.W, "R": self.R, "n0": self.n0, "n1": self.n1,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "fdp": self.fdp,
        }


def metrics(mask: BooleanLattice, truth: TruthMask) -> MetricsReport:
    """
    Sensitivity S/n1, specificity U/n0 and FDP V/(R v 1) of a mask.

    Sensitivity is None when n1 = 0, specificity None when n0 = 0.
    """
    if tuple(mask.dims) != tuple(truth.dims):
        raise DimsMismatchError(
            f"Mask dims {list(mask.dims)} differ from truth dims "
            f"{list(truth.dims)}")
    rejected = mask.values
    signal_sites = truth.values

    S = int(np.count_nonzero(rejected & signal_sites))
    V = int(np.count_nonzero(rejected & ~signal_sites))
    T = int(np.count_nonzero(~rejected & signal_sites))
    U = int(np.count_nonzero(~rejected & ~signal_sites))
    n1 = int(np.count_nonzero(signal_sites))
    n0 = truth.size - n1
    R = int(np.count_nonzero(rejected))
    W = truth.size - R

    if U + V != n0 or T + S != n1 or W + R != truth.size:
        raise RuntimeError(
            f"Count identities violated: U={U} V={V} T={T} S={S} W={W} "
            f"R={R} n0={n0} n1={n1}")

    return MetricsReport(
        U=U, V=V, T=T, S=S, W=W, R=R, n0=n0, n1=n1,
        sensitivity=S / n1 if n1 else None,
        specificity=U / n0 if n0 else None,
        fdp=V / max(R, 1),
    )
