"""
Plug-in FDR estimators, data-driven thresholds and rejection masks.

FDR on raw p-values:

    FDR(t)   = W(lam) * t / ((R(t) v 1) * (1 - lam))

FDR_L on aggregated p*-values with estimated null CDF G*:

    FDR_L(t) = W*(lam) * G*(t) / ((R*(t) v 1) * (1 - G*(lam)))

where W(x) counts values > x and R(t) counts values <= t. The threshold
t_alpha is the largest candidate (observed values plus 1) whose estimate is
at most alpha, or 0 when no candidate qualifies. All comparisons are exact.
"""

from dataclasses import dataclass, field
import io
import logging

import numpy as np

from .errors import DegenerateNullError
from .lattice_grid import BooleanLattice, Lattice, TruthMask
from .null_distribution import NullCdf

logger = logging.getLogger("spatialfdr.fdr")

INIT_LAMBDA = 0.1
INIT_ALPHA = 0.05


class RejectionMask(BooleanLattice):
    """True marks a rejected null hypothesis."""


def _values(data) -> np.ndarray:
    if isinstance(data, Lattice):
        return data.values
    return np.asarray(data, dtype=np.float64).reshape(-1)


def _plugin_estimate(sorted_values, lam, g_t, g_lam, t):
    """W(lam) * g_t / ((R(t) v 1) * (1 - g_lam)) for sorted data."""
    n = sorted_values.size
    w_lam = n - np.searchsorted(sorted_values, lam, side="right")
    r_t = np.searchsorted(sorted_values, t, side="right")
    numerator = w_lam * g_t
    denominator = np.maximum(r_t, 1) * (1.0 - g_lam)
    return numerator / denominator


def _scalar_or_array(t_in, out):
    if np.ndim(t_in) == 0:
        return float(out)
    return out


def fdr_hat(p, lam: float = INIT_LAMBDA, t=None):
    """
    Estimated FDR of thresholding raw p-values at t (scalar or array).

    With t None, returns the estimator as a callable of t.
    """
    sorted_values = np.sort(_values(p))

    def estimate(t):
        t_arr = np.asarray(t, dtype=np.float64)
        out = _plugin_estimate(sorted_values, lam, t_arr, lam, t_arr)
        return _scalar_or_array(t, out)

    return estimate if t is None else estimate(t)


def fdrl_hat(pstar, lam: float = INIT_LAMBDA, t=None, gstar: NullCdf = None):
    """
    Estimated FDR of thresholding p*-values at t under null CDF gstar.

    With t None, returns the estimator as a callable of t.

    Raises:
        DegenerateNullError: gstar(lam) == 1
    """
    if gstar is None:
        raise ValueError("fdrl_hat needs a null CDF")
    g_lam = gstar(lam)
    if g_lam >= 1.0:
        raise DegenerateNullError(
            f"Estimated null CDF equals 1 at lambda={lam}; the FDR_L "
            "estimate is undefined. Use a smaller lambda")
    sorted_values = np.sort(_values(pstar))

    def estimate(t):
        t_arr = np.asarray(t, dtype=np.float64)
        out = _plugin_estimate(sorted_values, lam, gstar(t_arr), g_lam,
                               t_arr)
        return _scalar_or_array(t, out)

    return estimate if t is None else estimate(t)


@dataclass
class FdrCurve:
    """Estimated FDR on the candidate thresholds and the chosen t_alpha."""
    candidates: np.ndarray = field(repr=False)
    estimates: np.ndarray = field(repr=False)
    alpha: float
    t_alpha: float
    rejections: int
    lam: float = None
    procedure: str = None

    def to_csv(self) -> str:
        buffer = io.StringIO()
        buffer.write("t,estimate\n")
        for t, e in zip(self.candidates, self.estimates):
            buffer.write(f"{t!r},{e!r}\n")
        return buffer.getvalue()

    def summary(self) -> dict:
        return {
            "alpha": self.alpha,
            "lambda": self.lam,
            "t_alpha": self.t_alpha,
            "rejections": self.rejections,
        }


def threshold(values, estimator, alpha: float, lam: float = None,
              procedure: str = None) -> FdrCurve:
    """
    Choose t_alpha = sup{t in candidates: estimator(t) <= alpha}.

    Args:
        values: Observed p- or p*-values
        estimator: Callable mapping an array of t to estimates
        alpha: Target level in [0, 1]
        lam, procedure: Recorded on the curve for reporting

    Returns:
        FdrCurve; t_alpha is 0 when no candidate qualifies
    """
    values = _values(values)
    candidates = np.union1d(values, [1.0])
    estimates = np.asarray(estimator(candidates), dtype=np.float64)
    feasible = np.flatnonzero(estimates <= alpha)
    t_alpha = float(candidates[feasible[-1]]) if feasible.size else 0.0
    rejections = int(np.count_nonzero(values <= t_alpha))
    logger.info("%s threshold at alpha=%g: t_alpha=%.6g, %d rejections",
                procedure or "FDR", alpha, t_alpha, rejections)
    return FdrCurve(candidates, estimates, float(alpha), t_alpha, rejections,
                    lam, procedure)


def reject(field_lattice: Lattice, t_alpha: float) -> RejectionMask:
    """Reject every site whose value is <= t_alpha."""
    return RejectionMask(field_lattice.dims, field_lattice.values <= t_alpha)


def fdp_at(values, truth: TruthMask, t):
    """Realized false discovery proportion V(t) / (R(t) v 1)."""
    values = _values(values)
    t_arr = np.asarray(t, dtype=np.float64)
    nulls = np.sort(values[~truth.values])
    all_sorted = np.sort(values)
    v_t = np.searchsorted(nulls, t_arr, side="right")
    r_t = np.searchsorted(all_sorted, t_arr, side="right")
    out = v_t / np.maximum(r_t, 1)
    return _scalar_or_array(t, out)
