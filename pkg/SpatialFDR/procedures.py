"""
End-to-end FDR and FDR_L runs on a p-value lattice.
"""

from dataclasses import dataclass
import logging

from .aggregate import FilterKind, aggregate
from .errors import ConfigError
from .fdr_core import (INIT_LAMBDA, FdrCurve, RejectionMask, fdr_hat,
                       fdrl_hat, reject, threshold)
from .lattice_grid import Lattice, NeighborhoodTable
from .null_distribution import (INIT_METHOD2_REPS, NormalNullCdf, NullCdf,
                                analytic_null_cdf, method1_ghat, method2_ghat)

logger = logging.getLogger("spatialfdr.procedures")

# "1": Method I, "1n": normal approximation, "2": Method II,
# "beta": analytic median law of the interior neighborhood size
METHODS = ("1", "1n", "2", "beta")
INIT_METHOD = "1"


@dataclass
class ProcedureResult:
    curve: FdrCurve
    mask: RejectionMask
    pstar: Lattice = None
    gstar: NullCdf = None


def null_cdf_for(method: str, p: Lattice, pstar: Lattice,
                 nbrs: NeighborhoodTable, lam: float = INIT_LAMBDA,
                 seed: int = 0, reps: int = INIT_METHOD2_REPS) -> NullCdf:
    method = str(method)
    if method == "1":
        return method1_ghat(pstar)
    if method == "1n":
        return NormalNullCdf(nbrs.interior_size)
    if method == "2":
        return method2_ghat(p, pstar, nbrs, lam, seed, reps=reps)
    if method == "beta":
        return analytic_null_cdf(nbrs.interior_size, seed=seed)
    raise ConfigError(f"Unknown method '{method}'. "
                      f"Use one of: {', '.join(METHODS)}")


def run_fdr(p: Lattice, alpha: float, lam: float = INIT_LAMBDA
            ) -> ProcedureResult:
    curve = threshold(p, fdr_hat(p, lam), alpha, lam=lam, procedure="fdr")
    return ProcedureResult(curve, reject(p, curve.t_alpha))


def run_fdrl_on_pstar(pstar: Lattice, gstar: NullCdf, alpha: float,
                      lam: float = INIT_LAMBDA) -> ProcedureResult:
    estimator = fdrl_hat(pstar, lam, gstar=gstar)
    curve = threshold(pstar, estimator, alpha, lam=lam, procedure="fdrl")
    return ProcedureResult(curve, reject(pstar, curve.t_alpha), pstar, gstar)


def run_fdrl(p: Lattice, nbrs: NeighborhoodTable, alpha: float,
             lam: float = INIT_LAMBDA, filter=FilterKind.MEDIAN,
             method: str = INIT_METHOD, seed: int = 0,
             reps: int = INIT_METHOD2_REPS) -> ProcedureResult:
    """
    Aggregate p over nbrs, estimate the null CDF, threshold p* at alpha.
    """
    pstar = aggregate(p, nbrs, filter)
    gstar = null_cdf_for(method, p, pstar, nbrs, lam=lam, seed=seed,
                         reps=reps)
    return run_fdrl_on_pstar(pstar, gstar, alpha, lam)
