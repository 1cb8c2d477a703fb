"""
Lack-of-identification analysis: alpha_inf and endurance.

When the number of tests grows, the estimated FDR curve of a procedure
converges to a limit whose infimum alpha_inf is the smallest level the
procedure can ever control; below it the threshold collapses to 0 and
nothing but exact zeros is rejected. Endurance is 1 - alpha_inf.

For a null F0 and alternative F1 of the test statistic, with
G1(t) = 1 - F1(F0^-1(1 - t)) the CDF of a signal p-value and B the
Beta((k+1)/2, (k+1)/2) CDF:

    FDR_inf(t)   = [pi0 (1 - lam) + pi1 (1 - G1(lam))] t
                   / ((pi0 t + pi1 G1(t)) (1 - lam))

    FDR_L_inf(t) = [pi0 (1 - B(lam)) + pi1 (1 - B(G1(lam)))] B(t)
                   / ((pi0 B(t) + pi1 B(G1(t))) (1 - B(lam)))

alpha_inf_numeric takes the infimum of both over a geometric grid and
reports it at two refinement levels. alpha_inf_exponential gives the
closed forms for the shifted exponential model (FDR_L for k = 5 only).
"""

from dataclasses import asdict, dataclass, field
import logging
import re

import numpy as np
from scipy import stats

from .errors import ConfigError, NonInvertibleModelError
from .fdr_core import INIT_LAMBDA
from .null_distribution import BetaNullCdf

logger = logging.getLogger("spatialfdr.lip")

INIT_TGRID_POINTS = 10_000
INIT_TGRID_MIN = 1e-8
INIT_PI0 = 0.84
INIT_K = 5

DEFAULT_SHIFTS = tuple(np.log(m) for m in (8, 12, 16, 20, 24, 28, 32, 36))

FAMILIES = ("exponential_shift", "normal", "student_t")
PROCEDURES = ("fdr", "fdrl_k5")


@dataclass(frozen=True)
class DistModel:
    """
    Null F0 and alternative F1 of a test statistic.

    Families:
        exponential_shift(C): F0 = Exp(1) - 1, F1 = F0 shifted by C
        normal(C, sigma):     F0 = N(0, 1),   F1 = N(C, sigma^2)
        student_t(C, d0, d1): F0 = t(d0),     F1 = t(d1) shifted by C
    """
    family: str
    C: float
    sigma: float = 1.0
    d0: float = None
    d1: float = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"Unknown model family '{self.family}'")
        if not self.C > 0:
            raise ConfigError(f"C must be > 0, got {self.C}")
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")
        if self.family == "student_t":
            if self.d0 is None or self.d1 is None or min(self.d0,
                                                         self.d1) < 1:
                raise ConfigError("student_t needs d0, d1 >= 1")

    @classmethod
    def exponential_shift(cls, C):
        return cls("exponential_shift", float(C))

    @classmethod
    def normal(cls, C, sigma=1.0):
        return cls("normal", float(C), float(sigma))

    @classmethod
    def student_t(cls, C, d0, d1):
        return cls("student_t", float(C), d0=float(d0), d1=float(d1))

    @property
    def null(self):
        if self.family == "exponential_shift":
            return stats.expon(loc=-1.0)
        if self.family == "normal":
            return stats.norm(0.0, 1.0)
        return stats.t(self.d0)

    @property
    def alt(self):
        if self.family == "exponential_shift":
            return stats.expon(loc=self.C - 1.0)
        if self.family == "normal":
            return stats.norm(self.C, self.sigma)
        return stats.t(self.d1, loc=self.C)

    def signal_pvalue_cdf(self, t):
        """G1(t) = 1 - F1(F0^-1(1 - t)), the CDF of a signal p-value."""
        t = np.asarray(t, dtype=np.float64)
        with np.errstate(invalid="ignore", over="ignore"):
            x = self.null.isf(t)
            g1 = self.alt.sf(x)
        bad = np.isnan(x) | np.isnan(g1) | ((x == np.inf) & (t > 0))
        if np.any(bad):
            first = float(np.atleast_1d(t)[np.atleast_1d(bad)][0])
            raise NonInvertibleModelError(
                f"{self.family}: F0 cannot be inverted at t={first:.3g}")
        return g1

    def to_dict(self):
        return {k: v for k, v in asdict(self).items() if v is not None}


def alpha_inf_exponential(C: float, lam: float = INIT_LAMBDA,
                          pi0: float = INIT_PI0,
                          procedure: str = "fdr") -> float:
    """
    Closed-form alpha_inf for the shifted exponential model.

    Args:
        C: Shift, > 0
        lam: Tuning constant in (0, 1)
        pi0: Null proportion in (0, 1]
        procedure: "fdr", or "fdrl_k5" for FDR_L with 5-site neighborhoods
    """
    if procedure not in PROCEDURES:
        raise ConfigError(f"Unknown procedure '{procedure}'. "
                          f"Use one of: {', '.join(PROCEDURES)}")
    pi1 = 1.0 - pi0
    e_c = np.exp(C)
    if procedure == "fdr":
        tail = 1.0 - lam * e_c if lam < np.exp(-C) else 0.0
        return float((pi0 + pi1 * tail / (1.0 - lam)) / (pi0 + pi1 * e_c))

    beta = BetaNullCdf(5)
    g1_lam = min(1.0, lam * e_c)
    num = pi0 + pi1 * (1.0 - beta(g1_lam)) / (1.0 - beta(lam))
    return float(num / (pi0 + pi1 * np.exp(3.0 * C)))


def _fdr_limit(g1, t, lam, g1_lam, pi0):
    pi1 = 1.0 - pi0
    scale = pi0 * (1.0 - lam) + pi1 * (1.0 - g1_lam)
    return scale * t / ((pi0 * t + pi1 * g1) * (1.0 - lam))


def _fdrl_limit(beta, g1, t, lam, g1_lam, pi0):
    pi1 = 1.0 - pi0
    b_lam = beta(lam)
    scale = pi0 * (1.0 - b_lam) + pi1 * (1.0 - beta(g1_lam))
    b_t = beta(t)
    return scale * b_t / ((pi0 * b_t + pi1 * beta(g1)) * (1.0 - b_lam))


def dominance_conditions(model: DistModel, lam: float = INIT_LAMBDA,
                         points: int = 2001) -> dict:
    """
    Check numerically the sufficient conditions for alpha_inf(FDR) >=
    alpha_inf(FDR_L): f1 <= f0 left of the null median, and
    1 - F0(F1^-1(0.5)) <= lam <= 0.5.
    """
    null, alt = model.null, model.alt
    lo = null.ppf(1e-9)
    x = np.linspace(lo, null.median(), points)
    f0, f1 = null.pdf(x), alt.pdf(x)
    density_ok = bool(np.all(f1 <= f0 * (1.0 + 1e-12) + 1e-300))
    lam_lower = float(null.sf(alt.ppf(0.5)))
    lam_ok = bool(lam_lower <= lam <= 0.5)
    return {
        "density_condition": density_ok,
        "lambda_lower": lam_lower,
        "lambda_condition": lam_ok,
        "holds": density_ok and lam_ok,
    }


@dataclass
class LipReport:
    alpha_inf_fdr: float
    alpha_inf_fdrl: float
    coarse_alpha_inf_fdr: float
    coarse_alpha_inf_fdrl: float
    lam: float
    pi0: float
    k: int
    model: dict = field(default_factory=dict)
    grid_points: int = 0
    t_min: float = INIT_TGRID_MIN
    argmin_fdr: float = None
    argmin_fdrl: float = None
    dominance: dict = None

    @property
    def endurance_fdr(self):
        return 1.0 - self.alpha_inf_fdr

    @property
    def endurance_fdrl(self):
        return 1.0 - self.alpha_inf_fdrl

    def to_dict(self):
        data = asdict(self)
        data["endurance_fdr"] = self.endurance_fdr
        data["endurance_fdrl"] = self.endurance_fdrl
        return data


def alpha_inf_numeric(model: DistModel, lam: float = INIT_LAMBDA,
                      pi0: float = INIT_PI0, k: int = INIT_K,
                      tgrid: int = INIT_TGRID_POINTS,
                      t_min: float = INIT_TGRID_MIN) -> LipReport:
    """
    Infimum of the limiting FDR and FDR_L curves over a geometric grid.

    The fine grid has tgrid points from t_min to 1; the coarse grid keeps
    the fine points with t >= sqrt(t_min), so coarse values are never below
    fine ones.

    Raises:
        NonInvertibleModelError: F0 cannot be inverted on the grid
    """
    if tgrid < 1000:
        raise ConfigError(f"tgrid needs at least 1000 points, got {tgrid}")
    if not 0 < pi0 <= 1:
        raise ConfigError(f"pi0 must lie in (0, 1], got {pi0}")
    beta = BetaNullCdf(k)

    t = np.geomspace(t_min, 1.0, tgrid)
    g1 = model.signal_pvalue_cdf(t)
    g1_lam = float(model.signal_pvalue_cdf(lam))

    with np.errstate(divide="ignore", invalid="ignore"):
        fdr = _fdr_limit(g1, t, lam, g1_lam, pi0)
        fdrl = _fdrl_limit(beta, g1, t, lam, g1_lam, pi0)
    # B(t) may underflow to 0 far into the tail; such points carry no
    # information about the infimum
    fdrl = np.where(np.isfinite(fdrl), fdrl, np.inf)
    fdr = np.where(np.isfinite(fdr), fdr, np.inf)

    coarse = t >= np.sqrt(t_min)
    i_fdr, i_fdrl = int(np.argmin(fdr)), int(np.argmin(fdrl))

    report = LipReport(
        alpha_inf_fdr=min(float(fdr[i_fdr]), 1.0),
        alpha_inf_fdrl=min(float(fdrl[i_fdrl]), 1.0),
        coarse_alpha_inf_fdr=min(float(fdr[coarse].min()), 1.0),
        coarse_alpha_inf_fdrl=min(float(fdrl[coarse].min()), 1.0),
        lam=lam, pi0=pi0, k=k, model=model.to_dict(), grid_points=tgrid,
        t_min=t_min, argmin_fdr=float(t[i_fdr]),
        argmin_fdrl=float(t[i_fdrl]),
        dominance=dominance_conditions(model, lam),
    )
    logger.info("alpha_inf %s: FDR %.6g (coarse %.6g), FDR_L %.6g "
                "(coarse %.6g)", model.family, report.alpha_inf_fdr,
                report.coarse_alpha_inf_fdr, report.alpha_inf_fdrl,
                report.coarse_alpha_inf_fdrl)
    return report


def endurance(report: LipReport):
    """(1 - alpha_inf FDR, 1 - alpha_inf FDR_L)."""
    return report.endurance_fdr, report.endurance_fdrl


def parse_shift(text) -> float:
    """Parse a shift such as "2.0", "log8" or "log(8)"."""
    text = str(text).strip().lower().replace(" ", "")
    match = re.fullmatch(r"log\(?([0-9.eE+-]+)\)?", text)
    try:
        if match:
            return float(np.log(float(match.group(1))))
        return float(text)
    except ValueError:
        raise ConfigError(f"Cannot parse C value '{text}'") from None


def shift_label(C: float) -> str:
    """"log(8)" for C = log 8, otherwise the number."""
    base = np.exp(C)
    if abs(base - round(base)) < 1e-9:
        return f"log({int(round(base))})"
    return f"{C:.4g}"


def format_table(columns) -> str:
    """
    Text table with one column per C value.

    Args:
        columns: Iterable of (C, alpha_inf_fdr, alpha_inf_fdrl)
    """
    columns = list(columns)
    heads = ["C"] + [shift_label(c) for c, _, _ in columns]
    rows = [
        ["alpha_inf FDR"] + [f"{a:.4f}" for _, a, _ in columns],
        ["alpha_inf FDR_L"] + [f"{b:.4f}" for _, _, b in columns],
        ["endurance FDR"] + [f"{1 - a:.4f}" for _, a, _ in columns],
        ["endurance FDR_L"] + [f"{1 - b:.4f}" for _, _, b in columns],
    ]
    width0 = max(len(r[0]) for r in rows + [heads])
    widths = [max(len(r[i]) for r in rows + [heads])
              for i in range(1, len(heads))]

    def line(cells):
        return "  ".join([cells[0].ljust(width0)] +
                         [c.rjust(w) for c, w in zip(cells[1:], widths)])

    return "\n".join([line(heads)] + [line(r) for r in rows])
