__version__ = "0.1.0"

from .errors import (SpatialFDRError, InvalidSpecError, InvalidLatticeError,
                     DimsMismatchError, DegenerateNullError,
                     UnsupportedAnalyticError, NonInvertibleModelError,
                     ConfigError)
from .log_config import configure_logging
from .lattice_grid import (Lattice, TruthMask, NeighborhoodSpec,
                           NeighborhoodTable, build_neighborhoods)
from .aggregate import FilterKind, aggregate
from .null_distribution import (NullCdf, beta_median_cdf, normal_approx_cdf,
                                method1_ghat, method2_ghat, estimate_n0,
                                monte_carlo_median_cdf, analytic_null_cdf,
                                oracle_null_cdf, sup_distance,
                                null_cdf_from_dict)
from .fdr_core import (FdrCurve, RejectionMask, fdr_hat, fdrl_hat, threshold,
                       reject, fdp_at)
from .lip_analysis import (DistModel, LipReport, alpha_inf_exponential,
                           alpha_inf_numeric, endurance)
from .simulation import (Scenario, MetricsReport, generate, metrics,
                         pvalues_one_sided, pvalues_two_sided)
