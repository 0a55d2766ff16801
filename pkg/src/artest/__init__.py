"""Accept-reject hypothesis tests.

The statistic of every test is the expected acceptance rate of a rejection
sampling step whose target is the null density and whose proposal is a
data-driven density. Values near 1 support the null; small values are
evidence against it.
"""

from .ar_core import (
    ArStatistic,
    RatioSet,
    StatisticKind,
    acceptance_prob,
    ar_expectation,
    gof_statistic,
    group_mean_equality_statistic,
    mean_ratio_statistic,
    mean_vector_statistic,
)
from .density_estimation import KdeModel, kde_eval, kde_fit, silverman_bandwidth
from .distributions import CovMatrix, DensitySpec, Family, parse_density
from .errors import DegenerateDataError, DimensionError, ReplicateError
from .mc_engine import (
    NullDistribution,
    TestReport,
    ar_gof_test,
    ar_mean_equality_test,
    ar_mean_vector_test,
    build_null,
    mc_p_value,
    pairwise_mean_tests,
    percentile_threshold,
    poibin_threshold_approx,
    rejects,
    simulate_T_distribution,
    threshold_is_strict,
)
from .poisson_binomial import PoiBinDist, credible_interval, poibin_pmf, poibin_quantile

__version__ = "0.1.0"
