"""Accept-reject test statistics.

Each statistic is the expected acceptance rate of one accept-reject step in
which the null density is the target and a data-driven density is the
proposal (with envelope constant 1). An observation with likelihood ratio
``r`` is accepted with probability ``min(1, r)``; averaging these
probabilities gives the statistic, which is 1 when the data agree with the
null and falls towards 0 as they disagree.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .density_estimation import kde_fit
from .distributions import CovMatrix, as_sample
from .errors import DegenerateDataError, DimensionError

# exp() of anything above this overflows float64
_MAX_LOG_RATIO = 700.0


class StatisticKind(str, enum.Enum):
    GOODNESS_OF_FIT = "goodness_of_fit"
    MEAN_EQUALITY = "mean_equality"
    MEAN_VECTOR = "mean_vector"


def acceptance_prob(r):
    """``min(1, r)``: chance that a Unif(0, 1) draw falls below ratio ``r``."""
    r_arr = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r_arr)) or np.any(r_arr < 0):
        raise ValueError("likelihood ratios must be finite and non-negative")
    out = np.minimum(r_arr, 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class RatioSet:
    """Likelihood ratios with their clamped acceptance probabilities."""

    ratios: np.ndarray
    accept_probs: np.ndarray

    @classmethod
    def from_ratios(cls, ratios):
        r = np.atleast_1d(np.asarray(ratios, dtype=float)).copy()
        p = np.atleast_1d(acceptance_prob(r))
        r.setflags(write=False)
        p.setflags(write=False)
        return cls(r, p)

    @classmethod
    def from_log_ratios(cls, log_ratios):
        """Build from log-ratios; ``-inf`` (null density zero) gives ratio 0."""
        lr = np.atleast_1d(np.asarray(log_ratios, dtype=float))
        if np.any(np.isnan(lr)) or np.any(lr == np.inf):
            raise ValueError("log-ratios must be below +inf and not NaN")
        r = np.exp(np.minimum(lr, _MAX_LOG_RATIO))
        p = np.exp(np.minimum(lr, 0.0))
        r.setflags(write=False)
        p.setflags(write=False)
        return cls(r, p)

    def __len__(self):
        return self.ratios.shape[0]


def ar_expectation(ratios):
    """Expected acceptance rate ``(#{r >= 1} + sum of r < 1) / n``."""
    if not isinstance(ratios, RatioSet):
        ratios = RatioSet.from_ratios(ratios)
    r = ratios.ratios
    n = r.shape[0]
    if n == 0:
        raise ValueError("at least one ratio is required")
    at_least_one = r >= 1.0
    return (np.count_nonzero(at_least_one) + float(np.sum(r[~at_least_one]))) / n


@dataclass(frozen=True, eq=False)
class ArStatistic:
    value: float
    n: int
    kind: StatisticKind
    accept_probs: np.ndarray | None = None

    def __float__(self):
        return self.value


def gof_ratios(data, null_spec, bandwidth=None, leave_one_out=True):
    """Ratios of the null density to a KDE of ``data``, at the data points."""
    x = as_sample(data)
    if x.shape[1] != null_spec.dim:
        raise DimensionError(f"data has {x.shape[1]} columns, null density has dimension {null_spec.dim}")
    model = kde_fit(x, bandwidth)
    log_fhat = model.logpdf_at_points(leave_one_out=leave_one_out)
    if not np.all(np.isfinite(log_fhat)):
        raise DegenerateDataError("density estimate vanished at a sample point")
    return RatioSet.from_log_ratios(null_spec.logpdf(x) - log_fhat)


def gof_statistic(data, null_spec, bandwidth=None, leave_one_out=True):
    """Goodness-of-fit statistic of ``data`` against the density ``null_spec``.

    The proposal is a Gaussian product-kernel estimate of the data density,
    evaluated leave-one-out at the sample points by default. ``bandwidth``
    overrides the rule-of-thumb bandwidths.
    """
    rs = gof_ratios(data, null_spec, bandwidth, leave_one_out)
    value = float(np.mean(rs.accept_probs))
    return ArStatistic(value, len(rs), StatisticKind.GOODNESS_OF_FIT, rs.accept_probs)


def normal_t_log_ratio(q, p, df):
    """``log N(t; 0, S) - log t_df(t; 0, S)`` as a function of ``q = t' S^-1 t``.

    The determinant of the shared matrix cancels, leaving a function of the
    Mahalanobis norm only. The normalising constants reduce to
    ``p/2 * log(df/2) - log Gamma((df+p)/2) + log Gamma(df/2)``; for even
    ``p`` the gamma ratio is a finite product, which keeps the constant
    exactly zero at ``p = 2``.
    """
    if p % 2 == 0:
        const = -sum(math.log1p(2.0 * k / df) for k in range(p // 2))
    else:
        const = 0.5 * p * math.log(0.5 * df) - math.lgamma(0.5 * (df + p)) + math.lgamma(0.5 * df)
    return const - 0.5 * q + 0.5 * (df + p) * math.log1p(q / df)


def _mean_ratio(t, sigma, df, kind, n):
    sigma = sigma if isinstance(sigma, CovMatrix) else CovMatrix(sigma)
    if sigma.dim != t.shape[0]:
        raise DimensionError("mean difference and covariance dimensions differ")
    q = sigma.mahalanobis_sq(t)
    lr = normal_t_log_ratio(q, t.shape[0], df)
    return ArStatistic(math.exp(min(lr, 0.0)), int(n), kind)


def mean_ratio_statistic(data, mu0, sigma, kind=StatisticKind.MEAN_VECTOR):
    """Normal-over-t ratio statistic at ``t = sqrt(n) * (mean(data) - mu0)``.

    Target is N(0, sigma), proposal the multivariate t with n - 1 degrees of
    freedom and scale matrix sigma; the statistic is ``min(ratio, 1)``.
    """
    x = as_sample(data)
    n, p = x.shape
    if n < 2:
        raise DegenerateDataError("at least two observations are needed")
    mu0 = np.broadcast_to(np.asarray(mu0, dtype=float), (p,))
    t = math.sqrt(n) * (x.mean(axis=0) - mu0)
    return _mean_ratio(t, sigma, n - 1, kind, n)


def _with_ridge(cov, ridge):
    if ridge:
        cov = cov + ridge * np.eye(cov.shape[0])
    return cov


def _singular_hint(exc):
    return DegenerateDataError(
        f"{exc}; use the independent-covariance option, add a ridge, or drop collinear columns"
    )


def group_mean_equality_statistic(data, independent=False, ridge=0.0):
    """Statistic for equal coordinate means, tested against the grand mean.

    ``mu0`` is the grand mean of all cells repeated p times. With
    ``independent`` the covariance is the diagonal of per-column variances,
    and columns may have different lengths (NaN marks a missing cell); each
    coordinate of ``t`` then uses its own column size and the t proposal
    takes ``min(n_j) - 1`` degrees of freedom.
    """
    x = as_sample(data)
    n, p = x.shape
    if p < 2:
        raise DimensionError("at least two columns are needed to compare means")
    if independent:
        counts = np.sum(~np.isnan(x), axis=0)
        if np.any(counts < 2):
            raise DegenerateDataError("every column needs at least two observations")
        a = float(np.nanmean(x))
        means = np.nanmean(x, axis=0)
        var = np.nanvar(x, axis=0, ddof=1)
        if np.any(~(var > 0)):
            raise DegenerateDataError("a column has zero variance")
        t = np.sqrt(counts) * (means - a)
        try:
            sigma = CovMatrix(_with_ridge(np.diag(var), ridge))
        except DegenerateDataError as exc:
            raise _singular_hint(exc) from None
        return _mean_ratio(t, sigma, int(counts.min()) - 1, StatisticKind.MEAN_EQUALITY, n)
    if np.any(np.isnan(x)):
        raise ValueError("missing cells are only allowed for independent columns")
    if n < 2:
        raise DegenerateDataError("at least two observations are needed")
    a = x.mean()
    cov = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
    try:
        sigma = CovMatrix(_with_ridge(cov, ridge))
    except DegenerateDataError as exc:
        raise _singular_hint(exc) from None
    return mean_ratio_statistic(x, np.full(p, a), sigma, StatisticKind.MEAN_EQUALITY)


def mean_vector_statistic(data, mu0, population_sigma=None, ridge=0.0):
    """Statistic for ``H0: mean == mu0``, with sample or known covariance."""
    x = as_sample(data)
    p = x.shape[1]
    mu0 = np.atleast_1d(np.asarray(mu0, dtype=float))
    if mu0.shape[0] != p:
        raise DimensionError(f"mu0 has length {mu0.shape[0]}, data has {p} columns")
    if population_sigma is not None:
        sigma = population_sigma if isinstance(population_sigma, CovMatrix) else CovMatrix(population_sigma)
    else:
        if x.shape[0] < 2:
            raise DegenerateDataError("at least two observations are needed")
        cov = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
        try:
            sigma = CovMatrix(_with_ridge(cov, ridge))
        except DegenerateDataError as exc:
            raise _singular_hint(exc) from None
    return mean_ratio_statistic(x, mu0, sigma, StatisticKind.MEAN_VECTOR)

