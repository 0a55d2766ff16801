"""Classical tests used as power-study baselines.

The EDF statistics (KS, Cramer-von Mises, Anderson-Darling) are computed
from the probability integral transform of the sorted data. Because the nulls
are fully specified, the transformed data are Uniform(0, 1) under the null
and Monte Carlo p-values are obtained by simulating uniforms directly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .distributions import as_sample
from .errors import DegenerateDataError, DimensionError
from .mc_engine import NULL_STREAM, replicate_rng


class Method(str, enum.Enum):
    ASYMPTOTIC = "asymptotic"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class BaselineResult:
    name: str
    statistic: float
    p_value: float
    method: Method


def pit_values(data, null_cdf):
    """Null cdf at the sorted data; raises if the cdf decreases."""
    x = np.sort(np.asarray(data, dtype=float).ravel())
    if x.shape[0] < 1:
        raise ValueError("at least one observation is required")
    u = np.asarray(null_cdf(x), dtype=float)
    if u.shape != x.shape or np.any(~np.isfinite(u)) or np.any((u < 0) | (u > 1)):
        raise ValueError("null cdf must map into [0, 1]")
    if np.any(np.diff(u) < 0):
        raise ValueError("null cdf is not monotone on the data")
    return u


def ks_statistic(u):
    """Two-sided KS distance from sorted cdf values ``u``."""
    u = np.asarray(u, dtype=float)
    n = u.shape[-1]
    i = np.arange(1, n + 1)
    return np.maximum((i / n - u).max(axis=-1), (u - (i - 1) / n).max(axis=-1))


def cvm_statistic(u):
    u = np.asarray(u, dtype=float)
    n = u.shape[-1]
    i = np.arange(1, n + 1)
    return 1.0 / (12 * n) + np.sum((u - (2 * i - 1) / (2 * n)) ** 2, axis=-1)


def ad_statistic(u):
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("Anderson-Darling needs 0 < F(x) < 1 at every observation")
    n = u.shape[-1]
    i = np.arange(1, n + 1)
    s = np.sum((2 * i - 1) * (np.log(u) + np.log1p(-u[..., ::-1])), axis=-1)
    return -n - s / n


EDF_STATISTICS = {"KS": ks_statistic, "CVM": cvm_statistic, "AD": ad_statistic}


def edf_null(name, n, M=999, seed=0, chunk=5000):
    """Sorted null replicates of an EDF statistic for sample size ``n``."""
    stat = EDF_STATISTICS[name]
    out = []
    for block, start in enumerate(range(0, M, chunk)):
        rng = replicate_rng(seed, block, NULL_STREAM)
        u = np.sort(rng.random((min(chunk, M - start), n)), axis=1)
        out.append(stat(u))
    return np.sort(np.concatenate(out))


def upper_mc_p_value(null_replicates, observed):
    """``(1 + #{null >= observed}) / (M + 1)``."""
    M = null_replicates.shape[0]
    count = M - int(np.searchsorted(null_replicates, observed, side="left"))
    return (1 + count) / (M + 1)


def _edf_test(name, data, null_cdf, M, seed, null):
    u = pit_values(data, null_cdf)
    d = float(EDF_STATISTICS[name](u))
    if null is None:
        null = edf_null(name, u.shape[0], M, seed)
    return BaselineResult(name, d, upper_mc_p_value(null, d), Method.MONTE_CARLO)


def ks_test(data, null_cdf, M=999, seed=0, null=None):
    """Kolmogorov-Smirnov test of a fully specified continuous null.

    ``null`` may carry precomputed sorted replicates from :func:`edf_null`.
    """
    return _edf_test("KS", data, null_cdf, M, seed, null)


def cvm_test(data, null_cdf, M=999, seed=0, null=None):
    return _edf_test("CVM", data, null_cdf, M, seed, null)


def ad_test(data, null_cdf, M=999, seed=0, null=None):
    return _edf_test("AD", data, null_cdf, M, seed, null)


def t_tests(x, y, paired=False):
    """Paired or equal-variance two-sample t test, two-sided."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if paired:
        if x.shape != y.shape:
            raise DimensionError("paired samples must have equal lengths")
        n = x.shape[0]
        if n < 2:
            raise DegenerateDataError("at least two pairs are needed")
        d = x - y
        sd = d.std(ddof=1)
        if not sd > 0:
            raise DegenerateDataError("paired differences have zero variance")
        t = d.mean() / (sd / math.sqrt(n))
        df = n - 1
        name = "paired-t"
    else:
        n1, n2 = x.shape[0], y.shape[0]
        if n1 < 2 or n2 < 2:
            raise DegenerateDataError("each group needs at least two observations")
        pooled = ((n1 - 1) * x.var(ddof=1) + (n2 - 1) * y.var(ddof=1)) / (n1 + n2 - 2)
        if not pooled > 0:
            raise DegenerateDataError("pooled variance is zero")
        t = (x.mean() - y.mean()) / math.sqrt(pooled * (1.0 / n1 + 1.0 / n2))
        df = n1 + n2 - 2
        name = "t-test"
    p = 2.0 * stats.t.sf(abs(t), df)
    return BaselineResult(name, float(t), float(min(p, 1.0)), Method.ASYMPTOTIC)


def lr_simple_test(x, y, sigma_d):
    """Likelihood ratio test of zero mean difference with known ``sigma_d``.

    Every parameter is known, so the test reduces to the standardised mean
    difference ``z = sqrt(n) * mean(x - y) / sigma_d``; the p-value is
    two-sided normal.
    """
    if not sigma_d > 0:
        raise ValueError("sigma_d must be positive")
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise DimensionError("samples must have equal lengths")
    n = x.shape[0]
    z = math.sqrt(n) * float(np.mean(x - y)) / sigma_d
    return BaselineResult("LR", z, float(2.0 * stats.norm.sf(abs(z))), Method.ASYMPTOTIC)


def lr_mvn_mean_test(data, mu0):
    """Normal-theory LR test of ``H0: mean == mu0`` with unknown covariance.

    ``-2 log(lambda) = n * log(det(S0) / det(S))`` with ``S`` the ML
    covariance about the sample mean and ``S0`` about ``mu0``; calibrated by
    chi-square with p degrees of freedom.
    """
    x = as_sample(data)
    n, p = x.shape
    mu0 = np.atleast_1d(np.asarray(mu0, dtype=float))
    if mu0.shape[0] != p:
        raise DimensionError("mu0 length does not match the data")
    if n <= p:
        raise DegenerateDataError("need more observations than dimensions")
    xbar = x.mean(axis=0)
    c = x - xbar
    s = c.T @ c / n
    sign, logdet = np.linalg.slogdet(s)
    if sign <= 0 or not np.isfinite(logdet):
        raise DegenerateDataError("sample covariance is singular")
    delta = xbar - mu0
    # det(S + d d') = det(S) * (1 + d' S^-1 d)
    q = float(delta @ np.linalg.solve(s, delta))
    stat = n * math.log1p(q)
    return BaselineResult("LR-chi2", stat, float(stats.chi2.sf(stat, p)), Method.ASYMPTOTIC)
