"""Monte Carlo calibration of the accept-reject statistics.

The null distribution of a statistic is estimated by simulating data under
the null hypothesis; small statistic values are evidence against the null,
so p-values and thresholds are left-tailed.

Randomness is derived per replicate from ``(seed, stream, index)`` through
:class:`numpy.random.SeedSequence`, so a replicate's draw never depends on
which other replicates ran before it.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import distributions as dist
from .ar_core import gof_statistic, group_mean_equality_statistic, mean_vector_statistic
from .distributions import CovMatrix, as_sample
from .errors import DegenerateDataError, ReplicateError
from .poisson_binomial import PoiBinDist, binomial_interval, credible_interval, poibin_quantile

# stream identifiers keep independent uses of one master seed apart
NULL_STREAM = 0
DATA_STREAM = 1
AUX_STREAM = 2


def replicate_rng(seed, index, stream=NULL_STREAM):
    """Generator for replicate ``index`` of ``stream`` under master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(index))))


@dataclass(frozen=True, eq=False)
class NullDistribution:
    replicates: np.ndarray
    seed: int
    generator_desc: str = ""

    @property
    def M(self):
        return self.replicates.shape[0]


@dataclass
class TestReport:
    statistic: float
    p_value: float
    M: int
    seed: int
    ci: tuple[float, float] | None = None
    alpha_threshold: float | None = None
    alpha: float | None = None
    test: str = ""
    threshold_strict: bool = False
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "test": self.test,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "ci_lo": None if self.ci is None else self.ci[0],
            "ci_hi": None if self.ci is None else self.ci[1],
            "c": self.alpha_threshold,
            "alpha": self.alpha,
            "M": self.M,
            "seed": self.seed,
        }
        out.update(self.extra)
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=False) + "\n"


def build_null(h0_sampler, statistic_fn, M, seed, generator_desc="", stream=NULL_STREAM):
    """Simulate ``M`` statistic values under the null.

    Parameters
    ----------
    h0_sampler : callable
        ``h0_sampler(rng)`` returns one simulated data set.
    statistic_fn : callable
        Maps a data set to a float.
    M : int
        Number of replicates, at least 100.
    seed : int
        Master seed; replicate ``m`` uses ``replicate_rng(seed, m, stream)``.
    """
    if M < 100:
        raise ValueError("M must be at least 100")
    values = np.empty(M)
    for m in range(M):
        rng = replicate_rng(seed, m, stream)
        try:
            values[m] = float(statistic_fn(h0_sampler(rng)))
        except Exception as exc:
            raise ReplicateError(m, str(exc)) from exc
    values.sort()
    values.setflags(write=False)
    return NullDistribution(values, int(seed), generator_desc)


def mc_p_value(null, observed):
    """Left-tail Monte Carlo p-value ``(1 + #{null <= observed}) / (M + 1)``."""
    if not 0.0 <= observed <= 1.0:
        raise ValueError("observed statistic must lie in [0, 1]")
    count = int(np.searchsorted(null.replicates, observed, side="right"))
    return (1 + count) / (null.M + 1)


def percentile_threshold(null, alpha):
    """Empirical alpha-quantile (smallest value with ECDF >= alpha)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    k = max(int(math.ceil(alpha * null.M - 1e-9)), 1)
    return float(null.replicates[k - 1])


def threshold_is_strict(null, alpha):
    """Whether the test at ``c = percentile_threshold(null, alpha)`` must use ``<``.

    ``c`` is the ``ceil(alpha * M)``-th smallest replicate. When replicates
    tie at ``c`` (the mean statistics put a point mass at 1), ``{T <= c}``
    holds more than that many replicates and rejecting on ``T <= c`` can
    exceed alpha by the whole atom. The test then rejects only on ``T < c``,
    which keeps it conservative; without ties the rule is ``T <= c``.
    """
    c = percentile_threshold(null, alpha)
    k = max(int(math.ceil(alpha * null.M - 1e-9)), 1)
    return int(np.searchsorted(null.replicates, c, side="right")) > k


def rejects(observed, c, strict):
    """Lower-tail decision at threshold ``c``."""
    return observed < c if strict else observed <= c


def poibin_threshold_approx(h0_sampler, accept_probs_fn, n, alpha, warm_reps=50, seed=0):
    """Null alpha-quantile from a Poisson binomial fitted to a few replicates.

    ``accept_probs_fn`` maps a simulated data set to its vector of ``n``
    acceptance probabilities. The i-th probability is averaged over
    ``warm_reps`` null replicates; the threshold is the alpha-quantile of the
    resulting Poisson binomial, divided by ``n``.
    """
    if warm_reps < 2:
        raise ValueError("warm_reps must be at least 2")
    total = np.zeros(n)
    for m in range(warm_reps):
        rng = replicate_rng(seed, m, NULL_STREAM)
        try:
            probs = np.asarray(accept_probs_fn(h0_sampler(rng)), dtype=float)
        except Exception as exc:
            raise ReplicateError(m, str(exc)) from exc
        if probs.shape != (n,):
            raise ValueError(f"expected {n} acceptance probabilities, got shape {probs.shape}")
        total += probs
    return poibin_quantile(PoiBinDist(total / warm_reps), alpha) / n


def simulate_T_distribution(accept_probs, reps, seed, chunk=2000):
    """Relative frequencies of the accepted count over ``reps`` accept-reject runs."""
    if reps < 1000:
        raise ValueError("reps must be at least 1000")
    probs = np.asarray(accept_probs, dtype=float)
    n = probs.shape[0]
    counts = np.zeros(n + 1, dtype=np.int64)
    done = 0
    block = 0
    while done < reps:
        size = min(chunk, reps - done)
        u = replicate_rng(seed, block, AUX_STREAM).random((size, n))
        k = np.count_nonzero(probs > u, axis=1)
        counts += np.bincount(k, minlength=n + 1)
        done += size
        block += 1
    return counts / reps


# -- calibrated tests -------------------------------------------------------


def gof_null(null_spec, n, M=999, seed=0, bandwidth=None):
    """Null distribution of the goodness-of-fit statistic for sample size ``n``."""

    def sampler(rng):
        return null_spec.sample(n, rng)

    def statistic(x):
        return gof_statistic(x, null_spec, bandwidth).value

    return build_null(sampler, statistic, M, seed, f"gof n={n} under {null_spec.describe()}")


def gof_poibin_threshold(null_spec, n, alpha, warm_reps=50, seed=0, bandwidth=None):
    """Poisson-binomial approximation of the goodness-of-fit null quantile."""
    return poibin_threshold_approx(
        lambda rng: null_spec.sample(n, rng),
        lambda x: gof_statistic(x, null_spec, bandwidth).accept_probs,
        n,
        alpha,
        warm_reps,
        seed,
    )


def ar_gof_test(data, null_spec, M=999, alpha=0.05, seed=0, level=0.95, bandwidth=None):
    """Goodness-of-fit test with MC p-value and Poisson binomial credible interval."""
    x = as_sample(data)
    obs = gof_statistic(x, null_spec, bandwidth)
    null = gof_null(null_spec, x.shape[0], M, seed, bandwidth)
    return TestReport(
        statistic=obs.value,
        p_value=mc_p_value(null, obs.value),
        M=M,
        seed=int(seed),
        ci=credible_interval(PoiBinDist(obs.accept_probs), level),
        alpha_threshold=percentile_threshold(null, alpha),
        threshold_strict=threshold_is_strict(null, alpha),
        alpha=alpha,
        test="ar-gof",
        extra={"n": int(x.shape[0]), "null": null_spec.describe()},
    )


def _ragged_normal_sampler(means, sds, mask):
    def sampler(rng):
        z = rng.standard_normal(mask.shape) * sds + means
        return np.where(mask, z, np.nan)

    return sampler


def mean_equality_null_sampler(data, independent=False, ridge=0.0):
    """Parametric null sampler: normal data around the grand mean with fitted covariance."""
    x = as_sample(data)
    n, p = x.shape
    if independent:
        mask = ~np.isnan(x)
        sds = np.sqrt(np.nanvar(x, axis=0, ddof=1))
        if np.any(~(sds > 0)):
            raise DegenerateDataError("a column has zero variance")
        return _ragged_normal_sampler(np.full(p, np.nanmean(x)), sds, mask)
    cov = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
    if ridge:
        cov = cov + ridge * np.eye(p)
    spec = dist.mv_normal(np.full(p, x.mean()), cov)
    return lambda rng: spec.sample(n, rng)


def _ci_n(ci_n, x):
    return x.shape[0] if ci_n is None else int(ci_n)


def ar_mean_equality_test(
    data, independent=False, M=999, alpha=0.05, seed=0, ridge=0.0, level=0.95, ci_n=None
):
    """Equal-means test; the MC null is a parametric normal bootstrap.

    The credible interval is Bin(ci_n, statistic) on the k/n scale, with
    ``ci_n`` defaulting to the number of rows.
    """
    x = as_sample(data)
    obs = group_mean_equality_statistic(x, independent, ridge)
    sampler = mean_equality_null_sampler(x, independent, ridge)
    null = build_null(
        sampler,
        lambda z: group_mean_equality_statistic(z, independent, ridge).value,
        M,
        seed,
        "mean equality parametric bootstrap",
    )
    n_ci = _ci_n(ci_n, x)
    return TestReport(
        statistic=obs.value,
        p_value=mc_p_value(null, obs.value),
        M=M,
        seed=int(seed),
        ci=binomial_interval(n_ci, obs.value, level),
        alpha_threshold=percentile_threshold(null, alpha),
        threshold_strict=threshold_is_strict(null, alpha),
        alpha=alpha,
        test="ar-mean-equality",
        extra={"n": int(x.shape[0]), "p": int(x.shape[1]), "ci_n": n_ci, "independent": bool(independent)},
    )


def ar_mean_vector_test(
    data, mu0, population_sigma=None, M=999, alpha=0.05, seed=0, ridge=0.0, level=0.95, ci_n=None
):
    """Fixed mean-vector test; the MC null draws N(mu0, sigma)."""
    x = as_sample(data)
    n, p = x.shape
    mu0 = np.atleast_1d(np.asarray(mu0, dtype=float))
    obs = mean_vector_statistic(x, mu0, population_sigma, ridge)
    if population_sigma is not None:
        cov = population_sigma.entries if isinstance(population_sigma, CovMatrix) else population_sigma
    else:
        cov = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
        if ridge:
            cov = cov + ridge * np.eye(p)
    spec = dist.mv_normal(mu0, cov)
    null = build_null(
        lambda rng: spec.sample(n, rng),
        lambda z: mean_vector_statistic(z, mu0, population_sigma, ridge).value,
        M,
        seed,
        f"mean vector null {spec.describe()}",
    )
    n_ci = _ci_n(ci_n, x)
    return TestReport(
        statistic=obs.value,
        p_value=mc_p_value(null, obs.value),
        M=M,
        seed=int(seed),
        ci=binomial_interval(n_ci, obs.value, level),
        alpha_threshold=percentile_threshold(null, alpha),
        threshold_strict=threshold_is_strict(null, alpha),
        alpha=alpha,
        test="ar-mean-vector",
        extra={"n": n, "p": p, "ci_n": n_ci, "population_sigma": population_sigma is not None},
    )


@dataclass
class PairwiseRow:
    first: str
    second: str
    mean_difference: float
    statistic: float
    ci: tuple[float, float]
    p_value: float
    adjusted_p_value: float

    def to_dict(self):
        d = asdict(self)
        d["ci_lo"], d["ci_hi"] = d.pop("ci")
        return d


def pairwise_mean_tests(
    data, names=None, independent=False, M=999, seed=0, ridge=0.0, level=0.95, ci_n=None
):
    """All column pairs with Bonferroni-adjusted MC p-values."""
    x = as_sample(data)
    p = x.shape[1]
    names = list(names) if names is not None else [f"x{j}" for j in range(p)]
    pairs = [(i, j) for i in range(p) for j in range(i + 1, p)]
    rows = []
    for k, (i, j) in enumerate(pairs):
        sub = x[:, [i, j]]
        if not independent:
            sub = sub[~np.any(np.isnan(sub), axis=1)]
        rep = ar_mean_equality_test(
            sub, independent, M=M, seed=seed + k, ridge=ridge, level=level,
            ci_n=_ci_n(ci_n, x),
        )
        diff = float(np.nanmean(sub[:, 0]) - np.nanmean(sub[:, 1]))
        rows.append(
            PairwiseRow(names[i], names[j], diff, rep.statistic, rep.ci, rep.p_value,
                        min(1.0, rep.p_value * len(pairs)))
        )
    return rows

