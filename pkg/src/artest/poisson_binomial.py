"""Exact Poisson binomial distribution of a sum of independent Bernoulli draws."""

from __future__ import annotations

from functools import cached_property

import numpy as np


def _check_probs(probs):
    p = np.atleast_1d(np.asarray(probs, dtype=float))
    if p.ndim != 1:
        raise ValueError("probabilities must be a vector")
    if not np.all((p >= 0.0) & (p <= 1.0)):
        raise ValueError("probabilities must lie in [0, 1]")
    return p


def poibin_pmf(probs):
    """Probability mass function over ``{0, ..., n}`` by direct convolution.

    Each success probability is folded into the running pmf in turn, so the
    cost is O(n^2).
    """
    p = _check_probs(probs)
    pmf = np.ones(1)
    for q in p:
        nxt = np.empty(pmf.shape[0] + 1)
        nxt[0] = 0.0
        nxt[1:] = pmf * q
        nxt[:-1] += pmf * (1.0 - q)
        pmf = nxt
    return pmf


class PoiBinDist:
    """Poisson binomial distribution with success probabilities ``probs``."""

    def __init__(self, probs):
        p = _check_probs(probs).copy()
        p.setflags(write=False)
        self.probs = p

    @property
    def n(self):
        return self.probs.shape[0]

    @cached_property
    def pmf(self):
        out = poibin_pmf(self.probs)
        out.setflags(write=False)
        return out

    @cached_property
    def cdf(self):
        out = np.minimum(np.cumsum(self.pmf), 1.0)
        out.setflags(write=False)
        return out

    @property
    def mean(self):
        return float(self.probs.sum())

    def quantile(self, q):
        return poibin_quantile(self, q)

    def credible_interval(self, level=0.95):
        return credible_interval(self, level)

    def __repr__(self):
        return f"PoiBinDist(n={self.n}, mean={self.mean:.4g})"


def poibin_quantile(dist, q):
    """Smallest k with CDF(k) >= q."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    # rounding in the cumulative sum must not push an exact match past k
    k = int(np.searchsorted(dist.cdf, q - 1e-12, side="left"))
    return min(k, dist.n)


def credible_interval(dist, level=0.95):
    """Equal-tailed interval for ``k/n`` from the quantiles of ``dist``."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    lo = poibin_quantile(dist, 0.5 * (1.0 - level))
    hi = poibin_quantile(dist, 0.5 * (1.0 + level))
    return lo / dist.n, hi / dist.n


def binomial_interval(n, p, level=0.95):
    """Equal-tailed interval for ``k/n`` under Bin(n, p).

    Useful for single-indicator statistics, where the choice of ``n`` is the
    caller's (e.g. a group size), not something the data determines.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    p = min(max(float(p), 0.0), 1.0)
    return credible_interval(PoiBinDist(np.full(int(n), p)), level)
