"""Gaussian product-kernel density estimation.

The estimate is the data-dependent proposal density of the goodness-of-fit
statistic, so it has to be strictly positive wherever it is evaluated. All
evaluation is done in log space with ``logsumexp``; the density value itself
may underflow far from the data but its logarithm stays finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .distributions import as_sample
from .errors import DegenerateDataError, DimensionError

_LOG_2PI = math.log(2.0 * math.pi)


def silverman_bandwidth(data):
    """Per-column rule-of-thumb bandwidth ``0.9 * min(sd, IQR/1.34) * n**(-1/(p+4))``.

    Columns with zero IQR fall back to the standard deviation alone.
    """
    x = as_sample(data)
    n, p = x.shape
    sd = x.std(axis=0, ddof=1)
    if np.any(~(sd > 0)):
        raise DegenerateDataError("cannot estimate a density from a constant column")
    q75, q25 = np.percentile(x, [75, 25], axis=0)
    iqr = (q75 - q25) / 1.34
    spread = np.where(iqr > 0, np.minimum(sd, iqr), sd)
    return 0.9 * spread * n ** (-1.0 / (p + 4))


@dataclass(frozen=True, eq=False)
class KdeModel:
    points: np.ndarray
    bandwidths: np.ndarray

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def _kernel_logs(self, x):
        z = (x[:, None, :] - self.points[None, :, :]) / self.bandwidths
        return -0.5 * np.sum(z * z, axis=2) - 0.5 * self.dim * _LOG_2PI - np.sum(
            np.log(self.bandwidths)
        )

    def logpdf(self, x):
        """Log-density at the rows of ``x`` (shape (m, p))."""
        x = np.asarray(x, dtype=float)
        if x.ndim < 2:
            x = x.reshape(-1, 1) if self.dim == 1 else x.reshape(1, -1)
        if x.shape[1] != self.dim:
            raise DimensionError(f"expected points of dimension {self.dim}, got {x.shape[1]}")
        return logsumexp(self._kernel_logs(x), axis=1) - math.log(self.n)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def logpdf_at_points(self, leave_one_out=True):
        """Log-density at each fitted point.

        With ``leave_one_out`` the point's own kernel is excluded and the sum
        is normalised by ``n - 1``.
        """
        k = self._kernel_logs(self.points)
        if not leave_one_out:
            return logsumexp(k, axis=1) - math.log(self.n)
        if self.n < 2:
            raise DegenerateDataError("leave-one-out evaluation needs at least two points")
        np.fill_diagonal(k, -np.inf)
        return logsumexp(k, axis=1) - math.log(self.n - 1)


def kde_fit(data, bandwidth=None):
    """Fit a Gaussian product-kernel KDE.

    Parameters
    ----------
    data : array_like, shape (n, p) or (n,)
    bandwidth : float or array_like of length p, optional
        Overrides :func:`silverman_bandwidth`.
    """
    x = as_sample(data)
    if x.shape[0] < 5:
        raise ValueError("at least 5 observations are needed for a density estimate")
    if not np.all(np.isfinite(x)):
        raise ValueError("data must be finite")
    if bandwidth is None:
        h = silverman_bandwidth(x)
    else:
        h = np.broadcast_to(np.asarray(bandwidth, dtype=float), (x.shape[1],)).copy()
        if not np.all(h > 0):
            raise ValueError("bandwidths must be positive")
    return kde_from_bandwidths(x, h)


def kde_from_bandwidths(points, bandwidths):
    """Build a model from explicit points and per-column bandwidths."""
    points = as_sample(np.array(points, dtype=float))
    bandwidths = np.broadcast_to(np.asarray(bandwidths, dtype=float), (points.shape[1],)).copy()
    if not np.all(bandwidths > 0):
        raise ValueError("bandwidths must be positive")
    points.setflags(write=False)
    bandwidths.setflags(write=False)
    return KdeModel(points, bandwidths)


def kde_eval(model, x):
    """Density estimate at a single point ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.shape[0] != model.dim:
        raise DimensionError(f"expected a point of dimension {model.dim}, got shape {x.shape}")
    return float(np.exp(model.logpdf(x.reshape(1, -1))[0]))
