"""Density families used as null (target) and proposal distributions.

Every family exposes a log-density, a sampler and, for univariate
families, a cdf. Densities are evaluated in log space throughout; callers
form likelihood ratios as ``exp(logpdf_a - logpdf_b)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from scipy import linalg, optimize, special, stats

from .errors import DegenerateDataError, DimensionError

_LOG_2PI = math.log(2.0 * math.pi)


class Family(str, enum.Enum):
    MV_NORMAL = "mv_normal"
    MV_STUDENT_T = "mv_student_t"
    LOC_SCALE_T = "loc_scale_t"
    LOGISTIC = "logistic"
    UNIFORM = "uniform"
    NORMAL_MIXTURE2 = "normal_mixture2"
    SHIFTED_LOGNORMAL = "shifted_lognormal"


class CovMatrix:
    """Symmetric positive definite matrix with a cached Cholesky factor.

    Raises
    ------
    DegenerateDataError
        If the matrix is not symmetric or a Cholesky pivot is not positive.
    """

    # smallest admissible squared pivot relative to the matching diagonal entry
    _PIVOT_RTOL = 1e-10

    def __init__(self, entries):
        a = np.atleast_2d(np.asarray(entries, dtype=float))
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"covariance must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise DegenerateDataError("covariance has non-finite entries")
        scale = np.max(np.abs(a)) if a.size else 0.0
        if np.max(np.abs(a - a.T)) > 1e-12 * max(scale, 1e-300):
            raise DegenerateDataError("covariance is not symmetric")
        a = 0.5 * (a + a.T)
        diag = np.diag(a)
        if np.any(diag <= 0):
            raise DegenerateDataError("covariance has a non-positive variance")
        try:
            chol = np.linalg.cholesky(a)
        except np.linalg.LinAlgError:
            raise DegenerateDataError("covariance is not positive definite") from None
        pivots = np.diag(chol)
        if np.any(pivots**2 <= self._PIVOT_RTOL * diag):
            raise DegenerateDataError("covariance is numerically singular")
        a.setflags(write=False)
        chol.setflags(write=False)
        self.entries = a
        self.cholesky_factor = chol

    @classmethod
    def identity(cls, p):
        return cls(np.eye(p))

    @property
    def dim(self):
        return self.entries.shape[0]

    @property
    def logdet(self):
        return 2.0 * float(np.sum(np.log(np.diag(self.cholesky_factor))))

    def mahalanobis_sq(self, x):
        """Return ``x' S^-1 x`` row-wise for ``x`` of shape (m, p) or (p,)."""
        x = np.asarray(x, dtype=float)
        z = linalg.solve_triangular(self.cholesky_factor, np.atleast_2d(x).T, lower=True, check_finite=False)
        q = np.sum(z * z, axis=0)
        return q if x.ndim == 2 else float(q[0])

    def __repr__(self):
        return f"CovMatrix({self.entries.tolist()})"


def _as_cov(cov, p=None):
    if isinstance(cov, CovMatrix):
        return cov
    if cov is None:
        return CovMatrix.identity(p)
    return CovMatrix(cov)


@dataclass(frozen=True, eq=False)
class DensitySpec:
    """An immutable, evaluable probability density.

    Build instances with the module-level constructors (:func:`mv_normal`,
    :func:`loc_scale_t`, ...) which validate the parameters.
    """

    family: Family
    params: Mapping[str, Any]
    dim: int
    _cov: CovMatrix | None = field(default=None, repr=False)

    # -- evaluation -------------------------------------------------------

    def _rows(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1, 1)
        elif x.ndim == 1:
            x = x.reshape(-1, 1) if self.dim == 1 else x.reshape(1, -1)
        if x.shape[-1] != self.dim:
            raise DimensionError(f"expected points of dimension {self.dim}, got {x.shape[-1]}")
        return x

    def logpdf(self, x):
        """Log-density at the rows of ``x``; returns an array of shape (m,)."""
        x = self._rows(x)
        return _LOGPDF[self.family](self, x)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def cdf(self, x):
        """Cumulative distribution function, univariate families only."""
        if self.dim != 1:
            raise DimensionError("cdf is only defined for univariate densities")
        x = np.asarray(x, dtype=float)
        return _CDF[self.family](self, x)

    def sample(self, n, rng):
        """Draw ``n`` i.i.d. points as an (n, dim) array."""
        if n < 1:
            raise ValueError("n must be at least 1")
        return _SAMPLE[self.family](self, int(n), rng)

    def key(self):
        """Hashable identity of family and parameter values."""
        items = []
        for k in sorted(self.params):
            v = self.params[k]
            if isinstance(v, np.ndarray):
                v = tuple(np.round(v.ravel(), 12).tolist())
            elif isinstance(v, float):
                v = round(v, 12)
            items.append((k, v))
        return (self.family.value, self.dim, tuple(items))

    def describe(self):
        parts = []
        for k in sorted(self.params):
            v = self.params[k]
            if isinstance(v, np.ndarray):
                v = np.round(v, 6).tolist()
            parts.append(f"{k}={v}")
        return f"{self.family.value}({', '.join(parts)})"


# -- constructors ------------------------------------------------------------


def _vector(v, p=None, name="mean"):
    v = np.atleast_1d(np.asarray(v, dtype=float)).copy()
    if v.ndim != 1:
        raise DimensionError(f"{name} must be a vector")
    if p is not None and v.shape[0] == 1 and p > 1:
        v = np.repeat(v, p)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be finite")
    v.setflags(write=False)
    return v


def _positive(value, name):
    value = float(value)
    if not (np.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be positive and finite, got {value}")
    return value


def mv_normal(mean, cov=None):
    """Multivariate normal N(mean, cov); ``cov`` defaults to the identity."""
    mean = _vector(mean)
    cov = _as_cov(cov, mean.shape[0])
    if cov.dim != mean.shape[0]:
        mean = _vector(mean, cov.dim)
    if cov.dim != mean.shape[0]:
        raise DimensionError("mean and covariance dimensions differ")
    return DensitySpec(Family.MV_NORMAL, {"mean": mean, "cov": cov.entries}, cov.dim, cov)


def mv_student_t(df, loc, scale=None):
    """Multivariate t with scale matrix ``scale`` (covariance df/(df-2)*scale)."""
    df = _positive(df, "df")
    loc = _vector(loc, name="loc")
    cov = _as_cov(scale, loc.shape[0])
    if cov.dim != loc.shape[0]:
        loc = _vector(loc, cov.dim, name="loc")
    if cov.dim != loc.shape[0]:
        raise DimensionError("loc and scale dimensions differ")
    return DensitySpec(
        Family.MV_STUDENT_T, {"df": df, "loc": loc, "scale": cov.entries}, cov.dim, cov
    )


def loc_scale_t(df, loc=0.0, scale=1.0):
    """Univariate location-scale t ``t(df, loc, scale)``."""
    return DensitySpec(
        Family.LOC_SCALE_T,
        {"df": _positive(df, "df"), "loc": float(loc), "scale": _positive(scale, "scale")},
        1,
    )


def logistic(loc=0.0, scale=1.0, dim=1):
    """Product of ``dim`` i.i.d. logistic(loc, scale) coordinates."""
    return DensitySpec(
        Family.LOGISTIC, {"loc": float(loc), "scale": _positive(scale, "scale")}, int(dim)
    )


def uniform(low=0.0, high=1.0, dim=1):
    """Product of ``dim`` i.i.d. Uniform(low, high) coordinates."""
    low, high = float(low), float(high)
    if not high > low:
        raise ValueError("uniform requires high > low")
    return DensitySpec(Family.UNIFORM, {"low": low, "high": high}, int(dim))


def normal_mixture2(weight, mean1, mean2, cov=None):
    """``weight*N(mean1, cov) + (1-weight)*N(mean2, cov)``."""
    w = float(weight)
    if not 0.0 <= w <= 1.0:
        raise ValueError("mixture weight must lie in [0, 1]")
    m1, m2 = _vector(mean1, name="mean1"), _vector(mean2, name="mean2")
    p = max(m1.shape[0], m2.shape[0])
    cov = _as_cov(cov, p)
    p = cov.dim
    m1, m2 = _vector(m1, p, "mean1"), _vector(m2, p, "mean2")
    if m1.shape[0] != p or m2.shape[0] != p:
        raise DimensionError("mixture components must share a dimension")
    return DensitySpec(
        Family.NORMAL_MIXTURE2,
        {"weight": w, "mean1": m1, "mean2": m2, "cov": cov.entries},
        p,
        cov,
    )


def shifted_lognormal(meanlog, sdlog, shift=0.0):
    """Log-normal distribution of ``x - shift``."""
    return DensitySpec(
        Family.SHIFTED_LOGNORMAL,
        {"meanlog": float(meanlog), "sdlog": _positive(sdlog, "sdlog"), "shift": float(shift)},
        1,
    )


# -- family implementations --------------------------------------------------


def _mvn_logpdf(spec, x):
    cov = spec._cov
    q = cov.mahalanobis_sq(x - spec.params["mean"])
    return -0.5 * (spec.dim * _LOG_2PI + cov.logdet + q)


def _mvt_logpdf(spec, x):
    cov, nu, p = spec._cov, spec.params["df"], spec.dim
    q = cov.mahalanobis_sq(x - spec.params["loc"])
    const = (
        special.gammaln(0.5 * (nu + p))
        - special.gammaln(0.5 * nu)
        - 0.5 * p * math.log(nu * math.pi)
        - 0.5 * cov.logdet
    )
    return const - 0.5 * (nu + p) * np.log1p(q / nu)


def _t_logpdf(spec, x):
    pr = spec.params
    return stats.t.logpdf(x[:, 0], pr["df"], loc=pr["loc"], scale=pr["scale"])


def _logistic_logpdf(spec, x):
    pr = spec.params
    return stats.logistic.logpdf(x, loc=pr["loc"], scale=pr["scale"]).sum(axis=1)


def _uniform_logpdf(spec, x):
    lo, hi = spec.params["low"], spec.params["high"]
    inside = np.all((x >= lo) & (x <= hi), axis=1)
    return np.where(inside, -spec.dim * math.log(hi - lo), -np.inf)


def _mixture_logpdf(spec, x):
    cov, pr = spec._cov, spec.params
    const = -0.5 * (spec.dim * _LOG_2PI + cov.logdet)
    l1 = const - 0.5 * cov.mahalanobis_sq(x - pr["mean1"])
    l2 = const - 0.5 * cov.mahalanobis_sq(x - pr["mean2"])
    w = pr["weight"]
    with np.errstate(divide="ignore"):
        return np.logaddexp(np.log(w) + l1, np.log1p(-w) + l2)


def _sln_logpdf(spec, x):
    pr = spec.params
    y = x[:, 0] - pr["shift"]
    out = np.full(y.shape, -np.inf)
    pos = y > 0
    ly = np.log(y[pos])
    s = pr["sdlog"]
    out[pos] = -ly - math.log(s) - 0.5 * _LOG_2PI - 0.5 * ((ly - pr["meanlog"]) / s) ** 2
    return out


def _mvn_sample(spec, n, rng):
    z = rng.standard_normal((n, spec.dim))
    return spec.params["mean"] + z @ spec._cov.cholesky_factor.T


def _mvt_sample(spec, n, rng):
    z = rng.standard_normal((n, spec.dim)) @ spec._cov.cholesky_factor.T
    nu = spec.params["df"]
    w = np.sqrt(rng.chisquare(nu, size=n) / nu)
    return spec.params["loc"] + z / w[:, None]


def _t_sample(spec, n, rng):
    pr = spec.params
    return (pr["loc"] + pr["scale"] * rng.standard_t(pr["df"], size=n)).reshape(n, 1)


def _logistic_sample(spec, n, rng):
    pr = spec.params
    return rng.logistic(pr["loc"], pr["scale"], size=(n, spec.dim))


def _uniform_sample(spec, n, rng):
    pr = spec.params
    return rng.uniform(pr["low"], pr["high"], size=(n, spec.dim))


def _mixture_sample(spec, n, rng):
    pr = spec.params
    first = rng.random(n) < pr["weight"]
    z = rng.standard_normal((n, spec.dim)) @ spec._cov.cholesky_factor.T
    return np.where(first[:, None], pr["mean1"], pr["mean2"]) + z


def _sln_sample(spec, n, rng):
    pr = spec.params
    y = rng.lognormal(pr["meanlog"], pr["sdlog"], size=n)
    return (pr["shift"] + y).reshape(n, 1)


def _mvn_cdf(spec, x):
    return stats.norm.cdf(x, loc=spec.params["mean"][0], scale=math.sqrt(spec.params["cov"][0, 0]))


def _mvt_cdf(spec, x):
    pr = spec.params
    return stats.t.cdf(x, pr["df"], loc=pr["loc"][0], scale=math.sqrt(pr["scale"][0, 0]))


def _t_cdf(spec, x):
    pr = spec.params
    return stats.t.cdf(x, pr["df"], loc=pr["loc"], scale=pr["scale"])


def _logistic_cdf(spec, x):
    return stats.logistic.cdf(x, loc=spec.params["loc"], scale=spec.params["scale"])


def _uniform_cdf(spec, x):
    lo, hi = spec.params["low"], spec.params["high"]
    return np.clip((x - lo) / (hi - lo), 0.0, 1.0)


def _mixture_cdf(spec, x):
    pr = spec.params
    sd = math.sqrt(pr["cov"][0, 0])
    w = pr["weight"]
    return w * stats.norm.cdf(x, pr["mean1"][0], sd) + (1 - w) * stats.norm.cdf(x, pr["mean2"][0], sd)


def _sln_cdf(spec, x):
    pr = spec.params
    return stats.lognorm.cdf(x - pr["shift"], pr["sdlog"], scale=math.exp(pr["meanlog"]))


_LOGPDF = {
    Family.MV_NORMAL: _mvn_logpdf,
    Family.MV_STUDENT_T: _mvt_logpdf,
    Family.LOC_SCALE_T: _t_logpdf,
    Family.LOGISTIC: _logistic_logpdf,
    Family.UNIFORM: _uniform_logpdf,
    Family.NORMAL_MIXTURE2: _mixture_logpdf,
    Family.SHIFTED_LOGNORMAL: _sln_logpdf,
}
_SAMPLE = {
    Family.MV_NORMAL: _mvn_sample,
    Family.MV_STUDENT_T: _mvt_sample,
    Family.LOC_SCALE_T: _t_sample,
    Family.LOGISTIC: _logistic_sample,
    Family.UNIFORM: _uniform_sample,
    Family.NORMAL_MIXTURE2: _mixture_sample,
    Family.SHIFTED_LOGNORMAL: _sln_sample,
}
_CDF = {
    Family.MV_NORMAL: _mvn_cdf,
    Family.MV_STUDENT_T: _mvt_cdf,
    Family.LOC_SCALE_T: _t_cdf,
    Family.LOGISTIC: _logistic_cdf,
    Family.UNIFORM: _uniform_cdf,
    Family.NORMAL_MIXTURE2: _mixture_cdf,
    Family.SHIFTED_LOGNORMAL: _sln_cdf,
}


# -- operations --------------------------------------------------------------


def eval_logpdf(spec, x):
    """Log-density of ``spec`` at a single point ``x`` of length ``spec.dim``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.shape[0] != spec.dim:
        raise DimensionError(f"expected a point of dimension {spec.dim}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    return float(spec.logpdf(x.reshape(1, -1))[0])


def sample(spec, n, rng):
    """Draw an (n, p) sample from ``spec`` using generator ``rng``."""
    return spec.sample(n, rng)


def as_sample(data):
    """Coerce ``data`` to a 2-d float array (n rows, p columns)."""
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2:
        raise DimensionError(f"sample must be 1-d or 2-d, got {x.ndim}-d")
    return x


def sample_moments(data):
    """Column means and unbiased sample covariance.

    Returns
    -------
    mean : ndarray of shape (p,)
    cov : CovMatrix
        Divisor n - 1. Raises :class:`DegenerateDataError` when singular.
    """
    x = as_sample(data)
    n = x.shape[0]
    if n < 2:
        raise DegenerateDataError("at least two observations are needed for a covariance")
    if not np.all(np.isfinite(x)):
        raise ValueError("data must be finite")
    mean = x.mean(axis=0)
    cov = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
    return mean, CovMatrix(cov)


def fit_lognormal_at_shift(data, shift):
    """Closed-form log-normal MLE for ``data - shift``."""
    x = np.asarray(data, dtype=float).ravel()
    if np.any(x <= shift):
        raise ValueError("shift must lie strictly below every observation")
    y = np.log(x - shift)
    return shifted_lognormal(y.mean(), y.std(), shift)


def _profile_loglik(x, shift):
    y = np.log(x - shift)
    s = y.std()
    if not s > 0:
        return -np.inf
    n = x.shape[0]
    return -y.sum() - n * math.log(s) - 0.5 * n * (_LOG_2PI + 1.0)


def fit_shifted_lognormal(data, grid_size=512):
    """Three-parameter log-normal fit by profile likelihood over the shift.

    The shift is searched on a ``grid_size`` grid spanning
    ``[min(x) - range(x), min(x) - eps]`` with ``eps = 1e-6 * range(x)``,
    then refined by a bounded scalar search between the neighbours of the
    best grid point. Mean and sd of ``log(x - shift)`` are closed form.
    """
    x = np.asarray(data, dtype=float).ravel()
    if x.shape[0] < 10:
        raise ValueError("at least 10 observations are needed")
    if not np.all(np.isfinite(x)):
        raise ValueError("data must be finite")
    lo, span = x.min(), np.ptp(x)
    if not span > 0:
        raise DegenerateDataError("profile likelihood is not finite: all values are equal")
    eps = 1e-6 * span
    grid = np.linspace(lo - span, lo - eps, grid_size)
    ll = np.array([_profile_loglik(x, g) for g in grid])
    if not np.any(np.isfinite(ll)):
        raise DegenerateDataError("profile likelihood is not finite on the shift grid")
    k = int(np.nanargmax(ll))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid_size - 1)]
    best = grid[k]
    if b > a:
        res = optimize.minimize_scalar(
            lambda g: -_profile_loglik(x, g), bounds=(a, b), method="bounded",
            options={"xatol": 1e-9 * span},
        )
        if res.success and -res.fun > ll[k]:
            best = float(res.x)
    return fit_lognormal_at_shift(x, best)


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"cannot parse numbers from {text!r}") from None


def parse_density(text, dim=None):
    """Build a density from ``family:comma,separated,params``.

    Families: ``normal:mu,sd``, ``mvnormal:m1,...,mp`` (identity covariance),
    ``t:df,loc,scale``, ``mvt:df,m1,...,mp``, ``logistic:loc,scale``,
    ``uniform:low,high``, ``mixture:weight,mean1,mean2[,sd]`` and
    ``shifted-lognormal:meanlog,sdlog,shift``. For the product families
    (logistic, uniform) and for ``mvnormal`` given a single mean, ``dim``
    sets the dimension.
    """
    family, _, rest = text.partition(":")
    family = family.strip().lower()
    v = _floats(rest)

    def need(lo, hi=None):
        hi = lo if hi is None else hi
        if not lo <= len(v) <= hi:
            span = str(lo) if lo == hi else f"{lo} to {hi}"
            raise ValueError(f"{family} expects {span} parameters, got {len(v)}")

    d = 1 if dim is None else int(dim)
    if family == "normal":
        need(2)
        return mv_normal([v[0]], [[_positive(v[1], "sd") ** 2]])
    if family == "mvnormal":
        if not v:
            raise ValueError("mvnormal expects at least one mean value")
        mean = v if len(v) > 1 else v * d
        return mv_normal(mean)
    if family == "t":
        need(1, 3)
        return loc_scale_t(*v)
    if family == "mvt":
        if len(v) < 2:
            raise ValueError("mvt expects df followed by the location")
        loc = v[1:] if len(v) > 2 else v[1:] * d
        return mv_student_t(v[0], loc)
    if family == "logistic":
        need(0, 2)
        return logistic(*v, dim=d)
    if family == "uniform":
        need(0, 2)
        return uniform(*v, dim=d)
    if family == "mixture":
        need(3, 4)
        cov = None if len(v) == 3 else [[_positive(v[3], "sd") ** 2]]
        return normal_mixture2(v[0], [v[1]] * d, [v[2]] * d, cov if d == 1 else None)
    if family in ("shifted-lognormal", "lognormal"):
        need(2, 3)
        return shifted_lognormal(*v)
    raise ValueError(f"unknown density family {family!r}")
