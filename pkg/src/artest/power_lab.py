"""Size and power simulation harness.

A :class:`Scenario` fixes a data-generating density, a null hypothesis, a
sample size and a list of tests. :func:`run_scenario` estimates each test's
rejection rate. Null thresholds of the Monte Carlo calibrated tests are
computed once per scenario (the null is scenario-fixed) and cached across
scenarios that share the same null and sample size.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from . import baselines
from . import distributions as dist
from .ar_core import gof_statistic, group_mean_equality_statistic, mean_vector_statistic
from .distributions import DensitySpec
from .errors import ReplicateError
from .mc_engine import (
    DATA_STREAM,
    build_null,
    percentile_threshold,
    rejects,
    replicate_rng,
    threshold_is_strict,
)

GOF_TESTS = ("AR", "KS", "CVM", "AD")
MEAN_EQUALITY_TESTS = ("AR", "LR", "paired-t", "t-test")
MEAN_VECTOR_TESTS = ("AR-pop", "AR-sample", "LR-chi2")
AR_TESTS = frozenset({"AR", "AR-pop", "AR-sample"})
_VALID_TESTS = {
    "gof": set(GOF_TESTS),
    "mean_equality": set(MEAN_EQUALITY_TESTS),
    "mean_vector": set(MEAN_VECTOR_TESTS),
}
# axes that describe the departure from the null, dropped by Scenario.at_null
_EFFECT_AXES = ("eta", "sigma", "alternative")

FAMILY_AXES = {
    "fig2-correlated-means": ("eta", "correlation"),
    "fig3-independent-means": ("eta",),
    "fig4-mean-vector": ("eta", "correlation"),
    "fig5-t-scale": ("sigma",),
    "univ-normality": ("alternative",),
    "mv-normality": ("alternative",),
}

CORRELATIONS = (-0.9, -0.5, 0.0, 0.5, 0.9)
ETAS = (0.4, 0.6, 0.8)
INDEPENDENT_ETAS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0)
T_SCALES = (1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0, 3.5, 4.0)
T_NULL_SCALE = 2.5
GOF_SIZES = (20, 30, 50)
DEFAULT_SEED = 20250101


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    family: str
    kind: str
    n: int
    data_spec: DensitySpec
    null_spec: DensitySpec
    tests: tuple[str, ...]
    alpha: float = 0.05
    M: int = 999
    replications: int = 1000
    seed: int = DEFAULT_SEED
    independent: bool = False
    mu0: tuple[float, ...] | None = None
    sigma_d: float | None = None
    axes: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _VALID_TESTS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        bad = set(self.tests) - _VALID_TESTS[self.kind]
        if bad:
            raise ValueError(f"tests {sorted(bad)} are not available for {self.kind} scenarios")
        if self.replications < 100:
            raise ValueError("replications must be at least 100")
        if self.M < 100:
            raise ValueError("M must be at least 100")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        rho = self.axes.get("correlation")
        if rho is not None and not -0.99 <= rho <= 0.99:
            raise ValueError("correlation must lie in [-0.99, 0.99]")
        if self.kind == "mean_vector" and self.mu0 is None:
            raise ValueError("mean_vector scenarios need mu0")
        if "LR" in self.tests and self.sigma_d is None:
            raise ValueError("the LR test needs a known sigma_d")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def at_null(self):
        """The same scenario with data drawn from its own null."""
        null_axes = {k: v for k, v in self.axes.items() if k not in _EFFECT_AXES}
        label = "-".join(f"{k}{v}" for k, v in sorted(null_axes.items()))
        name = f"{self.family}-H0-n{self.n}" + (f"-{label}" if label else "")
        axes = dict(null_axes, null=True)
        return self.replace(name=name, data_spec=self.null_spec, axes=axes)

    def null_key(self):
        return (
            self.kind,
            self.n,
            self.null_spec.key(),
            tuple(self.tests),
            self.independent,
            self.mu0,
            self.M,
            self.seed,
        )


@dataclass
class PowerResult:
    scenario: str
    family: str
    n: int
    replications: int
    rejections: dict[str, int]
    axes: dict[str, Any] = field(default_factory=dict)
    runtime_s: float = 0.0

    @property
    def power(self):
        return {t: k / self.replications for t, k in self.rejections.items()}

    @property
    def se(self):
        return {t: math.sqrt(p * (1 - p) / self.replications) for t, p in self.power.items()}


def _derived_seed(seed, label):
    ss = np.random.SeedSequence([int(seed), zlib.crc32(label.encode())])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


# -- per-test statistics ----------------------------------------------------


def _ar_value(s, test, x):
    if s.kind == "gof":
        return gof_statistic(x, s.null_spec).value
    if s.kind == "mean_equality":
        return group_mean_equality_statistic(x, s.independent).value
    sigma = s.null_spec.params["cov"] if test == "AR-pop" else None
    return mean_vector_statistic(x, np.asarray(s.mu0), sigma).value


def _asymptotic_p(s, test, x):
    if test == "LR":
        return baselines.lr_simple_test(x[:, 0], x[:, 1], s.sigma_d).p_value
    if test == "paired-t":
        return baselines.t_tests(x[:, 0], x[:, 1], paired=True).p_value
    if test == "t-test":
        return baselines.t_tests(x[:, 0], x[:, 1], paired=False).p_value
    return baselines.lr_mvn_mean_test(x, np.asarray(s.mu0)).p_value


def calibrate(s, cache=None):
    """Null calibration for every Monte Carlo test of ``s``.

    Returns a dict mapping test name to ``(c, strict)`` (AR tests, see
    :func:`~artest.mc_engine.threshold_is_strict`) or to
    sorted null replicates (EDF tests). Asymptotic tests are absent.
    """
    out = {}
    for test in s.tests:
        key = (s.null_key(), test)
        if cache is not None and key in cache:
            out[test] = cache[key]
            continue
        label = repr(key)
        if test in AR_TESTS:
            try:
                null = build_null(
                    lambda rng: s.null_spec.sample(s.n, rng),
                    lambda x, test=test: _ar_value(s, test, x),
                    s.M,
                    _derived_seed(s.seed, label),
                    f"{s.kind} {test} n={s.n}",
                )
            except ReplicateError as exc:
                raise ReplicateError(exc.index, f"scenario {s.name}, null calibration of {test}: {exc}") from exc
            value = (percentile_threshold(null, s.alpha), threshold_is_strict(null, s.alpha))
        elif test in baselines.EDF_STATISTICS:
            value = baselines.edf_null(test, s.n, s.M, _derived_seed(s.seed, label))
        else:
            continue
        out[test] = value
        if cache is not None:
            cache[key] = value
    return out


def _decide(s, test, x, calibration):
    if test in AR_TESTS:
        return rejects(_ar_value(s, test, x), *calibration[test])
    if test in baselines.EDF_STATISTICS:
        u = baselines.pit_values(x[:, 0], s.null_spec.cdf)
        if test == "AD" and np.any((u <= 0) | (u >= 1)):
            # the null cdf rounds to 0 or 1 only far in a tail: A^2 is unbounded
            return True
        stat = float(baselines.EDF_STATISTICS[test](u))
        return baselines.upper_mc_p_value(calibration[test], stat) <= s.alpha
    return _asymptotic_p(s, test, x) <= s.alpha


def _count_rejections(s, calibration, start, stop):
    seed = _derived_seed(s.seed, s.name)
    counts = np.zeros(len(s.tests), dtype=np.int64)
    for r in range(start, stop):
        x = s.data_spec.sample(s.n, replicate_rng(seed, r, DATA_STREAM))
        for j, test in enumerate(s.tests):
            try:
                counts[j] += bool(_decide(s, test, x, calibration))
            except Exception as exc:
                raise ReplicateError(r, f"scenario {s.name}, test {test}: {exc}") from exc
    return counts


def run_scenario(s, cache=None, workers=1):
    """Estimate the rejection rate of every test in ``s``.

    Results depend only on ``s`` (including its seed), not on ``workers``.
    """
    t0 = time.perf_counter()
    calibration = calibrate(s, cache)
    if workers <= 1:
        counts = _count_rejections(s, calibration, 0, s.replications)
    else:
        bounds = np.linspace(0, s.replications, workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(
                _count_rejections,
                [s] * workers,
                [calibration] * workers,
                bounds[:-1].tolist(),
                bounds[1:].tolist(),
            )
            counts = sum(parts)
    return PowerResult(
        scenario=s.name,
        family=s.family,
        n=s.n,
        replications=s.replications,
        rejections={t: int(k) for t, k in zip(s.tests, counts)},
        axes=dict(s.axes),
        runtime_s=time.perf_counter() - t0,
    )


def run_scenarios(scenarios, workers=1, progress=None):
    cache = {}
    results = []
    for s in scenarios:
        results.append(run_scenario(s, cache, workers))
        if progress is not None:
            progress(results[-1])
    return results


# -- builtin grid -------------------------------------------------------------


def _bivariate_cov(rho):
    return np.array([[1.0, rho], [rho, 1.0]])


def _fmt(v):
    return f"{v:g}"


def correlated_means_scenarios(replications=1000, M=999, seed=DEFAULT_SEED, n=52):
    out = []
    for rho in CORRELATIONS:
        cov = _bivariate_cov(rho)
        null = dist.mv_normal([0.0, 0.0], cov)
        for eta in ETAS:
            out.append(
                Scenario(
                    name=f"fig2-eta{_fmt(eta)}-rho{_fmt(rho)}",
                    family="fig2-correlated-means",
                    kind="mean_equality",
                    n=n,
                    data_spec=dist.mv_normal([eta, 0.0], cov),
                    null_spec=null,
                    tests=MEAN_EQUALITY_TESTS,
                    M=M,
                    replications=replications,
                    seed=seed,
                    sigma_d=math.sqrt(2.0 - 2.0 * rho),
                    axes={"eta": eta, "correlation": rho},
                )
            )
    return out


def independent_means_scenarios(replications=1000, M=999, seed=DEFAULT_SEED, sizes=(26, 64, 394)):
    out = []
    null = dist.mv_normal([0.0, 0.0])
    for n in sizes:
        for eta in INDEPENDENT_ETAS:
            out.append(
                Scenario(
                    name=f"fig3-n{n}-eta{_fmt(eta)}",
                    family="fig3-independent-means",
                    kind="mean_equality",
                    n=n,
                    data_spec=dist.mv_normal([eta, 0.0]),
                    null_spec=null,
                    tests=("AR", "LR", "t-test"),
                    M=M,
                    replications=replications,
                    seed=seed,
                    independent=True,
                    sigma_d=math.sqrt(2.0),
                    axes={"eta": eta},
                )
            )
    return out


def mean_vector_scenarios(replications=1000, M=999, seed=DEFAULT_SEED, n=52):
    out = []
    for rho in CORRELATIONS:
        cov = _bivariate_cov(rho)
        null = dist.mv_normal([0.0, 0.0], cov)
        for eta in ETAS:
            out.append(
                Scenario(
                    name=f"fig4-eta{_fmt(eta)}-rho{_fmt(rho)}",
                    family="fig4-mean-vector",
                    kind="mean_vector",
                    n=n,
                    data_spec=dist.mv_normal([eta, 0.0], cov),
                    null_spec=null,
                    tests=MEAN_VECTOR_TESTS,
                    M=M,
                    replications=replications,
                    seed=seed,
                    mu0=(0.0, 0.0),
                    axes={"eta": eta, "correlation": rho},
                )
            )
    return out


def t_scale_scenarios(replications=1000, M=999, seed=DEFAULT_SEED, sizes=GOF_SIZES):
    null = dist.loc_scale_t(3, 0.0, T_NULL_SCALE)
    return [
        Scenario(
            name=f"fig5-n{n}-sigma{_fmt(sigma)}",
            family="fig5-t-scale",
            kind="gof",
            n=n,
            data_spec=dist.loc_scale_t(3, 0.0, sigma),
            null_spec=null,
            tests=GOF_TESTS,
            M=M,
            replications=replications,
            seed=seed,
            axes={"sigma": sigma},
        )
        for n in sizes
        for sigma in T_SCALES
    ]


def univariate_alternatives():
    """Alternatives of the normality study keyed by a short id: (label, density)."""
    return {
        "normal": ("N(0,1)", dist.mv_normal([0.0])),
        "t2": ("t(2)", dist.loc_scale_t(2)),
        "mixture": ("0.5N(0,1)+0.5N(3,1)", dist.normal_mixture2(0.5, [0.0], [3.0])),
        "logistic": ("logistic(0,1)", dist.logistic(0.0, 1.0)),
        "uniform": ("unif(0,1)", dist.uniform(0.0, 1.0)),
    }


def multivariate_alternatives(p=3):
    return {
        "normal": ("N(0,I)", dist.mv_normal(np.zeros(p))),
        "t2": ("t(2,0,I)", dist.mv_student_t(2, np.zeros(p))),
        "mixture": ("0.5N(0,I)+0.5N(3,I)", dist.normal_mixture2(0.5, np.zeros(p), np.full(p, 3.0))),
        "logistic": ("logistic(0,1)", dist.logistic(0.0, 1.0, dim=p)),
        "uniform": (f"unif(0,1)^{p}", dist.uniform(0.0, 1.0, dim=p)),
    }


def univariate_normality_scenarios(replications=1000, M=999, seed=DEFAULT_SEED, sizes=GOF_SIZES):
    null = dist.mv_normal([0.0])
    return [
        Scenario(
            name=f"univ-n{n}-{key}",
            family="univ-normality",
            kind="gof",
            n=n,
            data_spec=spec,
            null_spec=null,
            tests=GOF_TESTS,
            M=M,
            replications=replications,
            seed=seed,
            axes={"alternative": label},
        )
        for n in sizes
        for key, (label, spec) in univariate_alternatives().items()
    ]


def multivariate_normality_scenarios(replications=1000, M=999, seed=DEFAULT_SEED, sizes=GOF_SIZES):
    null = dist.mv_normal(np.zeros(3))
    return [
        Scenario(
            name=f"mv-n{n}-{key}",
            family="mv-normality",
            kind="gof",
            n=n,
            data_spec=spec,
            null_spec=null,
            tests=("AR",),
            M=M,
            replications=replications,
            seed=seed,
            axes={"alternative": label},
        )
        for n in sizes
        for key, (label, spec) in multivariate_alternatives().items()
    ]


SCENARIO_FAMILIES = {
    "fig2-correlated-means": correlated_means_scenarios,
    "fig3-independent-means": independent_means_scenarios,
    "fig4-mean-vector": mean_vector_scenarios,
    "fig5-t-scale": t_scale_scenarios,
    "univ-normality": univariate_normality_scenarios,
    "mv-normality": multivariate_normality_scenarios,
}


def builtin_scenarios(replications=1000, M=999, seed=DEFAULT_SEED, families=None):
    """All builtin scenarios, optionally restricted to some families."""
    families = list(SCENARIO_FAMILIES) if families is None else list(families)
    out = []
    for fam in families:
        if fam not in SCENARIO_FAMILIES:
            raise KeyError(fam)
        out.extend(SCENARIO_FAMILIES[fam](replications=replications, M=M, seed=seed))
    return out


def null_scenarios(scenarios):
    """Each distinct null configuration among ``scenarios``, run at its null."""
    seen = {}
    for s in scenarios:
        h0 = s.at_null()
        seen.setdefault(h0.null_key(), h0)
    return list(seen.values())


# -- export -------------------------------------------------------------------


def _result_rows(results):
    rows = []
    for res in results:
        power, se = res.power, res.se
        for test in res.rejections:
            row = {"scenario": res.scenario, "family": res.family, "test": test, "n": res.n}
            row.update(res.axes)
            row.update(
                power=power[test],
                se=se[test],
                rejections=res.rejections[test],
                replications=res.replications,
            )
            rows.append(row)
    return rows


def _write_csv(path, rows, columns):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({c: row.get(c, "") for c in columns})


def export_results(results, out_dir, formats=("csv", "json")):
    """Write power results; returns the list of written paths.

    Files: ``power_results.csv`` / ``.json`` (one row per scenario and test),
    ``<scenario>__<test>.csv`` for each pair, and one long-format
    ``<family>.csv`` per scenario family with that family's plot axes.
    Runtimes are left out so that a fixed seed gives identical files.
    """
    results = list(results)
    if not results:
        raise ValueError("no results to export")
    os.makedirs(out_dir, exist_ok=True)
    rows = _result_rows(results)
    axis_cols = []
    for row in rows:
        for k in row:
            if k not in axis_cols and k not in ("scenario", "family", "test", "n", "power", "se",
                                                "rejections", "replications"):
                axis_cols.append(k)
    columns = ["scenario", "family", "test", "n", *axis_cols, "power", "se", "rejections", "replications"]
    written = []
    if "csv" in formats:
        path = os.path.join(out_dir, "power_results.csv")
        _write_csv(path, rows, columns)
        written.append(path)
        for row in rows:
            path = os.path.join(out_dir, f"{row['scenario']}__{row['test']}.csv")
            _write_csv(path, [row], columns)
            written.append(path)
        by_family = {}
        for row in rows:
            by_family.setdefault(row["family"], []).append(row)
        for fam, fam_rows in by_family.items():
            axes = FAMILY_AXES.get(fam, tuple(axis_cols))
            path = os.path.join(out_dir, f"{fam}.csv")
            _write_csv(path, fam_rows, [*axes, "n", "test", "power", "se"])
            written.append(path)
    if "json" in formats:
        path = os.path.join(out_dir, "power_results.json")
        payload = [
            {
                "scenario": r.scenario,
                "family": r.family,
                "n": r.n,
                "axes": r.axes,
                "replications": r.replications,
                "power": r.power,
                "se": r.se,
                "rejections": r.rejections,
            }
            for r in results
        ]
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        written.append(path)
    return written
