"""Acceptance criteria, each run at its pinned tolerance.

Every test records one PASS / FAIL / SKIPPED line; the lines are printed in
the terminal summary. Reference values are the published percentile and
power tables; oracles are brute force, direct simulation and closed forms.
"""

import math
import os
import time

import numpy as np
import pytest
from scipy import stats

from artest import baselines as bl
from artest import cli
from artest import distributions as dist
from artest import power_lab as pl
from artest.ar_core import (
    RatioSet,
    ar_expectation,
    gof_statistic,
    group_mean_equality_statistic,
    mean_vector_statistic,
)
from artest.mc_engine import (
    ar_gof_test,
    ar_mean_equality_test,
    build_null,
    gof_null,
    gof_poibin_threshold,
    mc_p_value,
    pairwise_mean_tests,
    percentile_threshold,
    simulate_T_distribution,
)
from artest.poisson_binomial import poibin_pmf

pytestmark = pytest.mark.slow

STD_NORMAL = dist.mv_normal([0.0])

# published null percentiles of the goodness-of-fit statistic: (n, q) -> (PoiBin approx., MC)
PERCENTILES = {
    (10, 0.01): (0.600, 0.586),
    (10, 0.05): (0.700, 0.719),
    (10, 0.10): (0.800, 0.777),
    (30, 0.01): (0.800, 0.803),
    (30, 0.05): (0.867, 0.852),
    (30, 0.10): (0.867, 0.878),
    (60, 0.01): (0.883, 0.863),
    (60, 0.05): (0.900, 0.899),
    (60, 0.10): (0.917, 0.915),
}

# published univariate normality power at n = 50
UNIVARIATE_POWER = {
    "t2": {"AR": 0.59, "KS": 0.15, "CVM": 0.16, "AD": 0.85},
    "mixture": {"AR": 1.00, "KS": 1.00, "CVM": 1.00, "AD": 1.00},
    "logistic": {"AR": 0.96, "KS": 0.53, "CVM": 0.58, "AD": 0.97},
    "uniform": {"AR": 1.00, "KS": 1.00, "CVM": 1.00, "AD": 1.00},
}


def scenario(name, **changes):
    s = next(s for s in pl.builtin_scenarios() if s.name == name)
    return s.replace(**changes) if changes else s


def all_outcomes_pmf(probs):
    n = probs.shape[0]
    bits = (np.arange(2**n)[:, None] >> np.arange(n)) & 1
    weights = np.prod(np.where(bits == 1, probs, 1.0 - probs), axis=1)
    return np.bincount(bits.sum(axis=1), weights=weights, minlength=n + 1)


def test_c1_poisson_binomial_exactness(record):
    rng = np.random.default_rng(1)
    vectors = [rng.random(rng.integers(1, 16)) for _ in range(50)]
    t0 = time.perf_counter()
    pmfs = [poibin_pmf(p) for p in vectors]
    equal = poibin_pmf(np.full(15, 0.3))
    elapsed = time.perf_counter() - t0
    err = max(np.max(np.abs(f - all_outcomes_pmf(p))) for f, p in zip(pmfs, vectors))
    berr = np.max(np.abs(equal - stats.binom.pmf(np.arange(16), 15, 0.3)))
    ok = err < 1e-12 and berr < 1e-12 and elapsed < 1.0
    record(1, ok, f"max |pmf - enumeration| = {err:.1e}, binomial {berr:.1e}, {elapsed:.3f}s")
    assert ok


def test_c2_expectation_matches_simulation(record):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst = 0.0
    n, reps = 200, 10**6 // 200
    for _ in range(100):
        r = np.exp(rng.normal(rng.uniform(-1.5, 0.5), rng.uniform(0.2, 2.0), size=n))
        rs = RatioSet.from_ratios(r)
        hits = 0
        for start in range(0, reps, 1000):
            u = rng.random((min(1000, reps - start), n))
            hits += np.count_nonzero(r > u)
        worst = max(worst, abs(hits / (reps * n) - ar_expectation(rs)))
    elapsed = time.perf_counter() - t0
    ok = worst < 0.003 and elapsed < 30
    record(2, ok, f"max |expectation - simulation| = {worst:.5f} (limit 0.003), {elapsed:.1f}s")
    assert ok


def test_c3_sampling_distribution_is_poisson_binomial(record):
    t0 = time.perf_counter()
    x = np.random.default_rng(3).normal(size=30)
    probs = gof_statistic(x, STD_NORMAL).accept_probs
    freq = simulate_T_distribution(probs, 10**4, seed=3)
    tv = 0.5 * np.abs(freq - poibin_pmf(probs)).sum()
    elapsed = time.perf_counter() - t0
    ok = tv < 0.02 and elapsed < 10
    record(3, ok, f"TV(simulated, PoiBin) = {tv:.4f} (limit 0.02), {elapsed:.1f}s")
    assert ok


def test_c4_null_percentiles(record):
    t0 = time.perf_counter()
    failures = []
    for n in (10, 30, 60):
        null = gof_null(STD_NORMAL, n, M=10**4, seed=n)
        for q in (0.01, 0.05, 0.10):
            ref_pb, ref_mc = PERCENTILES[(n, q)]
            mc = percentile_threshold(null, q)
            pb = gof_poibin_threshold(STD_NORMAL, n, q, warm_reps=50, seed=n)
            mc_ok = abs(mc - ref_mc) <= 0.03
            pb_ok = abs(pb - ref_pb) <= 1.0 / n + 1e-9
            status = "ok" if mc_ok and pb_ok else "OUT"
            print(f"  n={n:<3} q={q:.2f}  MC {mc:.3f} (ref {ref_mc:.3f})  PoiBin {pb:.3f} (ref {ref_pb:.3f})  {status}")
            if not mc_ok:
                failures.append(f"MC n={n} q={q}: {mc:.3f} vs {ref_mc:.3f}")
            if not pb_ok:
                failures.append(f"PoiBin n={n} q={q}: {pb:.3f} vs {ref_pb:.3f}")
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 600
    record(4, ok, f"{9 - len(failures)}/9 (n, q) cells x 2 columns in tolerance, {elapsed:.0f}s"
           + ("; " + "; ".join(failures) if failures else ""))
    assert ok


def test_c5_size_control(record):
    t0 = time.perf_counter()
    nulls = pl.null_scenarios(pl.builtin_scenarios())
    cache = {}
    failures = []
    for s in nulls:
        # large calibration M keeps the threshold's own Monte Carlo error small
        s = s.replace(replications=2000, M=9999)
        res = pl.run_scenario(s, cache)
        for test, size in res.power.items():
            gated = test in pl.AR_TESTS
            ok = 0.03 <= size <= 0.06
            print(f"  {s.name:<42} {test:<9} {size:.4f}" + ("" if gated else "  (baseline, not gated)")
                  + ("" if ok or not gated else "  OUT"))
            if gated and not ok:
                failures.append(f"{s.name}/{test}={size:.4f}")
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 1200
    record(5, ok, f"{len(nulls)} null configurations, AR size in [0.03, 0.06], {elapsed:.0f}s"
           + ("; out: " + ", ".join(failures) if failures else ""))
    assert ok


def test_c6_univariate_power(record):
    t0 = time.perf_counter()
    failures = []
    cache = {}
    for key, ref in UNIVARIATE_POWER.items():
        res = pl.run_scenario(scenario(f"univ-n50-{key}"), cache)
        for test, value in ref.items():
            tol = 0.10 if test == "AR" else 0.07
            got = res.power[test]
            print(f"  {key:<9} {test:<4} {got:.3f} (ref {value:.2f} +- {tol:.2f})")
            if abs(got - value) > tol:
                failures.append(f"{key}/{test}={got:.3f}")
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 1800
    record(6, ok, f"n=50 power table within tolerance, {elapsed:.0f}s"
           + ("; out: " + ", ".join(failures) if failures else ""))
    assert ok


def test_c7_scale_study(record):
    t0 = time.perf_counter()
    cache = {}
    res = {sig: pl.run_scenario(scenario(f"fig5-n50-sigma{sig:g}"), cache) for sig in (1.5, 2.5, 4.0)}
    size = res[2.5].power["AR"]
    checks = [0.03 <= size <= 0.08]
    parts = [f"size at sigma0 {size:.3f}"]
    for sig in (1.5, 4.0):
        r = res[sig]
        for other in ("KS", "CVM"):
            diff = r.power["AR"] - r.power[other]
            se = math.hypot(r.se["AR"], r.se[other])
            checks.append(diff > 3 * se)
            parts.append(f"sigma={sig:g} AR-{other} = {diff:.3f} ({diff / se:.1f} se)")
    elapsed = time.perf_counter() - t0
    ok = all(checks) and elapsed < 1800
    record(7, ok, "; ".join(parts) + f", {elapsed:.0f}s")
    assert ok


def test_c8_mean_equality_study(record):
    t0 = time.perf_counter()
    alt = scenario("fig2-eta0.8-rho0.9")
    power = pl.run_scenario(alt).power["AR"]
    size = pl.run_scenario(alt.at_null()).power["AR"]
    elapsed = time.perf_counter() - t0
    ok = power > 0.9 and size <= 0.06 and elapsed < 600
    record(8, ok, f"AR power {power:.3f} (> 0.9), Type I {size:.3f} (<= 0.06), {elapsed:.0f}s")
    assert ok


def test_c9_multivariate_normality(record):
    t0 = time.perf_counter()
    cache = {}
    mix = pl.run_scenario(scenario("mv-n30-mixture", replications=500), cache).power["AR"]
    unif = pl.run_scenario(scenario("mv-n30-uniform", replications=500), cache).power["AR"]
    elapsed = time.perf_counter() - t0
    ok = mix > 0.7 and unif > 0.9 and elapsed < 2700
    record(9, ok, f"p=3 n=30 mixture {mix:.3f} (> 0.7), uniform^3 {unif:.3f} (> 0.9), {elapsed:.0f}s")
    assert ok


def _wide_amyloid(path):
    """Wide matrix (NaN padded) from a wide or a long (group, value) Amyloid CSV."""
    try:
        ds = cli.read_csv(path, keep_missing=True)
        return ds.columns, ds.values
    except cli.InputError:
        pass
    import csv

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = [h.strip() for h in rows[0]]
    gi = next(i for i, h in enumerate(header) if h.lower() == "group")
    vi = 1 - gi if len(header) == 2 else next(i for i, h in enumerate(header) if h.lower() == "abeta")
    groups = {}
    for r in rows[1:]:
        groups.setdefault(r[gi].strip(), []).append(float(r[vi]))
    names = [g for g in ("NCI", "MCI", "mAD") if g in groups] or sorted(groups)
    width = max(len(groups[g]) for g in names)
    x = np.full((width, len(names)), np.nan)
    for j, g in enumerate(names):
        x[: len(groups[g]), j] = groups[g]
    return names, x


def test_c10_applications(record):
    amyloid = os.environ.get("ARTEST_AMYLOID_CSV")
    rt = os.environ.get("ARTEST_RT_CSV")
    if not amyloid and not rt:
        record(10, "SKIPPED", "set ARTEST_AMYLOID_CSV and/or ARTEST_RT_CSV to run (data not bundled)")
        pytest.skip("application data sets not supplied")
    checks, parts = [], []
    if amyloid:
        names, x = _wide_amyloid(amyloid)
        rep = ar_mean_equality_test(x, independent=True, seed=0)
        rows = pairwise_mean_tests(x, names, independent=True, seed=0)
        row = next(r for r in rows if {r.first, r.second} == {"NCI", "mAD"})
        diff = row.mean_difference if row.first == "NCI" else -row.mean_difference
        checks += [abs(rep.statistic - 0.417) <= 0.02, 0.001 <= rep.p_value <= 0.02, round(diff, 2) == -425.03]
        parts.append(f"Amyloid T={rep.statistic:.3f} p={rep.p_value:.3f} NCI-mAD={diff:.2f}")
    else:
        parts.append("Amyloid SKIPPED")
    if rt:
        ds = cli.read_csv(rt)
        y = ds.values[:, 0]
        rep = ar_gof_test(y, dist.fit_shifted_lognormal(y), seed=0)
        checks.append(abs(rep.statistic - 0.961) <= 0.01)
        parts.append(f"RT T={rep.statistic:.3f} p={rep.p_value:.3f} CI=[{rep.ci[0]:.3f}, {rep.ci[1]:.3f}]")
    else:
        parts.append("RT SKIPPED")
    ok = all(checks)
    record(10, ok, "; ".join(parts))
    assert ok


def test_c11_property_suites(record):
    t0 = time.perf_counter()
    results = {}

    # Monte Carlo p-values under the null, with null and observation re-simulated per trial.
    # n=50 keeps the point mass of the statistic at 1 (every ratio >= 1) near 0.2%; at n=10
    # it is about 7% and those trials all get p = 1, so no add-one p-value is uniform there.
    obs_rng = np.random.default_rng(110)
    pv = []
    for trial in range(2000):
        null = gof_null(STD_NORMAL, 50, M=499, seed=10_000 + trial)
        pv.append(mc_p_value(null, gof_statistic(obs_rng.normal(size=50), STD_NORMAL).value))
    ks = stats.kstest(pv, "uniform").statistic
    results["p-value uniformity"] = (ks < 0.03, f"KS {ks:.4f}")

    # PIT invariance of the EDF statistics
    rng = np.random.default_rng(111)
    worst = 0.0
    for _ in range(200):
        x = rng.normal(size=rng.integers(5, 60))
        u = bl.pit_values(x, stats.norm.cdf)
        v = bl.pit_values(np.exp(x), lambda t: stats.norm.cdf(np.log(t)))
        w = bl.pit_values(stats.norm.cdf(x), lambda t: t)
        for f in bl.EDF_STATISTICS.values():
            worst = max(worst, abs(f(u) - f(v)), abs(f(u) - f(w)))
    results["PIT invariance"] = (worst < 1e-12, f"max diff {worst:.1e}")

    # row permutation invariance of the goodness-of-fit statistic
    worst = 0.0
    for p in (1, 2, 3):
        null = dist.mv_normal(np.zeros(p))
        for _ in range(50):
            x = rng.normal(size=(int(rng.integers(5, 60)), p))
            worst = max(worst, abs(gof_statistic(x, null).value - gof_statistic(rng.permutation(x), null).value))
    results["gof permutation invariance"] = (worst < 1e-12, f"max diff {worst:.1e}")

    # translation invariance of the mean tests
    worst = 0.0
    for _ in range(200):
        p = int(rng.integers(2, 5))
        x = rng.normal(size=(int(rng.integers(10, 60)), p))
        mu0 = rng.normal(size=p) * 0.3
        b = rng.normal(size=p) * 100
        c = float(rng.normal() * 100)
        worst = max(
            worst,
            abs(mean_vector_statistic(x, mu0).value - mean_vector_statistic(x + b, mu0 + b).value),
            abs(group_mean_equality_statistic(x).value - group_mean_equality_statistic(x + c).value),
            abs(group_mean_equality_statistic(x, True).value - group_mean_equality_statistic(x + c, True).value),
        )
    results["mean translation invariance"] = (worst < 1e-10, f"max diff {worst:.1e}")

    # determinism under a fixed seed
    s = scenario("fig5-n20-sigma1.5", replications=150, M=199)
    same_power = pl.run_scenario(s).rejections == pl.run_scenario(s, workers=2).rejections
    a = build_null(lambda r: r.normal(size=12), lambda z: gof_statistic(z, STD_NORMAL).value, 200, 9)
    b = build_null(lambda r: r.normal(size=12), lambda z: gof_statistic(z, STD_NORMAL).value, 200, 9)
    results["determinism"] = (same_power and np.array_equal(a.replicates, b.replicates), "bitwise")

    for name, (ok, detail) in results.items():
        print(f"  {name:<30} {'ok' if ok else 'FAIL'}  {detail}")
    ok = all(v[0] for v in results.values())
    elapsed = time.perf_counter() - t0
    record(11, ok, ", ".join(f"{k}: {'ok' if v[0] else 'FAIL'}" for k, v in results.items()) + f", {elapsed:.0f}s")
    assert ok
