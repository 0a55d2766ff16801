"""Command-line front end.

Subcommands ``gof``, ``mean-eq``, ``mean-vec``, ``power`` and ``fetch-docs``.
Input data are wide-format CSV files with a header row (one column per
group or variable). Exit codes: 0 success, 2 usage or input error, 3 numeric
failure such as degenerate data.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import distributions as dist
from . import mc_engine, power_lab
from .baselines import lr_mvn_mean_test
from .errors import DegenerateDataError, DimensionError, ReplicateError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

NA_TOKENS = frozenset({"", "na", "nan", "n/a", "null"})


class InputError(Exception):
    """Malformed input; reported with exit code 2."""


@dataclass
class CsvDataset:
    columns: list[str]
    values: np.ndarray
    path: str
    dropped: int = 0


def _parse_cell(text, row, col, name):
    t = text.strip()
    if t.lower() in NA_TOKENS:
        return math.nan
    try:
        v = float(t)
    except ValueError:
        raise InputError(f"row {row}, column {col} ({name!r}): cannot parse {t!r} as a number") from None
    if not math.isfinite(v):
        raise InputError(f"row {row}, column {col} ({name!r}): value {t!r} is not finite")
    return v


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_csv(path, keep_missing=False):
    """Read a wide-format numeric CSV.

    Rows holding an ``NA`` or empty cell are dropped (the count is kept in
    ``dropped``) unless ``keep_missing``, in which case missing cells become
    NaN so columns may have different lengths.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise InputError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    if all(_is_number(h) for h in header):
        raise InputError(f"{path}: a header row with column names is required")
    body = rows[1:]
    if not body:
        raise InputError(f"{path}: no data rows")
    if len(header) == 2 and body:
        kinds = [[_is_number(r[j]) if j < len(r) else False for r in body] for j in range(2)]
        if (not any(kinds[0]) and all(kinds[1])) or (all(kinds[0]) and not any(kinds[1])):
            raise InputError(
                f"{path} looks like long format (a group label column and a value column); "
                "convert it to wide format with one column per group, e.g. "
                "df.assign(i=df.groupby(g).cumcount()).pivot(index='i', columns=g, values=v)"
            )
    values = np.empty((len(body), len(header)))
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise InputError(f"row {i + 2}: expected {len(header)} cells, found {len(r)}")
        for j, cell in enumerate(r):
            values[i, j] = _parse_cell(cell, i + 2, j + 1, header[j])
    missing = np.isnan(values)
    dropped = 0
    if keep_missing:
        values = values[~np.all(missing, axis=1)]
    else:
        keep = ~np.any(missing, axis=1)
        dropped = int(np.count_nonzero(~keep))
        values = values[keep]
    if values.shape[0] == 0:
        raise InputError(f"{path}: no complete rows")
    return CsvDataset(header, values, path, dropped)


def read_matrix(path):
    """Numeric matrix from CSV, with or without a header row."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if rows and not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path}: no numeric rows")
    try:
        return np.array([[float(c) for c in r] for r in rows])
    except ValueError:
        raise InputError(f"{path}: every cell must be numeric") from None


def _floats(text, what):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"{what}: expected a comma-separated list of numbers, got {text!r}") from None


# -- reporting ----------------------------------------------------------------


def _fmt(v):
    if v is None:
        return "NA"
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def _emit(args, payload, lines):
    text = json.dumps(payload) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    if args.json:
        sys.stdout.write(text)
    else:
        sys.stdout.write("\n".join(lines) + "\n")


def _report_lines(rep, level):
    lines = [
        f"test:        {rep.test}",
        f"statistic:   {rep.statistic:.4f}",
        f"p-value:     {rep.p_value:.4f}  (Monte Carlo, M={rep.M}, seed={rep.seed})",
    ]
    if rep.ci is not None:
        lines.append(f"{100 * level:g}% CI:      [{rep.ci[0]:.4f}, {rep.ci[1]:.4f}]")
    op = "<" if rep.threshold_strict else "<="
    lines.append(f"threshold c: {rep.alpha_threshold:.4f}  (alpha={rep.alpha:g}; reject if statistic {op} c)")
    return lines


def _warn_dropped(ds):
    if ds.dropped:
        print(f"warning: dropped {ds.dropped} row(s) with missing values from {ds.path}", file=sys.stderr)


# -- commands -----------------------------------------------------------------


def _null_spec(text, x):
    if text.strip().lower() in ("shifted-lognormal:fit", "lognormal:fit"):
        if x.shape[1] != 1:
            raise InputError("a fitted shifted log-normal null needs a single data column")
        return dist.fit_shifted_lognormal(x[:, 0])
    try:
        return dist.parse_density(text, dim=x.shape[1])
    except (ValueError, DimensionError) as exc:
        raise InputError(f"--null: {exc}") from None


def cmd_gof(args):
    ds = read_csv(args.data)
    _warn_dropped(ds)
    x = ds.values
    if args.column:
        if args.column not in ds.columns:
            raise InputError(f"column {args.column!r} not found; available: {', '.join(ds.columns)}")
        x = x[:, [ds.columns.index(args.column)]]
    spec = _null_spec(args.null, x)
    if spec.dim != x.shape[1]:
        raise InputError(f"null density has dimension {spec.dim}, data has {x.shape[1]} columns")
    bw = _floats(args.bandwidth, "--bandwidth") if args.bandwidth else None
    rep = mc_engine.ar_gof_test(x, spec, M=args.mc_reps, alpha=args.alpha, seed=args.seed,
                                level=args.level, bandwidth=bw)
    rep.extra["null"] = spec.describe()
    _emit(args, rep.to_dict(), [f"null:        {spec.describe()}", f"n:           {x.shape[0]}",
                                *_report_lines(rep, args.level)])
    return EXIT_OK


def cmd_mean_eq(args):
    ds = read_csv(args.data, keep_missing=args.independent)
    _warn_dropped(ds)
    x = ds.values
    if x.shape[1] < 2:
        raise InputError("mean-eq needs at least two columns")
    rep = mc_engine.ar_mean_equality_test(
        x, args.independent, M=args.mc_reps, alpha=args.alpha, seed=args.seed,
        ridge=args.ridge, level=args.level, ci_n=args.ci_n,
    )
    payload = rep.to_dict()
    lines = [f"columns:     {', '.join(ds.columns)}", *_report_lines(rep, args.level)]
    if args.pairwise:
        rows = mc_engine.pairwise_mean_tests(
            x, ds.columns, args.independent, M=args.mc_reps, seed=args.seed,
            ridge=args.ridge, level=args.level, ci_n=args.ci_n,
        )
        payload["pairwise"] = [r.to_dict() for r in rows]
        lines += ["", "pair          diff       T(X)    CI                 adj. p"]
        for r in rows:
            lines.append(
                f"{r.first + '-' + r.second:<12} {r.mean_difference:>9.2f}  {r.statistic:.3f}  "
                f"[{r.ci[0]:.3f}, {r.ci[1]:.3f}]  {r.adjusted_p_value:.3f}"
            )
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_mean_vec(args):
    ds = read_csv(args.data)
    _warn_dropped(ds)
    x = ds.values
    mu0 = np.array(_floats(args.mu0, "--mu0"))
    if mu0.shape[0] != x.shape[1]:
        raise InputError(f"--mu0 has {mu0.shape[0]} values, data has {x.shape[1]} columns")
    sigma = None
    if args.sigma_file:
        m = read_matrix(args.sigma_file)
        if m.shape != (x.shape[1], x.shape[1]):
            raise InputError(f"{args.sigma_file}: expected a {x.shape[1]}x{x.shape[1]} matrix, got {m.shape}")
        try:
            sigma = dist.CovMatrix(m)
        except DegenerateDataError as exc:
            raise InputError(f"{args.sigma_file}: not symmetric positive definite ({exc})") from None
    rep = mc_engine.ar_mean_vector_test(
        x, mu0, sigma, M=args.mc_reps, alpha=args.alpha, seed=args.seed,
        ridge=args.ridge, level=args.level, ci_n=args.ci_n,
    )
    payload = rep.to_dict()
    lines = [f"mu0:         {', '.join(f'{v:g}' for v in mu0)}", *_report_lines(rep, args.level)]
    if args.with_lr:
        lr = lr_mvn_mean_test(x, mu0)
        payload["lr_statistic"] = lr.statistic
        payload["lr_p_value"] = lr.p_value
        lines.append(f"LR baseline: -2 log lambda = {lr.statistic:.4f}, chi-square p = {lr.p_value:.4f}")
    _emit(args, payload, lines)
    return EXIT_OK


def _scenario_from_config(entry):
    try:
        dim = int(entry.get("dim", 1))
        mu0 = entry.get("mu0")
        return power_lab.Scenario(
            name=entry["name"],
            family=entry.get("family", "custom"),
            kind=entry.get("kind", "gof"),
            n=int(entry["n"]),
            data_spec=dist.parse_density(entry["data"], dim),
            null_spec=dist.parse_density(entry["null"], dim),
            tests=tuple(entry.get("tests", ("AR",))),
            alpha=float(entry.get("alpha", 0.05)),
            M=int(entry.get("M", 999)),
            replications=int(entry.get("replications", 1000)),
            seed=int(entry.get("seed", power_lab.DEFAULT_SEED)),
            independent=bool(entry.get("independent", False)),
            mu0=None if mu0 is None else tuple(float(v) for v in mu0),
            sigma_d=entry.get("sigma_d"),
            axes=dict(entry.get("axes", {})),
        )
    except KeyError as exc:
        raise InputError(f"scenario config entry is missing {exc}") from None
    except (TypeError, ValueError, DimensionError) as exc:
        raise InputError(f"bad scenario config entry: {exc}") from None


def _select_scenarios(args):
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read scenario config {args.config}: {exc}") from None
        entries = cfg if isinstance(cfg, list) else [cfg]
        scenarios = [_scenario_from_config(e) for e in entries]
    else:
        everything = power_lab.builtin_scenarios(M=args.mc_reps, seed=args.seed)
        if args.scenario in power_lab.SCENARIO_FAMILIES:
            scenarios = [s for s in everything if s.family == args.scenario]
        else:
            scenarios = [s for s in everything if s.name == args.scenario]
        if not scenarios:
            names = ", ".join(power_lab.SCENARIO_FAMILIES)
            raise InputError(f"unknown scenario {args.scenario!r}; available families: {names} "
                             "(or an individual scenario name from --list --verbose)")
    if args.n is not None:
        scenarios = [s for s in scenarios if s.n == args.n]
        if not scenarios:
            raise InputError(f"no scenario in the selection has n={args.n}")
    changes = {}
    if args.reps is not None:
        changes["replications"] = args.reps
    if args.config and args.mc_reps_given:
        changes["M"] = args.mc_reps
    if changes:
        scenarios = [s.replace(**changes) for s in scenarios]
    if args.at_null:
        scenarios = power_lab.null_scenarios(scenarios)
    return scenarios


def cmd_power(args):
    if args.list:
        scenarios = power_lab.builtin_scenarios()
        for fam in power_lab.SCENARIO_FAMILIES:
            members = [s for s in scenarios if s.family == fam]
            print(f"{fam:<24} {len(members):>3} scenarios  tests: {', '.join(members[0].tests)}")
            if args.verbose:
                for s in members:
                    print(f"    {s.name}")
        return EXIT_OK
    if not args.scenario and not args.config:
        raise InputError("power needs --scenario NAME, --config FILE or --list")
    if args.reps is not None and args.reps < 100:
        raise InputError(f"--reps must be at least 100, got {args.reps}")
    scenarios = _select_scenarios(args)

    def progress(res):
        cells = "  ".join(f"{t}={p:.3f}" for t, p in res.power.items())
        print(f"{res.scenario:<34} {cells}  ({res.runtime_s:.1f}s)", flush=True)

    results = power_lab.run_scenarios(scenarios, workers=args.workers, progress=progress)
    written = power_lab.export_results(results, args.out)
    print(f"wrote {len(written)} files to {args.out}")
    return EXIT_OK


FETCH_DOCS = """\
Application data sets are not bundled with this package.

Amyloid-beta levels (groups NCI, MCI, mAD)
  R package Stat2Data, data set `Amyloid`:
      install.packages("Stat2Data"); data(Amyloid, package = "Stat2Data")
  The data are in long format (Group, Abeta). Convert to wide format with
  one column per group before running:
      artest mean-eq amyloid_wide.csv --independent --pairwise

Response times
  R package rtdists, data set `speed_acc`, response times of one
  participant and condition exported as a single-column CSV:
      artest gof rt.csv --null shifted-lognormal:fit
"""


def cmd_fetch_docs(args):
    sys.stdout.write(FETCH_DOCS)
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def _add_common(p, out_help="write the JSON report to this file"):
    p.add_argument("--alpha", type=float, default=0.05, help="significance level (default 0.05)")
    p.add_argument("--mc-reps", type=int, default=999, help="Monte Carlo null replicates M (default 999)")
    p.add_argument("--seed", type=int, default=0, help="master random seed (default 0)")
    p.add_argument("--out", help=out_help)


def _add_report(p):
    p.add_argument("--json", action="store_true", help="print the JSON report instead of text")
    p.add_argument("--level", type=float, default=0.95, help="credible interval level (default 0.95)")


def build_parser():
    parser = argparse.ArgumentParser(prog="artest", description="Accept-reject hypothesis tests.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gof", help="goodness of fit to a fully specified density")
    p.add_argument("data", help="wide-format CSV; all columns form the sample unless --column")
    p.add_argument("--null", required=True, help="family:params, e.g. normal:0,1 or shifted-lognormal:fit")
    p.add_argument("--column", help="use only this column")
    p.add_argument("--bandwidth", help="KDE bandwidth(s), comma-separated per column")
    _add_common(p)
    _add_report(p)
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("mean-eq", help="equality of column means")
    p.add_argument("data", help="wide-format CSV, one column per group")
    p.add_argument("--independent", action="store_true",
                   help="diagonal covariance; columns may have different lengths (NA pads)")
    p.add_argument("--pairwise", action="store_true", help="add Bonferroni-adjusted pairwise tests")
    p.add_argument("--ridge", type=float, default=0.0, help="add ridge*I to the covariance estimate")
    p.add_argument("--ci-n", type=int, help="binomial size for the interval (default: number of rows)")
    _add_common(p)
    _add_report(p)
    p.set_defaults(func=cmd_mean_eq)

    p = sub.add_parser("mean-vec", help="mean vector equals a fixed vector")
    p.add_argument("data", help="wide-format CSV, one column per coordinate")
    p.add_argument("--mu0", required=True, help="comma-separated hypothesised mean")
    p.add_argument("--sigma-file", help="CSV with a known population covariance matrix")
    p.add_argument("--with-lr", action="store_true", help="also report the normal-theory LR test")
    p.add_argument("--ridge", type=float, default=0.0, help="add ridge*I to the covariance estimate")
    p.add_argument("--ci-n", type=int, help="binomial size for the interval (default: number of rows)")
    _add_common(p)
    _add_report(p)
    p.set_defaults(func=cmd_mean_vec)

    p = sub.add_parser("power", help="run size/power simulation scenarios")
    p.add_argument("--scenario", help="builtin family or scenario name")
    p.add_argument("--config", help="JSON file with one scenario object or a list of them")
    p.add_argument("--list", action="store_true", help="list builtin scenario families")
    p.add_argument("--verbose", action="store_true", help="with --list, print every scenario name")
    p.add_argument("--n", type=int, help="keep only scenarios with this sample size")
    p.add_argument("--reps", type=int, help="replications per scenario (at least 100)")
    p.add_argument("--at-null", action="store_true", help="run each distinct null configuration instead")
    p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    p.add_argument("--alpha", type=float, default=0.05, help=argparse.SUPPRESS)
    p.add_argument("--mc-reps", type=int, default=None, help="null replicates M for AR and EDF tests (default 999)")
    p.add_argument("--seed", type=int, default=power_lab.DEFAULT_SEED, help="master seed")
    p.add_argument("--out", default="power-results", help="output directory (default ./power-results)")
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("fetch-docs", help="where to obtain the application data sets")
    p.set_defaults(func=cmd_fetch_docs)
    return parser


def _validate(args):
    if hasattr(args, "alpha") and not 0.0 < args.alpha < 1.0:
        raise InputError("--alpha must lie in (0, 1)")
    if args.command == "power":
        args.mc_reps_given = args.mc_reps is not None
        if args.mc_reps is None:
            args.mc_reps = 999
    if getattr(args, "mc_reps", None) is not None and args.mc_reps < 100:
        raise InputError("--mc-reps must be at least 100")
    if hasattr(args, "level") and not 0.0 < args.level < 1.0:
        raise InputError("--level must lie in (0, 1)")
    if getattr(args, "ridge", 0.0) < 0:
        raise InputError("--ridge must be non-negative")
    if getattr(args, "ci_n", None) is not None and args.ci_n < 1:
        raise InputError("--ci-n must be positive")


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        _validate(args)
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DimensionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateDataError, ReplicateError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
