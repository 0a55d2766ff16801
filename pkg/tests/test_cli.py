import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from artest import cli
from artest import distributions as dist
from artest.mc_engine import ar_gof_test


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return str(path)


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def normal_csv(tmp_path):
    x = np.random.default_rng(0).normal(size=(60, 1))
    return write_csv(tmp_path / "x.csv", ["x"], x.tolist())


def test_gof_json_round_trip(normal_csv, capsys):
    code, out, _ = run(["gof", normal_csv, "--null", "normal:0,1", "--json", "--mc-reps", "199"], capsys)
    assert code == 0
    assert out.endswith("\n")
    payload = json.loads(out)
    assert {"statistic", "p_value", "ci_lo", "ci_hi", "c", "M", "seed"} <= set(payload)
    x = np.loadtxt(normal_csv, skiprows=1, delimiter=",")
    rep = ar_gof_test(x, dist.mv_normal([0.0]), M=199, seed=0)
    assert abs(payload["statistic"] - rep.statistic) <= 1e-12
    assert abs(payload["p_value"] - rep.p_value) <= 1e-12


def test_fixed_seed_gives_identical_bytes(normal_csv, tmp_path, capsys):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.json"
        assert cli.main(["gof", normal_csv, "--null", "t:3,0,1", "--seed", "5", "--mc-reps", "150",
                         "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    capsys.readouterr()
    assert outs[0] == outs[1]


def test_text_report(normal_csv, capsys):
    code, out, _ = run(["gof", normal_csv, "--null", "normal:0,1", "--mc-reps", "150"], capsys)
    assert code == 0 and "statistic" in out and "threshold c" in out


def test_malformed_cell(tmp_path, capsys):
    path = write_csv(tmp_path / "bad.csv", ["a", "b"], [[1, 2], [3, "abc"], [4, 5]])
    code, _, err = run(["mean-eq", path], capsys)
    assert code == 2
    assert "row 3" in err and "column 2" in err


def test_missing_header(tmp_path, capsys):
    path = tmp_path / "nohead.csv"
    path.write_text("1,2\n3,4\n")
    assert run(["mean-eq", str(path)], capsys)[0] == 2


def test_long_format_hint(tmp_path, capsys):
    path = write_csv(tmp_path / "long.csv", ["group", "value"], [["A", 1], ["B", 2], ["A", 3], ["C", 4]])
    code, _, err = run(["mean-eq", path, "--independent"], capsys)
    assert code == 2 and "wide format" in err


def test_na_rows_dropped_with_warning(tmp_path, capsys):
    rng = np.random.default_rng(1)
    rows = rng.normal(size=(30, 2)).tolist()
    rows[3][1] = "NA"
    rows[8][0] = ""
    path = write_csv(tmp_path / "na.csv", ["a", "b"], rows)
    code, out, err = run(["mean-eq", path, "--json", "--mc-reps", "150"], capsys)
    assert code == 0
    assert "dropped 2 row" in err
    assert json.loads(out)["n"] == 28


def test_independent_mode_keeps_ragged_columns(tmp_path, capsys):
    rng = np.random.default_rng(2)
    rows = rng.normal(size=(20, 3)).tolist()
    for r in rows[15:]:
        r[0] = "NA"
    path = write_csv(tmp_path / "ragged.csv", ["g1", "g2", "g3"], rows)
    code, out, err = run(["mean-eq", path, "--independent", "--pairwise", "--json", "--mc-reps", "150"], capsys)
    assert code == 0 and "dropped" not in err
    payload = json.loads(out)
    assert payload["ci_n"] == 20
    assert len(payload["pairwise"]) == 3
    g = np.array(rows[:15])[:, 0].astype(float)
    assert payload["pairwise"][0]["mean_difference"] == pytest.approx(g.mean() - np.array(rows)[:, 1].astype(float).mean())


def test_identical_columns_independent(tmp_path, capsys):
    col = np.random.default_rng(3).normal(size=25)
    path = write_csv(tmp_path / "same.csv", ["a", "b"], np.c_[col, col].tolist())
    code, out, _ = run(["mean-eq", path, "--independent", "--json", "--mc-reps", "150"], capsys)
    assert code == 0
    payload = json.loads(out)
    assert payload["statistic"] == 1.0 and payload["p_value"] == 1.0


def test_constant_column_is_numeric_failure(tmp_path, capsys):
    x = np.random.default_rng(4).normal(size=(20, 3))
    x[:, 2] = 1.0
    path = write_csv(tmp_path / "const.csv", ["a", "b", "c"], x.tolist())
    assert run(["mean-eq", path], capsys)[0] == 3
    assert run(["mean-eq", path, "--independent"], capsys)[0] == 3


def test_mean_vec(tmp_path, capsys):
    x = np.random.default_rng(5).normal(size=(52, 2))
    path = write_csv(tmp_path / "mv.csv", ["u", "v"], x.tolist())
    mu = ",".join(repr(float(v)) for v in x.mean(axis=0))
    code, out, _ = run(["mean-vec", path, f"--mu0={mu}", "--json", "--with-lr", "--mc-reps", "150"], capsys)
    assert code == 0
    payload = json.loads(out)
    assert payload["statistic"] == 1.0
    assert payload["lr_statistic"] == pytest.approx(0.0, abs=1e-9)
    assert run(["mean-vec", path, "--mu0", "0,0,0"], capsys)[0] == 2
    sig = tmp_path / "sigma.csv"
    sig.write_text("1,2\n2,1\n")
    assert run(["mean-vec", path, "--mu0", "0,0", "--sigma-file", str(sig)], capsys)[0] == 2
    sig.write_text("s1,s2\n1,0.2\n0.2,1\n")
    code, out, _ = run(["mean-vec", path, "--mu0", "0,0", "--sigma-file", str(sig), "--json",
                        "--mc-reps", "150"], capsys)
    assert code == 0 and json.loads(out)["population_sigma"] is True


def test_usage_errors(normal_csv, capsys):
    assert run(["gof", normal_csv, "--null", "gamma:1"], capsys)[0] == 2
    assert run(["gof", normal_csv, "--null", "normal:0,1", "--mc-reps", "50"], capsys)[0] == 2
    assert run(["gof", normal_csv, "--null", "normal:0,1", "--alpha", "1.5"], capsys)[0] == 2
    assert run(["gof", "/nonexistent.csv", "--null", "normal:0,1"], capsys)[0] == 2
    assert run(["frobnicate"], capsys)[0] == 2


def test_fitted_lognormal_null(tmp_path, capsys):
    x = 0.3 + np.exp(np.random.default_rng(6).normal(-1, 0.4, size=(80, 1)))
    path = write_csv(tmp_path / "rt.csv", ["rt"], x.tolist())
    code, out, _ = run(["gof", path, "--null", "shifted-lognormal:fit", "--json", "--mc-reps", "150"], capsys)
    assert code == 0
    assert json.loads(out)["p_value"] > 0.01


def test_power_list_and_errors(tmp_path, capsys):
    code, out, _ = run(["power", "--list"], capsys)
    assert code == 0 and len(out.strip().splitlines()) >= 6
    code, _, err = run(["power", "--scenario", "nope"], capsys)
    assert code == 2 and "univ-normality" in err
    assert run(["power", "--scenario", "univ-normality", "--reps", "10"], capsys)[0] == 2


def test_power_univariate_shape(tmp_path, capsys):
    out_dir = tmp_path / "pw"
    code, _, _ = run(["power", "--scenario", "univ-normality", "--n", "50", "--reps", "100",
                      "--mc-reps", "199", "--out", str(out_dir)], capsys)
    assert code == 0
    with open(out_dir / "power_results.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 5 * 4
    assert {r["test"] for r in rows} == {"AR", "KS", "CVM", "AD"}
    assert len({r["alternative"] for r in rows}) == 5


def test_power_config_file(tmp_path, capsys):
    cfg = tmp_path / "s.json"
    cfg.write_text(json.dumps({"name": "my-t", "n": 30, "data": "t:3,0,4", "null": "t:3,0,2.5",
                               "tests": ["AR", "KS"], "replications": 100, "M": 199}))
    code, _, _ = run(["power", "--config", str(cfg), "--out", str(tmp_path / "o")], capsys)
    assert code == 0
    assert (tmp_path / "o" / "my-t__AR.csv").exists()
    cfg.write_text(json.dumps({"name": "x", "n": 30, "null": "t:3"}))
    assert run(["power", "--config", str(cfg)], capsys)[0] == 2


def test_fetch_docs(capsys):
    code, out, _ = run(["fetch-docs"], capsys)
    assert code == 0 and "Stat2Data" in out and "rtdists" in out


def test_module_entry_point(normal_csv):
    proc = subprocess.run([sys.executable, "-m", "artest", "gof", normal_csv, "--null", "normal:0,1",
                           "--mc-reps", "120", "--json"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["M"] == 120


def _size_fraction(tmp_path, capsys, make_args, seeds=100):
    passed = 0
    for seed in range(seeds):
        code, out, _ = run(make_args(seed), capsys)
        assert code == 0
        passed += json.loads(out)["p_value"] > 0.05
    return passed / seeds


def test_gof_size_property(tmp_path, capsys):
    def args(seed):
        x = np.random.default_rng(1000 + seed).standard_t(3, size=(60, 1)) * 2.5
        path = write_csv(tmp_path / "d.csv", ["x"], x.tolist())
        return ["gof", path, "--null", "t:3,0,2.5", "--seed", str(seed), "--mc-reps", "199", "--json"]

    assert _size_fraction(tmp_path, capsys, args) >= 0.9


def test_mean_vec_size_property(tmp_path, capsys):
    def args(seed):
        x = np.random.default_rng(2000 + seed).normal(size=(52, 2))
        path = write_csv(tmp_path / "d.csv", ["a", "b"], x.tolist())
        return ["mean-vec", path, "--mu0", "0,0", "--seed", str(seed), "--mc-reps", "199", "--json"]

    assert _size_fraction(tmp_path, capsys, args) >= 0.9
