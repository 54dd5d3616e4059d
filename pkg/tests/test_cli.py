import csv
import io
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]


def run(*args, env=None):
    return subprocess.run(
        [sys.executable, "-m", "renormcorr", *args],
        capture_output=True,
        text=True,
        env=env,
    )


@pytest.fixture
def data_csv(tmp_path):
    Y = np.random.default_rng(0).standard_normal((3, 8))
    path = tmp_path / "toy.csv"
    np.savetxt(path, Y, delimiter=",")
    return path


# --- lsd


def test_lsd_semicircle_grid():
    r = run("lsd", "--c", "inf", "--grid", "5")
    assert r.returncode == 0
    rows = list(csv.DictReader(io.StringIO(r.stdout)))
    assert len(rows) == 5
    mid = rows[2]
    assert float(mid["x"]) == pytest.approx(0, abs=1e-15)
    assert float(mid["density"]) == pytest.approx(1 / math.pi)


def test_lsd_atom_record(tmp_path):
    out = tmp_path / "lsd.csv"
    r = run("lsd", "--c", "0.5", "--grid", "11", "--out", str(out))
    assert r.returncode == 0
    rows = list(csv.DictReader(out.open()))
    atoms = [row for row in rows if row["kind"] == "atom"]
    assert len(atoms) == 1
    assert float(atoms[0]["x"]) == pytest.approx(-math.sqrt(0.5))
    assert float(atoms[0]["mass"]) == pytest.approx(0.5)
    cdf = [float(row["cdf"]) for row in rows if row["kind"] == "grid"]
    assert cdf[-1] == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("c", ["-1", "0", "abc"])
def test_lsd_bad_ratio(c):
    r = run("lsd", "--c", c)
    assert r.returncode == 1
    assert "error" in r.stderr


# --- eigen


def test_eigen_output(data_csv, tmp_path):
    out = tmp_path / "eig.csv"
    r = run("eigen", "--input", str(data_csv), "--out", str(out))
    assert r.returncode == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# n=8,p=3,")
    lam = np.array([float(x) for x in lines[2:]])
    assert lam.size == 8
    assert np.min(np.abs(lam)) <= 1e-8
    assert abs(lam.sum()) <= 1e-8 * 8


def test_eigen_constant_row_exit_2(tmp_path):
    path = tmp_path / "const.csv"
    path.write_text("1,2,3,4\n5,5,5,5\n0,1,0,2\n")
    r = run("eigen", "--input", str(path))
    assert r.returncode == 2
    assert "row index 1" in r.stderr


def test_eigen_parse_error_exit_1(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2,3\n4,oops,6\n")
    r = run("eigen", "--input", str(path))
    assert r.returncode == 1
    assert "row 2, column 2" in r.stderr


def test_eigen_missing_file_exit_1(tmp_path):
    assert run("eigen", "--input", str(tmp_path / "nope.csv")).returncode == 1


# --- test


def test_test_json(data_csv):
    r1 = run("test", "--input", str(data_csv))
    r2 = run("test", "--input", str(data_csv))
    assert r1.returncode == 0
    rep = json.loads(r1.stdout)
    assert {"T", "score", "p_value", "reject"} <= set(rep)
    assert set(rep) == {"T", "score", "p_value", "alpha", "reject", "n", "p"}
    assert r1.stdout == r2.stdout


def test_test_bad_alpha(data_csv):
    r = run("test", "--input", str(data_csv), "--alpha", "1.5")
    assert r.returncode == 1


# --- clt-check


def test_clt_check_x2_x3():
    r = run("clt-check", "--n", "500", "--p", "1000", "--f", "x2", "--f", "x3")
    assert r.returncode == 0
    recs = [json.loads(line) for line in r.stdout.splitlines()]
    assert set(recs[0]) == {"n", "p", "c_N", "f", "centering", "correction", "variance"}
    x2, x3 = recs
    assert x2["correction"] == pytest.approx(2, abs=0.05)
    assert x2["variance"] == pytest.approx(4, abs=1e-3)
    cN = 1000 / 499
    assert x3["variance"] == pytest.approx(6 + 36 / cN, rel=1e-3)


def test_clt_check_unsupported_monomial():
    assert run("clt-check", "--n", "500", "--p", "1000", "--f", "x5").returncode == 1


def test_clt_check_bad_dims():
    assert run("clt-check", "--n", "2", "--p", "10", "--f", "x2").returncode == 1


# --- simulate


def test_simulate_missing_experiment(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 20, "p": 40}))
    r = run("simulate", "--config", str(cfg))
    assert r.returncode == 1
    assert "/experiment" in r.stderr and "experiment" in r.stderr


def test_simulate_size_power(tmp_path):
    cfg = json.loads((ROOT / "configs" / "size_power.json").read_text())
    cfg.update(replicates=20, output_path=str(tmp_path / "sp"))
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    r = run("simulate", "--config", str(path))
    assert r.returncode == 0
    summary = json.loads(r.stdout)
    assert "rejection_rate" in summary
    assert (tmp_path / "sp" / "summary.json").exists()


def test_simulate_thread_count_independent(tmp_path):
    cfg = {"experiment": "size_power", "p": 200, "n": 20, "replicates": 16, "master_seed": 3,
           "sigma": {"kind": "ar", "param": 0.2}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("simulate", "--config", str(path), "--threads", "1", "--out", str(a)).returncode == 0
    assert run("simulate", "--config", str(path), "--threads", "8", "--out", str(b)).returncode == 0
    assert (a / "replicates.csv").read_bytes() == (b / "replicates.csv").read_bytes()


def test_unknown_flag_is_usage_error():
    assert run("lsd", "--c", "2", "--bogus").returncode == 1
    assert run().returncode == 1
