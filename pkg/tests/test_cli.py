import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from relu_angle.cli import main
from relu_angle.dynamics import infinite_width_update, iterate
from relu_angle.jfuncs import phi_moment
from table_formulas import TABLE_INDICES, table_value


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestJtable:
    def test_zero_column_and_independence(self, tmp_path):
        out = tmp_path / "j.csv"
        assert main(["jtable", "--max-a", "3", "--max-b", "3", "--thetas", "0,1.5707963267948966",
                     "--out", str(out)]) == 0
        for r in rows(out):
            a, b, t, v = int(r["a"]), int(r["b"]), float(r["theta"]), float(r["value"])
            if t == 0.0:
                ref = 0.5 if a + b == 0 else phi_moment(a + b)
                assert v == pytest.approx(ref, rel=1e-14)
            if (a, b) == (2, 2) and t > 0:
                assert v == pytest.approx(0.25, abs=1e-15)
        manifest = json.loads((tmp_path / "j.csv.manifest.json").read_text())
        assert manifest["command"] == "jtable"
        assert (tmp_path / "j.csv.timing.json").exists()

    def test_against_table(self, tmp_path):
        out = tmp_path / "j.csv"
        grid = np.linspace(0, math.pi, 12)[1:-1]
        main(["jtable", "--max-a", "3", "--max-b", "3", "--thetas", ",".join(repr(float(t)) for t in grid),
              "--out", str(out)])
        worst = 0.0
        for r in rows(out):
            a, b = int(r["a"]), int(r["b"])
            key = (min(a, b), max(a, b))
            if key in TABLE_INDICES:
                worst = max(worst, abs(float(r["value"]) - table_value(a, b, float(r["theta"]))))
        assert worst <= 1e-12

    def test_verify_json(self, tmp_path):
        out = tmp_path / "j.json"
        assert main(["jtable", "--max-a", "2", "--max-b", "2", "--thetas", "0.4,2.0", "--verify",
                     "--format", "json", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["manifest"]["parameters"]["verify"] is True
        assert max(r["abs_diff"] for r in doc["rows"]) <= 1e-9

    def test_unwritable(self, tmp_path, capsys):
        bad = tmp_path / "missing" / "j.csv"
        assert main(["jtable", "--out", str(bad)]) == 3
        assert str(bad) in capsys.readouterr().err

    def test_bad_angle(self, tmp_path):
        assert main(["jtable", "--thetas", "4", "--out", str(tmp_path / "j.csv")]) == 2


class TestPredict:
    def test_depth_zero(self, tmp_path):
        out = tmp_path / "p.csv"
        assert main(["predict", "--theta0", "0.3", "--width", "64", "--depth", "0", "--out", str(out)]) == 0
        rs = rows(out)
        assert {r["predictor"] for r in rs} == {"approx1", "mean_chain", "sampling", "infinite_width"}
        assert all(r["layer"] == "0" for r in rs)
        assert all(float(r["theta"]) == pytest.approx(0.3) for r in rs)

    def test_infinite_width_column(self, tmp_path):
        out = tmp_path / "p.csv"
        main(["predict", "--theta0", "0.2", "--width", "64", "--depth", "12", "--ensemble", "50",
              "--out", str(out)])
        th = [float(r["theta"]) for r in rows(out) if r["predictor"] == "infinite_width"]
        np.testing.assert_array_equal(th, iterate(infinite_width_update, 0.2, 12))

    def test_domain(self, tmp_path):
        assert main(["predict", "--theta0", "2.5", "--width", "4", "--depth", "2",
                     "--out", str(tmp_path / "p.csv")]) == 2
        assert main(["predict", "--theta0", "0.3", "--out", str(tmp_path / "p.csv")]) == 2


class TestSimulate:
    def test_single_trial(self, tmp_path):
        out = tmp_path / "s.csv"
        assert main(["simulate", "--theta0", "0.3", "--width", "16", "--depth", "3", "--trials", "1",
                     "--out", str(out)]) == 0
        assert all(r["variance"] == "nan" for r in rows(out))

    def test_zero_angle(self, tmp_path):
        out = tmp_path / "s.csv"
        raw = tmp_path / "r.csv"
        assert main(["simulate", "--theta0", "0", "--width", "16", "--depth", "3", "--trials", "4",
                     "--out", str(out), "--keep-raw", str(raw)]) == 0
        assert all(float(r["theta_mean"]) == 0.0 for r in rows(out))
        assert len(rows(raw)) == 4

    def test_no_blank_cells(self, tmp_path):
        out = tmp_path / "s.csv"
        main(["simulate", "--theta0", "0.5", "--width", "2", "--depth", "6", "--trials", "30",
              "--out", str(out)])
        for r in rows(out):
            assert all(v != "" for v in r.values())

    def test_deterministic_across_threads(self, tmp_path, monkeypatch):
        args = ["simulate", "--theta0", "0.4", "--width", "32", "--depth", "4", "--trials", "130"]
        main(args + ["--out", str(tmp_path / "a.csv"), "--keep-raw", str(tmp_path / "ra.csv")])
        monkeypatch.setenv("RELU_ANGLE_THREADS", "3")
        main(args + ["--out", str(tmp_path / "b.csv"), "--keep-raw", str(tmp_path / "rb.csv")])
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "ra.csv").read_bytes() == (tmp_path / "rb.csv").read_bytes()
        assert (tmp_path / "a.csv.manifest.json").read_bytes() == (tmp_path / "b.csv.manifest.json").read_bytes()


class TestCompare:
    def _simulate(self, tmp_path, width=128, depth=30, trials=200):
        out, raw = tmp_path / "s.csv", tmp_path / "r.csv"
        main(["simulate", "--theta0", "0.1", "--width", str(width), "--depth", str(depth),
              "--trials", str(trials), "--out", str(out), "--keep-raw", str(raw)])
        return out, raw

    def test_self_comparison(self, tmp_path):
        out, raw = self._simulate(tmp_path, depth=3)
        assert main(["compare", "--prediction", str(out), "--raw", str(raw),
                     "--out", str(tmp_path / "c.csv")]) == 0

    def test_sampling_passes_and_no_rho_fails(self, tmp_path):
        # at width 64 the accumulated O(1/n^2) error already shows by layer 30
        _, raw = self._simulate(tmp_path)
        pred = tmp_path / "p.csv"
        main(["predict", "--theta0", "0.1", "--width", "128", "--depth", "30", "--ensemble", "2000",
              "--out", str(pred)])
        assert main(["compare", "--prediction", str(pred), "--raw", str(raw), "--layers", "1,30",
                     "--alpha", "0.01", "--out", str(tmp_path / "c.csv")]) == 0
        nr = tmp_path / "nr.csv"
        main(["predict", "--theta0", "0.1", "--width", "128", "--depth", "30", "--ensemble", "2000",
              "--no-rho", "--out", str(nr)])
        assert main(["compare", "--prediction", str(nr), "--raw", str(raw), "--layers", "30",
                     "--alpha", "0.01", "--out", str(tmp_path / "c2.csv")]) == 1
        rep = rows(tmp_path / "c2.csv")[0]
        assert rep["pass"] == "0"

    def test_schema_mismatch(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("layer,avg\n1,0.5\n")
        _, raw = self._simulate(tmp_path, depth=2, trials=20)
        assert main(["compare", "--prediction", str(bad), "--raw", str(raw),
                     "--out", str(tmp_path / "c.csv")]) == 2
        assert "mean" in capsys.readouterr().err


class TestValidate:
    def test_bessel_suite(self, capsys):
        assert main(["validate", "--suite", "bessel"]) == 0
        assert "FAIL" not in capsys.readouterr().out

    def test_tiny_budget_skips(self, capsys):
        assert main(["validate", "--suite", "jfuncs", "--budget", "100"]) == 0
        assert "skip" in capsys.readouterr().out

    def test_unknown_suite(self):
        assert main(["validate", "--suite", "nope"]) == 2

    def test_usage_error(self):
        assert main(["frobnicate"]) == 2


def test_module_entry_point(tmp_path):
    out = tmp_path / "j.csv"
    proc = subprocess.run([sys.executable, "-m", "relu_angle.cli", "jtable", "--max-a", "1", "--max-b", "1",
                           "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
