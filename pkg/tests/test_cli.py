import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from amput import put_value, uniform_measure
from amput.cli import main


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def spec_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("specs")
    mu = d / "mu.json"
    nu = d / "nu.json"
    mu.write_text(json.dumps({"uniform": [-1.0, 1.0], "grid_size": 200}))
    nu.write_text(json.dumps({"uniform": [-2.0, 2.0], "grid_size": 400}))
    return str(mu), str(nu)


def _invoke(runner, args):
    result = runner.invoke(main, args, catch_exceptions=False)
    return result


class TestPrice:
    def test_uniform_pair(self, runner, spec_files):
        mu, nu = spec_files
        res = _invoke(runner, ["price", "--mu", mu, "--nu", nu,
                               "--k1", "0.5", "--k2", "0.25"])
        assert res.exit_code == 0
        assert "region    R" in res.output
        payload = json.loads(res.output[res.output.index("{"):])
        assert payload["price"] == pytest.approx(7785 / 10368, abs=1e-4)
        assert payload["threshold"] == pytest.approx(1 / 18, abs=1e-3)

    def test_out_file(self, runner, spec_files, tmp_path):
        mu, nu = spec_files
        out = tmp_path / "sol.json"
        res = _invoke(runner, ["price", "--mu", mu, "--nu", nu,
                               "--k1", "0.5", "--k2", "0.25",
                               "--out", str(out)])
        assert res.exit_code == 0
        payload = json.loads(out.read_text())
        assert payload["region"] == "R"


class TestHedge:
    def test_table_output(self, runner, spec_files, tmp_path):
        mu, nu = spec_files
        out = tmp_path / "hedge.json"
        table = tmp_path / "table.csv"
        res = _invoke(runner, ["hedge", "--mu", mu, "--nu", nu,
                               "--k1", "0.5", "--k2", "0.25",
                               "--out", str(out), "--table-out", str(table)])
        assert res.exit_code == 0
        payload = json.loads(out.read_text())
        assert abs(payload["duality_gap"]) <= 1e-6
        rows = list(csv.DictReader(table.open()))
        assert rows and set(rows[0]) == {"x", "phi", "theta1"}
        phis = np.array([float(r["phi"]) for r in rows])
        assert np.all(phis >= -1e-12)


class TestCoupling:
    def test_csv_and_jumps(self, runner, spec_files):
        mu, nu = spec_files
        res = _invoke(runner, ["coupling", "--mu", mu, "--nu", nu])
        assert res.exit_code == 0
        assert "f jumps" in res.output
        body = res.output[res.output.index("x,f,g"):]
        rows = list(csv.DictReader(body.splitlines()))
        xs = np.array([float(r["x"]) for r in rows])
        fs = np.array([float(r["f"]) for r in rows])
        gs = np.array([float(r["g"]) for r in rows])
        inside = (xs > -0.9) & (xs < 0.9)
        assert np.allclose(fs[inside], -(xs[inside] + 3) / 2, atol=5e-3)
        assert np.allclose(gs[inside], (3 * xs[inside] + 1) / 2, atol=5e-3)


class TestRegionMap:
    def test_sweep_and_determinism(self, runner, spec_files, tmp_path):
        mu, nu = spec_files
        args = ["region-map", "--mu", mu, "--nu", nu,
                "--k1", "-0.5:1.5:5", "--k2", "-1.5:0.5:5"]
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        assert _invoke(runner, args + ["--out", str(out1)]).exit_code == 0
        assert _invoke(runner, args + ["--out", str(out2)]).exit_code == 0
        assert out1.read_text() == out2.read_text()
        rows = list(csv.DictReader(out1.open()))
        assert all(float(r["k2"]) < float(r["k1"]) for r in rows)
        assert {r["region"] for r in rows} <= {"R", "B", "G", "W",
                                               "DEG_EUROPEAN", "DEG_INTRINSIC"}

    def test_bad_range_spec(self, runner, spec_files):
        mu, nu = spec_files
        res = runner.invoke(main, ["region-map", "--mu", mu, "--nu", nu,
                                   "--k1", "0:1", "--k2", "0:1:3"])
        assert res.exit_code == 2


class TestVerify:
    def test_gates_pass(self, runner, tmp_path):
        mu = tmp_path / "mu.json"
        nu = tmp_path / "nu.json"
        mu.write_text(json.dumps({"uniform": [-1.0, 1.0], "grid_size": 60}))
        nu.write_text(json.dumps({"uniform": [-2.0, 2.0], "grid_size": 120}))
        res = _invoke(runner, ["verify", "--mu", str(mu), "--nu", str(nu),
                               "--k1", "0.5", "--k2", "0.25",
                               "--samples", "20000", "--tol", "1e-8"])
        assert res.exit_code == 0
        report = json.loads(res.output)
        assert report["gates_ok"] is True
        assert report["sandwich_ok"] is True
        assert report["pathwise_violations"] == 0
        assert report["plan_value"] <= report["lp_value"] + 1e-8
        assert report["lp_value"] <= report["hedge_cost_discrete"] + 1e-8


class TestSimulate:
    def test_sample_table(self, runner, spec_files, tmp_path):
        mu, nu = spec_files
        out = tmp_path / "paths.csv"
        res = _invoke(runner, ["simulate", "--mu", mu, "--nu", nu,
                               "--k1", "0.5", "--k2", "0.25",
                               "--samples", "5000", "--seed", "7",
                               "--out", str(out)])
        assert res.exit_code == 0
        assert "superhedge violations: 0" in res.output
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 5000
        payoff = np.array([float(r["payoff"]) for r in rows])
        hedge = np.array([float(r["hedge_value"]) for r in rows])
        assert np.all(hedge >= payoff - 1e-8)


class TestIngestAndCurves:
    def test_ingest_roundtrip(self, runner, spec_files):
        mu, nu = spec_files
        res = _invoke(runner, ["ingest", "--mu", mu, "--nu", nu])
        assert res.exit_code == 0
        payload = json.loads(res.output)
        w = np.array(payload["mu"]["weights"])
        assert w.sum() == pytest.approx(1.0, abs=1e-12)

    def test_price_from_put_curves(self, runner, tmp_path):
        ks = np.linspace(-2.2, 2.2, 881)
        mu = uniform_measure(-1.0, 1.0, 400)
        nu = uniform_measure(-2.0, 2.0, 800)
        for name, m in (("c1.csv", mu), ("c2.csv", nu)):
            with (tmp_path / name).open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["strike", "price"])
                for k in ks:
                    w.writerow([f"{k:.17g}", f"{put_value(m, k):.17g}"])
        res = _invoke(runner, ["price",
                               "--curve1", str(tmp_path / "c1.csv"),
                               "--curve2", str(tmp_path / "c2.csv"),
                               "--k1", "0.5", "--k2", "0.25"])
        assert res.exit_code == 0
        payload = json.loads(res.output[res.output.index("{"):])
        assert payload["price"] == pytest.approx(7785 / 10368, abs=5e-3)


class TestErrorCodes:
    def test_convex_order_violated(self, runner, tmp_path):
        mu = tmp_path / "mu.json"
        nu = tmp_path / "nu.json"
        mu.write_text(json.dumps({"uniform": [-2.0, 2.0], "grid_size": 100}))
        nu.write_text(json.dumps({"uniform": [-1.0, 1.0], "grid_size": 100}))
        res = runner.invoke(main, ["price", "--mu", str(mu), "--nu", str(nu),
                                   "--k1", "0.5", "--k2", "0.25"])
        assert res.exit_code == 3

    def test_missing_sources(self, runner):
        res = runner.invoke(main, ["price", "--k1", "0.5", "--k2", "0.25"])
        assert res.exit_code == 2
