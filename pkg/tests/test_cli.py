import csv
import json

import numpy as np
import pytest

from SpatialFDR import __version__
from SpatialFDR.lattice_grid import Lattice
from SpatialFDR.lattice_io import read_lattice, write_lattice
from SpatialFDR.sweep import ROW_FIELDS
from SpatialFDR_cli.fdrl_cli import main


def _json(path):
    with open(path) as f:
        return json.load(f)


def _error(capsys):
    lines = [line for line in capsys.readouterr().err.splitlines()
             if line.strip()]
    return json.loads(lines[-1])


@pytest.fixture
def simulated(tmp_path):
    out = str(tmp_path)
    assert main(["simulate", "--scenario", "exponential", "--seed", "5",
                 "--out-dir", out]) == 0
    assert main(["pvalues", "--input", str(tmp_path / "y.lat"),
                 "--model", "exp", "--out-dir", out]) == 0
    return tmp_path


def test_alpha_inf_table(tmp_path):
    assert main(["alpha-inf", "--model", "exp", "--C", "log8",
                 "--lambda", "0.1", "--pi0", "0.84",
                 "--out-dir", str(tmp_path)]) == 0
    result = _json(tmp_path / "alpha_inf.json")
    entry = result["entries"][0]
    assert entry["source"] == "analytic"
    assert entry["alpha_inf_fdr_4dp"] == "0.4130"
    assert entry["alpha_inf_fdrl_4dp"] == "0.0103"
    assert entry["endurance_fdr"] == pytest.approx(0.5870, abs=5e-5)
    text = (tmp_path / "alpha_inf.txt").read_text()
    assert "log(8)" in text and "0.4130" in text


def test_alpha_inf_numeric(tmp_path):
    assert main(["alpha-inf", "--model", "normal", "--C", "2",
                 "--sigma", "0.5", "--out-dir", str(tmp_path)]) == 0
    entry = _json(tmp_path / "alpha_inf.json")["entries"][0]
    assert entry["source"] == "numeric"
    assert entry["alpha_inf_fdr"] > entry["alpha_inf_fdrl"]
    assert entry["report"]["grid_points"] == 10_000


def test_manifest(simulated):
    manifest = _json(simulated / "manifest.json")
    assert manifest["command"] == "pvalues"
    assert manifest["seed"] == 0
    assert manifest["version"] == __version__
    assert manifest["outputs"] == ["p.lat"]
    assert manifest["config"]["options"]["model"] == "exp"


def test_simulate_outputs(simulated):
    truth = read_lattice(str(simulated / "truth.lat"))
    assert truth.count == 400
    assert (simulated / "truth.pgm").read_bytes().startswith(b"P5")
    assert _json(simulated / "scenario.json")["kind"] == "exponential"


def test_score_truth_against_itself(simulated, capsys):
    truth = str(simulated / "truth.lat")
    assert main(["score", "--mask", truth, "--truth", truth,
                 "--out-dir", str(simulated)]) == 0
    report = _json(simulated / "metrics.json")
    assert report["sensitivity"] == 1.0
    assert report["specificity"] == 1.0
    assert report["fdp"] == 0.0


def test_single_site_neighborhood_reproduces_fdr(simulated):
    p = str(simulated / "p.lat")
    out = str(simulated)
    assert main(["fdr", "--input", p, "--alpha", "0.45",
                 "--out-dir", out]) == 0
    assert main(["fdrl", "--input", p, "--alpha", "0.45",
                 "--neighborhood", "knn:1", "--method", "beta",
                 "--out-dir", out]) == 0
    fdr_mask = read_lattice(str(simulated / "fdr_mask.lat"))
    fdrl_mask = read_lattice(str(simulated / "fdrl_mask.lat"))
    np.testing.assert_array_equal(fdr_mask.values, fdrl_mask.values)
    fdr = _json(simulated / "fdr_summary.json")
    fdrl = _json(simulated / "fdrl_summary.json")
    assert fdr["t_alpha"] == fdrl["t_alpha"]
    assert fdrl["neighborhood"] == "knn:1"
    assert (simulated / "fdr_curve.csv").read_text() == \
        (simulated / "fdrl_curve.csv").read_text()


def test_piped_run_equals_sweep(simulated, tmp_path_factory):
    out = str(simulated)
    assert main(["aggregate", "--input", str(simulated / "p.lat"),
                 "--out-dir", out]) == 0
    assert main(["fdrl", "--input", str(simulated / "p.lat"),
                 "--pstar", str(simulated / "pstar.lat"), "--seed", "5",
                 "--out-dir", out]) == 0
    piped = _json(simulated / "fdrl_summary.json")
    assert piped["fallback"] is False

    sweep_dir = tmp_path_factory.mktemp("sweep")
    assert main(["sweep", "--scenario", "exponential", "--seed", "5",
                 "--replicates", "1", "--alphas", "0.05",
                 "--lambdas", "0.1", "--no-spinner",
                 "--out-dir", str(sweep_dir)]) == 0
    with open(sweep_dir / "sweep.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == list(ROW_FIELDS)
    row = [r for r in rows if r["procedure"] == "fdrl"][0]
    assert float(row["t_alpha"]) == piped["t_alpha"]
    assert int(row["rejections"]) == piped["rejections"]
    summary = _json(sweep_dir / "sweep_summary.json")
    assert {s["procedure"] for s in summary} == {"fdr", "fdrl"}


def test_invalid_pvalues_exit_code(tmp_path, capsys):
    bad = str(tmp_path / "bad.lat")
    write_lattice(bad, Lattice((2, 2), [0.1, 0.2, 1.5, 0.3]))
    assert main(["fdr", "--input", bad, "--out-dir", str(tmp_path)]) == 2
    error = _error(capsys)
    assert error["error"] == "invalid-lattice"
    assert "message" in error


def test_dims_mismatch_exit_code(tmp_path, capsys):
    p = str(tmp_path / "p.lat")
    pstar = str(tmp_path / "pstar.lat")
    write_lattice(p, Lattice((2, 3), [0.5] * 6))
    write_lattice(pstar, Lattice((3, 2), [0.5] * 6))
    assert main(["fdrl", "--input", p, "--pstar", pstar,
                 "--out-dir", str(tmp_path)]) == 2
    assert _error(capsys)["error"] == "dims-mismatch"


def test_bad_config_exit_code(tmp_path, capsys):
    assert main(["fdr", "--input", "missing.lat", "--alpha", "1.5",
                 "--out-dir", str(tmp_path)]) == 2
    assert _error(capsys)["error"] == "bad-config"
    assert main(["aggregate", "--input", "missing.lat",
                 "--neighborhood", "hexagon",
                 "--out-dir", str(tmp_path)]) == 2
    assert _error(capsys)["error"] == "invalid-spec"


def test_usage_errors_are_json(tmp_path, capsys):
    assert main(["fdr", "--input", "x.lat", "--method", "3",
                 "--out-dir", str(tmp_path)]) == 2
    error = _error(capsys)
    assert error["error"] == "bad-config"
    assert "--method" in error["message"]
    assert main(["fdr", "--out-dir", str(tmp_path)]) == 2
    assert _error(capsys)["error"] == "bad-config"
    assert main(["simulate", "--dims", "20by20"]) == 2
    assert _error(capsys)["error"] == "bad-config"


def test_simulate_honors_dims(tmp_path):
    assert main(["simulate", "--scenario", "exponential", "--dims", "20x20",
                 "--out-dir", str(tmp_path)]) == 0
    assert _json(tmp_path / "scenario.json")["dims"] == [20, 20]
    y = read_lattice(str(tmp_path / "y.lat"))
    assert y.dims == (20, 20)
    assert main(["simulate", "--scenario", "example1-desk", "--dims",
                 "40x40", "--out-dir", str(tmp_path)]) == 0
    assert read_lattice(str(tmp_path / "truth.lat")).dims == (40, 40)
