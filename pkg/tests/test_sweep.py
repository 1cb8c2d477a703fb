import csv
import io

import pytest

from SpatialFDR.lattice_grid import NeighborhoodSpec, build_neighborhoods
from SpatialFDR.procedures import run_fdr, run_fdrl
from SpatialFDR.simulation import (SignalRegion, Scenario, exponential,
                                   generate, metrics, pvalues_one_sided)
from SpatialFDR.sweep import (CURVE_FIELDS, ROW_FIELDS, ReplicateJob,
                              rows_to_csv, run_replicate, run_sweep,
                              summarize)

ALPHAS = (0.05, 0.2)
LAMBDAS = (0.1, 0.4)


@pytest.fixture
def small_sweep():
    return run_sweep(exponential(), 7, 3, ALPHAS, LAMBDAS,
                     NeighborhoodSpec("cross2d5"), curve_points=20)


def test_rows_are_ordered(small_sweep):
    rows = small_sweep.rows
    per_replicate = 2 * len(ALPHAS) * len(LAMBDAS)
    assert len(rows) == 3 * per_replicate
    assert [r["replicate"] for r in rows] == sorted(r["replicate"]
                                                     for r in rows)
    assert [r["seed"] for r in rows[::per_replicate]] == [7, 8, 9]
    first = rows[:per_replicate]
    assert [r["procedure"] for r in first] == ["fdr"] * 4 + ["fdrl"] * 4
    assert [(r["lambda"], r["alpha"]) for r in first[:4]] == [
        (0.1, 0.05), (0.1, 0.2), (0.4, 0.05), (0.4, 0.2)]
    assert all(r["error"] is None for r in rows)


def test_replicate_matches_single_run(small_sweep):
    # replicate 1 of seed 7 is the pipeline run with seed 8
    scenario = exponential()
    y, truth = generate(scenario, 8)
    p = pvalues_one_sided(y, scenario.model())
    nbrs = build_neighborhoods(p.dims, NeighborhoodSpec("cross2d5"))
    fdrl = run_fdrl(p, nbrs, 0.05, 0.1, seed=8)
    fdr = run_fdr(p, 0.05, 0.1)

    rows = [r for r in small_sweep.rows
            if r["replicate"] == 1 and r["alpha"] == 0.05
            and r["lambda"] == 0.1]
    by_procedure = {r["procedure"]: r for r in rows}
    assert by_procedure["fdrl"]["t_alpha"] == fdrl.curve.t_alpha
    assert by_procedure["fdrl"]["rejections"] == fdrl.curve.rejections
    assert by_procedure["fdr"]["rejections"] == fdr.curve.rejections
    report = metrics(fdrl.mask, truth)
    assert by_procedure["fdrl"]["sensitivity"] == report.sensitivity
    assert by_procedure["fdrl"]["fdp"] == report.fdp


def test_summarize(small_sweep):
    summary = summarize(small_sweep.rows)
    assert len(summary) == 2 * len(ALPHAS) * len(LAMBDAS)
    for entry in summary:
        assert entry["replicates"] == 3
        assert 0.0 <= entry["specificity"] <= 1.0
        assert 0.0 <= entry["fdp"] <= 1.0
    fdr = [e for e in summary if e["procedure"] == "fdr"
           and e["lambda"] == 0.1 and e["alpha"] == 0.05][0]
    rows = [r for r in small_sweep.rows if r["procedure"] == "fdr"
            and r["lambda"] == 0.1 and r["alpha"] == 0.05]
    assert fdr["fdp"] == pytest.approx(sum(r["fdp"] for r in rows) / 3)


def test_curves_are_averaged(small_sweep):
    curves = small_sweep.curves
    # fdr and fdrl per lambda, 20 points each
    assert len(curves) == 2 * len(LAMBDAS) * 20
    assert set(curves[0]) == set(CURVE_FIELDS)
    assert curves[-1]["t"] == 1.0
    assert all(c["fdp"] >= 0 for c in curves)


def test_rows_to_csv(small_sweep):
    text = rows_to_csv(small_sweep.rows)
    records = list(csv.DictReader(io.StringIO(text)))
    assert list(records[0]) == list(ROW_FIELDS)
    assert len(records) == len(small_sweep.rows)
    # missing values are written as empty cells
    assert records[0]["filter"] == ""
    assert float(records[0]["alpha"]) == 0.05


def test_degenerate_null_becomes_error_rows():
    # every site carries strong signal, so no p* exceeds 1/2
    scenario = Scenario("saturated", (10, 10),
                        (SignalRegion((0, 0), (10, 10), 20.0),),
                        noise="exp", C=20.0)
    job = ReplicateJob(scenario, 0, 1, (0.05,), (0.1,),
                       NeighborhoodSpec("cross2d5"))
    result = run_replicate(job)
    fdr_rows = [r for r in result.rows if r["procedure"] == "fdr"]
    fdrl_rows = [r for r in result.rows if r["procedure"] == "fdrl"]
    assert fdr_rows[0]["error"] is None
    assert fdrl_rows[0]["error"] == "degenerate-null"
    assert fdrl_rows[0]["t_alpha"] is None
    assert [s["procedure"] for s in summarize(result.rows)] == ["fdr"]


def test_mean_filter_rows():
    result = run_sweep(exponential(), 0, 1, (0.05,), (0.1,),
                       NeighborhoodSpec("cross2d5"),
                       filters=("median", "mean"))
    assert [r["filter"] for r in result.rows] == [None, "median", "mean"]


def test_worker_count_does_not_change_rows():
    args = (exponential(), 3, 2, (0.05,), (0.1,),
            NeighborhoodSpec("cross2d5"))
    serial = run_sweep(*args, workers=1)
    seen = []
    parallel = run_sweep(*args, workers=2,
                         on_result=lambda i, _: seen.append(i))
    assert parallel.rows == serial.rows
    assert seen == [0, 1]
