"""
Replicate sweeps: simulate, test and score over seeds x alphas x lambdas.

Replicate r of a sweep started with seed s runs with seed s + r, exactly as
the single-step command line pipeline would with --seed s + r.
"""

from collections import defaultdict
from dataclasses import dataclass, field
import csv
import io
import logging
from typing import Optional, Tuple

import numpy as np

from .aggregate import FilterKind, aggregate
from .errors import SpatialFDRError
from .fdr_core import fdp_at, fdr_hat, fdrl_hat
from .lattice_grid import NeighborhoodSpec, build_neighborhoods
from .null_distribution import oracle_null_cdf, sup_distance
from .procedures import null_cdf_for, run_fdr, run_fdrl_on_pstar
from .replicate_pool import map_ordered
from .rng import replicate_seeds
from .simulation import (Scenario, generate, metrics, pvalues_one_sided,
                         pvalues_two_sided)

logger = logging.getLogger("spatialfdr.sweep")

ROW_FIELDS = ("replicate", "seed", "procedure", "filter", "method", "alpha",
              "lambda", "t_alpha", "rejections", "sensitivity",
              "specificity", "fdp", "oracle_sup", "error")
CURVE_FIELDS = ("procedure", "filter", "lambda", "t", "fdr_hat", "fdp")


@dataclass(frozen=True)
class ReplicateJob:
    scenario: Scenario
    replicate: int
    seed: int
    alphas: Tuple[float, ...]
    lambdas: Tuple[float, ...]
    spec: NeighborhoodSpec
    filters: Tuple[str, ...] = ("median",)
    method: str = "1"
    reps: int = 1
    sided: str = "one"
    oracle: bool = False
    curve_points: Optional[int] = None


@dataclass
class ReplicateResult:
    rows: list
    curves: list = field(default_factory=list)


def _row(job, procedure, filter_name, alpha, lam, curve=None, report=None,
         oracle_sup=None, error=None):
    row = dict.fromkeys(ROW_FIELDS)
    row.update(replicate=job.replicate, seed=job.seed, procedure=procedure,
               filter=filter_name, alpha=alpha, oracle_sup=oracle_sup,
               error=error)
    row["lambda"] = lam
    row["method"] = job.method if procedure == "fdrl" else None
    if curve is not None:
        row.update(t_alpha=curve.t_alpha, rejections=curve.rejections)
    if report is not None:
        row.update(sensitivity=report.sensitivity,
                   specificity=report.specificity, fdp=report.fdp)
    return row


def run_replicate(job: ReplicateJob) -> ReplicateResult:
    """Run both procedures on one simulated realization."""
    y, truth = generate(job.scenario, job.seed)
    model = job.scenario.model()
    if job.sided == "two":
        p = pvalues_two_sided(y, model)
    else:
        p = pvalues_one_sided(y, model)
    nbrs = build_neighborhoods(p.dims, job.spec)
    t_grid = (np.linspace(0.0, 1.0, job.curve_points + 1)[1:]
              if job.curve_points else None)

    rows, curves = [], []
    for lam in job.lambdas:
        for alpha in job.alphas:
            result = run_fdr(p, alpha, lam)
            rows.append(_row(job, "fdr", None, alpha, lam, result.curve,
                             metrics(result.mask, truth)))
        if t_grid is not None:
            curves.append(("fdr", None, lam, fdr_hat(p, lam, t_grid),
                           fdp_at(p, truth, t_grid)))

    for filter_name in job.filters:
        pstar = aggregate(p, nbrs, FilterKind.parse(filter_name))
        oracle = oracle_null_cdf(pstar, truth) if job.oracle else None
        for lam in job.lambdas:
            try:
                gstar = null_cdf_for(job.method, p, pstar, nbrs, lam=lam,
                                     seed=job.seed, reps=job.reps)
                oracle_sup = (sup_distance(gstar, oracle)
                              if oracle is not None else None)
                for alpha in job.alphas:
                    result = run_fdrl_on_pstar(pstar, gstar, alpha, lam)
                    rows.append(_row(job, "fdrl", filter_name, alpha, lam,
                                     result.curve,
                                     metrics(result.mask, truth),
                                     oracle_sup))
                if t_grid is not None:
                    curves.append(("fdrl", filter_name, lam,
                                   fdrl_hat(pstar, lam, t_grid, gstar),
                                   fdp_at(pstar, truth, t_grid)))
            except SpatialFDRError as e:
                logger.warning("Replicate %d (seed %d), %s filter, "
                               "lambda=%g: %s", job.replicate, job.seed,
                               filter_name, lam, e)
                rows.extend(_row(job, "fdrl", filter_name, alpha, lam,
                                 error=e.code) for alpha in job.alphas)

    curve_rows = []
    for procedure, filter_name, lam, estimates, fdps in curves:
        for t, est, fdp in zip(t_grid, estimates, fdps):
            curve_rows.append({"procedure": procedure, "filter": filter_name,
                               "lambda": lam, "t": float(t),
                               "fdr_hat": float(est), "fdp": float(fdp)})
    return ReplicateResult(rows, curve_rows)


@dataclass
class SweepResult:
    rows: list
    curves: list


def _average_curves(results):
    sums = defaultdict(lambda: [0.0, 0.0, 0])
    order = []
    for result in results:
        for row in result.curves:
            key = (row["procedure"], row["filter"], row["lambda"], row["t"])
            if key not in sums:
                order.append(key)
            acc = sums[key]
            acc[0] += row["fdr_hat"]
            acc[1] += row["fdp"]
            acc[2] += 1
    return [{"procedure": k[0], "filter": k[1], "lambda": k[2], "t": k[3],
             "fdr_hat": sums[k][0] / sums[k][2],
             "fdp": sums[k][1] / sums[k][2]} for k in order]


def run_sweep(scenario: Scenario, seed: int, replicates: int, alphas,
              lambdas, spec: NeighborhoodSpec, filters=("median",),
              method="1", reps=1, sided="one", oracle=False,
              curve_points=None, workers=1, on_result=None) -> SweepResult:
    """
    Run replicates seed, seed+1, ... and collect one row per replicate x
    procedure x filter x lambda x alpha, ordered by replicate.
    """
    jobs = [ReplicateJob(scenario, r, s, tuple(alphas), tuple(lambdas),
                         spec, tuple(filters), str(method), reps, sided,
                         oracle, curve_points)
            for r, s in enumerate(replicate_seeds(seed, replicates))]
    logger.info("Sweep: %d replicates of %s on %d worker(s)", replicates,
                scenario.kind, workers)
    results = map_ordered(run_replicate, jobs, workers=workers,
                          on_result=on_result)
    rows = [row for result in results for row in result.rows]
    return SweepResult(rows, _average_curves(results))


def summarize(rows):
    """
    Mean sensitivity, specificity and FDP per (procedure, filter, lambda,
    alpha), skipping rows that carry an error.
    """
    groups = defaultdict(list)
    for row in rows:
        if row.get("error"):
            continue
        key = (row["procedure"], row["filter"], row["lambda"], row["alpha"])
        groups[key].append(row)

    def mean(values):
        values = [v for v in values if v is not None]
        return float(np.mean(values)) if values else None

    summary = []
    for key, group in groups.items():
        procedure, filter_name, lam, alpha = key
        summary.append({
            "procedure": procedure, "filter": filter_name, "lambda": lam,
            "alpha": alpha, "replicates": len(group),
            "sensitivity": mean(r["sensitivity"] for r in group),
            "specificity": mean(r["specificity"] for r in group),
            "fdp": mean(r["fdp"] for r in group),
        })
    return summary


def rows_to_csv(rows, fields=ROW_FIELDS) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(fields),
                            extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row.get(k) is None else row.get(k))
                         for k in fields})
    return buffer.getvalue()
