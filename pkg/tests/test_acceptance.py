"""
End-to-end checks on simulated data with fixed seeds.

Run with ``pytest -m slow``.
"""

import numpy as np
import pytest
from scipy import stats

from SpatialFDR.aggregate import aggregate, median_rows
from SpatialFDR.fdr_core import fdr_hat, fdrl_hat, reject, threshold
from SpatialFDR.lattice_grid import (Lattice, NeighborhoodSpec,
                                     build_neighborhoods)
from SpatialFDR.null_distribution import (BetaNullCdf, method1_ghat,
                                          method2_ghat,
                                          monte_carlo_median_cdf,
                                          oracle_null_cdf, sup_distance)
from SpatialFDR.procedures import run_fdr, run_fdrl
from SpatialFDR.rng import get_rng
from SpatialFDR.simulation import (example1_desk, exponential, generate,
                                   pvalues_one_sided)
from SpatialFDR.sweep import run_sweep, summarize

pytestmark = pytest.mark.slow

ALPHAS = (0.01, 0.05, 0.1)
LAMBDAS = (0.1, 0.4)


def test_median_of_five_uniforms_follows_beta():
    rng = get_rng(0, "monte_carlo")
    sample = median_rows(rng.random((1_000_000, 5)))
    result = stats.kstest(sample, stats.beta(3, 3).cdf)
    assert result.statistic < 0.002
    mc = monte_carlo_median_cdf(5, draws=1_000_000, seed=0)
    assert sup_distance(mc, BetaNullCdf(5)) <= result.statistic + 1e-12


def test_method1_recovers_beta_on_null_lattice():
    p = Lattice((500, 500), np.random.default_rng(42).random(250_000))
    nbrs = build_neighborhoods(p.dims, NeighborhoodSpec("cross2d5",
                                                        border="mirror"))
    g = method1_ghat(aggregate(p, nbrs))
    assert sup_distance(g, BetaNullCdf(5)) < 0.01


def test_single_site_fdrl_is_fdr():
    rng = np.random.default_rng(2)
    spec = NeighborhoodSpec("knn", 1)
    for _ in range(100):
        p = Lattice((12, 15), rng.random(180) ** 2)
        pstar = aggregate(p, build_neighborhoods(p.dims, spec))
        np.testing.assert_array_equal(pstar.values, p.values)
        t = np.union1d(p.values, [1.0])
        fdr_est = fdr_hat(p, 0.1)
        fdrl_est = fdrl_hat(pstar, 0.1, gstar=BetaNullCdf(1))
        np.testing.assert_array_equal(fdr_est(t), fdrl_est(t))
        for alpha in (0.01, 0.05, 0.1):
            a = threshold(p, fdr_est, alpha)
            b = threshold(pstar, fdrl_est, alpha)
            np.testing.assert_array_equal(reject(p, a.t_alpha).values,
                                          reject(pstar, b.t_alpha).values)


def test_lack_of_identification_on_exponential_scenario():
    """
    FDR cannot reach 0.05 while FDR_L can. A single seed may still let FDR
    reject by chance, since the few smallest p-values make the curve near
    t = 0 noisy (about 0.14 per seed). Seeds 0-9 passed 8 of 10, with
    chance FDR rejections on seeds 1 and 5, hence the 70% rate over 40
    seeds.
    """
    scenario = exponential()
    model = scenario.model()
    passed = 0
    seeds = range(40)
    for seed in seeds:
        y, _ = generate(scenario, seed)
        p = pvalues_one_sided(y, model)
        assert p.values.min() > 0
        nbrs = build_neighborhoods(p.dims, NeighborhoodSpec("cross2d5"))
        fdr_low = run_fdr(p, 0.05, 0.1).curve.rejections
        fdr_high = run_fdr(p, 0.45, 0.1).curve.rejections
        fdrl_low = run_fdrl(p, nbrs, 0.05, 0.1).curve.rejections
        passed += fdr_low == 0 and fdr_high >= 1 and fdrl_low >= 1
    assert passed >= 0.7 * len(seeds)


def test_method2_tracks_oracle_null():
    scenario = example1_desk()
    close = 0
    for seed in range(20):
        y, truth = generate(scenario, seed)
        p = pvalues_one_sided(y, scenario.model())
        nbrs = build_neighborhoods(p.dims, NeighborhoodSpec("cross2d5"))
        pstar = aggregate(p, nbrs)
        g = method2_ghat(p, pstar, nbrs, 0.1, seed=seed)
        close += sup_distance(g, oracle_null_cdf(pstar, truth)) < 0.05
    assert close >= 18


def _example1_summary(method):
    result = run_sweep(example1_desk(), 0, 20, ALPHAS, LAMBDAS,
                       NeighborhoodSpec("cross2d5"), method=method)
    return {(s["procedure"], s["lambda"], s["alpha"]): s
            for s in summarize(result.rows)}


def test_fdrl_method1_on_example1():
    """
    Method I gains sensitivity over FDR at every level, but its FDP runs
    above FDR's: null sites bordering the signal squares have medians
    pulled toward 0, while the symmetric estimate only sees the upper
    tail. Over seeds 0-19 the mean FDP was, for example, 0.0139 against
    0.0093 at alpha 0.01 and 0.0534 against 0.0495 at alpha 0.05.
    """
    summary = _example1_summary("1")
    for lam in LAMBDAS:
        for alpha in ALPHAS:
            fdr = summary[("fdr", lam, alpha)]
            fdrl = summary[("fdrl", lam, alpha)]
            assert fdr["replicates"] == fdrl["replicates"] == 20
            assert fdrl["sensitivity"] >= fdr["sensitivity"]
            assert fdr["specificity"] >= 0.99
            assert fdrl["specificity"] >= 0.99
            assert fdrl["fdp"] <= 2 * alpha


def test_fdrl_method2_on_example1():
    """
    Method II models the contaminated null sites and keeps the FDP of
    FDR_L at or below FDR's. Its sensitivity trails FDR at lambda 0.4,
    alpha 0.01 (0.5692 against 0.6206 over seeds 0-19), so the sensitivity
    ordering is checked at lambda 0.1 only.
    """
    summary = _example1_summary("2")
    for lam in LAMBDAS:
        for alpha in ALPHAS:
            fdr = summary[("fdr", lam, alpha)]
            fdrl = summary[("fdrl", lam, alpha)]
            assert fdr["replicates"] == fdrl["replicates"] == 20
            assert fdrl["specificity"] >= 0.99
            assert fdrl["fdp"] <= fdr["fdp"]
    for alpha in ALPHAS:
        assert (summary[("fdrl", 0.1, alpha)]["sensitivity"]
                >= summary[("fdr", 0.1, alpha)]["sensitivity"])
