"""Acceptance criteria 1-8, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` or as a script.  The full
Monte Carlo grid of criteria 5 and 6 runs only with ``GARMA_FULL_GRID=1``;
by default they use the single smoke cell (scenario 1, r = 0.4, R = 30).
"""

import os
import sys
import time

import numpy as np
import pytest
from scipy import stats

sys.path.insert(0, os.path.dirname(__file__))
from conftest import ACCEPTANCE_LINES  # noqa: E402

from garma_mi import cli  # noqa: E402
from garma_mi.core import (EPS, Family, ModelSpec, ObservedSeries, link_eval,  # noqa: E402
                           link_inv)
from garma_mi.distributions import cdf, log_density, sample  # noqa: E402
from garma_mi.engine import filter_mu, simulate  # noqa: E402
from garma_mi.harness import (SCENARIOS, ScenarioSpec, expand_grid, read_records,  # noqa: E402
                              replication_seed, run_scenario, summarize, write_records)
from garma_mi.imputation import ImputationConfig, impute_pass, run_algorithm1  # noqa: E402
from garma_mi.missing import longest_run_length, make_mcar_mask  # noqa: E402
from garma_mi.pmle import estimate_pmle  # noqa: E402

BARMA = ModelSpec(Family.BETA)
GAMMA1 = SCENARIOS["1"]
MC_CONFIG = ImputationConfig(K=25, H=30, tau=0.01)


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_distribution_identities():
    grid = np.linspace(0.0005, 0.9995, 1000)
    worst = max(np.max(np.abs(log_density(Family.BETA, grid, 0.5, 2.0))),
                np.max(np.abs(log_density(Family.KUMARASWAMY, grid, 0.5, 1.0))))
    cdf_err = 0.0
    for mu in (0.1, 0.37, 0.5, 0.9):
        for nu in (0.7, 3.0, 25.0):
            cdf_err = max(cdf_err, abs(cdf(Family.KUMARASWAMY, mu, mu, nu) - 0.5))
            for rho in (0.1, 0.5, 0.8):
                cdf_err = max(cdf_err, abs(cdf(Family.UNIT_WEIBULL, mu, mu, nu, rho) - rho))
    report(1, worst < 1e-12 and cdf_err < 1e-12,
           f"max |log f| = {worst:.1e}, max CDF error = {cdf_err:.1e}")


def test_criterion_2_sampler_ks():
    crit = 1.63 / np.sqrt(10_000)
    worst = 0.0
    rng = np.random.default_rng(2)
    # points with negligible mass outside [EPS, 1 - EPS], where draws are clamped
    for family in Family:
        for mu, nu in ((0.2, 4.0), (0.5, 20.0), (0.85, 6.0)):
            draws = sample(family, mu, nu, rng, size=10_000)
            d = stats.kstest(draws, lambda y: cdf(family, np.clip(y, 1e-15, 1 - 1e-15),
                                                  mu, nu)).statistic
            worst = max(worst, d)
    report(2, worst < crit, f"max KS D = {worst:.4f} (critical {crit:.4f})")


def test_criterion_3_complete_recovery():
    est = []
    for rep in range(50):
        seed = replication_seed(2024, "recovery", rep)
        y = simulate(GAMMA1, BARMA, 500, 100, np.random.default_rng(seed)).y
        est.append(estimate_pmle(y, BARMA).gamma_hat.to_array())
    med = np.median(est, axis=0)
    ok = np.all(np.abs(med[:3] - [0.5, -0.4, -0.6]) <= 0.1) and abs(med[3] / 20 - 1) <= 0.2
    report(3, bool(ok), "median (alpha, phi, theta, nu) = " + np.array2string(med, precision=3))


LONGEST_RUN_TARGETS = {0: (36.0, 22.3, 11.9), 1: (84.9, 42.4, 17.6), 2: (149.0, 73.8, 25.8)}


def test_criterion_4_longest_run_table():
    rng = np.random.default_rng(196)
    cells, ok = [], True
    for L, targets in LONGEST_RUN_TARGETS.items():
        for r, target in zip((0.2, 0.4, 0.7), targets):
            mean = np.mean([longest_run_length(make_mcar_mask(196, r, rng), L)
                            for _ in range(1000)])
            hit = abs(mean / target - 1) <= 0.10
            ok &= hit
            cells.append(f"L={L} r={r}: {mean:.1f} vs {target}{'' if hit else ' X'}")
    report(4, ok, "; ".join(cells))


# -- Monte Carlo criteria -------------------------------------------------------

FULL_GRID = os.environ.get("GARMA_FULL_GRID") == "1"
_MC_CACHE = {}


def _mc_cells():
    if FULL_GRID:
        return [(s, r, 100) for s in ("1", "2", "3") for r in (0.1, 0.4, 0.7)]
    return [("1", 0.4, 30)]


def _run_cells():
    if "cells" not in _MC_CACHE:
        out = {}
        for scenario, r, reps in _mc_cells():
            rows = {}
            for spec in expand_grid([scenario], ["barma"], [r], ["cvsc", "vrsc"],
                                    replications=reps, config=MC_CONFIG):
                recs = run_scenario(spec, jobs=os.cpu_count() or 1)
                rows[spec.criterion.value] = summarize(recs, spec.gamma_true,
                                                       include_complete=False).row(
                    spec.criterion.value, "alpha")
            out[(scenario, r)] = rows
        _MC_CACHE["cells"] = out
    return _MC_CACHE["cells"]


@pytest.mark.slow
def test_criterion_5_iteration_ordering():
    cells, ok = [], True
    for (scenario, r), rows in _run_cells().items():
        c, v = rows["cvsc"].mean_iters, rows["vrsc"].mean_iters
        hit = bool(v < c and 9 <= c <= 17 and 4 <= v <= 12)
        ok &= hit
        cells.append(f"s{scenario} r={r}: CVSC {c:.1f}, VRSC {v:.1f}")
    scope = "full grid" if FULL_GRID else "smoke cell"
    report(5, ok, f"[{scope}] " + "; ".join(cells))


@pytest.mark.slow
def test_criterion_6_nonconvergence_rate():
    cells, ok = [], True
    for (scenario, r), rows in _run_cells().items():
        c, v = rows["cvsc"].pct_nonconv, rows["vrsc"].pct_nonconv
        ok &= bool(c <= 5 and v <= 5)
        cells.append(f"s{scenario} r={r}: CVSC {c:.1f}%, VRSC {v:.1f}%")
    scope = "full grid" if FULL_GRID else "smoke cell"
    report(6, ok, f"[{scope}] " + "; ".join(cells))


def _median_theta(r):
    spec = ScenarioSpec(f"1-barma-r{r:g}", GAMMA1, BARMA, r=r, criterion="vrsc",
                        replications=50, config=MC_CONFIG)
    recs = run_scenario(spec, jobs=os.cpu_count() or 1)
    # every replication that produced an estimate counts; see the notes on drift
    thetas = [rec.imputed.theta[0] for rec in recs if rec.imputed is not None]
    return float(np.median(thetas))


@pytest.mark.slow
def test_criterion_7_theta_shrinkage():
    hi, lo = _median_theta(0.7), _median_theta(0.1)
    ok = abs(hi) < 0.6 and abs(hi) < abs(lo)
    report(7, ok, f"median theta: r=0.7 -> {hi:.3f}, r=0.1 -> {lo:.3f}")


def test_criterion_8_invariants(tmp_path):
    t0 = time.time()
    checks = {}
    y = simulate(GAMMA1, BARMA, 300, 0, np.random.default_rng(8))
    checks["filter/simulate"] = np.max(np.abs(filter_mu(y.y, GAMMA1, BARMA).mu - y.mu)) < 1e-12
    grid = np.linspace(EPS, 1 - EPS, 1001)
    checks["link round-trip"] = np.max(np.abs(link_inv(link_eval(grid)) - grid)) < 1e-12
    mask = make_mcar_mask(300, 0.4, np.random.default_rng(1))
    series = ObservedSeries.from_complete(y.y, mask)
    filled = impute_pass(series, GAMMA1, BARMA, np.random.default_rng(3))
    checks["observed preserved"] = np.array_equal(filled[mask], y.y[mask])
    L = 0
    while longest_run_length(mask, L) <= BARMA.m + BARMA.n_params:
        L += 1
    cfg = ImputationConfig(K=5, H=5, seed=9, L=L)
    a, b = run_algorithm1(series, BARMA, cfg), run_algorithm1(series, BARMA, cfg)
    checks["determinism"] = a.gamma_hat == b.gamma_hat and np.array_equal(a.completed,
                                                                          b.completed)
    spec = ScenarioSpec("inv", GAMMA1, BARMA, n=120, burn_in=10, r=0.1, replications=2,
                        config=ImputationConfig(K=3, H=4))
    recs = run_scenario(spec)
    checks["records CSV"] = read_records(write_records(recs, tmp_path / "r.csv")) == recs
    cli.write_series(tmp_path / "s.csv", series.values)
    back = cli.read_series(tmp_path / "s.csv")
    checks["series CSV"] = (np.array_equal(back.mask, mask)
                            and np.array_equal(back.values[mask], y.y[mask]))
    elapsed = time.time() - t0
    failed = [k for k, v in checks.items() if not v]
    report(8, not failed and elapsed < 60,
           f"{len(checks) - len(failed)}/{len(checks)} invariants hold in {elapsed:.1f}s"
           + (f"; failed: {', '.join(failed)}" if failed else ""))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
