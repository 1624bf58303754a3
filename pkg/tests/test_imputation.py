import math

import numpy as np
import pytest
from scipy.optimize import brentq

from garma_mi.core import Family, ModelSpec, ObservedSeries, ParamVector, link_eval
from garma_mi.engine import simulate
from garma_mi.imputation import (CVSCState, Criterion, ImputationConfig, ImputationError,
                                 VRSCState, coefficient_of_variation, cvsc_update,
                                 impute_pass, multi_impute_step, run_algorithm1, vrsc_update)
from garma_mi.missing import make_mcar_mask
from garma_mi.pmle import estimate_pmle


@pytest.fixture(scope="module")
def masked(series1):
    mask = make_mcar_mask(len(series1), 0.1, np.random.default_rng(2))
    return ObservedSeries.from_complete(series1, mask)


def test_config_validation():
    with pytest.raises(ValueError):
        ImputationConfig(K=1)
    with pytest.raises(ValueError):
        ImputationConfig(tau=0)
    assert ImputationConfig(criterion="cvsc").criterion is Criterion.CVSC


def test_cv_hand_arithmetic():
    # d = (1, 2, 3): mean 2, S^2 = 2
    assert coefficient_of_variation([1, 2, 3]) == pytest.approx(math.sqrt(2) / 2)
    assert coefficient_of_variation([1, 2, 3], normalized=True) == pytest.approx(0.5)


def test_cvsc_by_hand():
    state = CVSCState(last=np.zeros(1))
    seq = [[3.0], [4.0], [5.0], [6.0]]  # distances 3, 1, 1, 1
    stops = [cvsc_update(state, np.array(x), 0.01)[1] for x in seq]
    c2 = coefficient_of_variation([3, 1])
    c3 = coefficient_of_variation([3, 1, 1])
    c4 = coefficient_of_variation([3, 1, 1, 1])
    np.testing.assert_allclose(state.coefs, [c2, c3, c4])
    assert stops == [False, False, abs(c3 / c2 - 1) < 0.01, abs(c4 / c3 - 1) < 0.01]


def test_cvsc_zero_distances_stop():
    state = CVSCState(last=np.ones(2))
    assert cvsc_update(state, np.ones(2), 0.01)[1] is False
    assert cvsc_update(state, np.ones(2), 0.01)[1] is True


def test_vrsc_by_hand():
    state = VRSCState(estimates=[np.array([0.0])])
    out = [vrsc_update(state, np.array([x]), 0.01)[1] for x in (2.0, 4.0, 6.0)]
    # variances of {0,2}, {0,2,4}, {0,2,4,6}: 2, 4, 20/3
    np.testing.assert_allclose(np.ravel(state.variances), [2.0, 4.0, 20 / 3])
    np.testing.assert_allclose(state.distances, [2.0, 8 / 3])
    assert out == [False, False, False]


def test_vrsc_fires_at_constructed_point():
    # choose the fourth iterate so the distance-of-distances equals tau / 2
    base = [0.0, 1.0, 1.5]
    tau = 0.01

    def gap(x):
        st = VRSCState(estimates=[np.array([base[0]])])
        for v in base[1:] + [x]:
            vrsc_update(st, np.array([v]), tau)
        return (st.distances[-1] - st.distances[-2]) - tau / 2

    x = brentq(gap, 1.5, 3.0)
    st = VRSCState(estimates=[np.array([base[0]])])
    stops = [vrsc_update(st, np.array([v]), tau)[1] for v in base[1:] + [x]]
    assert stops == [False, False, True]


def test_impute_preserves_observed(masked, gamma1, barma):
    y = impute_pass(masked, gamma1, barma, np.random.default_rng(0))
    np.testing.assert_array_equal(y[masked.mask], masked.values[masked.mask])
    assert np.all((y > 0) & (y < 1))


def test_impute_first_position():
    spec = ModelSpec(Family.BETA)
    vals = np.r_[np.nan, np.full(20, 0.5)]
    g = ParamVector(link_eval(0.2), [0.0], [0.0], 400.0)
    draws = [impute_pass(ObservedSeries(vals), g, spec, np.random.default_rng(s))[0]
             for s in range(200)]
    assert np.mean(draws) == pytest.approx(0.2, abs=0.01)


def test_impute_propagates_dependence(series1, gamma1, barma):
    """Imputed series should keep the lag-1 dependence of the complete one.

    Known shortfall: forward-only draws ignore the observed value after each
    gap, which attenuates the autocorrelation beyond the 0.1 tolerance.
    """
    mask = make_mcar_mask(len(series1), 0.4, np.random.default_rng(9))
    series = ObservedSeries.from_complete(series1, mask)

    def lag1(y):
        g = link_eval(y) - link_eval(y).mean()
        return np.sum(g[1:] * g[:-1]) / np.sum(g * g)

    vals = [lag1(impute_pass(series, gamma1, barma, np.random.default_rng(s)))
            for s in range(200)]
    assert np.mean(vals) == pytest.approx(lag1(series1), abs=0.1)


def test_step_is_deterministic_and_order_free(masked, gamma1, barma):
    a = multi_impute_step(masked, gamma1, barma, 6, 123)
    b = multi_impute_step(masked, gamma1, barma, 6, 123)
    assert a.pooled == b.pooled
    np.testing.assert_allclose(a.pooled.to_array(),
                               np.mean([g.to_array() for g in a.inner], axis=0))
    sd = np.std([g.alpha for g in a.inner], ddof=1)
    assert sd < 0.2


def test_step_fails_when_most_estimates_fail(masked, gamma1, barma):
    def broken(y, spec, start):
        raise ValueError("nope")
    with pytest.raises(ImputationError):
        multi_impute_step(masked, gamma1, barma, 4, 0, estimator=broken)


def test_complete_series_short_circuit(series1, barma):
    res = run_algorithm1(ObservedSeries(series1), barma, ImputationConfig())
    full = estimate_pmle(series1, barma).gamma_hat
    assert res.converged and res.iterations == 3
    assert res.gamma_hat == full
    np.testing.assert_array_equal(res.uncertainty_sd, 0.0)


def test_run_is_deterministic(masked, barma):
    cfg = ImputationConfig(K=5, H=6, seed=4)
    a = run_algorithm1(masked, barma, cfg)
    b = run_algorithm1(masked, barma, cfg)
    assert a.gamma_hat == b.gamma_hat and a.iterations == b.iterations
    assert len(a.trajectory) == a.iterations + 1
    assert a.iterations <= cfg.H
    assert a.converged or a.iterations == cfg.H
    np.testing.assert_array_equal(a.completed[masked.mask], masked.values[masked.mask])


def test_restart_extends_the_run(masked, barma):
    cfg = ImputationConfig(K=3, H=3, tau=1e-12, seed=1, restart=True)
    res = run_algorithm1(masked, barma, cfg)
    assert res.restarted and res.iterations == 6 and not res.converged
