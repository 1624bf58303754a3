import numpy as np
import pytest

from garma_mi.core import Family, ModelSpec, ParamVector, link_eval
from garma_mi.engine import partial_loglik, simulate
from garma_mi.pmle import (EstimationError, check_loglik, default_start, estimate_pmle,
                           simplex_minimize)


def test_simplex_quadratic():
    x, fx, ok = simplex_minimize(lambda v: np.sum((v - 1.0) ** 2), np.zeros(4))
    assert ok
    np.testing.assert_allclose(x, 1.0, atol=1e-5)


def test_simplex_rosenbrock():
    rosen = lambda v: 100 * (v[1] - v[0] ** 2) ** 2 + (1 - v[0]) ** 2
    x, _, ok = simplex_minimize(rosen, np.array([-1.2, 1.0]))
    assert ok
    np.testing.assert_allclose(x, 1.0, atol=1e-3)


def test_simplex_constant_objective():
    x, fx, ok = simplex_minimize(lambda v: 3.0, np.array([0.2, -0.7]))
    assert ok and fx == 3.0
    np.testing.assert_array_equal(x, [0.2, -0.7])


def test_simplex_budget_exhaustion_is_a_flag():
    _, _, ok = simplex_minimize(lambda v: np.sum((v - 1.0) ** 2), np.zeros(3), max_evals=10)
    assert ok is False


def test_default_start(series1, barma):
    s = default_start(series1, barma)
    assert s.alpha == pytest.approx(link_eval(np.mean(series1)))
    assert s.phi == (0.0,) and s.theta == (0.0,) and s.nu == 1.0


@pytest.mark.parametrize("family", list(Family))
def test_fit_improves_on_start_and_reports_loglik(family, gamma1):
    spec = ModelSpec(family)
    y = simulate(gamma1, spec, 300, 50, np.random.default_rng(4)).y
    start = default_start(y, spec)
    res = estimate_pmle(y, spec, start)
    assert res.converged
    assert res.loglik >= partial_loglik(y, start, spec)
    assert check_loglik(y, res, spec) == pytest.approx(res.loglik, abs=1e-8)


def test_recovery_single_long_series(gamma1, barma):
    y = simulate(gamma1, barma, 3000, 100, np.random.default_rng(17)).y
    g = estimate_pmle(y, barma).gamma_hat
    np.testing.assert_allclose(g.to_array()[:3], [0.5, -0.4, -0.6], atol=0.1)
    assert g.nu == pytest.approx(20, rel=0.15)


def test_constant_series_is_flagged(barma):
    res = estimate_pmle(np.full(50, 0.3), barma)
    assert res.degenerate and not res.converged


def test_too_short(barma):
    with pytest.raises(EstimationError):
        estimate_pmle(np.full(5, 0.3), barma)
