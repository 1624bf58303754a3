import numpy as np
import pytest
from hypothesis import given, strategies as st

from garma_mi.core import (EPS, DomainError, Family, ModelSpec, ObservedSeries, ParamVector,
                           link_eval, link_inv, param_names, validate_params)


def test_family_parse_aliases():
    assert Family.parse("BARMA") is Family.BETA
    assert Family.parse("karma") is Family.KUMARASWAMY
    assert Family.parse(Family.UNIT_WEIBULL) is Family.UNIT_WEIBULL
    with pytest.raises(ValueError):
        Family.parse("gamma")


def test_model_spec_orders():
    spec = ModelSpec(Family.BETA, 2, 1)
    assert spec.m == 2
    assert spec.n_params == 5


@pytest.mark.parametrize("gamma", [
    ParamVector(0.5, [-0.4], [-0.6], 20.0),
    ParamVector(0.5, [-0.5], [-0.3], 30.0),
    ParamVector(0.5, [-0.4], [-0.2], 20.0),
])
def test_validate_accepts_scenarios(gamma):
    assert validate_params(gamma, ModelSpec(Family.BETA)) == []


def test_validate_reports_each_problem():
    spec = ModelSpec(Family.BETA)
    assert validate_params(ParamVector(0.5, [0.1], [0.1], 0.0), spec) == ["nu must be positive"]
    assert validate_params(ParamVector(0.5, [0.1, 0.2], [0.1], 1.0), spec) == \
        ["phi length mismatch"]
    assert "coefficients must be finite" in validate_params(
        ParamVector(np.inf, [0.1], [0.1], 1.0), spec)


def test_param_vector_round_trip():
    g = ParamVector(0.3, [0.1, -0.2], [0.4], 7.0)
    assert ParamVector.from_array(g.to_array(), 2, 1) == g
    assert param_names(2, 1) == ["alpha", "phi1", "phi2", "theta", "nu"]


def test_observed_series_mask_is_authoritative():
    s = ObservedSeries(np.array([0.2, 0.3, 0.4]), np.array([True, False, True]))
    assert np.isnan(s.values[1])
    assert s.n_missing == 1 and not s.is_complete
    with pytest.raises(ValueError):
        s.values[0] = 0.5


def test_observed_series_rejects_out_of_range():
    with pytest.raises(DomainError):
        ObservedSeries(np.array([0.2, 1.0]))


def test_link_values():
    assert link_eval(0.5) == 0.0
    assert link_inv(0.0) == 0.5
    with pytest.raises(DomainError):
        link_eval(0.0, clip=False)
    assert link_inv(1e4) == 1 - EPS and link_inv(-1e4) == EPS


@given(st.floats(min_value=EPS, max_value=1 - EPS))
def test_link_round_trip(y):
    assert abs(link_inv(link_eval(y)) - y) < 1e-12


@given(st.floats(min_value=-13.0, max_value=13.0))
def test_inverse_link_round_trip(eta):
    assert abs(link_eval(link_inv(eta)) - eta) < 1e-8
