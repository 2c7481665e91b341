import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from offloadgame import (
    DomainError,
    FlowSpec,
    Linear,
    Logarithmic,
    PowerLaw,
    ScenarioSpec,
    ap_payoff,
    flow_payoff,
    utility_deriv,
    utility_value,
)

FAMILIES = [Linear(2.0), PowerLaw(1.0, 0.5), PowerLaw(3.0, 0.8), Logarithmic(3.0), Logarithmic(0.7)]


def test_utility_values():
    assert utility_value(Linear(2), 3) == 6
    assert utility_value(Logarithmic(1), 0) == 0
    assert utility_value(PowerLaw(1, 0.5), 4) == pytest.approx(2)


def test_utility_derivatives():
    assert utility_deriv(Linear(2), 5) == 2
    assert utility_deriv(PowerLaw(1, 0.5), 4) == pytest.approx(0.25)
    assert utility_deriv(Logarithmic(3), 1) == pytest.approx(1.5)


def test_domain_errors():
    with pytest.raises(DomainError):
        utility_value(Linear(1), -0.1)
    with pytest.raises(DomainError):
        utility_deriv(PowerLaw(1, 0.5), 0.0)
    with pytest.raises(DomainError):
        utility_deriv(Logarithmic(1), -1.0)


@pytest.mark.parametrize("bad", [lambda: Linear(0), lambda: PowerLaw(1, 1.0), lambda: PowerLaw(1, 0), lambda: Logarithmic(-2)])
def test_invalid_utility_parameters(bad):
    with pytest.raises(ValueError):
        bad()


@pytest.mark.parametrize("u", FAMILIES, ids=repr)
@pytest.mark.parametrize("x", [0.1, 0.5, 1, 2, 10])
def test_derivative_matches_central_difference(u, x):
    h = 1e-4 * max(1, x)
    fd = (utility_value(u, x + h) - utility_value(u, x - h)) / (2 * h)
    assert abs(utility_deriv(u, x) - fd) <= 1e-5


@pytest.mark.parametrize("u", FAMILIES, ids=repr)
def test_derivative_nonincreasing(u):
    xs = np.geomspace(1e-3, 1e3, 100)
    d = np.array([utility_deriv(u, x) for x in xs])
    assert np.all(d > 0)
    assert np.all(np.diff(d) <= 0)


@pytest.mark.parametrize("u", FAMILIES, ids=repr)
def test_zero_offload_zero_price_payoff_is_zero(u):
    s = ScenarioSpec(2, [FlowSpec(u, (1.0, 2.0))])
    assert flow_payoff(s, 0, np.zeros((1, 2)), np.zeros(1)) == 0.0


def test_flow_payoff_examples():
    s = ScenarioSpec(2, [FlowSpec(Linear(1), (1.0, 1.0))])
    assert flow_payoff(s, 0, [[math.e - 1, 0]], [0.5]) == pytest.approx(0.5)
    assert flow_payoff(s, 0, [[4, 2.333]], [1.6]) == pytest.approx(math.log(5) + math.log(3.333) - 1.6)
    assert flow_payoff(s, 0, [[4, 2.333]], [1.6]) == pytest.approx(1.21331, abs=1e-5)


def test_ap_payoff_examples():
    s = ScenarioSpec(2, [FlowSpec(Linear(1), (1.0, 1.0))])
    assert ap_payoff(s, 0, [[1, 1]], [4]) == pytest.approx(1.0)
    assert ap_payoff(s, 0, [[0, 0]], [4]) == 0.0
    assert ap_payoff(s, 0, [[3, 1]], [4]) == pytest.approx(0.0)


def test_ap_payoff_not_concave_in_rival_offload():
    s = ScenarioSpec(2, [FlowSpec(Linear(1), (0.1, 0.1))])
    v = [ap_payoff(s, 0, [[1.0, x]], [1.0]) for x in (0.5, 1.0, 1.5)]
    assert v[0] - 2 * v[1] + v[2] >= 0


def test_scenario_validation():
    with pytest.raises(ValueError):
        ScenarioSpec(1, [FlowSpec(Linear(1), (1.0,))])
    with pytest.raises(ValueError):
        FlowSpec(Linear(1), (1.0, 0.0))
    with pytest.raises(ValueError):
        ScenarioSpec(3, [FlowSpec(Linear(1), (1.0, 1.0))])
    with pytest.raises(ValueError):
        ScenarioSpec(2, [FlowSpec(Linear(1), (1.0, 1.0))], capacity=-1.0)


def test_shape_mismatch_rejected():
    s = ScenarioSpec(2, [FlowSpec(Linear(1), (1.0, 1.0))])
    with pytest.raises(ValueError):
        flow_payoff(s, 0, np.zeros((2, 2)), np.zeros(1))


@given(
    r=st.lists(st.floats(0, 50), min_size=3, max_size=3),
    C=st.floats(0, 20),
)
def test_payments_are_fully_distributed(r, C):
    # APs collectively receive exactly C whenever someone offloads
    s = ScenarioSpec(3, [FlowSpec(Linear(1), (0.5, 0.5, 0.5))])
    rr = np.array([r])
    received = sum(ap_payoff(s, i, rr, [C]) + 0.5 * r[i] for i in range(3))
    expected = C if sum(r) > 0 else 0.0
    assert received == pytest.approx(expected, rel=1e-9, abs=1e-9)
