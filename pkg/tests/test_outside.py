import pytest
from hypothesis import given
from hypothesis import strategies as st

from app.core.exceptions import DegenerateAllocationError, UnsupportedRegimeError
from app.core.market import outside_payoffs, resource_cost
from app.core.outside import (
    maximize_outside_objective,
    outside_aux,
    outside_closed_form,
    outside_objective,
    outside_quadratic,
    outside_u_excess,
    solve_outside,
)
from app.core.pricing import outside_stage2_prices
from app.schemas.market import Allocation
from tests.conftest import make_params, user_point


def market(**values):
    fields = dict(delta=0.0, alpha=1.0, b=2.0, k=1.0, c=1.0, gamma=0.8, l0=0.3, s_market=2.0)
    fields.update(values)
    return make_params(**fields)


def test_outside_aux_values():
    aux = outside_aux(1.0, market())
    assert aux.f_val == pytest.approx(0.6)
    assert aux.g_val == pytest.approx(0.2)
    with pytest.raises(DegenerateAllocationError):
        outside_aux(0.0, market())


def test_outside_objective_value():
    assert outside_objective(1.0, market()) == pytest.approx(0.56, abs=1e-12)


@given(i_l=st.floats(0.05, 3.0), gamma=st.floats(0.0001, 3.0), b=st.floats(0.0, 3.0), alpha=st.floats(0.2, 2.0))
def test_quadratic_coefficients_reproduce_objective(i_l, gamma, b, alpha):
    params = market(gamma=gamma, b=b, alpha=alpha)
    quad_a, quad_b, quad_c = outside_quadratic(params)
    assert quad_a * i_l ** 2 + quad_b * i_l + quad_c == pytest.approx(outside_objective(i_l, params), abs=1e-9)


@pytest.mark.parametrize(
    "values,expected",
    [({}, 17 / 11), ({"gamma": 2.0}, 0.3), ({"m_cap": 1.0}, 1.0)],
)
def test_maximize_outside_objective(values, expected):
    optimum = maximize_outside_objective(market(**values))
    assert optimum.bounded
    assert optimum.i_l_star == pytest.approx(expected, abs=1e-9)
    assert optimum.h_star == pytest.approx(outside_objective(optimum.i_l_star, market(**values)))


def test_maximize_outside_objective_flags_unbounded_program():
    optimum = maximize_outside_objective(market(gamma=0.5))
    assert not optimum.bounded
    assert optimum.i_l_star is None
    assert optimum.quad_a > 0


def test_maximize_outside_objective_convex_with_cap_takes_best_endpoint():
    optimum = maximize_outside_objective(market(gamma=0.5, m_cap=3.0))
    assert optimum.bounded
    assert optimum.i_l_star == 3.0


@given(i_l=st.floats(0.1, 1.9), ratio=st.floats(0.0, 1.0))
def test_outside_u_excess_boundaries_and_vertex(i_l, ratio):
    params = market()
    d = user_point()
    at_zero = outside_u_excess(Allocation(i_l=i_l, i_f=0.0), params, d)
    at_full = outside_u_excess(Allocation(i_l=i_l, i_f=i_l), params, d)
    at_vertex = outside_u_excess(Allocation(i_l=i_l, i_f=i_l / 2), params, d)
    anywhere = outside_u_excess(Allocation(i_l=i_l, i_f=ratio * i_l), params, d)

    assert at_zero == pytest.approx(at_full, abs=1e-12)
    assert at_zero == pytest.approx(outside_objective(i_l, params), abs=1e-12)
    assert at_vertex <= anywhere + 1e-12
    assert anywhere <= at_zero + 1e-12


def test_outside_u_excess_needs_zero_gap():
    with pytest.raises(UnsupportedRegimeError):
        outside_u_excess(Allocation(i_l=1.0, i_f=0.5), market(delta=0.2), user_point())


def test_closed_form_matches_composition_at_unit_demand_scale():
    closed = outside_closed_form(1.0, market())
    assert (closed.prices.p_l, closed.prices.p_f) == pytest.approx((1.2, 1.8), abs=1e-12)
    assert (closed.outside_subscriptions.n_tilde_l, closed.outside_subscriptions.n_tilde_f) == pytest.approx(
        (0.4, 1.6), abs=1e-12
    )
    composed = outside_stage2_prices(Allocation(i_l=1.0, i_f=1.0), market())
    assert composed.outside_subscriptions.n_tilde_l == pytest.approx(0.4, abs=1e-12)


def test_solve_outside_returns_mirrored_pair():
    params = market()
    result = solve_outside(params, user_point(0.05, 0.02))
    assert result.existence.exists
    first, second = result.solutions
    assert first.alloc.i_l == pytest.approx(17 / 11)
    assert first.alloc.i_f == first.alloc.i_l
    assert second.alloc.i_f == 0.0

    assert first.prices.p_l == pytest.approx(14 / 11, abs=1e-12)
    assert first.prices.p_f == pytest.approx(23 / 11, abs=1e-12)
    assert second.prices.p_l == pytest.approx(first.prices.p_f, abs=1e-12)
    assert second.outside_subscriptions.n_tilde_l == pytest.approx(first.outside_subscriptions.n_tilde_f, abs=1e-12)

    assert first.flows.theta == 0.0 and first.flows.significant
    assert second.flows.s_tilde is None

    for solution in result.solutions:
        rebuilt = outside_payoffs(solution.alloc, solution.prices, solution.outside_subscriptions, solution.flows, params)
        assert rebuilt.pi_l == pytest.approx(solution.payoffs.pi_l, abs=1e-9)
        assert rebuilt.pi_f == pytest.approx(solution.payoffs.pi_f, abs=1e-9)
        assert resource_cost(solution.alloc, solution.prices) == pytest.approx(first.alloc.i_l / first.prices.p_f)


def test_solve_outside_without_solutions():
    expensive = solve_outside(market(gamma=50.0), user_point(0.5, 0.5))
    assert expensive.empty
    assert expensive.existence.margin < 0

    beyond = solve_outside(market(gamma=0.7), user_point())
    assert beyond.empty
    assert not beyond.existence.interior

    unbounded = solve_outside(market(gamma=0.5), user_point())
    assert unbounded.empty
    assert not unbounded.existence.bounded
    assert unbounded.existence.pi_star is None


def test_solve_outside_with_binding_cap():
    result = solve_outside(market(m_cap=1.0), user_point())
    assert [s.alloc.i_l for s in result.solutions] == [1.0, 1.0]


def test_solve_outside_needs_zero_gap():
    with pytest.raises(UnsupportedRegimeError):
        solve_outside(market(delta=0.5), user_point())
