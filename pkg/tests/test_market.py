import pytest
from hypothesis import given
from hypothesis import strategies as st
from pydantic import ValidationError

from app.core.exceptions import DegenerateAllocationError, FlowSpecificationError, InfeasibleAllocationError, PreconditionError
from app.core.market import (
    base_payoffs,
    eu_utilities,
    hotelling_split,
    outside_demand,
    resource_cost,
    transport_costs,
)
from app.schemas.market import Allocation, MarketParams, MoneyFlows, PriceProfile, SubscriptionSplit, TransportCosts
from tests.conftest import make_params


@pytest.mark.parametrize(
    "i_l,i_f,t_l,t_f",
    [(0.5, 0.5, 1.0, 0.0), (0.5, 0.0, 0.0, 1.0), (0.4, 0.1, 0.25, 0.75)],
)
def test_transport_costs(i_l, i_f, t_l, t_f):
    t = transport_costs(Allocation(i_l=i_l, i_f=i_f))
    assert t.t_l == pytest.approx(t_l, abs=1e-12)
    assert t.t_f == pytest.approx(t_f, abs=1e-12)


def test_transport_costs_rejects_zero_lease():
    with pytest.raises(DegenerateAllocationError):
        transport_costs(Allocation(i_l=0.0, i_f=0.0))


def test_allocation_rejects_follower_above_leader():
    with pytest.raises(ValidationError):
        Allocation(i_l=0.5, i_f=0.6)


def test_check_feasible_enforces_minimum_and_cap():
    params = make_params(l0=0.5, m_cap=1.0)
    assert Allocation(i_l=0.7, i_f=0.2).check_feasible(params).i_l == 0.7
    with pytest.raises(InfeasibleAllocationError):
        Allocation(i_l=0.4, i_f=0.0).check_feasible(params)
    with pytest.raises(InfeasibleAllocationError):
        Allocation(i_l=1.2, i_f=0.0).check_feasible(params)


def test_market_params_validation():
    assert make_params(m_cap=float("inf")).m_cap is None
    with pytest.raises(ValidationError):
        make_params(m_cap=0.1, l0=0.5)
    with pytest.raises(ValidationError):
        make_params(w=1.0)
    with pytest.raises(ValidationError):
        make_params(gamma=float("nan"))


@pytest.mark.parametrize("x,u_l,u_f", [(0.0, 1.0, 0.5), (1.0, 0.5, 1.0), (0.5, 0.75, 0.75)])
def test_eu_utilities(x, u_l, u_f):
    params = make_params(delta=0.0, v_f=2.0)
    t = TransportCosts(t_l=0.5, t_f=0.5)
    assert eu_utilities(x, PriceProfile(p_l=1.0, p_f=1.0), t, params) == pytest.approx((u_l, u_f))


@given(
    delta=st.floats(-0.9, 0.9),
    p_l=st.floats(0.5, 2.0),
    p_f=st.floats(0.5, 2.0),
    t_l=st.floats(0.0, 1.0),
)
def test_end_user_at_x0_is_indifferent(delta, p_l, p_f, t_l):
    params = make_params(delta=delta)
    t = TransportCosts(t_l=t_l, t_f=1.0 - t_l)
    prices = PriceProfile(p_l=p_l, p_f=p_f)
    split = hotelling_split(prices, t, params)
    u_l, u_f = eu_utilities(split.x0, prices, t, params)
    assert u_l == pytest.approx(u_f, abs=1e-9)


def test_hotelling_split_interior_and_clamped():
    symmetric = hotelling_split(PriceProfile(p_l=1.5, p_f=1.5), TransportCosts(t_l=0.5, t_f=0.5), make_params())
    assert (symmetric.n_l, symmetric.n_f) == pytest.approx((0.5, 0.5))

    equilibrium = hotelling_split(
        PriceProfile(p_l=7 / 6, p_f=11 / 6), TransportCosts(t_l=1.0, t_f=0.0), make_params(delta=-0.5)
    )
    assert (equilibrium.n_l, equilibrium.n_f) == pytest.approx((1 / 6, 5 / 6), abs=1e-12)

    corner = hotelling_split(PriceProfile(p_l=1.0, p_f=1.0), TransportCosts(t_l=0.5, t_f=0.5), make_params(delta=2.0))
    assert (corner.n_l, corner.n_f) == (1.0, 0.0)
    assert corner.x0 == pytest.approx(2.5)


def test_base_payoffs_accounting():
    params = make_params()
    pay = base_payoffs(
        Allocation(i_l=1.0, i_f=0.5),
        PriceProfile(p_l=1.5, p_f=1.5),
        SubscriptionSplit(n_l=0.5, n_f=0.5, x0=0.5),
        MoneyFlows(s_tilde=2.0, theta=0.1),
        params,
    )
    assert pay.pi_f == pytest.approx(-0.15)
    assert pay.pi_l == pytest.approx(0.15)
    assert pay.total == pytest.approx(0.0)


def test_base_payoffs_empty_follower():
    pay = base_payoffs(
        Allocation(i_l=1.0, i_f=0.0),
        PriceProfile(p_l=2.0, p_f=1.0),
        SubscriptionSplit(n_l=1.0, n_f=0.0, x0=1.0),
        MoneyFlows(),
        make_params(),
    )
    assert pay.pi_f == 0.0


def test_money_flows_cancel_in_total():
    args = (
        Allocation(i_l=0.8, i_f=0.4),
        PriceProfile(p_l=1.4, p_f=1.6),
        SubscriptionSplit(n_l=0.4, n_f=0.6, x0=0.4),
    )
    params = make_params()
    one = base_payoffs(*args, MoneyFlows(s_tilde=1.0, theta=0.3), params)
    two = base_payoffs(*args, MoneyFlows(s_tilde=-4.0, theta=-2.0), params)
    assert one.total == pytest.approx(two.total, abs=1e-12)


def test_base_payoffs_needs_fee_for_positive_lease():
    with pytest.raises(FlowSpecificationError):
        base_payoffs(
            Allocation(i_l=1.0, i_f=0.5),
            PriceProfile(p_l=1.5, p_f=1.5),
            SubscriptionSplit(n_l=0.5, n_f=0.5, x0=0.5),
            MoneyFlows(s_tilde=None, theta=0.0),
            make_params(),
        )


@pytest.mark.parametrize(
    "alloc,prices,split,expected",
    [
        (Allocation(i_l=1.0, i_f=1.0), PriceProfile(p_l=1.2, p_f=1.8), SubscriptionSplit(n_l=0.6, n_f=0.4, x0=0.6), (0.4, 1.6)),
        (Allocation(i_l=1.0, i_f=0.0), PriceProfile(p_l=1.8, p_f=1.2), SubscriptionSplit(n_l=0.4, n_f=0.6, x0=0.4), (1.6, 0.4)),
    ],
)
def test_outside_demand_mirrored_levels(alloc, prices, split, expected):
    demand = outside_demand(prices, alloc, split, make_params(alpha=1.0, k=1.0, b=2.0))
    assert (demand.n_tilde_l, demand.n_tilde_f) == pytest.approx(expected, abs=1e-12)
    assert demand.feasible


def test_outside_demand_without_extra_terms_scales_split():
    params = make_params(alpha=0.7, k=1.3, b=0.0)
    split = SubscriptionSplit(n_l=0.3, n_f=0.7, x0=0.3)
    demand = outside_demand(PriceProfile(p_l=1.3, p_f=1.3), Allocation(i_l=1.0, i_f=0.4), split, params)
    assert (demand.n_tilde_l, demand.n_tilde_f) == pytest.approx((0.21, 0.49))


def test_outside_demand_reports_negative_levels():
    demand = outside_demand(
        PriceProfile(p_l=5.0, p_f=1.0),
        Allocation(i_l=1.0, i_f=0.0),
        SubscriptionSplit(n_l=0.0, n_f=1.0, x0=0.0),
        make_params(b=0.0),
    )
    assert not demand.feasible


def test_resource_cost():
    assert resource_cost(Allocation(i_l=0.3, i_f=0.0), PriceProfile(p_l=5 / 3, p_f=4 / 3)) == pytest.approx(0.18)
    assert resource_cost(Allocation(i_l=0.5, i_f=0.5), PriceProfile(p_l=7 / 6, p_f=11 / 6)) == pytest.approx(3 / 11)
    # zero-spectrum terms never touch their price
    assert resource_cost(Allocation(i_l=0.5, i_f=0.5), PriceProfile(p_l=-1.0, p_f=2.0)) == pytest.approx(0.25)
    with pytest.raises(PreconditionError):
        resource_cost(Allocation(i_l=0.5, i_f=0.2), PriceProfile(p_l=0.0, p_f=2.0))


def test_market_params_delta_helpers():
    params = MarketParams(
        gamma=0.5, c=1.0, s_market=1.0, delta_part1=0.01, l0=0.5, w=0.2, v_l=1.5, v_f=2.0, alpha=1.0, k=1.0, b=2.0
    )
    assert params.delta() == pytest.approx(-0.5)
    assert params.with_delta(0.25).delta() == pytest.approx(0.25)
    assert not params.bounded
