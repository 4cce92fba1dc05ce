import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from app.core.exceptions import InvalidSelectionError, NonInteriorError, RegimeError
from app.core.market import hotelling_split, transport_costs
from app.core.pricing import (
    best_response_check,
    corner_interval,
    corner_prices,
    interior_prices,
    outside_stage2_prices,
)
from app.models.models import PriceSelection, PricingRegime, SolveMode
from app.schemas.market import Allocation, PriceProfile
from tests.conftest import make_params


@pytest.mark.parametrize(
    "delta,i_f,p_l,p_f,n_l",
    [
        (0.0, 0.0, 1 + 2 / 3, 1 + 1 / 3, 2 / 3),
        (-0.5, 1.0, 7 / 6, 11 / 6, 1 / 6),
        (0.0, 0.5, 1.5, 1.5, 0.5),
    ],
)
def test_interior_prices(delta, i_f, p_l, p_f, n_l):
    outcome = interior_prices(Allocation(i_l=1.0, i_f=i_f), make_params(delta=delta, c=1.0))
    assert outcome.prices.p_l == pytest.approx(p_l, abs=1e-12)
    assert outcome.prices.p_f == pytest.approx(p_f, abs=1e-12)
    assert outcome.split.n_l == pytest.approx(n_l, abs=1e-12)
    assert outcome.regime == PricingRegime.INTERIOR


@given(delta=st.floats(-0.99, 0.99), ratio=st.floats(0.0, 1.0), i_l=st.floats(0.05, 3.0), scale=st.floats(0.1, 10.0))
def test_interior_prices_follow_shares_and_scale_free(delta, ratio, i_l, scale):
    params = make_params(delta=delta, c=0.7)
    one = interior_prices(Allocation(i_l=i_l, i_f=ratio * i_l), params)
    two = interior_prices(Allocation(i_l=scale * i_l, i_f=scale * ratio * i_l), params)

    assert one.prices.p_l - params.c == pytest.approx(one.split.n_l, abs=1e-12)
    assert one.prices.p_f - params.c == pytest.approx(one.split.n_f, abs=1e-12)
    assert 0 < one.split.n_l < 1
    assert one.prices.p_l == pytest.approx(two.prices.p_l, abs=1e-12)
    assert one.split.n_f == pytest.approx(two.split.n_f, abs=1e-12)


def test_interior_prices_reject_corner_markets():
    with pytest.raises(RegimeError):
        interior_prices(Allocation(i_l=1.0, i_f=0.0), make_params(delta=1.0))


def test_corner_prices_leader_wins():
    outcome = corner_prices(make_params(delta=2.0, c=1.0), PriceSelection.UPPER)
    assert (outcome.prices.p_l, outcome.prices.p_f) == pytest.approx((3.0, 1.0))
    assert (outcome.split.n_l, outcome.split.n_f) == (1.0, 0.0)
    assert outcome.regime == PricingRegime.CORNER_L_WINS


def test_corner_prices_follower_wins():
    outcome = corner_prices(make_params(delta=-3.0, c=1.0), PriceSelection.LOWER)
    assert (outcome.prices.p_l, outcome.prices.p_f) == pytest.approx((0.0, 2.0))
    assert outcome.split.n_f == 1.0
    assert outcome.regime == PricingRegime.CORNER_F_WINS


def test_corner_prices_midpoint_and_explicit_value():
    params = make_params(delta=3.0, c=1.0)
    assert corner_interval(params) == (2.0, 4.0)
    assert corner_prices(params, PriceSelection.MIDPOINT).prices.p_l == pytest.approx(3.0)
    assert corner_prices(params, value=2.5).prices.p_f == pytest.approx(-0.5)
    with pytest.raises(InvalidSelectionError):
        corner_prices(params, value=4.5)


def test_corner_interior_branch_only_at_unit_gap():
    outcome = corner_prices(make_params(delta=1.0, c=0.0), interior_branch=True)
    assert (outcome.prices.p_l, outcome.prices.p_f) == pytest.approx((2 / 3, 1 / 3))
    assert (outcome.split.n_l, outcome.split.n_f) == pytest.approx((2 / 3, 1 / 3))
    assert outcome.regime == PricingRegime.INTERIOR_AT_DELTA_1
    with pytest.raises(RegimeError):
        corner_prices(make_params(delta=1.5), interior_branch=True)


def test_corner_prices_reject_interior_markets():
    with pytest.raises(RegimeError):
        corner_prices(make_params(delta=0.5))


@pytest.mark.parametrize("i_f,p_l,p_f", [(1.0, 1.2, 1.8), (0.0, 1.8, 1.2)])
def test_outside_stage2_prices(i_f, p_l, p_f):
    params = make_params(delta=0.0, b=2.0, k=1.0, c=1.0, alpha=1.0)
    outcome = outside_stage2_prices(Allocation(i_l=1.0, i_f=i_f), params)
    assert (outcome.prices.p_l, outcome.prices.p_f) == pytest.approx((p_l, p_f), abs=1e-12)
    assert outcome.outside_subscriptions is not None
    assert outcome.regime == PricingRegime.OUTSIDE_INTERIOR


def test_outside_stage2_prices_without_spectrum_effect():
    params = make_params(delta=0.0, b=0.0, k=1.3, c=1.3)
    outcome = outside_stage2_prices(Allocation(i_l=0.7, i_f=0.7), params)
    assert outcome.prices.p_l == pytest.approx(1 / 15 + 1.3, abs=1e-12)
    assert outcome.prices.p_f == pytest.approx(4 / 15 + 1.3, abs=1e-12)
    gain = best_response_check(outcome.prices, Allocation(i_l=0.7, i_f=0.7), params, SolveMode.OUTSIDE)
    assert gain <= 1e-4


def test_outside_stage2_prices_preconditions():
    with pytest.raises(NonInteriorError):
        outside_stage2_prices(Allocation(i_l=2.0, i_f=1.0), make_params(delta=0.0, b=2.0))
    with pytest.raises(RegimeError):
        outside_stage2_prices(Allocation(i_l=1.0, i_f=1.0), make_params(delta=0.3))


def test_best_response_check_certifies_interior_prices():
    params = make_params(delta=0.0, c=1.0)
    alloc = Allocation(i_l=0.5, i_f=0.0)
    prices = interior_prices(alloc, params).prices
    assert best_response_check(prices, alloc, params) <= 1e-6

    perturbed = PriceProfile(p_l=prices.p_l + 0.1, p_f=prices.p_f)
    assert best_response_check(perturbed, alloc, params) > 0


def test_best_response_check_certifies_corner_prices():
    params = make_params(delta=2.0, c=1.0)
    prices = corner_prices(params).prices
    assert best_response_check(prices, Allocation(i_l=0.5, i_f=0.0), params) <= 1e-6


@pytest.mark.parametrize("i_f", [17 / 11, 0.0])
def test_best_response_check_outside_equilibria(i_f):
    params = make_params(delta=0.0, gamma=0.8, l0=0.3, s_market=2.0)
    alloc = Allocation(i_l=17 / 11, i_f=i_f)
    prices = outside_stage2_prices(alloc, params).prices
    assert best_response_check(prices, alloc, params, SolveMode.OUTSIDE) <= 1e-4


def test_best_response_check_custom_grid():
    params = make_params(delta=0.0, c=1.0)
    alloc = Allocation(i_l=0.5, i_f=0.25)
    prices = interior_prices(alloc, params).prices
    grid = np.array([prices.p_l, prices.p_f, 1.0, 2.0])
    assert best_response_check(prices, alloc, params, deviation_grid=grid) <= 1e-12


@pytest.mark.parametrize("delta", [-1.5, -3.0])
@pytest.mark.parametrize("i_f", [0.0, 0.2, 0.5])
@pytest.mark.parametrize("selection", list(PriceSelection))
def test_follower_corner_split_matches_hotelling(delta, i_f, selection):
    params = make_params(delta=delta, c=1.0)
    alloc = Allocation(i_l=0.5, i_f=i_f)
    outcome = corner_prices(params, selection)
    split = hotelling_split(outcome.prices, transport_costs(alloc), params)
    assert split.x0 <= 1e-12
    assert (split.n_l, split.n_f) == pytest.approx((outcome.split.n_l, outcome.split.n_f), abs=1e-12)


@pytest.mark.parametrize("delta", [-3.0, -2.0, 1.0, 1.5, 2.0])
@pytest.mark.parametrize("selection", list(PriceSelection))
def test_corner_prices_are_nash_without_lease(delta, selection):
    params = make_params(delta=delta, c=1.0)
    alloc = Allocation(i_l=0.5, i_f=0.0)
    prices = corner_prices(params, selection).prices
    assert best_response_check(prices, alloc, params) <= 1e-9


@pytest.mark.parametrize(
    "delta,i_f",
    [
        (2.0, 0.25),
        (-3.0, 0.25),
        # written interval is reversed between -2 and -1
        (-1.5, 0.0),
    ],
)
def test_corner_prices_leave_gains_off_the_no_lease_corner(delta, i_f):
    params = make_params(delta=delta, c=1.0)
    prices = corner_prices(params).prices
    assert best_response_check(prices, Allocation(i_l=0.5, i_f=i_f), params) > 1e-3
