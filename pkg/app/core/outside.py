"""
Bargaining when end users may leave for an outside option (delta = 0).

The optimal lease is all-or-nothing, so the joint problem collapses to a
one-dimensional program in i_l whose objective h is a quadratic.
"""
import logging
from typing import Optional, Tuple

from app.core.exceptions import DegenerateAllocationError, UnsupportedRegimeError
from app.core.market import hotelling_split, transport_costs
from app.core.pricing import interior_limit, outside_stage2_prices
from app.core.settlement import NashSettlement
from app.models.models import PricingRegime, SolutionRegime
from app.schemas.equilibrium import (
    BargainingResult,
    EquilibriumSolution,
    ExistenceReport,
    OutsideAux,
    OutsideOptimum,
    PricingOutcome,
)
from app.schemas.market import Allocation, DisagreementPoint, MarketParams, OutsideSubscriptions, PriceProfile

logger = logging.getLogger(__name__)


def _require_zero_delta(params: MarketParams) -> None:
    if params.delta() != 0:
        raise UnsupportedRegimeError(f"the outside-option solver only covers delta = 0, got {params.delta()}")


def outside_aux(i_l: float, params: MarketParams) -> OutsideAux:
    if i_l <= 0:
        raise DegenerateAllocationError("f and g need i_l > 0")
    return OutsideAux(
        f_val=1.0 / (5.0 * i_l) + params.b / 5.0,
        g_val=params.b * i_l / 15.0 + 1.0 / 15.0 - params.c / 3.0 + params.k / 3.0,
    )


def outside_objective(i_l: float, params: MarketParams) -> float:
    aux = outside_aux(i_l, params)
    a = params.alpha
    return 2 * a * aux.g_val ** 2 + 2 * a * (aux.f_val * i_l + aux.g_val) ** 2 - params.gamma * i_l ** 2


def outside_quadratic(params: MarketParams) -> Tuple[float, float, float]:
    """
    Coefficients (A, B, C) with h(i) = A*i^2 + B*i + C.
    f*i + g = q0 + 4b*i/15 and g = g0 + b*i/15.
    """
    a, b = params.alpha, params.b
    g0 = 1.0 / 15.0 + (params.k - params.c) / 3.0
    q0 = 4.0 / 15.0 + (params.k - params.c) / 3.0
    quad_a = 2 * a * 17 * b ** 2 / 225.0 - params.gamma
    quad_b = 4 * a * (b * g0 / 15.0 + 4 * b * q0 / 15.0)
    quad_c = 2 * a * (g0 ** 2 + q0 ** 2)
    return quad_a, quad_b, quad_c


def maximize_outside_objective(params: MarketParams) -> OutsideOptimum:
    """
    Maximise h over [l0, m_cap]. With m_cap unbounded the program has no
    maximiser when h opens upward, or is linear with a positive slope.
    """
    quad_a, quad_b, quad_c = outside_quadratic(params)
    lo, hi = params.l0, params.m_cap
    coefficients = dict(quad_a=quad_a, quad_b=quad_b, quad_c=quad_c)

    if hi is None and (quad_a > 0 or (quad_a == 0 and quad_b > 0)):
        logger.warning(f"Outside-option objective is unbounded (A={quad_a:.6g}, B={quad_b:.6g})")
        return OutsideOptimum(bounded=False, **coefficients)

    if quad_a < 0:
        i_l_star = max(-quad_b / (2 * quad_a), lo)
        if hi is not None:
            i_l_star = min(i_l_star, hi)
    elif quad_a == 0:
        i_l_star = hi if quad_b > 0 else lo
    else:
        # convex with a finite cap: best endpoint, ties to l0
        i_l_star = hi if outside_objective(hi, params) > outside_objective(lo, params) else lo

    h_star = outside_objective(i_l_star, params)
    logger.debug(f"Outside-option optimum i_l*={i_l_star:.9g}, h*={h_star:.9g}")
    return OutsideOptimum(i_l_star=i_l_star, h_star=h_star, bounded=True, **coefficients)


def outside_u_excess_kernel(i_l, i_f, params: MarketParams, d: float = 0.0):
    """Elementwise outside-option u_excess; i_l and i_f may be numpy arrays."""
    a = params.alpha
    f = 1.0 / (5.0 * i_l) + params.b / 5.0
    g = params.b * i_l / 15.0 + 1.0 / 15.0 - params.c / 3.0 + params.k / 3.0
    return (
        4 * a * f ** 2 * i_f ** 2
        - 4 * a * f ** 2 * i_l * i_f
        + 2 * a * g ** 2
        + 2 * a * (f * i_l + g) ** 2
        - params.gamma * i_l ** 2
        - d
    )


def outside_u_excess(alloc: Allocation, params: MarketParams, d: DisagreementPoint) -> float:
    """
    Aggregate excess profit at (i_l, i_f); an upward parabola in i_f with
    equal values at i_f = 0 and i_f = i_l.
    """
    _require_zero_delta(params)
    if alloc.i_l <= 0:
        raise DegenerateAllocationError("outside-option u_excess needs i_l > 0")
    return float(outside_u_excess_kernel(alloc.i_l, alloc.i_f, params, d.d))


def outside_closed_form(i_l: float, params: MarketParams) -> PricingOutcome:
    """
    Prices and subscriptions of the full-lease solution written out in i_l.
    The subscription levels carry no alpha, so they agree with the
    composed demand only at alpha = 1.
    """
    b, c, k = params.b, params.c, params.k
    prices = PriceProfile(
        p_l=1.0 / 15.0 + 2 * c / 3.0 + k / 3.0 + b * i_l / 15.0,
        p_f=4.0 / 15.0 + 2 * c / 3.0 + k / 3.0 + 4 * b * i_l / 15.0,
    )
    alloc = Allocation(i_l=i_l, i_f=i_l)
    return PricingOutcome(
        prices=prices,
        split=hotelling_split(prices, transport_costs(alloc), params),
        regime=PricingRegime.OUTSIDE_INTERIOR,
        outside_subscriptions=OutsideSubscriptions(
            n_tilde_l=2.0 / 15.0 + 2 * k / 3.0 + 2 * b * i_l / 15.0 - 2 * c / 3.0,
            n_tilde_f=8.0 / 15.0 + 2 * k / 3.0 - 2 * c / 3.0 + 8 * b * i_l / 15.0,
        ),
    )


def solve_outside(params: MarketParams, d: DisagreementPoint) -> BargainingResult:
    """
    Interior equilibrium-type solutions of the outside-option game.
    Either none exist or two do: full lease (i_f = i_l*) then no lease (i_f = 0).
    """
    _require_zero_delta(params)
    optimum = maximize_outside_objective(params)
    if not optimum.bounded:
        existence = ExistenceReport.from_totals(None, d.d, bounded=False, detail="objective unbounded above")
        return BargainingResult(solutions=[], existence=existence)

    i_l_star: Optional[float] = optimum.i_l_star
    limit = interior_limit(params)
    interior = i_l_star < limit
    detail = "" if interior else f"i_l*={i_l_star:.6g} is not below 4/b={limit:.6g}"
    existence = ExistenceReport.from_totals(optimum.h_star, d.d, interior=interior, detail=detail)
    if not existence.exists:
        logger.warning(f"No interior outside-option solution: {existence}")
        return BargainingResult(solutions=[], existence=existence)

    u_star = max(existence.margin, 0.0)
    settlement = NashSettlement(u_star, d, params.w)
    solutions = []
    for i_f in (i_l_star, 0.0):
        alloc = Allocation(i_l=i_l_star, i_f=i_f).check_feasible(params)
        pricing = outside_stage2_prices(alloc, params)
        demand = pricing.outside_subscriptions
        solutions.append(
            EquilibriumSolution(
                alloc=alloc,
                flows=settlement.flows(i_f, demand.n_tilde_f, pricing.prices.p_f, params.c),
                prices=pricing.prices,
                split=pricing.split,
                outside_subscriptions=demand,
                payoffs=settlement.payoffs(),
                u_excess_star=u_star,
                regime=SolutionRegime.OUTSIDE_INTERIOR,
                disagreement=d,
                bargaining_power=params.w,
            )
        )
    return BargainingResult(solutions=solutions, existence=existence)
