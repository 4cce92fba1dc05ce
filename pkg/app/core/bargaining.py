"""
Stage-1 Nash bargaining for the base case: aggregate excess profit, the
closed-form equilibrium-type solutions, corner solutions and the
EU-resource-cost metric.
"""
import logging
from typing import List, Optional

from app.core.exceptions import RegimeError, UnsupportedRegimeError
from app.core.market import resource_cost
from app.core.pricing import corner_prices, interior_prices, interior_share
from app.core.settlement import NashSettlement
from app.models.models import PriceSelection, PricingRegime, SolutionRegime
from app.schemas.equilibrium import BargainingResult, EquilibriumSolution, ExistenceReport, PricingOutcome
from app.schemas.market import Allocation, DisagreementPoint, MarketParams

logger = logging.getLogger(__name__)


def u_excess_kernel(t, i_l, delta, gamma, d):
    """Aggregate excess profit for lease ratio t; numpy-friendly."""
    n_l = interior_share(t, delta)
    return n_l ** 2 + (1 - n_l) ** 2 - gamma * i_l ** 2 - d


def _require_interior(delta: float) -> None:
    if abs(delta) >= 1:
        raise RegimeError(f"interior formulas need |delta| < 1, got {delta}")


def u_excess(alloc: Allocation, params: MarketParams, d: DisagreementPoint) -> float:
    """
    Total payoff minus total disagreement payoff at an allocation, with the
    interior stage-2 prices plugged in. Money flows cancel out.
    """
    _require_interior(params.delta())
    t = alloc.i_f / alloc.i_l
    return float(u_excess_kernel(t, alloc.i_l, params.delta(), params.gamma, d.d))


def total_base_payoff(delta: float, gamma: float, l0: float) -> float:
    _require_interior(delta)
    return (1.0 / 3.0 - abs(delta) / 3.0) ** 2 + (2.0 / 3.0 + abs(delta) / 3.0) ** 2 - gamma * l0 ** 2


def _build_solution(
    alloc: Allocation,
    pricing: PricingOutcome,
    u_star: float,
    params: MarketParams,
    d: DisagreementPoint,
    regime: SolutionRegime,
) -> EquilibriumSolution:
    settlement = NashSettlement(u_star, d, params.w)
    return EquilibriumSolution(
        alloc=alloc,
        flows=settlement.flows(alloc.i_f, pricing.split.n_f, pricing.prices.p_f, params.c),
        prices=pricing.prices,
        split=pricing.split,
        payoffs=settlement.payoffs(),
        u_excess_star=u_star,
        regime=regime,
        disagreement=d,
        bargaining_power=params.w,
    )


def solve_base(params: MarketParams, d: DisagreementPoint) -> BargainingResult:
    """
    Equilibrium-type solutions for |delta| < 1. SP_L buys exactly l0 and
    either leases all of it (delta < 0) or none (delta > 0); at delta = 0
    both are returned, the no-lease one first.
    """
    delta = params.delta()
    pi_star = total_base_payoff(delta, params.gamma, params.l0)
    existence = ExistenceReport.from_totals(pi_star, d.d)
    if not existence.exists:
        logger.warning(f"No equilibrium-type solution: pi*={pi_star:.6g} < d={d.d:.6g}")
        return BargainingResult(solutions=[], existence=existence)

    if delta < 0:
        leases = [params.l0]
    elif delta > 0:
        leases = [0.0]
    else:
        leases = [0.0, params.l0]

    solutions = []
    for i_f in leases:
        alloc = Allocation(i_l=params.l0, i_f=i_f).check_feasible(params)
        u_star = max(u_excess(alloc, params, d), 0.0)
        solutions.append(
            _build_solution(alloc, interior_prices(alloc, params), u_star, params, d, SolutionRegime.BASE_INTERIOR)
        )
    logger.debug(f"Base case delta={delta}: {len(solutions)} solution(s)")
    return BargainingResult(solutions=solutions, existence=existence)


def solve_corner(
    params: MarketParams,
    d: DisagreementPoint,
    selection: PriceSelection = PriceSelection.UPPER,
    i_f: Optional[float] = None,
    price: Optional[float] = None,
) -> BargainingResult:
    """
    Corner solutions for |delta| >= 1. The winner serves the whole pool, so
    u_excess = p* - c - gamma*l0^2 - d regardless of the lease. The lease is
    free in [0, l0]; both endpoints are returned plus `i_f` when given.
    """
    delta = params.delta()
    if abs(delta) < 1:
        raise RegimeError(f"corner solutions need |delta| >= 1, got {delta}")
    if params.gamma >= params.s_market:
        raise RegimeError(f"corner solutions need gamma < s_market ({params.gamma} >= {params.s_market})")

    pricing = corner_prices(params, selection, value=price)
    winner_price = pricing.prices.p_l if pricing.regime == PricingRegime.CORNER_L_WINS else pricing.prices.p_f
    pi_star = winner_price - params.c - params.gamma * params.l0 ** 2
    existence = ExistenceReport.from_totals(pi_star, d.d)
    if not existence.exists:
        logger.warning(f"No corner solution at l0={params.l0}: pi*={pi_star:.6g} < d={d.d:.6g}")
        return BargainingResult(solutions=[], existence=existence)

    leases: List[float] = [0.0, params.l0]
    if i_f is not None:
        leases.append(i_f)
    u_star = max(existence.margin, 0.0)

    solutions = []
    for lease in sorted(set(leases)):
        alloc = Allocation(i_l=params.l0, i_f=lease).check_feasible(params)
        solutions.append(_build_solution(alloc, pricing, u_star, params, d, SolutionRegime.BASE_CORNER))
    return BargainingResult(solutions=solutions, existence=existence)


def resource_cost_metric(solution: EquilibriumSolution) -> float:
    if solution.regime == SolutionRegime.BASE_CORNER:
        raise UnsupportedRegimeError("the EU-resource-cost metric is only defined for interior solutions")
    return resource_cost(solution.alloc, solution.prices)


def resource_cost_closed_form(delta: float, c: float, l0: float) -> float:
    if abs(delta) >= 1:
        raise UnsupportedRegimeError(f"no closed-form resource cost for |delta| >= 1 (delta={delta})")
    if delta < 0:
        return l0 / (c + 2.0 / 3.0 - delta / 3.0)
    if delta > 0:
        return l0 / (c + 2.0 / 3.0 + delta / 3.0)
    return l0 / (c + 2.0 / 3.0)
