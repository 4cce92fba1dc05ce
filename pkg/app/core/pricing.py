"""
Stage-2 price competition: closed-form equilibria for the base case and the
outside-option extension, plus a grid-scan check of the Nash property.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import InvalidSelectionError, NonInteriorError, RegimeError
from app.core.market import hotelling_split, indifference_point, outside_demand, transport_costs
from app.models.models import PriceSelection, PricingRegime, SolveMode
from app.schemas.equilibrium import PricingOutcome
from app.schemas.market import Allocation, MarketParams, PriceProfile, SubscriptionSplit

logger = logging.getLogger(__name__)


def interior_share(t, delta):
    """
    SP_L's interior market share (= p_l - c) for lease ratio t = i_f/i_l.
    Works elementwise on numpy arrays.
    """
    return 2.0 / 3.0 - t / 3.0 + delta / 3.0


def interior_prices(alloc: Allocation, params: MarketParams) -> PricingOutcome:
    delta = params.delta()
    if abs(delta) >= 1:
        raise RegimeError(f"interior prices need |delta| < 1, got {delta}")

    t = transport_costs(alloc)
    n_l = interior_share(t.t_l, delta)
    n_f = 1.0 - n_l
    return PricingOutcome(
        prices=PriceProfile(p_l=params.c + n_l, p_f=params.c + n_f),
        split=SubscriptionSplit(n_l=n_l, n_f=n_f, x0=n_l),
        regime=PricingRegime.INTERIOR,
    )


def corner_interval(params: MarketParams) -> Tuple[float, float]:
    """
    Written endpoints (lower, upper) of the price left free by the corner
    equilibrium: p_l for delta >= 1, p_f for delta <= -1.
    """
    delta, c = params.delta(), params.c
    if delta >= 1:
        return c + 1, c + delta
    if delta <= -1:
        return c + 1, c - delta - 1
    raise RegimeError(f"corner prices need |delta| >= 1, got {delta}")


def _select(bounds: Tuple[float, float], selection: PriceSelection, value: Optional[float]) -> float:
    lower, upper = bounds
    if value is not None:
        lo, hi = min(bounds), max(bounds)
        if not lo <= value <= hi:
            raise InvalidSelectionError(f"price {value} lies outside the admissible interval [{lo}, {hi}]")
        return value
    if selection == PriceSelection.LOWER:
        return lower
    if selection == PriceSelection.UPPER:
        return upper
    if selection == PriceSelection.MIDPOINT:
        return (lower + upper) / 2
    raise InvalidSelectionError(f"Unknown price selection {selection}")


def corner_prices(
    params: MarketParams,
    selection: PriceSelection = PriceSelection.UPPER,
    value: Optional[float] = None,
    interior_branch: bool = False,
) -> PricingOutcome:
    """
    Corner price equilibrium for |delta| >= 1.

    delta >= 1: SP_L serves everyone, p_l picked in [c+1, c+delta], p_f = p_l - delta.
    delta <= -1: SP_F serves everyone, p_f picked between c+1 and c-delta-1,
    p_l = p_f + delta + 1 so the indifferent user sits at x0 = t_f - 1 <= 0.
    At delta == 1 the interior strategy is also an equilibrium; ask for it
    with interior_branch=True. The split is the one the regime declares and
    x0 records its boundary.

    Both corners are stage-2 equilibria only without a lease (t_f = 1), and
    for delta <= -1 only once delta <= -2 (otherwise the interval is reversed).
    """
    delta, c = params.delta(), params.c

    if interior_branch:
        if delta != 1:
            raise RegimeError(f"the interior branch only exists at delta = 1, got {delta}")
        return PricingOutcome(
            prices=PriceProfile(p_l=c + 2.0 / 3.0, p_f=c + 1.0 / 3.0),
            split=SubscriptionSplit(n_l=2.0 / 3.0, n_f=1.0 / 3.0, x0=2.0 / 3.0),
            regime=PricingRegime.INTERIOR_AT_DELTA_1,
        )

    chosen = _select(corner_interval(params), selection, value)
    if delta >= 1:
        return PricingOutcome(
            prices=PriceProfile(p_l=chosen, p_f=chosen - delta),
            split=SubscriptionSplit(n_l=1.0, n_f=0.0, x0=1.0),
            regime=PricingRegime.CORNER_L_WINS,
        )
    return PricingOutcome(
        prices=PriceProfile(p_l=chosen + delta + 1, p_f=chosen),
        split=SubscriptionSplit(n_l=0.0, n_f=1.0, x0=0.0),
        regime=PricingRegime.CORNER_F_WINS,
    )


def outside_price_kernel(t_l, i_l, i_f, params: MarketParams):
    """
    Outside-option stage-2 prices; t_l, i_l, i_f may be numpy arrays.
    The prices do not depend on alpha.
    """
    base = 1.0 / 15.0 + 2.0 * params.c / 3.0 + params.k / 3.0
    b = params.b
    p_l = base + (1 - t_l) / 5.0 - (b / 5.0) * i_f + (4.0 * b / 15.0) * i_l
    p_f = base + t_l / 5.0 + (b / 15.0) * i_l + (b / 5.0) * i_f
    return p_l, p_f


def interior_limit(params: MarketParams) -> float:
    """Largest exclusive i_l keeping the outside-option split interior (4/b)."""
    return float("inf") if params.b == 0 else 4.0 / params.b


def outside_stage2_prices(alloc: Allocation, params: MarketParams) -> PricingOutcome:
    if params.delta() != 0:
        raise RegimeError(f"outside-option pricing assumes delta = 0, got {params.delta()}")
    if alloc.i_l >= interior_limit(params):
        raise NonInteriorError(f"i_l ({alloc.i_l}) must be below 4/b ({interior_limit(params)})")

    t = transport_costs(alloc)
    p_l, p_f = outside_price_kernel(t.t_l, alloc.i_l, alloc.i_f, params)
    prices = PriceProfile(p_l=p_l, p_f=p_f)
    split = hotelling_split(prices, t, params)
    return PricingOutcome(
        prices=prices,
        split=split,
        regime=PricingRegime.OUTSIDE_INTERIOR,
        outside_subscriptions=outside_demand(prices, alloc, split, params),
    )


def _revenues(p_l, p_f, t_f: float, alloc: Allocation, params: MarketParams, mode: SolveMode):
    x0 = indifference_point(params.delta(), p_l, p_f, t_f)
    n_l = np.clip(x0, 0.0, 1.0)
    n_f = 1.0 - n_l
    if mode == SolveMode.OUTSIDE:
        n_l = np.maximum(params.alpha * (n_l + params.k - p_l + params.b * (alloc.i_l - alloc.i_f)), 0.0)
        n_f = np.maximum(params.alpha * (n_f + params.k - p_f + params.b * alloc.i_f), 0.0)
        # outside-option demand is only defined while the common pool is split
        inside = (x0 >= 0.0) & (x0 <= 1.0)
        rev_l = np.where(inside, n_l * (p_l - params.c), -np.inf)
        rev_f = np.where(inside, n_f * (p_f - params.c), -np.inf)
        return rev_l, rev_f
    return n_l * (p_l - params.c), n_f * (p_f - params.c)


def default_deviation_grid(params: MarketParams, points: Optional[int] = None) -> np.ndarray:
    return np.linspace(params.c - 1, params.c + 3, points or settings.DEVIATION_GRID_POINTS)


def best_response_check(
    prices: PriceProfile,
    alloc: Allocation,
    params: MarketParams,
    mode: SolveMode = SolveMode.BASE,
    deviation_grid: Optional[np.ndarray] = None,
) -> float:
    """
    Largest unilateral revenue gain either provider finds on the deviation grid,
    with the rival's price, the allocation and the money flows held fixed.
    Flows cancel out of the comparison, so only stage-3 revenue is scanned.
    """
    grid = default_deviation_grid(params) if deviation_grid is None else np.asarray(deviation_grid, dtype=float)
    t_f = transport_costs(alloc).t_f

    rev_l, rev_f = _revenues(prices.p_l, prices.p_f, t_f, alloc, params, mode)
    dev_l, _ = _revenues(grid, prices.p_f, t_f, alloc, params, mode)
    _, dev_f = _revenues(prices.p_l, grid, t_f, alloc, params, mode)

    gain = float(max(dev_l.max() - rev_l, dev_f.max() - rev_f))
    logger.debug(f"Deviation scan over {grid.size} prices: max gain {gain:.3e}")
    return gain
