"""
Stage-3 primitives: transport costs, end-user utilities, the hotelling
subscription split, outside-option demand and payoff accounting.
"""
import logging
from typing import Tuple

import numpy as np

from app.core.exceptions import DegenerateAllocationError, FlowSpecificationError, PreconditionError
from app.schemas.market import (
    Allocation,
    MarketParams,
    MoneyFlows,
    OutsideSubscriptions,
    PayoffPair,
    PriceProfile,
    SubscriptionSplit,
    TransportCosts,
)

logger = logging.getLogger(__name__)


def transport_costs(alloc: Allocation) -> TransportCosts:
    if alloc.i_l <= 0:
        raise DegenerateAllocationError("transport costs need i_l > 0")
    t_l = alloc.i_f / alloc.i_l
    return TransportCosts(t_l=t_l, t_f=1.0 - t_l)


def eu_utilities(x: float, prices: PriceProfile, t: TransportCosts, params: MarketParams) -> Tuple[float, float]:
    """
    Utilities of the end user at location x for joining SP_L and SP_F.
    """
    u_l = params.v_l - (prices.p_l + t.t_l * x)
    u_f = params.v_f - (prices.p_f + t.t_f * (1 - x))
    return u_l, u_f


def indifference_point(delta, p_l, p_f, t_f):
    """x0 = delta + p_f - p_l + t_f; accepts scalars or numpy arrays."""
    return delta + p_f - p_l + t_f


def hotelling_split(prices: PriceProfile, t: TransportCosts, params: MarketParams) -> SubscriptionSplit:
    x0 = indifference_point(params.delta(), prices.p_l, prices.p_f, t.t_f)
    n_l = float(np.clip(x0, 0.0, 1.0))
    return SubscriptionSplit(n_l=n_l, n_f=1.0 - n_l, x0=x0)


def base_payoffs(
    alloc: Allocation,
    prices: PriceProfile,
    split: SubscriptionSplit,
    flows: MoneyFlows,
    params: MarketParams,
) -> PayoffPair:
    if alloc.i_f > 0 and not flows.significant:
        raise FlowSpecificationError("s_tilde must be significant when SP_F leases spectrum")

    lease = (flows.s_tilde or 0.0) * alloc.i_f ** 2
    pi_f = split.n_f * (prices.p_f - params.c) - lease + flows.theta
    pi_l = split.n_l * (prices.p_l - params.c) + lease - params.gamma * alloc.i_l ** 2 - flows.theta
    return PayoffPair(pi_l=pi_l, pi_f=pi_f)


def outside_demand(
    prices: PriceProfile,
    alloc: Allocation,
    split: SubscriptionSplit,
    params: MarketParams,
) -> OutsideSubscriptions:
    """
    Subscriptions once end users may take the outside option. Negative levels
    are kept and reported through `feasible`.
    """
    phi_l = params.k - prices.p_l + params.b * (alloc.i_l - alloc.i_f)
    phi_f = params.k - prices.p_f + params.b * alloc.i_f
    demand = OutsideSubscriptions(
        n_tilde_l=params.alpha * (split.n_l + phi_l),
        n_tilde_f=params.alpha * (split.n_f + phi_f),
    )
    if not demand.feasible:
        logger.warning(f"Negative outside-option demand at i_l={alloc.i_l}, i_f={alloc.i_f}: {demand}")
    return demand


def outside_payoffs(
    alloc: Allocation,
    prices: PriceProfile,
    demand: OutsideSubscriptions,
    flows: MoneyFlows,
    params: MarketParams,
) -> PayoffPair:
    if alloc.i_f > 0 and not flows.significant:
        raise FlowSpecificationError("s_tilde must be significant when SP_F leases spectrum")

    lease = (flows.s_tilde or 0.0) * alloc.i_f ** 2
    pi_f = demand.n_tilde_f * (prices.p_f - params.c) - lease + flows.theta
    pi_l = demand.n_tilde_l * (prices.p_l - params.c) + lease - params.gamma * alloc.i_l ** 2 - flows.theta
    return PayoffPair(pi_l=pi_l, pi_f=pi_f)


def resource_cost(alloc: Allocation, prices: PriceProfile) -> float:
    """
    EU-resource-cost: spectrum delivered per unit access fee,
    i_f/p_f + (i_l - i_f)/p_l. Terms with zero spectrum are skipped.
    """
    total = 0.0
    for units, price, name in ((alloc.i_f, prices.p_f, "p_f"), (alloc.i_l - alloc.i_f, prices.p_l, "p_l")):
        if units == 0:
            continue
        if price <= 0:
            raise PreconditionError(f"resource cost is undefined for non-positive {name} ({price})")
        total += units / price
    return total
