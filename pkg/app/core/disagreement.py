"""
Disagreement point: the payoffs of the fully non-cooperative sequential game
the providers fall back to when bargaining fails.

Corner markets (|delta| >= 1) use closed forms. Everywhere else the game is
solved by backward induction on grids: SP_F best-responds to every candidate
i_l, then SP_L picks i_l anticipating that response. Both levels start from
a uniform grid and zoom in around the incumbent maximum.
"""
import logging
import math
from typing import Callable, Iterable, Optional, Tuple

import numpy as np

from app.core.exceptions import InfeasibleRegionError, PreconditionError, ResolutionError, UnsupportedRegimeError
from app.core.pricing import corner_prices, interior_limit, interior_share, outside_price_kernel
from app.models.models import Provenance, SolveMode
from app.schemas.experiment import DisagreementConfig
from app.schemas.market import Allocation, DisagreementPoint, MarketParams

logger = logging.getLogger(__name__)

# payoffs(i_l, t) -> (pi_f, pi_l), elementwise with t = i_f / i_l
PayoffKernel = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]

ZOOM_OFFSETS = np.linspace(-1.0, 1.0, 11)
ZOOM_FACTOR = 5.0
MIN_WIDTH = 1e-15


def base_payoff_kernel(params: MarketParams) -> PayoffKernel:
    delta, s, gamma = params.delta(), params.s_market, params.gamma

    def payoffs(i_l, t):
        n_l = interior_share(t, delta)
        lease = s * (t * i_l) ** 2
        return (1 - n_l) ** 2 - lease, n_l ** 2 + lease - gamma * i_l ** 2

    return payoffs


def outside_payoff_kernel(params: MarketParams) -> PayoffKernel:
    """Outside-option payoffs; points with negative demand map to -inf."""
    s, gamma, alpha, c, k, b = params.s_market, params.gamma, params.alpha, params.c, params.k, params.b

    def payoffs(i_l, t):
        i_f = t * i_l
        p_l, p_f = outside_price_kernel(t, i_l, i_f, params)
        x0 = (1 - t) + p_f - p_l
        n_l = alpha * (x0 + k - p_l + b * (i_l - i_f))
        n_f = alpha * (1 - x0 + k - p_f + b * i_f)
        feasible = (n_l >= 0) & (n_f >= 0)
        lease = s * i_f ** 2
        pi_f = np.where(feasible, n_f * (p_f - c) - lease, -np.inf)
        pi_l = np.where(feasible, n_l * (p_l - c) + lease - gamma * i_l ** 2, -np.inf)
        return pi_f, pi_l

    return payoffs


class BackwardInduction:
    def __init__(self, payoffs: PayoffKernel, cfg: DisagreementConfig, lo: float, hi: float):
        self.payoffs = payoffs
        self.cfg = cfg
        self.lo = lo
        self.hi = hi

    def follower(self, i_l: np.ndarray) -> np.ndarray:
        """
        SP_F's best lease ratio for each candidate i_l.
        Ties go to the smallest ratio.
        """
        rows = np.arange(i_l.size)
        column = i_l[:, None]
        grid = np.linspace(0.0, 1.0, self.cfg.i_f_points)
        pi_f, _ = self.payoffs(column, grid[None, :])
        best = grid[np.argmax(pi_f, axis=1)]

        width = 1.0 / (self.cfg.i_f_points - 1)
        for _ in range(self.cfg.refinement):
            candidates = np.clip(best[:, None] + width * ZOOM_OFFSETS[None, :], 0.0, 1.0)
            pi_f, _ = self.payoffs(column, candidates)
            best = candidates[rows, np.argmax(pi_f, axis=1)]
            width /= ZOOM_FACTOR
            if width < MIN_WIDTH:
                break
        return best

    def evaluate(self, i_l: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        t = self.follower(i_l)
        pi_f, pi_l = self.payoffs(i_l, t)
        return pi_l, pi_f, t

    def solve(self) -> Tuple[float, float, float, float]:
        """
        Returns (i_l, t, pi_l, pi_f) at SP_L's optimum.
        """
        grid = np.linspace(self.lo, self.hi, self.cfg.i_l_points)
        pi_l, pi_f, t = self.evaluate(grid)
        if not np.isfinite(pi_l).any():
            raise InfeasibleRegionError(f"no feasible point for i_l in [{self.lo}, {self.hi}]")

        k = int(np.argmax(pi_l))
        best = (float(grid[k]), float(t[k]), float(pi_l[k]), float(pi_f[k]))
        history = [best[2]]
        width = (self.hi - self.lo) / (self.cfg.i_l_points - 1)
        logger.debug(f"Leader grid of {grid.size} points: i_l={best[0]:.6g}, pi_l={best[2]:.9g}")

        for _ in range(self.cfg.refinement):
            candidates = np.clip(best[0] + width * ZOOM_OFFSETS, self.lo, self.hi)
            pi_l, pi_f, t = self.evaluate(candidates)
            j = int(np.argmax(pi_l))
            if pi_l[j] >= best[2]:
                best = (float(candidates[j]), float(t[j]), float(pi_l[j]), float(pi_f[j]))
            history.append(best[2])
            width /= ZOOM_FACTOR
            if width < MIN_WIDTH * max(1.0, best[0]):
                break

        if len(history) >= 2 and abs(history[-1] - history[-2]) > self.cfg.tolerance:
            raise ResolutionError(
                "Backward induction did not settle",
                diagnostics={"history": history[-5:], "i_l": best[0], "t": best[1], "width": width},
            )
        logger.debug(f"Refined after {len(history) - 1} passes: i_l={best[0]:.12g}, t={best[1]:.12g}")
        return best


def _numerical_point(induction: BackwardInduction) -> DisagreementPoint:
    i_l, t, pi_l, pi_f = induction.solve()
    return DisagreementPoint(
        d_l=pi_l,
        d_f=pi_f,
        provenance=Provenance.NUMERICAL_PART1,
        allocation=Allocation(i_l=i_l, i_f=min(t * i_l, i_l)),
    )


def solve_base_disagreement(params: MarketParams, cfg: Optional[DisagreementConfig] = None) -> DisagreementPoint:
    cfg = cfg or DisagreementConfig()
    delta = params.delta()

    if abs(delta) < 1:
        lo, hi = cfg.leader_range(params)
        logger.debug(f"Numerical disagreement for delta={delta} over i_l in [{lo}, {hi}]")
        return _numerical_point(BackwardInduction(base_payoff_kernel(params), cfg, lo, hi))

    s, gamma, c = params.s_market, params.gamma, params.c
    if s <= gamma:
        raise PreconditionError(f"corner disagreement needs s_market > gamma ({s} <= {gamma})")

    prices = corner_prices(params, cfg.price_selection).prices
    if delta <= -1:
        # both providers settle on i_l = i_f = 1/sqrt(2s); SP_F serves the pool
        lease = 1.0 / math.sqrt(2 * s)
        d_f = prices.p_f - c - s * lease ** 2
        d_l = s * lease ** 2 - gamma * lease ** 2
        allocation = Allocation(i_l=lease, i_f=lease)
    else:
        d_f = 0.0
        d_l = prices.p_l - c - gamma * params.delta_part1 ** 2
        allocation = Allocation(i_l=params.delta_part1, i_f=0.0)

    return DisagreementPoint(d_l=d_l, d_f=d_f, provenance=Provenance.CORNER_CLOSED_FORM, allocation=allocation)


def solve_outside_disagreement(params: MarketParams, cfg: Optional[DisagreementConfig] = None) -> DisagreementPoint:
    cfg = cfg or DisagreementConfig()
    if params.delta() != 0:
        raise UnsupportedRegimeError(f"the outside-option game is only solved for delta = 0, got {params.delta()}")

    lo, hi = cfg.leader_range(params)
    hi = min(hi, interior_limit(params) * (1 - 1e-9))
    if lo >= hi:
        raise InfeasibleRegionError(f"no interior i_l between {lo} and 4/b = {interior_limit(params)}")
    logger.debug(f"Numerical outside-option disagreement over i_l in [{lo}, {hi}]")
    return _numerical_point(BackwardInduction(outside_payoff_kernel(params), cfg, lo, hi))


def solve_disagreement(
    params: MarketParams,
    mode: SolveMode = SolveMode.BASE,
    cfg: Optional[DisagreementConfig] = None,
) -> DisagreementPoint:
    if mode == SolveMode.OUTSIDE:
        return solve_outside_disagreement(params, cfg)
    return solve_base_disagreement(params, cfg)


def best_disagreement_fee(
    params: MarketParams,
    cfg: Optional[DisagreementConfig] = None,
    s_values: Optional[Iterable[float]] = None,
    mode: SolveMode = SolveMode.BASE,
) -> Tuple[float, DisagreementPoint]:
    """
    Scan the market reservation fee and return the value maximising
    d = d_l + d_f together with its disagreement point.
    """
    values = list(s_values) if s_values is not None else list(np.linspace(0.5, 40.0, 80))
    best: Optional[Tuple[float, DisagreementPoint]] = None
    for s in values:
        # at s == gamma the leader is indifferent along the whole flat ridge
        if s <= params.gamma:
            logger.debug(f"Skipping s={s}: not above gamma")
            continue
        try:
            point = solve_disagreement(params.model_copy(update={"s_market": float(s)}), mode, cfg)
        except PreconditionError:
            logger.debug(f"Skipping s={s}: no disagreement point")
            continue
        if best is None or point.d > best[1].d:
            best = (float(s), point)

    if best is None:
        raise PreconditionError("no fee in the scan admits a disagreement point")
    logger.info(f"Best disagreement fee s={best[0]:.6g} with d={best[1].d:.9g}")
    return best
