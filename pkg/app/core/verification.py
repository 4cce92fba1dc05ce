import logging
from typing import List, Optional

from app.core import bargaining, outside
from app.core.config import settings
from app.core.market import base_payoffs, outside_payoffs
from app.core.oracle import (
    closed_form_composition_check,
    grid_argmax_u_excess,
    identity_suite,
    outside_argmax_cross_check,
)
from app.core.pricing import best_response_check, corner_interval, interior_limit
from app.models.models import Provenance, SolveMode
from app.schemas.equilibrium import EquilibriumSolution
from app.schemas.experiment import CheckResult, GridResult, GridSpec, IdentityRanges, VerificationReport
from app.schemas.market import DisagreementPoint, MarketParams

logger = logging.getLogger(__name__)

INTERIOR_DELTAS = (-0.9, -0.5, -0.1, 0.1, 0.5, 0.9)
NO_DISAGREEMENT = DisagreementPoint(d_l=0.0, d_f=0.0, provenance=Provenance.USER_SUPPLIED)
NBS_DISAGREEMENT = DisagreementPoint(d_l=0.02, d_f=0.01, provenance=Provenance.USER_SUPPLIED)


def _cell_check(name: str, grid: GridResult, solutions: List[EquilibriumSolution]) -> List[CheckResult]:
    """
    The grid maximiser must sit within one cell of some closed-form solution
    and the values must agree within the grid tolerance.
    """
    nearest = min(
        solutions,
        key=lambda s: abs(s.alloc.i_l - grid.alloc.i_l) / grid.i_l_step + abs(s.alloc.i_f - grid.alloc.i_f) / grid.i_f_step,
    )
    cells = max(abs(nearest.alloc.i_l - grid.alloc.i_l) / grid.i_l_step, abs(nearest.alloc.i_f - grid.alloc.i_f) / grid.i_f_step)
    return [
        CheckResult.within(f"{name}_argmax_cell", cells, 1.0),
        CheckResult.within(f"{name}_argmax_value", abs(grid.value - nearest.u_excess_star), grid.tolerance),
    ]


def _nbs_checks(name: str, solution: EquilibriumSolution, params: MarketParams, mode: SolveMode) -> List[CheckResult]:
    d, w, pay = solution.disagreement, params.w, solution.payoffs
    ratio = abs((pay.pi_f - d.d_f) / w - (pay.pi_l - d.d_l) / (1 - w))
    if mode == SolveMode.OUTSIDE:
        rebuilt = outside_payoffs(solution.alloc, solution.prices, solution.outside_subscriptions, solution.flows, params)
        tolerance = 1e-9
    else:
        rebuilt = base_payoffs(solution.alloc, solution.prices, solution.split, solution.flows, params)
        tolerance = 1e-12
    rebuild = max(abs(rebuilt.pi_l - pay.pi_l), abs(rebuilt.pi_f - pay.pi_f))
    individual = max(0.0, d.d_l - pay.pi_l, d.d_f - pay.pi_f)
    return [
        CheckResult.within(f"{name}_nbs_ratio", ratio, 1e-12),
        CheckResult.within(f"{name}_flow_reconstruction", rebuild, tolerance),
        CheckResult.within(f"{name}_individual_rationality", individual, 1e-12),
    ]


def _base_checks(params: MarketParams, grid_points: int) -> List[CheckResult]:
    checks = []
    deltas = set(INTERIOR_DELTAS)
    if abs(params.delta()) < 1:
        deltas.add(params.delta())
    else:
        checks.append(CheckResult.notice("base_regime", f"delta={params.delta()} is a corner market; interior checks use delta in {INTERIOR_DELTAS}"))
        if params.gamma < params.s_market:
            checks.extend(_corner_checks(params))

    for delta in sorted(deltas):
        market = params.with_delta(delta)
        name = f"base_delta_{delta:+.3g}"
        result = bargaining.solve_base(market, NO_DISAGREEMENT)
        if result.empty:
            checks.append(CheckResult.notice(f"{name}_existence", f"no solution with d = 0: {result.existence.detail or 'pi* < 0'}"))
            continue

        grid = grid_argmax_u_excess(market, NO_DISAGREEMENT, GridSpec.around(market, points=grid_points))
        checks.extend(_cell_check(name, grid, result.solutions))

        total = bargaining.total_base_payoff(delta, market.gamma, market.l0)
        for solution in result.solutions:
            checks.append(CheckResult.within(f"{name}_total_payoff", abs(solution.payoffs.total - total), 1e-12))
            checks.append(
                CheckResult.within(
                    f"{name}_nash_prices",
                    best_response_check(solution.prices, solution.alloc, market),
                    settings.NASH_TOLERANCE,
                )
            )

        split = bargaining.solve_base(market, NBS_DISAGREEMENT)
        for solution in split.solutions:
            checks.extend(_nbs_checks(name, solution, market, SolveMode.BASE))
    return checks


def _corner_checks(params: MarketParams) -> List[CheckResult]:
    """
    Deviation scan on every corner solution. The written corner prices only
    hold off the lease (i_f = 0) and, for delta <= -1, once the price
    interval is ordered; anything else is reported, not failed.
    """
    delta = params.delta()
    name = f"corner_delta_{delta:+.3g}"
    result = bargaining.solve_corner(params, NO_DISAGREEMENT)
    if result.empty:
        return [CheckResult.notice(f"{name}_existence", f"no solution with d = 0: pi* = {result.existence.pi_star:.6g}")]

    lower, upper = corner_interval(params)
    checks = []
    for index, solution in enumerate(result.solutions, start=1):
        label = f"{name}_{index}_nash_prices"
        gain = best_response_check(solution.prices, solution.alloc, params)
        if gain > settings.NASH_TOLERANCE and (solution.alloc.i_f > 0 or lower > upper):
            checks.append(
                CheckResult.notice(
                    label,
                    f"corner prices at i_f={solution.alloc.i_f:.6g} are not a stage-2 equilibrium (deviation gain {gain:.3g})",
                )
            )
            continue
        checks.append(CheckResult.within(label, gain, settings.NASH_TOLERANCE))
    return checks


def _outside_checks(params: MarketParams, grid_points: int) -> List[CheckResult]:
    market = params.with_delta(0.0)
    limit = interior_limit(market)
    checks = [
        outside_argmax_cross_check(market),
        closed_form_composition_check(market, i_l=min(1.0, 0.5 * limit)),
    ]

    result = outside.solve_outside(market, NO_DISAGREEMENT)
    if result.empty:
        if result.existence.bounded:
            checks.append(CheckResult.notice("outside_existence", result.existence.detail or "h* < 0 with d = 0"))
        return checks

    i_l_star = result.solutions[0].alloc.i_l
    hi = min(limit * (1 - 1e-6), max(2 * i_l_star, 2 * market.l0))
    if market.m_cap is not None and market.m_cap > market.l0:
        hi = min(hi, market.m_cap)
    if hi > market.l0:
        spec = GridSpec(i_l_lo=market.l0, i_l_hi=hi, i_l_points=grid_points, i_f_points=grid_points)
        grid = grid_argmax_u_excess(market, NO_DISAGREEMENT, spec, SolveMode.OUTSIDE)
        checks.extend(_cell_check("outside", grid, result.solutions))

    for index, solution in enumerate(result.solutions, start=1):
        checks.append(
            CheckResult.within(
                f"outside_{index}_nash_prices",
                best_response_check(solution.prices, solution.alloc, market, SolveMode.OUTSIDE),
                settings.NASH_TOLERANCE,
            )
        )
        checks.extend(_nbs_checks(f"outside_{index}", solution, market, SolveMode.OUTSIDE))
    return checks


def run_verification(
    base_params: MarketParams,
    outside_params: Optional[MarketParams] = None,
    grid_points: Optional[int] = None,
    seed: Optional[int] = None,
    draws: Optional[int] = None,
) -> VerificationReport:
    """
    Run the oracle suites against the closed forms and collect every
    residual into one report.
    """
    grid_points = grid_points or settings.ORACLE_GRID_POINTS
    ranges = IdentityRanges(
        seed=settings.RANDOM_SEED if seed is None else seed,
        draws=draws or settings.IDENTITY_DRAWS,
    )

    report = identity_suite(ranges)
    report = report.extend(VerificationReport(checks=_base_checks(base_params, grid_points)))
    report = report.extend(VerificationReport(checks=_outside_checks(outside_params or base_params, grid_points)))

    logger.info(f"Verification: {len(report.checks) - len(report.failures)}/{len(report.checks)} checks passed")
    for failure in report.failures:
        logger.warning(f"Check {failure.name} failed: residual {failure.residual:.3e} > {failure.tolerance:.3e}")
    return report
