"""
Brute-force checks of the closed forms: boxed grid maximisation of u_excess,
randomised identity draws and a bounded scalar search for the outside-option
program.
"""
import logging
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from app.core.bargaining import u_excess_kernel
from app.core.exceptions import RegimeError
from app.core.market import base_payoffs, outside_payoffs
from app.core.outside import (
    maximize_outside_objective,
    outside_closed_form,
    outside_objective,
    outside_u_excess_kernel,
)
from app.core.pricing import interior_prices, outside_stage2_prices
from app.models.models import SolveMode
from app.schemas.experiment import CheckResult, GridResult, GridSpec, IdentityRanges, VerificationReport
from app.schemas.market import Allocation, DisagreementPoint, MarketParams, MoneyFlows

logger = logging.getLogger(__name__)

COMPOSITION_DRAWS = 200


def _grid_values(params: MarketParams, d: DisagreementPoint, i_l: np.ndarray, t: np.ndarray, mode: SolveMode) -> np.ndarray:
    rows, cols = i_l[:, None], t[None, :]
    if mode == SolveMode.OUTSIDE:
        return outside_u_excess_kernel(rows, cols * rows, params, d.d)
    if abs(params.delta()) >= 1:
        raise RegimeError("the base-case grid oracle needs |delta| < 1")
    return u_excess_kernel(cols, rows, params.delta(), params.gamma, d.d)


def grid_argmax_u_excess(
    params: MarketParams,
    d: DisagreementPoint,
    grid: GridSpec,
    mode: SolveMode = SolveMode.BASE,
) -> GridResult:
    """
    Exhaustive scan of u_excess over [i_l_lo, i_l_hi] x {i_f = t*i_l, t in [0, 1]}.
    Ties resolve to the lexicographically first grid index. The tolerance is
    the largest change between adjacent cells.
    """
    i_l = np.linspace(grid.i_l_lo, grid.i_l_hi, grid.i_l_points)
    t = np.linspace(0.0, 1.0, grid.i_f_points)
    values = _grid_values(params, d, i_l, t, mode)

    row, col = np.unravel_index(int(np.argmax(values)), values.shape)
    tolerance = float(max(np.abs(np.diff(values, axis=0)).max(), np.abs(np.diff(values, axis=1)).max()))
    best_i_l = float(i_l[row])
    logger.debug(f"Grid argmax ({mode.value}) at i_l={best_i_l:.6g}, t={t[col]:.6g}; tolerance {tolerance:.3e}")
    return GridResult(
        alloc=Allocation(i_l=best_i_l, i_f=float(t[col]) * best_i_l),
        value=float(values[row, col]),
        tolerance=tolerance,
        i_l_step=grid.i_l_step,
        i_f_step=best_i_l / (grid.i_f_points - 1),
    )


def _uniform(rng: np.random.Generator, bounds, size: int) -> np.ndarray:
    return rng.uniform(bounds[0], bounds[1], size)


def _params(delta: float = 0.0, **values) -> MarketParams:
    fields = dict(gamma=0.5, c=1.0, s_market=1.0, delta_part1=0.01, l0=0.5, w=0.2, v_f=1.0, alpha=1.0, k=1.0, b=2.0)
    fields.update(values)
    fields["v_l"] = fields["v_f"] + delta
    return MarketParams(**fields)


def identity_suite(ranges: Optional[IdentityRanges] = None) -> VerificationReport:
    """
    Randomised identity checks with worst-case residuals:
    the 4*delta/9 gap, outside-option convexity in i_f, boundary equality,
    scale invariance of stage-2 prices and agreement between the
    u_excess formulas and composing prices with payoffs.
    """
    ranges = ranges or IdentityRanges()
    rng = np.random.default_rng(ranges.seed)
    n = ranges.draws
    checks = []

    delta = _uniform(rng, ranges.delta, n)
    gamma = _uniform(rng, ranges.gamma, n)
    l0 = _uniform(rng, ranges.l0, n)
    d = _uniform(rng, ranges.d, n)
    gap = u_excess_kernel(0.0, l0, delta, gamma, d) - u_excess_kernel(1.0, l0, delta, gamma, d)
    checks.append(CheckResult.within("gap_4delta_over_9", float(np.abs(gap - 4 * delta / 9).max()), 1e-12))

    # scale invariance and composition, one object per draw
    scale_residual = 0.0
    compose_residual = 0.0
    for j in range(min(n, COMPOSITION_DRAWS)):
        params = _params(delta=float(delta[j]), gamma=float(gamma[j]), l0=float(l0[j]))
        alloc = Allocation(i_l=float(l0[j]), i_f=float(rng.uniform(0, 1)) * float(l0[j]))
        scaled = Allocation(i_l=2 * alloc.i_l, i_f=2 * alloc.i_f)
        one, two = interior_prices(alloc, params), interior_prices(scaled, params)
        scale_residual = max(
            scale_residual,
            abs(one.prices.p_l - two.prices.p_l),
            abs(one.prices.p_f - two.prices.p_f),
            abs(one.split.n_l - two.split.n_l),
        )
        flows = MoneyFlows(s_tilde=0.0, theta=0.0)
        total = base_payoffs(alloc, one.prices, one.split, flows, params).total
        t = alloc.i_f / alloc.i_l
        expected = u_excess_kernel(t, alloc.i_l, params.delta(), params.gamma, 0.0)
        compose_residual = max(compose_residual, abs(total - expected))
    checks.append(CheckResult.within("stage2_scale_invariance", scale_residual, 1e-12))
    checks.append(CheckResult.within("u_excess_composition", compose_residual, 1e-12))

    i_l = _uniform(rng, ranges.i_l, n)
    alpha = _uniform(rng, ranges.alpha, n)
    b = _uniform(rng, ranges.b, n)
    k = _uniform(rng, ranges.k, n)
    c = _uniform(rng, ranges.c, n)
    frac = rng.uniform(0.25, 0.75, n)
    h = ranges.fd_step

    curvature_residual = 0.0
    boundary_residual = 0.0
    for j in range(n):
        params = _params(alpha=float(alpha[j]), b=float(b[j]), k=float(k[j]), c=float(c[j]), gamma=float(gamma[j]))
        x = float(i_l[j])
        mid = float(frac[j]) * x
        second = (
            outside_u_excess_kernel(x, mid + h, params)
            - 2 * outside_u_excess_kernel(x, mid, params)
            + outside_u_excess_kernel(x, mid - h, params)
        ) / h ** 2
        f = 1.0 / (5.0 * x) + params.b / 5.0
        exact = 8 * params.alpha * f ** 2
        curvature_residual = max(curvature_residual, abs(second - exact) / exact)
        boundary_residual = max(
            boundary_residual,
            abs(outside_u_excess_kernel(x, 0.0, params) - outside_u_excess_kernel(x, x, params)),
        )
    checks.append(CheckResult.within("outside_convexity_in_i_f", curvature_residual, 1e-6))
    checks.append(CheckResult.within("outside_boundary_equality", boundary_residual, 1e-12))

    checks.append(_outside_composition(rng, ranges))
    logger.info(f"Identity suite: {sum(c.passed for c in checks)}/{len(checks)} passed over {n} draws")
    return VerificationReport(checks=checks)


def _outside_composition(rng: np.random.Generator, ranges: IdentityRanges) -> CheckResult:
    """
    Outside-option stage 2 + demand + payoffs versus the u_excess expansion,
    at interior allocations (i_l < 4/b).
    """
    worst = 0.0
    for _ in range(min(ranges.draws, COMPOSITION_DRAWS)):
        k = float(rng.uniform(*ranges.k))
        # c <= k keeps both demand levels positive
        params = _params(
            alpha=float(rng.uniform(*ranges.alpha)),
            b=float(rng.uniform(*ranges.b)),
            k=k,
            c=k * float(rng.uniform(0, 1)),
            gamma=float(rng.uniform(*ranges.gamma)),
        )
        upper = min(ranges.i_l[1], 0.99 * 4.0 / params.b)
        i_l = float(rng.uniform(min(ranges.i_l[0], upper / 2), upper))
        alloc = Allocation(i_l=i_l, i_f=float(rng.uniform(0, 1)) * i_l)
        pricing = outside_stage2_prices(alloc, params)
        flows = MoneyFlows(s_tilde=0.0, theta=0.0)
        total = outside_payoffs(alloc, pricing.prices, pricing.outside_subscriptions, flows, params).total
        worst = max(worst, abs(total - float(outside_u_excess_kernel(alloc.i_l, alloc.i_f, params))))
    return CheckResult.within("outside_u_excess_composition", worst, 1e-9)


def closed_form_composition_check(params: MarketParams, i_l: float = 1.0) -> CheckResult:
    """
    Written-out full-lease prices and subscriptions against stage 2 plus
    demand at alpha = 1.
    """
    unit = params.model_copy(update={"alpha": 1.0, "v_l": params.v_f})
    closed = outside_closed_form(i_l, unit)
    composed = outside_stage2_prices(Allocation(i_l=i_l, i_f=i_l), unit)
    residual = max(
        abs(closed.prices.p_l - composed.prices.p_l),
        abs(closed.prices.p_f - composed.prices.p_f),
        abs(closed.outside_subscriptions.n_tilde_l - composed.outside_subscriptions.n_tilde_l),
        abs(closed.outside_subscriptions.n_tilde_f - composed.outside_subscriptions.n_tilde_f),
    )
    return CheckResult.within("outside_closed_form_composition", residual, 1e-12, detail=f"i_l={i_l}")


def outside_argmax_cross_check(params: MarketParams, upper: Optional[float] = None) -> CheckResult:
    """
    Closed-form maximiser of h against scipy's bounded scalar search.
    """
    optimum = maximize_outside_objective(params)
    if not optimum.bounded:
        return CheckResult.notice(
            "outside_objective_bounded",
            f"unbounded objective: leading coefficient {optimum.quad_a:.6g} with no cap",
        )

    hi = params.m_cap if params.m_cap is not None else (upper or max(4 * optimum.i_l_star, 4 * params.l0))
    if hi <= params.l0:
        return CheckResult.within("outside_argmax_scalar_search", 0.0, 0.0, detail="degenerate range")
    search = minimize_scalar(lambda x: -outside_objective(x, params), bounds=(params.l0, hi), method="bounded",
                             options={"xatol": 1e-10})
    # compare objective values; the argmax itself is only as sharp as h's curvature allows
    residual = max(0.0, -search.fun - optimum.h_star)
    return CheckResult.within(
        "outside_argmax_scalar_search",
        residual,
        1e-9,
        detail=f"closed form i_l*={optimum.i_l_star:.9g}, search={search.x:.9g}",
    )
