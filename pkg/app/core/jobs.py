"""
Parameter sweeps and figure datasets. Every sweep point is solved
independently and written as one or more rows of a fixed-column CSV.
"""
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from app.core.bargaining import resource_cost_metric, solve_base, solve_corner
from app.core.config import PARAM_KEYS, RunConfig, preset_config, settings
from app.core.disagreement import solve_disagreement
from app.core.exceptions import SpectrumGameError
from app.core.market import resource_cost
from app.core.outside import solve_outside
from app.core.pricing import interior_prices, outside_stage2_prices
from app.models.models import FigureDataset, SolveMode
from app.schemas.equilibrium import BargainingResult, EquilibriumSolution
from app.schemas.experiment import DisagreementConfig, SweepSpec
from app.schemas.market import DisagreementPoint, MarketParams

logger = logging.getLogger(__name__)

SOLUTION_COLUMNS = [
    "regime", "i_l", "i_f", "degree_of_cooperation", "p_l", "p_f", "n_l", "n_f", "x0",
    "n_tilde_l", "n_tilde_f", "s_tilde", "theta", "pi_l", "pi_f", "pi_total", "u_excess_star",
]
ROW_COLUMNS = (
    ["sweep_param", "sweep_value", "mode"]
    + list(PARAM_KEYS)
    + ["delta", "solution_index", "exists", "pi_star", "d", "margin", "interior", "bounded"]
    + SOLUTION_COLUMNS
    + ["resource_cost", "d_l", "d_f", "provenance", "d_i_l", "d_i_f", "d_degree_of_cooperation", "d_resource_cost", "detail"]
)
BOOLEAN_COLUMNS = ["exists", "interior", "bounded"]

# disagreement payoffs do not depend on these
DISAGREEMENT_FREE_KEYS = ("l0", "m_cap", "w")


class FigureSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    dataset: FigureDataset
    preset: str
    mode: SolveMode
    sweep: SweepSpec
    description: str


FIGURES: Dict[FigureDataset, FigureSpec] = {
    spec.dataset: spec
    for spec in (
        FigureSpec(
            dataset=FigureDataset.DEGREE_COOP_VS_DELTA, preset="base_case", mode=SolveMode.BASE,
            sweep=SweepSpec(param="delta", lo=-0.95, hi=0.95, steps=39),
            description="degree_of_cooperation (bargained) and d_degree_of_cooperation (non-cooperative) vs delta",
        ),
        FigureSpec(
            dataset=FigureDataset.TOTAL_PAYOFF_VS_L0, preset="base_case", mode=SolveMode.BASE,
            sweep=SweepSpec(param="l0", lo=0.05, hi=1.5, steps=30),
            description="pi_total vs l0 against the disagreement total d",
        ),
        FigureSpec(
            dataset=FigureDataset.SP_PAYOFFS_VS_L0, preset="base_case", mode=SolveMode.BASE,
            sweep=SweepSpec(param="l0", lo=0.05, hi=1.5, steps=30),
            description="pi_l, pi_f vs l0 against d_l, d_f",
        ),
        FigureSpec(
            dataset=FigureDataset.PAYOFFS_VS_S, preset="base_case", mode=SolveMode.BASE,
            sweep=SweepSpec(param="s_market", lo=0.6, hi=30.0, steps=50),
            description="pi_l, pi_f, d_l, d_f vs the market reservation fee s",
        ),
        FigureSpec(
            dataset=FigureDataset.SUBSCRIPTIONS_VS_DELTA, preset="base_case", mode=SolveMode.BASE,
            sweep=SweepSpec(param="delta", lo=-0.95, hi=0.95, steps=39),
            description="n_l, n_f and p_l, p_f vs delta",
        ),
        FigureSpec(
            dataset=FigureDataset.RESOURCE_COST, preset="base_case", mode=SolveMode.BASE,
            sweep=SweepSpec(param="delta", lo=-0.95, hi=0.95, steps=39),
            description="resource_cost (bargained) and d_resource_cost (non-cooperative) vs delta",
        ),
        FigureSpec(
            dataset=FigureDataset.OUTSIDE_INVEST_VS_GAMMA, preset="outside_option", mode=SolveMode.OUTSIDE,
            sweep=SweepSpec(param="gamma", lo=0.62, hi=3.0, steps=120),
            description="i_l vs gamma",
        ),
        FigureSpec(
            dataset=FigureDataset.OUTSIDE_INVEST_VS_L0, preset="outside_option", mode=SolveMode.OUTSIDE,
            sweep=SweepSpec(param="l0", lo=0.1, hi=1.95, steps=186),
            description="i_l vs l0",
        ),
        FigureSpec(
            dataset=FigureDataset.OUTSIDE_PAYOFFS_VS_L0, preset="outside_option", mode=SolveMode.OUTSIDE,
            sweep=SweepSpec(param="l0", lo=0.1, hi=1.95, steps=38),
            description="pi_l, pi_f vs l0 against d_l, d_f",
        ),
        FigureSpec(
            dataset=FigureDataset.OUTSIDE_METRIC_VS_S, preset="outside_option", mode=SolveMode.OUTSIDE,
            sweep=SweepSpec(param="s_market", lo=0.5, hi=5.0, steps=46),
            description="resource_cost vs s",
        ),
    )
}


def sweep_values(spec: SweepSpec) -> np.ndarray:
    # rounding keeps symmetric grids exact at 0 (and never -0)
    return np.round(np.linspace(spec.lo, spec.hi, spec.steps), 12) + 0.0


def apply_param(params: MarketParams, name: str, value: float) -> MarketParams:
    if name == "delta":
        return params.with_delta(value)
    return MarketParams(**{**params.model_dump(), name: value})


def _disagreement_key(params: MarketParams, mode: SolveMode) -> Tuple:
    values = params.model_dump()
    return (mode,) + tuple(values[key] for key in PARAM_KEYS if key not in DISAGREEMENT_FREE_KEYS)


def _non_cooperative_metrics(point: DisagreementPoint, params: MarketParams, mode: SolveMode) -> Dict[str, Any]:
    alloc = point.allocation
    if alloc is None or alloc.i_l <= 0:
        return {}
    metrics = {"d_i_l": alloc.i_l, "d_i_f": alloc.i_f, "d_degree_of_cooperation": alloc.i_f / alloc.i_l}
    try:
        if mode == SolveMode.OUTSIDE:
            prices = outside_stage2_prices(alloc, params).prices
        else:
            prices = interior_prices(alloc, params).prices
        metrics["d_resource_cost"] = resource_cost(alloc, prices)
    except SpectrumGameError:
        pass
    return metrics


class SweepRunner:
    """
    Solves sweep points for one mode and turns them into CSV rows.
    Disagreement points are cached since most sweeps leave them unchanged.
    """

    def __init__(
        self,
        run_config: RunConfig,
        mode: SolveMode = SolveMode.BASE,
        cfg: Optional[DisagreementConfig] = None,
    ):
        self.run_config = run_config
        self.mode = mode
        self.cfg = cfg or DisagreementConfig(price_selection=run_config.price_selection)
        self._cache: Dict[Tuple, DisagreementPoint] = {}
        self._lock = threading.Lock()

    def disagreement(self, params: MarketParams) -> DisagreementPoint:
        if self.run_config.disagreement is not None:
            return self.run_config.disagreement
        key = _disagreement_key(params, self.mode)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        point = solve_disagreement(params, self.mode, self.cfg)
        with self._lock:
            self._cache[key] = point
        return point

    def solve(self, params: MarketParams, d: DisagreementPoint) -> BargainingResult:
        if self.mode == SolveMode.OUTSIDE:
            return solve_outside(params, d)
        if abs(params.delta()) < 1:
            return solve_base(params, d)
        return solve_corner(params, d, self.run_config.price_selection)

    def rows(self, params: MarketParams, sweep_param: str = "", sweep_value: Optional[float] = None) -> List[Dict[str, Any]]:
        echo: Dict[str, Any] = {
            "sweep_param": sweep_param,
            "sweep_value": sweep_value,
            "mode": self.mode.value,
            **params.model_dump(),
            "delta": params.delta(),
        }
        try:
            d = self.disagreement(params)
            result = self.solve(params, d)
        except SpectrumGameError as e:
            logger.warning(f"Point {sweep_param}={sweep_value} not solved: {e}")
            return [{**echo, "exists": False, "interior": None, "bounded": None, "detail": str(e)}]

        echo.update(
            {
                "exists": result.existence.exists,
                "pi_star": result.existence.pi_star,
                "d": d.d,
                "margin": result.existence.margin,
                "interior": result.existence.interior,
                "bounded": result.existence.bounded,
                "d_l": d.d_l,
                "d_f": d.d_f,
                "provenance": d.provenance.value,
                "detail": result.existence.detail,
                **_non_cooperative_metrics(d, params, self.mode),
            }
        )
        if result.empty:
            return [echo]
        return [self._solution_row(echo, index, solution) for index, solution in enumerate(result.solutions, start=1)]

    @staticmethod
    def _solution_row(echo: Dict[str, Any], index: int, solution: EquilibriumSolution) -> Dict[str, Any]:
        row = {**echo, **solution.to_row(), "solution_index": index}
        try:
            row["resource_cost"] = resource_cost_metric(solution)
        except SpectrumGameError:
            row["resource_cost"] = None
        return row

    def run(self, spec: SweepSpec, workers: int = 1) -> pd.DataFrame:
        base = self.run_config.params
        for name, value in spec.overrides.items():
            base = apply_param(base, name, value)
        values = sweep_values(spec)
        points = [apply_param(base, spec.param, float(value)) for value in values]
        logger.info(f"Sweeping {spec.param} over {len(points)} points ({self.mode.value} mode, {workers} worker(s))")

        def solve_point(args: Tuple[MarketParams, float]) -> List[Dict[str, Any]]:
            params, value = args
            return self.rows(params, spec.param, value)

        jobs = list(zip(points, values))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                batches = list(pool.map(solve_point, jobs))
        else:
            batches = [solve_point(job) for job in jobs]
        return to_frame([row for batch in batches for row in batch])


def to_frame(rows: List[Dict[str, Any]]) -> pd.DataFrame:
    frame = pd.DataFrame(rows, columns=ROW_COLUMNS)
    for column in BOOLEAN_COLUMNS:
        frame[column] = frame[column].map({True: "true", False: "false"})
    return frame


def write_csv(frame: pd.DataFrame, out: Optional[Union[str, Path]] = None) -> Optional[str]:
    """
    Write with a fixed significant-digit float format; returns the text
    when no path is given.
    """
    options = dict(index=False, float_format=f"%.{settings.CSV_SIGNIFICANT_DIGITS}g", na_rep="", lineterminator="\n")
    if out is None:
        return frame.to_csv(**options)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out, **options)
    logger.info(f"Wrote {len(frame)} rows to {out}")
    return None


def solve_config(run_config: RunConfig, mode: SolveMode = SolveMode.BASE, cfg: Optional[DisagreementConfig] = None) -> pd.DataFrame:
    return to_frame(SweepRunner(run_config, mode, cfg).rows(run_config.params))


def run_sweep(
    spec: SweepSpec,
    run_config: RunConfig,
    out: Optional[Union[str, Path]] = None,
    mode: SolveMode = SolveMode.BASE,
    workers: int = 1,
    cfg: Optional[DisagreementConfig] = None,
) -> pd.DataFrame:
    frame = SweepRunner(run_config, mode, cfg).run(spec, workers)
    if out is not None:
        write_csv(frame, out)
    return frame


def run_figure(
    dataset: FigureDataset,
    run_config: Optional[RunConfig] = None,
    out: Optional[Union[str, Path]] = None,
    workers: int = 1,
    cfg: Optional[DisagreementConfig] = None,
) -> pd.DataFrame:
    """
    Produce one figure dataset. A supplied config replaces the dataset's
    preset market; the sweep itself is fixed per dataset.
    """
    figure = FIGURES[dataset]
    run_config = run_config or preset_config(figure.preset)
    logger.info(f"Figure {dataset.value}: {figure.description}")
    return run_sweep(figure.sweep, run_config, out, figure.mode, workers, cfg)
