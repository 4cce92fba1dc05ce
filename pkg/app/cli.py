import logging
from pathlib import Path
from typing import NoReturn, Optional

import pandas as pd
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from app.core.config import RunConfig, load_run_config, preset_config, settings
from app.core.exceptions import SpectrumGameError
from app.core.jobs import FIGURES, run_figure, run_sweep, solve_config, write_csv
from app.core.verification import run_verification
from app.models.models import FigureDataset, SolveMode
from app.schemas.experiment import DisagreementConfig, SweepSpec, VerificationReport

logger = logging.getLogger(__name__)

cli = typer.Typer(help="Equilibria of the two-provider spectrum bargaining game.")

EXIT_VERIFICATION_FAILED = 1
EXIT_BAD_INPUT = 2

INPUT_ERRORS = (SpectrumGameError, ValidationError, OSError)


@cli.callback()
def main(log_level: str = typer.Option(settings.LOG_LEVEL, "--log-level", help="Logging level")):
    """
    Solve, sweep and verify bargaining equilibria; results are written as CSV.
    """
    logging.basicConfig(level=log_level.upper(), format=settings.LOG_FORMAT)


def _fail(message: str) -> NoReturn:
    typer.echo(f"Error: {message}", err=True)
    raise typer.Exit(EXIT_BAD_INPUT)


def _load(config: Optional[Path], fallback: str) -> RunConfig:
    return load_run_config(config) if config is not None else preset_config(fallback)


def _disagreement_config(run_config: RunConfig, grid_points: Optional[int]) -> DisagreementConfig:
    if grid_points is None:
        return DisagreementConfig(price_selection=run_config.price_selection)
    return DisagreementConfig(price_selection=run_config.price_selection, i_l_points=grid_points)


def _emit(frame: pd.DataFrame, out: Optional[Path]) -> None:
    text = write_csv(frame, out)
    if text is not None:
        typer.echo(text, nl=False)
    else:
        typer.echo(f"Wrote {len(frame)} rows to {out}", err=True)


@cli.command()
def solve(
    config: Optional[Path] = typer.Option(None, "--config", help="Parameter file (key=value)"),
    mode: SolveMode = typer.Option(SolveMode.BASE, "--mode", help="base or outside"),
    out: Optional[Path] = typer.Option(None, "--out", help="CSV path; stdout when omitted"),
    grid_points: Optional[int] = typer.Option(None, "--grid-points", help="Leader grid size for the disagreement search"),
):
    """
    Solve one configuration and write its solution rows.
    """
    try:
        run_config = _load(config, "outside_option" if mode == SolveMode.OUTSIDE else "base_case")
        frame = solve_config(run_config, mode, _disagreement_config(run_config, grid_points))
    except INPUT_ERRORS as e:
        _fail(str(e))
    _emit(frame, out)


@cli.command()
def sweep(
    param: str = typer.Option(..., "--param", help="MarketParams key or delta"),
    lo: float = typer.Option(..., "--lo"),
    hi: float = typer.Option(..., "--hi"),
    steps: int = typer.Option(..., "--steps"),
    config: Optional[Path] = typer.Option(None, "--config", help="Parameter file (key=value)"),
    mode: SolveMode = typer.Option(SolveMode.BASE, "--mode", help="base or outside"),
    out: Optional[Path] = typer.Option(None, "--out", help="CSV path; stdout when omitted"),
    grid_points: Optional[int] = typer.Option(None, "--grid-points", help="Leader grid size for the disagreement search"),
    workers: int = typer.Option(1, "--workers", min=1, help="Sweep points solved in parallel"),
):
    """
    Sweep one parameter over [lo, hi].
    """
    try:
        spec = SweepSpec(param=param, lo=lo, hi=hi, steps=steps)
        run_config = _load(config, "outside_option" if mode == SolveMode.OUTSIDE else "base_case")
        frame = run_sweep(spec, run_config, None, mode, workers, _disagreement_config(run_config, grid_points))
    except INPUT_ERRORS as e:
        _fail(str(e))
    _emit(frame, out)


@cli.command()
def figure(
    dataset: FigureDataset = typer.Option(..., "--dataset", help="Figure dataset id"),
    config: Optional[Path] = typer.Option(None, "--config", help="Replaces the dataset's preset market"),
    out: Optional[Path] = typer.Option(None, "--out", help="CSV path; stdout when omitted"),
    grid_points: Optional[int] = typer.Option(None, "--grid-points", help="Leader grid size for the disagreement search"),
    workers: int = typer.Option(1, "--workers", min=1, help="Sweep points solved in parallel"),
):
    """
    Write the CSV behind one figure.
    """
    try:
        run_config = _load(config, FIGURES[dataset].preset)
        frame = run_figure(dataset, run_config, None, workers, _disagreement_config(run_config, grid_points))
    except INPUT_ERRORS as e:
        _fail(str(e))
    _emit(frame, out)


def _render(report: VerificationReport) -> None:
    table = Table(title="Verification")
    table.add_column("check")
    table.add_column("residual", justify="right")
    table.add_column("tolerance", justify="right")
    table.add_column("status")
    table.add_column("detail")
    colors = {"PASS": "green", "FLAG": "yellow", "FAIL": "red"}
    for check in report.checks:
        status = check.status
        table.add_row(
            check.name,
            f"{check.residual:.3e}",
            f"{check.tolerance:.3e}",
            f"[{colors[status]}]{status}[/{colors[status]}]",
            check.detail,
        )
    Console().print(table)


@cli.command()
def verify(
    config: Optional[Path] = typer.Option(None, "--config", help="Market to verify; presets when omitted"),
    grid_points: Optional[int] = typer.Option(None, "--grid-points", help="Oracle grid points per axis"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for the randomized identity draws"),
    out: Optional[Path] = typer.Option(None, "--out", help="Also write the residuals as CSV"),
):
    """
    Check every closed form against the brute-force oracles.
    Exits with 1 when any check fails.
    """
    try:
        if config is not None:
            base = outside = load_run_config(config).params
        else:
            base, outside = preset_config("base_case").params, preset_config("outside_option").params
        report = run_verification(base, outside, grid_points=grid_points, seed=seed)
    except INPUT_ERRORS as e:
        _fail(str(e))

    _render(report)
    if out is not None:
        pd.DataFrame(report.to_rows()).to_csv(out, index=False, float_format=f"%.{settings.CSV_SIGNIFICANT_DIGITS}g")

    for flagged in report.flags:
        typer.echo(f"Flagged: {flagged.name}: {flagged.detail}", err=True)
    if not report.passed:
        typer.echo(f"{len(report.failures)} check(s) failed", err=True)
        raise typer.Exit(EXIT_VERIFICATION_FAILED)
    typer.echo("All checks passed")


if __name__ == "__main__":
    cli()
