"""
All rich output formatting. Nothing outside this module prints to the terminal.
Includes progress indicators and the logging handler setup.
"""
from __future__ import annotations

import logging
import math

import numpy as np
from rich import box
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn
from rich.rule import Rule
from rich.table import Table

import config
from src import encoding
from src.errors import CurvDesignError, DegenerateFormError, FeasibilityAbortError, NoCenterError
from src.geometry import design_space
from src.models import CurvatureEncoding, DatasetManifest, DesignParams, Diagnostics, TrainReport

console = Console()

_logging_ready = False


def setup_logging(level: str | int = config.LOG_LEVEL) -> None:
    """Route library logging through rich. Only the first call installs the handler."""
    global _logging_ready
    root = logging.getLogger()
    root.setLevel(level)
    if _logging_ready:
        return
    root.addHandler(RichHandler(console=console, show_path=False, rich_tracebacks=False))
    _logging_ready = True


# ---------------------------------------------------------------------------
# Header / errors
# ---------------------------------------------------------------------------

def print_header(subtitle: str = "") -> None:
    console.print()
    console.print(Panel(
        "[bold cyan]curvdesign · curvature-profile inverse design[/bold cyan]"
        + (f"\n[dim]{subtitle}[/dim]" if subtitle else ""),
        box=box.DOUBLE_EDGE,
        expand=False,
    ))
    console.print()


def print_error(exc: CurvDesignError) -> None:
    body = f"[red]{exc}[/red]"
    if isinstance(exc, FeasibilityAbortError) and exc.diagnostics:
        body += "\n" + "\n".join(f"[dim]{k}: {v}[/dim]" for k, v in exc.diagnostics.items())
    console.print(Panel(body, title=type(exc).__name__, expand=False))


def print_saved(paths: dict[str, str]) -> None:
    for label, path in paths.items():
        console.print(f"[dim]{label:<12}[/dim] {path}")


# ---------------------------------------------------------------------------
# Progress bar (returns the Progress object for use as a context manager)
# ---------------------------------------------------------------------------

def make_progress() -> Progress:
    return Progress(
        SpinnerColumn(),
        TextColumn("[bold blue]{task.description}"),
        BarColumn(),
        TextColumn("[progress.percentage]{task.percentage:>3.0f}%"),
        TimeElapsedColumn(),
        console=console,
        transient=False,
    )


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def print_config(settings: dict) -> None:
    table = Table(title="Configuration", box=box.SIMPLE_HEAVY)
    table.add_column("Setting", style="cyan")
    table.add_column("Value")
    for key in sorted(settings):
        table.add_row(key, str(settings[key]))
    console.print(table)


# ---------------------------------------------------------------------------
# Designs and flows
# ---------------------------------------------------------------------------

def print_design(theta: DesignParams, title: str = "Design parameters") -> None:
    table = Table(title=title, box=box.SIMPLE_HEAVY)
    for col in config.DESIGN_COLUMNS:
        table.add_column(col, justify="right")
    table.add_row(*(f"{v:.4g}" for v in theta.as_array()))
    console.print(table)

    try:
        kind = design_space.classify(theta).value
        geo = design_space.to_geometric(theta)
        console.print(
            f"[dim]{kind} · κc = ({geo.kappa1_c:.4f}, {geo.kappa2_c:.4f}) · "
            f"θ = {math.degrees(geo.theta):.1f}° · α = {geo.alpha:.3f} · c = {geo.c:.4g} · g = {geo.g:.4g}[/dim]"
        )
    except (DegenerateFormError, NoCenterError) as exc:
        console.print(f"[dim]No geometric form: {exc}[/dim]")


def print_diagnostics(diag: Diagnostics) -> None:
    colour = "green" if diag.feasible else "yellow"
    first = diag.energies[0] if diag.energies else float("nan")
    last = diag.energies[-1] if diag.energies else float("nan")
    console.print(Rule("Flow"))
    console.print(
        f"steps [bold]{diag.steps}[/bold] · converged {diag.converged} · "
        f"energy {first:.6g} → {last:.6g} · "
        f"[{colour}]{'feasible' if diag.feasible else 'infeasible: ' + diag.reason}[/{colour}]"
    )


def print_encoding(enc: CurvatureEncoding, title: str = "Curvature profile") -> None:
    k1, k2 = encoding.histogram_mode(enc)
    occupied = int(np.count_nonzero(enc.values))
    console.print(Panel(
        f"B = {enc.spec.bins} (k = {enc.spec.k}) · range [{enc.spec.kappa_min}, {enc.spec.kappa_max}]\n"
        f"mode at (κ1, κ2) = ({k1:.4f}, {k2:.4f}) · {occupied} occupied bins · "
        f"peak probability {enc.values.max():.4f}",
        title=title,
        expand=False,
    ))


# ---------------------------------------------------------------------------
# Datasets and training
# ---------------------------------------------------------------------------

def print_manifest(manifest: DatasetManifest) -> None:
    rejected = manifest.attempts - manifest.count
    rate = manifest.count / manifest.attempts if manifest.attempts else 0.0
    table = Table(title="Dataset", box=box.SIMPLE_HEAVY)
    table.add_column("Feasible", justify="right", style="green")
    table.add_column("Rejected", justify="right", style="yellow")
    table.add_column("Rate", justify="right")
    table.add_column("Bins", justify="right")
    table.add_column("Grid", justify="right")
    table.add_column("Seed", justify="right")
    table.add_row(
        str(manifest.count), str(rejected), f"{rate:.0%}",
        str(manifest.hist_spec.bins), str(manifest.solver.get("grid", "")), str(manifest.seed),
    )
    console.print(table)


def print_train_report(report: TrainReport, title: str) -> None:
    table = Table(title=title, box=box.SIMPLE_HEAVY)
    table.add_column("Epoch", justify="right", style="dim")
    table.add_column("Train loss", justify="right")
    table.add_column("Test loss", justify="right")
    n = len(report.train_loss)
    shown = sorted({0, n // 4, n // 2, 3 * n // 4, n - 1}) if n else []
    for i in shown:
        test = report.test_loss[i]
        table.add_row(str(i + 1), f"{report.train_loss[i]:.6g}", "—" if math.isnan(test) else f"{test:.6g}")
    console.print(table)
    console.print(f"[dim]{report.wall_time:.1f}s · checksum {report.checksum[:16]}…[/dim]")


def print_r2(names: tuple[str, ...], scores: np.ndarray) -> None:
    table = Table(title="R² (true vs predicted)", box=box.SIMPLE_HEAVY)
    for name in names:
        table.add_column(name, justify="right")
    table.add_row(*("—" if math.isnan(s) else f"{s:.3f}" for s in scores))
    console.print(table)


# ---------------------------------------------------------------------------
# Inverse design
# ---------------------------------------------------------------------------

def print_inverse_result(result) -> None:
    print_design(result.theta, title="Predicted design")
    console.print(f"reconstruction TV distance  [bold]{result.reconstruction_tv:.4f}[/bold]")
    if result.verify_diagnostics is not None:
        if result.verify_tv is None:
            console.print(f"[yellow]verification infeasible: {result.verify_diagnostics.reason}[/yellow]")
        else:
            console.print(f"verification TV distance    [bold]{result.verify_tv:.4f}[/bold]")
