import asyncio
import logging
import sys
import time
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path

import typer
from rich.console import Console
from rich.progress import Progress, SpinnerColumn, TaskID, TextColumn
from rich.table import Table
from typeguard import typechecked

from .config import RunConfig
from .exceptions import ChernLinkError, ConfigError, PhysicsError, UnreliableLoopError
from .invariants import InvariantReport, compute_invariants
from .model import (
    build_real_space,
    chain_spectrum_deviation,
    corrupt_bond,
    extract_chains,
    random_model,
    separability_deviation,
    verify_separability,
)
from .parser import apply_overrides, parse_config
from .quench import LinkingSeries, default_t_grid, dynamic_linking, loop_snapshots
from .sweep import PhaseDiagramRow, PhaseDiagramSweep, sweep_points
from .utils import (
    INVARIANT_HEADER,
    LOOP_HEADER,
    PHASE_DIAGRAM_HEADER,
    SERIES_HEADER,
    SNAPSHOT_HEADER,
    format_float,
    loop_rows,
    write_table,
)

# Configure logging for the console; --verbose lowers the level to DEBUG
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    handlers=[logging.StreamHandler()],
)

logger = logging.getLogger(__name__)

EXIT_PHYSICS_ERROR = 1
EXIT_CONFIG_ERROR = 2

SEPARABILITY_TOLERANCE = 1e-12
SPECTRUM_TOLERANCE = 1e-10
SELF_TEST_PERTURBATION = 0.1

app = typer.Typer(help="Chern numbers of separable two-band models from static and dynamic linking.")


@dataclass(frozen=True)
class CliState:
    """Options shared by every command, set by the global callback."""

    config: RunConfig
    json_output: bool = False
    verbose: bool = False


@typechecked
class SweepProgress:
    """
    Spinner that follows a running phase-diagram sweep.

    Attributes:
        console: Rich console for output
        progress: Rich progress display manager
        sweep_task_id: ID of the progress tracking task
        total: Number of potentials in the sweep
        verbose: Whether to print every finished row
    """

    def __init__(self, total: int, verbose: bool = False):
        self.console = Console()
        self.progress = Progress(
            SpinnerColumn(),
            TextColumn("[bold blue]{task.description}"),
            console=self.console,
        )
        self.sweep_task_id: TaskID | None = None
        self.total = total
        self.verbose = verbose

    def start(self) -> None:
        self.progress.start()
        self.sweep_task_id = self.progress.add_task("Sweeping...", total=self.total)

    def update(self, finished: int, latest: PhaseDiagramRow | None) -> None:
        """
        Show how many rows are done and the most recent one.

        Args:
            finished: Number of rows computed so far
            latest: The row that finished last, if any
        """
        description = f"Sweeping: {finished}/{self.total} rows"
        if latest is not None:
            description += f" (mu = {latest.mu:g}, {latest.status})"
        self.progress.update(self.sweep_task_id, completed=finished, description=description)

        if self.verbose and latest is not None:
            self.progress.console.print(f"mu = {latest.mu:g}: chern_lattice = {latest.chern_lattice}")

    def stop(self) -> None:
        if self.progress.live:
            self.progress.stop()


@typechecked
async def monitor_sweep_progress(sweep_progress: SweepProgress, sweep: PhaseDiagramSweep) -> None:
    """
    Poll a running sweep and refresh the spinner whenever a row finishes.

    Runs next to the sweep on the same event loop and yields between polls.
    """
    last_count = 0
    while True:
        current_count = len(sweep.completed)
        if current_count != last_count:
            sweep_progress.update(current_count, sweep.last_finished)
            last_count = current_count
        await asyncio.sleep(0.1)


def _state(ctx: typer.Context) -> CliState:
    return ctx.obj if isinstance(ctx.obj, CliState) else CliState(config=RunConfig())


def _output_path(state: CliState, name: str) -> Path:
    return state.config.output.dir / name


def _run_guarded(action: Callable[[], None]) -> None:
    """Run a command body and map package errors to the exit-code contract."""
    try:
        action()
    except ConfigError as e:
        handle_config_error(e)
    except ChernLinkError as e:
        handle_physics_error(e)
    except KeyboardInterrupt:
        handle_keyboard_interrupt()


@app.callback()
def main(
    ctx: typer.Context,
    config: Path | None = typer.Option(None, "--config", help="Path of a section.key = value configuration file"),
    json_output: bool = typer.Option(False, "--json", help="Mirror every CSV as JSON"),
    out: Path | None = typer.Option(None, "--out", help="Output directory, overrides output.dir"),
    seed: int | None = typer.Option(None, "--seed", help="Random seed, overrides run.seed"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable verbose output"),
) -> None:
    """
    Load the configuration shared by every command.
    """
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        run_config = parse_config(config) if config is not None else RunConfig()
        run_config = apply_overrides(run_config, output_dir=out, seed=seed)
    except ConfigError as e:
        handle_config_error(e)

    ctx.obj = CliState(config=run_config, json_output=json_output, verbose=verbose)


@typechecked
@app.command()
def invariants(ctx: typer.Context) -> None:
    """
    Compute the Chern number by quadrature and by plaquettes, and the static linking number.
    """
    state = _state(ctx)

    def action() -> None:
        cfg = state.config
        logger.info("Computing invariants")
        report = compute_invariants(
            cfg.model.build(),
            quadrature_grid=cfg.grid.quadrature,
            lattice_grid=cfg.grid.lattice,
            linking_samples=cfg.grid.linking,
            gap_min=cfg.tolerance.gap_min,
            eps_touch=cfg.tolerance.eps_touch,
        )
        row = [report.chern_quadrature, report.chern_lattice, report.linking_static, report.grid_used, report.gap]
        write_table(_output_path(state, "invariants.csv"), INVARIANT_HEADER, [row], state.json_output)
        display_invariants(report)

    _run_guarded(action)


@typechecked
@app.command()
def quench(ctx: typer.Context) -> None:
    """
    Follow the dynamic linking number of the quench loops over the averaging time.
    """
    state = _state(ctx)

    def action() -> None:
        cfg = state.config
        model = cfg.model.build()
        start_time = time.time()
        logger.info(f"Running {cfg.quench.mode} quench up to T = {cfg.quench.t_max:g}")

        series = dynamic_linking(
            model,
            samples=cfg.quench.n,
            t_grid=default_t_grid(cfg.quench.t_max, cfg.quench.t_points),
            dt=cfg.quench.dt,
            mode=cfg.quench.mode,
            eps_n=cfg.tolerance.eps_n,
            eps_touch=cfg.tolerance.eps_touch,
        )
        rows = [[float(T), float(value), flag] for T, value, flag in zip(series.T_grid, series.L_of_T, series.flags)]
        write_table(_output_path(state, "quench_series.csv"), SERIES_HEADER, rows, state.json_output)

        if cfg.quench.snapshots:
            snapshots = loop_snapshots(
                model,
                list(cfg.quench.snapshots),
                samples=cfg.quench.n,
                dt=cfg.quench.dt,
                mode=cfg.quench.mode,
                eps_n=cfg.tolerance.eps_n,
            )
            snapshot_rows = []
            for snapshot in snapshots:
                loops = [loop.loop for loop in snapshot.loops if loop.loop is not None]
                snapshot_rows.extend(loop_rows(loops, prefix=(snapshot.T,)))
            write_table(_output_path(state, "loop_snapshots.csv"), SNAPSHOT_HEADER, snapshot_rows, state.json_output)

        display_series(series, time.time() - start_time)
        if series.flags[-1] != "ok":
            raise UnreliableLoopError(f"Dynamic linking at T = {series.T_grid[-1]:g} is unreliable")

    _run_guarded(action)


@typechecked
@app.command()
def sweep(ctx: typer.Context) -> None:
    """
    Sweep the QWZ potential mu and tabulate every invariant per point.
    """
    state = _state(ctx)
    sweep_progress: SweepProgress | None = None

    def action() -> None:
        nonlocal sweep_progress
        cfg = state.config
        mus = sweep_points(cfg.sweep, cfg.model.rho_x, cfg.model.rho_y)
        runner = PhaseDiagramSweep(cfg, mus)
        start_time = time.time()

        sweep_progress = SweepProgress(total=len(mus), verbose=state.verbose)
        sweep_progress.start()

        async def run_with_progress() -> list[PhaseDiagramRow]:
            monitor_task = asyncio.create_task(monitor_sweep_progress(sweep_progress, runner))
            try:
                return await runner.run()
            finally:
                monitor_task.cancel()
                try:
                    await monitor_task
                except asyncio.CancelledError:
                    pass

        try:
            rows = asyncio.run(run_with_progress())
        finally:
            sweep_progress.stop()

        write_table(
            _output_path(state, "phase_diagram.csv"),
            PHASE_DIAGRAM_HEADER,
            [row.cells() for row in rows],
            state.json_output,
        )
        display_phase_diagram(rows, time.time() - start_time)

    try:
        _run_guarded(action)
    except Exception as e:
        handle_unexpected_error(e, sweep_progress)


@typechecked
@app.command()
def verify(
    ctx: typer.Context,
    random: bool = typer.Option(False, "--random", help="Check a seeded random model instead of the configured one"),
    self_test: bool = typer.Option(False, "--self-test", help="Corrupt one bond and report the deviation"),
) -> None:
    """
    Check that the real-space lattice and its two chains reproduce r1(kx) - r2(ky).
    """
    state = _state(ctx)

    def action() -> None:
        cfg = state.config
        cells = cfg.grid.verify
        model = random_model(cfg.seed) if random else cfg.model.build()
        console = Console()

        if self_test:
            corrupted = corrupt_bond(build_real_space(model, cells), SELF_TEST_PERTURBATION, seed=cfg.seed)
            deviation = separability_deviation(corrupted, model)
            console.print(f"[bold]Self-test:[/bold] corrupted lattice deviates by {format_float(deviation)}")
            logger.info(f"Self-test deviation {deviation:.3e}")
            sys.exit(EXIT_PHYSICS_ERROR if deviation > SEPARABILITY_TOLERANCE else 0)

        first, second = extract_chains(model, cells)
        checks = {
            "separability": (verify_separability(model, cells), SEPARABILITY_TOLERANCE),
            "chain1_spectrum": (chain_spectrum_deviation(first, model.chain1), SPECTRUM_TOLERANCE),
            "chain2_spectrum": (chain_spectrum_deviation(second, model.chain2), SPECTRUM_TOLERANCE),
        }
        rows = [[name, value, tolerance] for name, (value, tolerance) in checks.items()]
        write_table(_output_path(state, "verify.csv"), ("check", "deviation", "tolerance"), rows, state.json_output)

        table = Table(title=f"Separability checks, N = {cells}")
        table.add_column("check")
        table.add_column("deviation", justify="right")
        table.add_column("result")
        failed = False
        for name, (value, tolerance) in checks.items():
            passed = value <= tolerance
            failed = failed or not passed
            table.add_row(name, format_float(value), "[green]ok[/green]" if passed else "[red]failed[/red]")
        console.print(table)
        if failed:
            sys.exit(EXIT_PHYSICS_ERROR)

    _run_guarded(action)


@typechecked
@app.command()
def loops(ctx: typer.Context) -> None:
    """
    Dump the static loops r1(k) and r2(k) for plotting.
    """
    state = _state(ctx)

    def action() -> None:
        cfg = state.config
        model = cfg.model.build()
        samples = cfg.grid.linking
        rows = loop_rows([model.chain1.loop(samples), model.chain2.loop(samples)])
        write_table(_output_path(state, "loops.csv"), LOOP_HEADER, rows, state.json_output)
        Console().print(f"[bold green]Wrote {len(rows)} loop samples[/bold green] to {cfg.output.dir}")

    _run_guarded(action)


def display_invariants(report: InvariantReport) -> None:
    """
    Print an invariant report as a table.

    Args:
        report: The report to show
    """
    table = Table(title="Invariants")
    table.add_column("quantity")
    table.add_column("value", justify="right")
    table.add_row("chern_quadrature", format_float(report.chern_quadrature))
    table.add_row("chern_lattice", str(report.chern_lattice))
    table.add_row("linking_static", format_float(report.linking_static))
    table.add_row("gap", format_float(report.gap))
    Console().print(table)


def display_series(series: LinkingSeries, elapsed_time: float = 0) -> None:
    """
    Summarise a dynamic linking series.

    Args:
        series: The series to summarise
        elapsed_time: Total run time in seconds
    """
    console = Console()
    unreliable = sum(flag != "ok" for flag in series.flags)
    console.print("\n[bold green]Dynamic linking:[/bold green]")
    console.print(f"  final value at T = {series.T_grid[-1]:g}: {format_float(float(series.L_of_T[-1]))}")
    console.print(f"  converged value: {series.converged_value if series.converged_value is not None else 'none'}")
    if unreliable:
        console.print(f"  [yellow]{unreliable} of {len(series.flags)} entries flagged unreliable[/yellow]")
    console.print(f"[bold green]Total time:[/bold green] {elapsed_time:.1f}s")


def display_phase_diagram(rows: list[PhaseDiagramRow], elapsed_time: float = 0) -> None:
    """
    Print the phase diagram.

    Args:
        rows: Rows in sweep order
        elapsed_time: Total sweep time in seconds
    """
    console = Console()
    table = Table(title="Phase diagram")
    for name in ("mu", "chern_lattice", "linking_static", "linking_dynamic_Tmax", "status"):
        table.add_column(name, justify="right")
    for row in rows:
        table.add_row(
            f"{row.mu:g}",
            "-" if row.chern_lattice is None else str(row.chern_lattice),
            format_float(row.linking_static),
            format_float(row.linking_dynamic_Tmax),
            row.status,
        )
    console.print(table)

    minutes, seconds = divmod(int(elapsed_time), 60)
    time_str = f"{minutes}m {seconds}s" if minutes > 0 else f"{seconds}s"
    console.print(f"[bold green]Total sweep time:[/bold green] {time_str}")


def handle_config_error(error: ConfigError) -> None:
    """
    Report a configuration problem and exit with code 2.

    Args:
        error: The configuration error that occurred
    """
    logger.error(f"Configuration error: {str(error)}")
    console = Console()
    console.print(f"\n[bold red]Configuration error:[/bold red] {str(error)}")
    console.print("\n[yellow]Hint:[/yellow] Lines have the form 'section.key = value'; see the README for all keys.")
    sys.exit(EXIT_CONFIG_ERROR)


def handle_physics_error(error: ChernLinkError) -> None:
    """
    Report a failed physics precondition and exit with code 1.

    Args:
        error: The error that occurred
    """
    logger.error(f"Error: {str(error)}")
    console = Console()
    console.print(f"\n[bold red]Error:[/bold red] {str(error)}")
    if isinstance(error, UnreliableLoopError):
        console.print("\n[yellow]Hint:[/yellow] Increase quench.t_max or move away from the phase boundary.")
    elif isinstance(error, PhysicsError) and error.status == "gap_closing":
        console.print("\n[yellow]Hint:[/yellow] The model sits on a phase boundary; move mu away from it.")
    sys.exit(EXIT_PHYSICS_ERROR)


def handle_keyboard_interrupt(sweep_progress: SweepProgress | None = None) -> None:
    """
    Handle keyboard interrupt (Ctrl+C) gracefully.

    Args:
        sweep_progress: The progress tracker to stop, if one is running
    """
    logger.info("Interrupted by user.")
    if sweep_progress is not None:
        sweep_progress.stop()
    Console().print("\n[yellow]Interrupted by user.[/yellow]")
    sys.exit(EXIT_PHYSICS_ERROR)


def handle_unexpected_error(error: Exception, sweep_progress: SweepProgress | None = None) -> None:
    """
    Handle unexpected errors by providing error information.

    Args:
        error: The unexpected error that occurred
        sweep_progress: The progress tracker to stop, if one is running
    """
    logger.error(f"Unexpected error: {str(error)}")
    if sweep_progress is not None:
        sweep_progress.stop()
    Console().print(f"\n[bold red]Unexpected error:[/bold red] {str(error)}")
    sys.exit(EXIT_PHYSICS_ERROR)

