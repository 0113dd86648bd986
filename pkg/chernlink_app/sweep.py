import asyncio
import logging
import math
from dataclasses import dataclass

import numpy as np
from typeguard import typechecked

from .config import RunConfig, SweepConfig
from .exceptions import ConfigValueError, PhysicsError
from .invariants import compute_invariants
from .model import locate_gap_minimum, qwz_critical_mus
from .quench import dynamic_linking

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhaseDiagramRow:
    """
    All invariants of the QWZ model at one potential mu.

    Columns that could not be computed are NaN (None for the lattice Chern number)
    and `status` names the reason.
    """

    mu: float
    chern_lattice: int | None
    chern_quadrature: float
    linking_static: float
    linking_dynamic_Tmax: float
    gap: float
    status: str = "ok"

    def cells(self) -> list[float | int | str | None]:
        return [
            self.mu,
            self.chern_lattice,
            self.chern_quadrature,
            self.linking_static,
            self.linking_dynamic_Tmax,
            self.gap,
            self.status,
        ]


@typechecked
def sweep_points(sweep: SweepConfig, rho_x: float, rho_y: float) -> list[float]:
    """
    Potentials mu_min, mu_min + step, ... up to mu_max, minus those near a gap closing.

    A point is left out when it lies strictly within `sweep.exclusion` of one of the
    analytic QWZ phase boundaries.

    Examples:
        >>> sweep_points(SweepConfig(mu_min=0.5, mu_max=1.5, mu_step=0.25), 3.0, 2.0)
        [0.5, 0.75, 1.25, 1.5]
    """
    count = int(math.floor((sweep.mu_max - sweep.mu_min) / sweep.mu_step + 1e-9)) + 1
    candidates = np.round(sweep.mu_min + sweep.mu_step * np.arange(count), 12)
    boundaries = np.array(qwz_critical_mus(rho_x, rho_y))

    points = [float(mu) for mu in candidates if np.abs(mu - boundaries).min() >= sweep.exclusion]
    logger.debug(f"Sweep keeps {len(points)} of {count} potentials")
    return points


def _failed_row(config: RunConfig, mu: float, error: PhysicsError) -> PhaseDiagramRow:
    model = config.model.build(mu1=mu + config.model.mu2)
    gap = locate_gap_minimum(model, config.grid.quadrature, refine=True)[0]
    return PhaseDiagramRow(
        mu=mu,
        chern_lattice=None,
        chern_quadrature=math.nan,
        linking_static=math.nan,
        linking_dynamic_Tmax=math.nan,
        gap=gap,
        status=error.status,
    )


@typechecked
def compute_row(config: RunConfig, mu: float) -> PhaseDiagramRow:
    """
    Compute one phase-diagram row with mu1 = mu + mu2.

    Physics errors never escape: they end up in the `status` column so that the
    remaining rows of a sweep are unaffected.
    """
    model = config.model.build(mu1=mu + config.model.mu2)
    try:
        report = compute_invariants(
            model,
            quadrature_grid=config.grid.quadrature,
            lattice_grid=config.grid.lattice,
            linking_samples=config.grid.linking,
            gap_min=config.tolerance.gap_min,
            eps_touch=config.tolerance.eps_touch,
            check_consistency=False,
        )
    except PhysicsError as e:
        logger.info(f"mu = {mu:g}: {e.status} ({e})")
        return _failed_row(config, mu, e)

    status = "ok" if report.is_consistent() else "inconsistent"
    dynamic = math.nan
    if config.sweep.include_dynamic:
        try:
            series = dynamic_linking(
                model,
                samples=config.quench.n,
                t_grid=np.array([config.quench.t_max]),
                dt=config.quench.dt,
                mode=config.quench.mode,
                eps_n=config.tolerance.eps_n,
                eps_touch=config.tolerance.eps_touch,
            )
            dynamic = series.final_value
            if status == "ok" and round(dynamic) != report.chern_lattice:
                status = "inconsistent"
        except PhysicsError as e:
            logger.info(f"mu = {mu:g}: dynamic linking {e.status} ({e})")
            status = e.status

    return PhaseDiagramRow(
        mu=mu,
        chern_lattice=report.chern_lattice,
        chern_quadrature=report.chern_quadrature,
        linking_static=report.linking_static,
        linking_dynamic_Tmax=dynamic,
        gap=report.gap,
        status=status,
    )


@typechecked
class PhaseDiagramSweep:
    """
    Concurrent phase-diagram sweep over a list of potentials.

    A fixed pool of worker coroutines drains a queue of (index, mu) pairs. Each row
    is computed in a worker thread under a semaphore that bounds how many rows run
    at once; rows are returned in input order whatever order they finish in.

    Attributes:
        config: Run configuration shared by every row
        mus: Potentials to compute
        concurrency: Maximum number of rows computed at once
        completed: Rows finished so far, keyed by input index
        last_finished: The row that finished most recently
        semaphore: Semaphore limiting concurrent rows

    Example:
        ```python
        sweep = PhaseDiagramSweep(config, [-3.0, 0.0, 2.0])
        rows = await sweep.run()
        ```
    """

    def __init__(self, config: RunConfig, mus: list[float], concurrency: int | None = None):
        if config.model.is_generic:
            raise ConfigValueError("sweep: the phase-diagram sweep needs the QWZ preset", key="sweep")

        self.config = config
        self.mus = mus
        self.concurrency = concurrency or config.sweep.concurrency
        self.completed: dict[int, PhaseDiagramRow] = {}
        self.last_finished: PhaseDiagramRow | None = None
        self.errors: list[Exception] = []
        self.pending: asyncio.Queue = asyncio.Queue()
        self.semaphore = asyncio.Semaphore(self.concurrency)

        for index, mu in enumerate(mus):
            self.pending.put_nowait((index, mu))

    async def run(self) -> list[PhaseDiagramRow]:
        """Compute every row and return them ordered by input index."""
        workers = [asyncio.create_task(self._worker()) for _ in range(self.concurrency)]
        logger.info(f"Starting sweep of {len(self.mus)} potentials with {self.concurrency} workers")

        try:
            await self.pending.join()
            logger.info(f"Sweep completed: {len(self.completed)} rows")
        finally:
            for worker in workers:
                worker.cancel()
            await asyncio.gather(*workers, return_exceptions=True)

        if self.errors:
            raise self.errors[0]
        return [self.completed[index] for index in sorted(self.completed)]

    async def _worker(self) -> None:
        while True:
            index, mu = await self.pending.get()
            try:
                async with self.semaphore:
                    row = await asyncio.to_thread(compute_row, self.config, mu)
                self.completed[index] = row
                self.last_finished = row
                logger.info(f"mu = {mu:g}: chern_lattice = {row.chern_lattice}, status = {row.status}")
            except Exception as e:
                logger.error(f"Error computing mu = {mu:g}: {str(e)}")
                self.errors.append(e)
            finally:
                self.pending.task_done()


@typechecked
async def run_sweep(config: RunConfig, mus: list[float] | None = None) -> list[PhaseDiagramRow]:
    """
    Sweep the configured potentials, or `mus` when given.

    Example:
        ```python
        rows = asyncio.run(run_sweep(config))
        ```
    """
    if mus is None:
        mus = sweep_points(config.sweep, config.model.rho_x, config.model.rho_y)
    return await PhaseDiagramSweep(config, mus).run()
