"""
Run configuration.

A `RunConfig` groups the model description with the numerical controls of every
command. Each section validates itself and names the offending key on failure.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constants import (
    DEFAULT_CONCURRENCY,
    DEFAULT_DT,
    DEFAULT_EPS_N,
    DEFAULT_EPS_TOUCH,
    DEFAULT_EXCLUSION,
    DEFAULT_GAP_MIN,
    DEFAULT_LATTICE_GRID,
    DEFAULT_LINKING_SAMPLES,
    DEFAULT_MU_MAX,
    DEFAULT_MU_MIN,
    DEFAULT_MU_STEP,
    DEFAULT_N_MAX,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_QUADRATURE_GRID,
    DEFAULT_QUENCH_SAMPLES,
    DEFAULT_T_MAX,
    DEFAULT_T_POINTS,
    MIN_GRID,
    QUENCH_MODES,
    QWZ_DEFAULTS,
)
from .exceptions import ConfigValueError, ContractViolationError
from .model import ChainSpec, Hopping, SeparableModel, qwz_model

DEFAULT_VERIFY_CELLS = 16


def _require(condition: bool, key: str, message: str) -> None:
    if not condition:
        raise ConfigValueError(f"{key}: {message}", key=key)


@dataclass(frozen=True, eq=False)
class ChainConfig:
    """Generic description of one chain: on-site vector and couplings by range."""

    onsite: tuple[float, float, float] = (0.0, 0.0, 0.0)
    hoppings: dict[int, tuple[complex, complex, complex]] = field(default_factory=dict)

    def to_spec(self, n_max: int, axis: str) -> ChainSpec:
        try:
            return ChainSpec(
                onsite=np.array(self.onsite),
                hoppings=tuple(Hopping(n, np.array(vector)) for n, vector in sorted(self.hoppings.items())),
                n_max=n_max,
            )
        except ContractViolationError as e:
            raise ConfigValueError(f"hop.{axis}: {e}", key=f"hop.{axis}") from e


@dataclass(frozen=True, eq=False)
class ModelConfig:
    """
    Model section: the extended QWZ preset, or generic chains when any is given.

    Attributes:
        chain_x: Generic chain along x, None for the QWZ preset
        chain_y: Generic chain along y, None for the QWZ preset
    """

    lambda_x: float = QWZ_DEFAULTS["lambda_x"]
    lambda_y: float = QWZ_DEFAULTS["lambda_y"]
    rho_x: float = QWZ_DEFAULTS["rho_x"]
    rho_y: float = QWZ_DEFAULTS["rho_y"]
    mu1: float = QWZ_DEFAULTS["mu1"]
    mu2: float = QWZ_DEFAULTS["mu2"]
    n_max: int = DEFAULT_N_MAX
    chain_x: ChainConfig | None = None
    chain_y: ChainConfig | None = None

    def __post_init__(self) -> None:
        _require(self.n_max >= 1, "model.n_max", "must be at least 1")
        _require((self.chain_x is None) == (self.chain_y is None), "model", "generic models need both chains")
        for key in ("lambda_x", "lambda_y", "rho_x", "rho_y", "mu1", "mu2"):
            _require(math.isfinite(getattr(self, key)), f"model.{key}", "must be finite")

    @property
    def is_generic(self) -> bool:
        return self.chain_x is not None

    def build(self, mu1: float | None = None) -> SeparableModel:
        """The separable model, with the x-chain potential optionally overridden (QWZ only)."""
        if self.is_generic:
            return SeparableModel(self.chain_x.to_spec(self.n_max, "x"), self.chain_y.to_spec(self.n_max, "y"))
        return qwz_model(
            self.lambda_x,
            self.lambda_y,
            self.rho_x,
            self.rho_y,
            self.mu1 if mu1 is None else mu1,
            self.mu2,
            n_max=self.n_max,
        )


@dataclass(frozen=True)
class GridConfig:
    quadrature: int = DEFAULT_QUADRATURE_GRID
    lattice: int = DEFAULT_LATTICE_GRID
    linking: int = DEFAULT_LINKING_SAMPLES
    verify: int = DEFAULT_VERIFY_CELLS

    def __post_init__(self) -> None:
        for key in ("quadrature", "lattice", "linking"):
            _require(getattr(self, key) >= MIN_GRID, f"grid.{key}", f"must be at least {MIN_GRID}")
        _require(self.verify >= MIN_GRID, "grid.verify", f"must be at least {MIN_GRID}")


@dataclass(frozen=True)
class QuenchConfig:
    n: int = DEFAULT_QUENCH_SAMPLES
    t_max: float = DEFAULT_T_MAX
    dt: float = DEFAULT_DT
    t_points: int = DEFAULT_T_POINTS
    mode: str = "analytic"
    snapshots: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        _require(self.n >= MIN_GRID, "quench.n", f"must be at least {MIN_GRID}")
        _require(self.dt > 0, "quench.dt", "must be positive")
        _require(self.t_max > 1, "quench.t_max", "must exceed 1")
        _require(self.t_points >= 2, "quench.t_points", "must be at least 2")
        _require(self.mode in QUENCH_MODES, "quench.mode", f"must be one of {', '.join(QUENCH_MODES)}")
        _require(all(0 < t <= self.t_max for t in self.snapshots), "quench.snapshots", "times must lie in (0, t_max]")


@dataclass(frozen=True)
class SweepConfig:
    mu_min: float = DEFAULT_MU_MIN
    mu_max: float = DEFAULT_MU_MAX
    mu_step: float = DEFAULT_MU_STEP
    exclusion: float = DEFAULT_EXCLUSION
    include_dynamic: bool = True
    concurrency: int = DEFAULT_CONCURRENCY

    def __post_init__(self) -> None:
        _require(self.mu_step > 0, "sweep.mu_step", "must be positive")
        _require(self.mu_max >= self.mu_min, "sweep.mu_max", "must not be below sweep.mu_min")
        _require(self.exclusion >= 0, "sweep.exclusion", "must not be negative")
        _require(self.concurrency >= 1, "sweep.concurrency", "must be at least 1")


@dataclass(frozen=True)
class ToleranceConfig:
    eps_touch: float = DEFAULT_EPS_TOUCH
    eps_n: float = DEFAULT_EPS_N
    gap_min: float = DEFAULT_GAP_MIN

    def __post_init__(self) -> None:
        for key in ("eps_touch", "eps_n", "gap_min"):
            _require(getattr(self, key) > 0, f"tolerance.{key}", "must be positive")


@dataclass(frozen=True)
class OutputConfig:
    dir: Path = Path(DEFAULT_OUTPUT_DIR)


@dataclass(frozen=True, eq=False)
class RunConfig:
    """
    Complete configuration of a run; every field has a documented default.

    Example:
        ```python
        config = RunConfig(quench=QuenchConfig(mode="dynamics"))
        model = config.model.build()
        ```
    """

    model: ModelConfig = field(default_factory=ModelConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    quench: QuenchConfig = field(default_factory=QuenchConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    tolerance: ToleranceConfig = field(default_factory=ToleranceConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    seed: int = 0
