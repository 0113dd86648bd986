import logging
import math
import re
from collections.abc import Callable
from dataclasses import replace
from pathlib import Path
from typing import Any

from typeguard import typechecked

from .config import (
    ChainConfig,
    GridConfig,
    ModelConfig,
    OutputConfig,
    QuenchConfig,
    RunConfig,
    SweepConfig,
    ToleranceConfig,
)
from .exceptions import (
    ConfigFileNotFoundError,
    ConfigSyntaxError,
    ConfigValueError,
    UnknownConfigKeyError,
)

logger = logging.getLogger(__name__)

KEY_PATTERN = re.compile(r"^[a-z_]+(\.[a-z0-9_]+)+$")
ONSITE_PATTERN = re.compile(r"^onsite\.(x|y)$")
HOPPING_PATTERN = re.compile(r"^hop\.(x|y)\.([0-9]+)$")
TRUE_VALUES = {"true", "yes", "on", "1"}
FALSE_VALUES = {"false", "no", "off", "0"}
QWZ_KEYS = {f"model.{name}" for name in ("lambda_x", "lambda_y", "rho_x", "rho_y", "mu1", "mu2")}


def _to_int(text: str) -> int:
    return int(text)


def _to_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"{text!r} is not finite")
    return value


def _to_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in TRUE_VALUES:
        return True
    if lowered in FALSE_VALUES:
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _to_float_list(text: str) -> tuple[float, ...]:
    return tuple(_to_float(item) for item in text.split(",") if item.strip())


def _to_word(text: str) -> str:
    return text.lower()


# Scalar keys: key -> (section, field, converter)
SCALAR_KEYS: dict[str, tuple[str, str, Callable[[str], Any]]] = {
    "model.lambda_x": ("model", "lambda_x", _to_float),
    "model.lambda_y": ("model", "lambda_y", _to_float),
    "model.rho_x": ("model", "rho_x", _to_float),
    "model.rho_y": ("model", "rho_y", _to_float),
    "model.mu1": ("model", "mu1", _to_float),
    "model.mu2": ("model", "mu2", _to_float),
    "model.n_max": ("model", "n_max", _to_int),
    "grid.quadrature": ("grid", "quadrature", _to_int),
    "grid.lattice": ("grid", "lattice", _to_int),
    "grid.linking": ("grid", "linking", _to_int),
    "grid.verify": ("grid", "verify", _to_int),
    "quench.n": ("quench", "n", _to_int),
    "quench.t_max": ("quench", "t_max", _to_float),
    "quench.dt": ("quench", "dt", _to_float),
    "quench.t_points": ("quench", "t_points", _to_int),
    "quench.mode": ("quench", "mode", _to_word),
    "quench.snapshots": ("quench", "snapshots", _to_float_list),
    "sweep.mu_min": ("sweep", "mu_min", _to_float),
    "sweep.mu_max": ("sweep", "mu_max", _to_float),
    "sweep.mu_step": ("sweep", "mu_step", _to_float),
    "sweep.exclusion": ("sweep", "exclusion", _to_float),
    "sweep.include_dynamic": ("sweep", "include_dynamic", _to_bool),
    "sweep.concurrency": ("sweep", "concurrency", _to_int),
    "tolerance.eps_touch": ("tolerance", "eps_touch", _to_float),
    "tolerance.eps_n": ("tolerance", "eps_n", _to_float),
    "tolerance.gap_min": ("tolerance", "gap_min", _to_float),
    "run.seed": ("run", "seed", _to_int),
    "output.dir": ("output", "dir", Path),
}


@typechecked
def parse_vector(text: str, key: str, size: int) -> tuple[float, ...]:
    """
    Parse a comma-separated list of exactly `size` finite reals.

    Examples:
        >>> parse_vector("0, 0, 1.5", "onsite.x", 3)
        (0.0, 0.0, 1.5)
    """
    try:
        values = tuple(_to_float(item) for item in text.split(","))
    except ValueError as e:
        raise ConfigValueError(f"{key}: {e}", key=key) from e
    if len(values) != size:
        raise ConfigValueError(f"{key}: expected {size} comma-separated numbers, got {len(values)}", key=key)
    return values


@typechecked
def read_assignments(text: str) -> list[tuple[int, str, str]]:
    """
    Split configuration text into (line_number, key, value) assignments.

    Comments start with `#`; blank lines are ignored. A line without `=`, a key
    that is not dotted lowercase and a repeated key are syntax errors.

    Args:
        text: Full configuration text

    Returns:
        Assignments in file order

    Raises:
        ConfigSyntaxError: With the 1-based number of the offending line
    """
    assignments = []
    seen: dict[str, int] = {}
    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigSyntaxError(f"Line {line_number}: expected 'section.key = value'", line_number=line_number)

        key, value = (part.strip() for part in line.split("=", 1))
        if not KEY_PATTERN.match(key) or not value:
            raise ConfigSyntaxError(f"Line {line_number}: malformed assignment {line!r}", line_number=line_number)
        if key in seen:
            raise ConfigSyntaxError(
                f"Line {line_number}: duplicate key {key!r} (first set on line {seen[key]})", line_number=line_number
            )
        seen[key] = line_number
        assignments.append((line_number, key, value))
    return assignments


def _generic_chains(generic: dict[str, str]) -> tuple[ChainConfig, ChainConfig]:
    onsite = {"x": (0.0, 0.0, 0.0), "y": (0.0, 0.0, 0.0)}
    hoppings: dict[str, dict[int, tuple[complex, complex, complex]]] = {"x": {}, "y": {}}

    for key, value in generic.items():
        if match := ONSITE_PATTERN.match(key):
            onsite[match.group(1)] = parse_vector(value, key, 3)
            continue
        match = HOPPING_PATTERN.match(key)
        parts = parse_vector(value, key, 6)
        distance = int(match.group(2))
        if distance < 1:
            raise ConfigValueError(f"{key}: coupling range must be at least 1", key=key)
        hoppings[match.group(1)][distance] = tuple(complex(parts[2 * i], parts[2 * i + 1]) for i in range(3))

    return (
        ChainConfig(onsite=onsite["x"], hoppings=hoppings["x"]),
        ChainConfig(onsite=onsite["y"], hoppings=hoppings["y"]),
    )


@typechecked
def parse_config_text(text: str) -> RunConfig:
    """
    Build a RunConfig from configuration text; see `parse_config`.
    """
    sections: dict[str, dict[str, Any]] = {name: {} for name in ("model", "grid", "quench", "sweep", "tolerance")}
    sections["output"] = {}
    seed = 0
    generic: dict[str, str] = {}

    for line_number, key, value in read_assignments(text):
        if ONSITE_PATTERN.match(key) or HOPPING_PATTERN.match(key):
            generic[key] = value
            continue
        if key not in SCALAR_KEYS:
            raise UnknownConfigKeyError(
                f"Line {line_number}: unknown key {key!r}", key=key, line_number=line_number
            )

        section, name, convert = SCALAR_KEYS[key]
        try:
            converted = convert(value)
        except ValueError as e:
            raise ConfigValueError(f"{key}: cannot use {value!r} ({e})", key=key) from e

        if section == "run":
            seed = converted
        else:
            sections[section][name] = converted

    if generic:
        mixed = sorted(QWZ_KEYS & {f"model.{name}" for name in sections["model"]})
        if mixed:
            raise ConfigValueError(f"{mixed[0]}: QWZ parameters cannot be mixed with onsite/hop keys", key=mixed[0])
        sections["model"]["chain_x"], sections["model"]["chain_y"] = _generic_chains(generic)

    config = RunConfig(
        model=ModelConfig(**sections["model"]),
        grid=GridConfig(**sections["grid"]),
        quench=QuenchConfig(**sections["quench"]),
        sweep=SweepConfig(**sections["sweep"]),
        tolerance=ToleranceConfig(**sections["tolerance"]),
        output=OutputConfig(**sections["output"]),
        seed=seed,
    )
    logger.debug(f"Parsed configuration: {config}")
    return config


@typechecked
def parse_config(path: Path) -> RunConfig:
    """
    Read a flat `section.key = value` configuration file.

    Unknown keys are errors, so a typo never falls back to a default silently. An
    empty file gives the all-defaults configuration.

    Args:
        path: Path of the configuration file

    Returns:
        The validated run configuration

    Raises:
        ConfigFileNotFoundError: If the file cannot be read
        ConfigSyntaxError: For a malformed or duplicate line
        UnknownConfigKeyError: For a key outside the schema
        ConfigValueError: For a value that cannot be converted or is out of range

    Example:
        ```python
        config = parse_config(Path("fig1.cfg"))  # contains "model.mu1 = 2"
        model = config.model.build()
        ```
    """
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigFileNotFoundError(f"Cannot read configuration file {path}: {e}") from e

    logger.info(f"Loading configuration from {path}")
    return parse_config_text(text)


@typechecked
def apply_overrides(config: RunConfig, output_dir: Path | None = None, seed: int | None = None) -> RunConfig:
    """Apply the global command-line overrides of `output.dir` and `run.seed`."""
    if output_dir is not None:
        config = replace(config, output=OutputConfig(dir=output_dir))
    if seed is not None:
        config = replace(config, seed=seed)
    return config
