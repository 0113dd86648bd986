"""
Tests for the configuration parser.

The parser reads flat `section.key = value` files into a validated RunConfig. These
tests cover:
- Defaults for an empty file and conversion of every value type
- Syntax errors with their line numbers
- Unknown keys and out-of-range values, reported with the offending key
- Generic chains given through onsite/hop keys
- The command-line overrides of the output directory and the seed
"""

from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from chernlink_app.config import RunConfig
from chernlink_app.constants import DEFAULT_OUTPUT_DIR, DEFAULT_T_MAX
from chernlink_app.exceptions import (
    ConfigError,
    ConfigFileNotFoundError,
    ConfigSyntaxError,
    ConfigValueError,
    UnknownConfigKeyError,
)
from chernlink_app.model import bloch_vector_2d
from chernlink_app.parser import apply_overrides, parse_config, parse_config_text, parse_vector, read_assignments


def test_empty_file_gives_defaults(config_file: Callable[[str], Path]) -> None:
    """
    Test that an empty configuration file yields the documented defaults.
    """
    config = parse_config(config_file(""))

    assert config.model.mu1 == 2.0
    assert config.model.lambda_x == 3.0
    assert not config.model.is_generic
    assert config.grid.quadrature == 200
    assert config.grid.lattice == 50
    assert config.quench.t_max == DEFAULT_T_MAX
    assert config.quench.mode == "analytic"
    assert config.sweep.include_dynamic is True
    assert config.output.dir == Path(DEFAULT_OUTPUT_DIR)
    assert config.seed == 0


def test_parse_all_value_types() -> None:
    text = "\n".join(
        [
            "model.mu1 = -3.5   # trailing comment",
            "model.n_max = 4",
            "quench.mode = Dynamics",
            "quench.snapshots = 5, 50,200",
            "sweep.include_dynamic = no",
            "output.dir = out/run1",
            "run.seed = 42",
        ]
    )
    config = parse_config_text(text)

    assert config.model.mu1 == -3.5
    assert config.model.n_max == 4
    assert config.quench.mode == "dynamics"
    assert config.quench.snapshots == (5.0, 50.0, 200.0)
    assert config.sweep.include_dynamic is False
    assert config.output.dir == Path("out/run1")
    assert config.seed == 42


@pytest.mark.parametrize(
    "text, line_number",
    [
        ("model.mu1 = 2\nthis line has no equals sign\n", 2),
        ("\n\n# comment\nModel.mu1 = 2\n", 4),
        ("model.mu1 =\n", 1),
        ("grid.lattice = 40\nmodel.mu1 = 1.5\ngrid.lattice = 60\n", 3),
        ("mu1 = 2\n", 1),
    ],
)
def test_syntax_errors_report_line(text: str, line_number: int) -> None:
    with pytest.raises(ConfigSyntaxError) as exc_info:
        parse_config_text(text)

    assert exc_info.value.line_number == line_number
    assert f"Line {line_number}" in str(exc_info.value)


def test_read_assignments_skips_comments_and_blank_lines() -> None:
    text = "# header\n\nmodel.mu1 = 2 # potential\n   \ngrid.lattice=32\n"
    assert read_assignments(text) == [(3, "model.mu1", "2"), (5, "grid.lattice", "32")]


def test_unknown_key() -> None:
    with pytest.raises(UnknownConfigKeyError) as exc_info:
        parse_config_text("model.mu1 = 2\nmodel.mu = 2\n")

    assert exc_info.value.key == "model.mu"
    assert exc_info.value.line_number == 2


@pytest.mark.parametrize(
    "text, key",
    [
        ("grid.quadrature = 8", "grid.quadrature"),
        ("grid.lattice = many", "grid.lattice"),
        ("grid.verify = 8", "grid.verify"),
        ("quench.dt = -0.01", "quench.dt"),
        ("quench.dt = nan", "quench.dt"),
        ("quench.mode = euler", "quench.mode"),
        ("quench.t_max = 50\nquench.snapshots = 10, 60", "quench.snapshots"),
        ("sweep.mu_step = 0", "sweep.mu_step"),
        ("sweep.mu_min = 2\nsweep.mu_max = 1", "sweep.mu_max"),
        ("sweep.include_dynamic = maybe", "sweep.include_dynamic"),
        ("sweep.concurrency = 0", "sweep.concurrency"),
        ("tolerance.eps_n = 0", "tolerance.eps_n"),
        ("run.seed = 1.5", "run.seed"),
    ],
)
def test_invalid_values_name_their_key(text: str, key: str) -> None:
    with pytest.raises(ConfigValueError) as exc_info:
        parse_config_text(text)

    assert exc_info.value.key == key
    assert str(exc_info.value).startswith(key)


def test_config_errors_share_a_base_class(tmp_path: Path) -> None:
    for error in (ConfigFileNotFoundError, ConfigSyntaxError, ConfigValueError, UnknownConfigKeyError):
        assert issubclass(error, ConfigError)

    with pytest.raises(ConfigFileNotFoundError):
        parse_config(tmp_path / "missing.cfg")


def test_generic_chains_reproduce_qwz() -> None:
    """
    Test that onsite/hop keys describing the QWZ chains give the same Bloch vectors.
    """
    text = "\n".join(
        [
            "onsite.x = 0, 0, 2",
            "hop.x.1 = 0,-1.5, 0,0, 1.5,0",
            "onsite.y = 0, 0, 0",
            "hop.y.1 = 0,0, 0,0.5, -1,0",
        ]
    )
    config = parse_config_text(text)
    generic = config.model.build()
    preset = RunConfig().model.build()

    assert config.model.is_generic
    for kx, ky in [(0.0, 0.0), (0.7, 2.1), (np.pi / 2, np.pi / 2)]:
        assert np.allclose(bloch_vector_2d(generic, kx, ky), bloch_vector_2d(preset, kx, ky), atol=1e-14)


def test_generic_chain_defaults_to_zero_onsite() -> None:
    config = parse_config_text("hop.x.2 = 0.5,0, 0,0, 0,0\nhop.y.1 = 0,0, 0,0, 0.5,0\n")
    model = config.model.build()

    assert np.array_equal(model.chain1.onsite, np.zeros(3))
    assert model.chain1.max_range == 2


@pytest.mark.parametrize(
    "text, key",
    [
        ("onsite.x = 1, 2", "onsite.x"),
        ("hop.x.1 = 1, 2, 3", "hop.x.1"),
        ("hop.x.0 = 0,0, 0,0, 1,0", "hop.x.0"),
        ("model.mu1 = 2\nonsite.x = 0, 0, 1", "model.mu1"),
    ],
)
def test_generic_chain_errors(text: str, key: str) -> None:
    with pytest.raises(ConfigValueError) as exc_info:
        parse_config_text(text)
    assert exc_info.value.key == key


def test_generic_hopping_beyond_range_cap() -> None:
    config = parse_config_text("model.n_max = 2\nhop.x.3 = 1,0, 0,0, 0,0\n")
    with pytest.raises(ConfigValueError) as exc_info:
        config.model.build()
    assert exc_info.value.key == "hop.x"


@pytest.mark.parametrize(
    "text, expected",
    [
        ("0, 0, 1.5", (0.0, 0.0, 1.5)),
        ("-1e-3,2,3", (-0.001, 2.0, 3.0)),
    ],
)
def test_parse_vector(text: str, expected: tuple[float, ...]) -> None:
    assert parse_vector(text, "onsite.x", 3) == expected


def test_build_overrides_potential() -> None:
    model = parse_config_text("model.mu2 = 1").model.build(mu1=4.0)
    assert np.allclose(bloch_vector_2d(model, 0.0, 0.0), [0.0, 0.0, 8.0])


def test_apply_overrides() -> None:
    config = parse_config_text("run.seed = 3\noutput.dir = a")

    assert apply_overrides(config) is config
    overridden = apply_overrides(config, output_dir=Path("b"), seed=9)
    assert overridden.output.dir == Path("b")
    assert overridden.seed == 9
    assert overridden.model is config.model
