from collections.abc import Callable
from pathlib import Path
from unittest.mock import MagicMock

import numpy as np
import pytest
from rich.console import Console
from typer.testing import CliRunner

from chernlink_app.cli import SweepProgress
from chernlink_app.constants import QWZ_DEFAULTS
from chernlink_app.geom3 import LoopSamples
from chernlink_app.model import SeparableModel, qwz_model


@pytest.fixture
def qwz_factory() -> Callable[[float], SeparableModel]:
    """
    Returns a factory for the extended QWZ model at a given potential.

    The hopping parameters are lambda_x = rho_x = 3, lambda_y = 1 and rho_y = 2; the
    potential mu is carried by the x chain (mu1 = mu, mu2 = 0). With these values the
    Chern number is 0 for |mu| < 1 or |mu| > 5, +1 for 1 < mu < 5 and -1 for -5 < mu < -1.

    Usage:
        def test_something(qwz_factory):
            model = qwz_factory(-3.0)
    """

    def build(mu: float) -> SeparableModel:
        return qwz_model(
            QWZ_DEFAULTS["lambda_x"],
            QWZ_DEFAULTS["lambda_y"],
            QWZ_DEFAULTS["rho_x"],
            QWZ_DEFAULTS["rho_y"],
            mu,
            0.0,
        )

    return build


@pytest.fixture
def qwz(qwz_factory: Callable[[float], SeparableModel]) -> SeparableModel:
    """
    The extended QWZ model at mu = 2, a topological point with Chern number +1.
    """
    return qwz_factory(2.0)


@pytest.fixture
def hopf_link() -> tuple[LoopSamples, LoopSamples]:
    """
    A Hopf link sampled with 400 points per loop.

    The first loop is the unit circle in the xy-plane around the origin, the second
    the unit circle in the xz-plane around (1, 0, 0). Every point of one circle is at
    distance exactly 1 from the other circle.
    """

    def first(ks: np.ndarray) -> np.ndarray:
        return np.stack([np.cos(ks), np.sin(ks), np.zeros_like(ks)], axis=1)

    def second(ks: np.ndarray) -> np.ndarray:
        return np.stack([1.0 + np.cos(ks), np.zeros_like(ks), np.sin(ks)], axis=1)

    return LoopSamples.from_function(first, 400), LoopSamples.from_function(second, 400)


@pytest.fixture
def config_file(tmp_path: Path) -> Callable[[str], Path]:
    """
    Returns a helper that writes configuration text to a temporary file.

    Usage:
        def test_something(config_file):
            path = config_file("model.mu1 = 2\\n")
    """

    def write(text: str) -> Path:
        path = tmp_path / "run.cfg"
        path.write_text(text, encoding="utf-8")
        return path

    return write


@pytest.fixture
def fast_config_text() -> str:
    """
    Configuration text with reduced grids so that command tests run in seconds.

    The QWZ parameters are those of the mu = 2 topological point.
    """
    return "\n".join(
        [
            "# reduced grids for tests",
            "model.mu1 = 2",
            "grid.quadrature = 64",
            "grid.lattice = 32",
            "grid.linking = 200",
            "grid.verify = 16",
            "quench.n = 50",
            "quench.t_max = 50",
            "quench.t_points = 8",
            "sweep.concurrency = 2",
            "",
        ]
    )


@pytest.fixture
def mock_console() -> MagicMock:
    """
    Provides a mock console for testing UI output.

    Returns:
        MagicMock: A mock Rich Console object for capturing UI output
    """
    return MagicMock(spec=Console)


@pytest.fixture
def sweep_progress(mock_console: MagicMock) -> SweepProgress:
    """
    Creates a SweepProgress for five rows with mocked rich components.

    Args:
        mock_console: The mocked console from the mock_console fixture

    Returns:
        SweepProgress: A configured progress tracker with mocked components
    """
    progress = SweepProgress(total=5, verbose=True)
    progress.console = mock_console
    progress.progress = MagicMock()
    progress.sweep_task_id = 1
    return progress


@pytest.fixture
def runner() -> CliRunner:
    """
    Create a CLI runner for the Typer app.

    Returns:
        CliRunner: A Typer CLI runner for testing CLI commands
    """
    return CliRunner()
