"""
Tests for the invariants module.

The plaquette Berry-flux method is the integer oracle; the quadrature and the
static linking number are checked against it.
"""

from collections.abc import Callable

import numpy as np
import pytest

from chernlink_app.constants import PAULI
from chernlink_app.exceptions import (
    ContractViolationError,
    GapClosingError,
    GridTooCoarseError,
    InconsistentInvariantsError,
)
from chernlink_app.geom3 import half_step_grid
from chernlink_app.invariants import (
    InvariantReport,
    berry_flux_chern,
    chern_lattice,
    chern_quadrature,
    compute_invariants,
    linking_static,
    lower_band_states,
)
from chernlink_app.model import SeparableModel, qwz_model, random_model, spectral_gap


@pytest.mark.parametrize("mu, expected", [(2.0, 1), (0.0, 0), (-3.0, -1)])
def test_chern_quadrature_qwz(qwz_factory: Callable[[float], SeparableModel], mu: float, expected: int) -> None:
    assert abs(chern_quadrature(qwz_factory(mu), 200) - expected) < 1e-4


@pytest.mark.parametrize(
    "mu, expected",
    [(-5.5, 0), (-3.0, -1), (-0.5, 0), (0.5, 0), (3.0, 1), (5.5, 0)],
)
def test_chern_lattice_phase_diagram(qwz_factory: Callable[[float], SeparableModel], mu: float, expected: int) -> None:
    result = chern_lattice(qwz_factory(mu), 50)
    assert result == expected
    assert isinstance(result, int)


def test_pipelines_agree_in_sign_at_topological_point(qwz: SeparableModel) -> None:
    """
    Test that all three pipelines report +1 for the mu = 2 reference point.
    """
    assert chern_lattice(qwz, 50) == 1
    assert round(chern_quadrature(qwz, 100)) == 1
    assert round(linking_static(qwz, 400)) == 1


@pytest.mark.parametrize("mu", [2.0, 0.0, -3.0])
def test_linking_static_matches_lattice(qwz_factory: Callable[[float], SeparableModel], mu: float) -> None:
    model = qwz_factory(mu)
    assert abs(linking_static(model, 400) - chern_lattice(model, 50)) < 0.05


def gapped_random_model(min_gap: float = 0.3) -> SeparableModel:
    """The first seeded random model whose half gap exceeds min_gap."""
    return next(
        model for model in map(random_model, range(100)) if spectral_gap(model, 64, refine=True) > min_gap
    )


@pytest.mark.slow
@pytest.mark.parametrize("source", ["qwz", "random"])
def test_chern_quadrature_error_shrinks_with_refinement(qwz: SeparableModel, source: str) -> None:
    """
    Test that the distance between the quadrature and the plaquette integer never grows
    as the quadrature grid is refined.
    """
    model = qwz if source == "qwz" else gapped_random_model()
    reference = chern_lattice(model, 80)

    errors = [abs(chern_quadrature(model, grid) - reference) for grid in (50, 100, 200, 400)]

    for coarse, fine in zip(errors, errors[1:]):
        assert fine <= coarse + 1e-9
    assert errors[-1] < 1e-2


def test_potential_split_between_chains_is_irrelevant() -> None:
    """
    Test that only mu = mu1 - mu2 matters: moving both loops together keeps every invariant.
    """
    reference = qwz_model(3.0, 1.0, 3.0, 2.0, 2.0, 0.0)
    shifted = qwz_model(3.0, 1.0, 3.0, 2.0, 3.5, 1.5)

    assert chern_lattice(shifted, 50) == chern_lattice(reference, 50)
    assert abs(chern_quadrature(shifted, 64) - chern_quadrature(reference, 64)) < 1e-12
    assert abs(linking_static(shifted, 200) - linking_static(reference, 200)) < 1e-9


def test_lower_band_states_are_lower_eigenvectors(qwz: SeparableModel) -> None:
    grid = 16
    states = lower_band_states(qwz, grid)

    ks = half_step_grid(grid)
    r = qwz.sample(ks, ks)
    hamiltonians = np.einsum("xya,aij->xyij", r, PAULI)
    applied = np.einsum("xyij,xyj->xyi", hamiltonians, states)
    expected = -np.linalg.norm(r, axis=-1)[..., None] * states

    assert states.shape == (grid, grid, 2)
    assert np.allclose(np.linalg.norm(states, axis=-1), 1.0, atol=1e-12)
    assert np.abs(applied - expected).max() < 1e-12


def test_berry_flux_chern_is_gauge_invariant(qwz_factory: Callable[[float], SeparableModel]) -> None:
    states = lower_band_states(qwz_factory(-3.0), 50)
    phases = np.exp(1j * np.random.default_rng(11).uniform(0, 2 * np.pi, size=states.shape[:2]))

    assert berry_flux_chern(states * phases[..., None]) == berry_flux_chern(states) == -1


def test_berry_flux_chern_trivial_states() -> None:
    states = np.zeros((16, 16, 2), dtype=complex)
    states[..., 0] = 1.0
    assert berry_flux_chern(states) == 0


def test_berry_flux_chern_orthogonal_neighbours() -> None:
    states = np.zeros((16, 16, 2), dtype=complex)
    states[..., 0] = 1.0
    states[5, 7] = [0.0, 1.0]

    with pytest.raises(GridTooCoarseError) as exc_info:
        berry_flux_chern(states)
    assert exc_info.value.status == "grid_too_coarse"


def test_berry_flux_chern_rejects_non_square_grid() -> None:
    with pytest.raises(ContractViolationError):
        berry_flux_chern(np.ones((4, 5, 2), dtype=complex))


def test_gap_closing_on_grid_point() -> None:
    """
    Test that a model with r1 = r2 fails on the diagonal kx = ky of the grid.
    """
    chain = random_model(2).chain1
    model = SeparableModel(chain1=chain, chain2=chain)

    with pytest.raises(GapClosingError) as exc_info:
        chern_quadrature(model, 32)
    assert exc_info.value.kx == exc_info.value.ky

    with pytest.raises(GapClosingError):
        chern_lattice(model, 32)


def test_grid_contract(qwz: SeparableModel) -> None:
    with pytest.raises(ContractViolationError):
        chern_quadrature(qwz, 8)
    with pytest.raises(ContractViolationError):
        chern_lattice(qwz, 4)


def test_compute_invariants_report(qwz: SeparableModel) -> None:
    report = compute_invariants(qwz, quadrature_grid=100, lattice_grid=50, linking_samples=400)

    assert report.chern_lattice == 1
    assert report.grid_used == 100
    assert abs(report.gap - np.sqrt(2.0 / 3.0)) < 1e-6
    assert report.is_consistent()


def test_compute_invariants_rejects_critical_point(qwz_factory: Callable[[float], SeparableModel]) -> None:
    """
    Test that the gap closing at mu = 1, which falls between grid points, is still found.
    """
    with pytest.raises(GapClosingError) as exc_info:
        compute_invariants(qwz_factory(1.0), quadrature_grid=64, lattice_grid=32, linking_samples=200)

    assert exc_info.value.status == "gap_closing"
    assert abs(exc_info.value.kx - np.pi) < 1e-2


def test_compute_invariants_inconsistency(qwz: SeparableModel, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr("chernlink_app.invariants.linking_static", lambda model, samples, eps_touch: 0.5)

    with pytest.raises(InconsistentInvariantsError):
        compute_invariants(qwz, quadrature_grid=64, lattice_grid=32, linking_samples=200)

    report = compute_invariants(qwz, quadrature_grid=64, lattice_grid=32, linking_samples=200, check_consistency=False)
    assert report.linking_static == 0.5
    assert not report.is_consistent()


@pytest.mark.parametrize(
    "quadrature, linking, consistent",
    [
        (1.0, 1.0, True),
        (0.95, 1.04, True),
        (0.85, 1.0, False),
        (1.0, 0.0, False),
    ],
)
def test_invariant_report_consistency(quadrature: float, linking: float, consistent: bool) -> None:
    report = InvariantReport(
        chern_quadrature=quadrature, chern_lattice=1, linking_static=linking, grid_used=64, gap=0.5
    )
    assert report.is_consistent() is consistent
