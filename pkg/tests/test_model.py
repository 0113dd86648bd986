"""
Tests for the model module: Bloch vectors, the QWZ preset, the real-space lattice,
chain extraction and the separability round trip.
"""

from collections.abc import Callable

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from typeguard import TypeCheckError

from chernlink_app.exceptions import ContractViolationError, LatticeSizeError
from chernlink_app.geom3 import half_step_grid
from chernlink_app.model import (
    ChainSpec,
    Hopping,
    LatticeMatrix,
    SeparableModel,
    bloch_vector_1d,
    bloch_vector_2d,
    build_real_space,
    chain_spectrum_deviation,
    corrupt_bond,
    extract_chains,
    lattice_momenta,
    locate_gap_minimum,
    qwz_critical_mus,
    qwz_model,
    random_model,
    spectral_gap,
    verify_separability,
)


def qwz_formula(kx: np.ndarray, ky: np.ndarray, mu: float) -> np.ndarray:
    """r(kx, ky) of the extended QWZ model with lambda_x = rho_x = 3, lambda_y = 1, rho_y = 2."""
    return np.stack(
        np.broadcast_arrays(3.0 * np.sin(kx), 1.0 * np.sin(ky), mu + 3.0 * np.cos(kx) + 2.0 * np.cos(ky)), axis=-1
    )


def chain_bloch_matrices(chain_matrix: LatticeMatrix) -> np.ndarray:
    """Bloch Hamiltonians h(k) = sum_c H[0, c] e^{ikc} of a chain, shape (N, 2, 2)."""
    cells = chain_matrix.cells
    blocks = chain_matrix.to_dense()[0:2].reshape(2, cells, 2)
    phases = np.exp(1j * np.outer(lattice_momenta(cells), np.arange(cells)))
    return np.einsum("kc,scT->ksT", phases, blocks)


def pauli_form(vectors: np.ndarray) -> np.ndarray:
    from chernlink_app.constants import PAULI

    return np.einsum("...a,aij->...ij", vectors, PAULI)


@pytest.mark.parametrize(
    "chain_index, k, expected",
    [
        (1, 0.0, [0.0, 0.0, 5.0]),
        (2, np.pi / 2, [0.0, -1.0, 0.0]),
    ],
)
def test_bloch_vector_1d_qwz(qwz: SeparableModel, chain_index: int, k: float, expected: list) -> None:
    chain = qwz.chain1 if chain_index == 1 else qwz.chain2
    assert np.allclose(bloch_vector_1d(chain, k), expected, atol=1e-14)


def test_bloch_vector_1d_single_hopping() -> None:
    chain = ChainSpec(onsite=np.zeros(3), hoppings=(Hopping(1, np.array([0.5, 0.0, 0.0])),))
    for k in np.linspace(0, 2 * np.pi, 7):
        assert np.allclose(bloch_vector_1d(chain, float(k)), [np.cos(k), 0.0, 0.0], atol=1e-14)


@pytest.mark.parametrize(
    "kx, ky, expected",
    [
        (0.0, 0.0, [0.0, 0.0, 7.0]),
        (np.pi, np.pi, [0.0, 0.0, -3.0]),
        (np.pi / 2, np.pi / 2, [3.0, 1.0, 2.0]),
    ],
)
def test_bloch_vector_2d_qwz(qwz: SeparableModel, kx: float, ky: float, expected: list) -> None:
    assert np.allclose(bloch_vector_2d(qwz, kx, ky), expected, atol=1e-14)


def test_bloch_vector_2d_negative_mu(qwz_factory: Callable[[float], SeparableModel]) -> None:
    assert np.allclose(bloch_vector_2d(qwz_factory(-3.0), 0.0, 0.0), [0.0, 0.0, 2.0], atol=1e-14)


def test_bloch_vector_type_checking(qwz: SeparableModel) -> None:
    with pytest.raises(TypeCheckError):
        bloch_vector_2d(qwz, "0", 0.0)  # type: ignore


def test_qwz_chains_reproduce_formulas() -> None:
    model = qwz_model(3.0, 1.0, 3.0, 2.0, 2.0, 0.0)
    ks = np.linspace(0, 2 * np.pi, 64, endpoint=False)

    r1 = np.stack([3.0 * np.sin(ks), np.zeros_like(ks), 2.0 + 3.0 * np.cos(ks)], axis=1)
    r2 = np.stack([np.zeros_like(ks), -np.sin(ks), -2.0 * np.cos(ks)], axis=1)
    assert np.abs(model.chain1.sample(ks) - r1).max() < 1e-14
    assert np.abs(model.chain2.sample(ks) - r2).max() < 1e-14


def test_qwz_model_matches_two_dimensional_formula() -> None:
    model = qwz_model(3.0, 1.0, 3.0, 2.0, 1.5, -0.5)
    ks = np.linspace(0, 2 * np.pi, 32, endpoint=False)
    expected = qwz_formula(ks[:, None], ks[None, :], 2.0)
    assert np.abs(model.sample(ks, ks) - expected).max() < 1e-14


def test_qwz_critical_mus() -> None:
    assert qwz_critical_mus(3.0, 2.0) == (-5.0, -1.0, 1.0, 5.0)
    assert qwz_critical_mus(1.0, 1.0) == (-2.0, 0.0, 2.0)


@pytest.mark.parametrize(
    "hoppings, n_max",
    [
        ((Hopping(1, np.ones(3)), Hopping(1, np.ones(3))), 8),
        ((Hopping(9, np.ones(3)),), 8),
        ((Hopping(0, np.ones(3)),), 8),
        ((Hopping(3, np.ones(3)),), 2),
    ],
)
def test_chain_spec_rejects_invalid_ranges(hoppings: tuple, n_max: int) -> None:
    with pytest.raises(ContractViolationError):
        ChainSpec(onsite=np.zeros(3), hoppings=hoppings, n_max=n_max)


def test_chain_spec_rejects_malformed_vectors() -> None:
    with pytest.raises(ContractViolationError):
        Hopping(1, np.ones(2))
    with pytest.raises(ContractViolationError):
        ChainSpec(onsite=np.array([0.0, np.inf, 0.0]))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000))
def test_random_chain_reality_and_periodicity(seed: int) -> None:
    """
    Test that random chains give real, 2pi-periodic Bloch vectors.

    `sample` asserts reality internally; the imaginary parts of the raw sum are also
    checked here against the tighter bound.
    """
    model = random_model(seed, ranges=3)
    ks = np.random.default_rng(seed).uniform(-10.0, 10.0, size=256)

    for chain in (model.chain1, model.chain2):
        raw = np.broadcast_to(chain.onsite, ks.shape + (3,)).astype(complex)
        for hop in chain.hoppings:
            term = np.exp(1j * hop.distance * ks)[:, None] * hop.vector
            raw = raw + term + np.conj(term)
        assert np.abs(raw.imag).max() < 1e-14
        assert np.abs(chain.sample(ks + 2 * np.pi) - chain.sample(ks)).max() < 1e-12


def test_chain_derivative_matches_finite_difference() -> None:
    chain = random_model(3).chain1
    ks = np.linspace(0.1, 6.0, 25)
    step = 1e-6
    numeric = (chain.sample(ks + step) - chain.sample(ks - step)) / (2 * step)
    assert np.abs(chain.derivative(ks) - numeric).max() < 1e-7


def test_random_model_is_seeded() -> None:
    first = random_model(7)
    second = random_model(7)
    ks = half_step_grid(16)
    assert np.array_equal(first.sample(ks, ks), second.sample(ks, ks))
    assert first.max_range == 3


def test_build_real_space_is_hermitian(qwz: SeparableModel) -> None:
    lattice = build_real_space(qwz, 8)
    assert lattice.dimension == 2 * 8 * 8
    assert lattice.hermiticity_residual() < 1e-12


def test_build_real_space_couples_along_one_axis(qwz: SeparableModel) -> None:
    """
    Test that every block joins unit cells that differ in exactly one coordinate.
    """
    cells = 8
    for row, col, _ in build_real_space(qwz, cells).triplets():
        first = divmod(row // 2, cells)
        second = divmod(col // 2, cells)
        if first != second:
            assert (first[0] == second[0]) != (first[1] == second[1])


def test_real_space_spectrum_matches_bloch_spectrum(qwz: SeparableModel) -> None:
    cells = 8
    momenta = lattice_momenta(cells)
    norms = np.linalg.norm(qwz.sample(momenta, momenta), axis=-1).ravel()
    expected = np.sort(np.concatenate([norms, -norms]))

    assert np.abs(build_real_space(qwz, cells).eigenvalues() - expected).max() < 1e-10


def test_triplets_are_ordered(qwz: SeparableModel) -> None:
    triplets = build_real_space(qwz, 5).triplets()
    keys = [(row, col) for row, col, _ in triplets]
    assert keys == sorted(keys)


def test_lattice_size_precondition(qwz: SeparableModel) -> None:
    with pytest.raises(LatticeSizeError):
        build_real_space(qwz, 2)
    with pytest.raises(LatticeSizeError):
        extract_chains(random_model(1, ranges=3), 6)

    assert build_real_space(qwz, 3).cells == 3


def test_dense_conversion_is_limited(qwz: SeparableModel) -> None:
    with pytest.raises(ContractViolationError):
        build_real_space(qwz, 33).to_dense()


@pytest.mark.parametrize("chain_index", [1, 2])
def test_extract_chains_bloch_decomposition(qwz: SeparableModel, chain_index: int) -> None:
    """
    Test that both extracted chains carry the Bloch vectors of their chain.

    The second chain is assembled from the lattice's y-couplings (stored with a minus
    sign) and an overall minus sign, which together give back r2 itself.
    """
    cells = 16
    first, second = extract_chains(qwz, cells)
    chain_matrix, chain = (first, qwz.chain1) if chain_index == 1 else (second, qwz.chain2)

    expected = pauli_form(chain.sample(lattice_momenta(cells)))
    assert chain_matrix.dimension == 2 * cells
    assert chain_matrix.hermiticity_residual() < 1e-12
    assert np.abs(chain_bloch_matrices(chain_matrix) - expected).max() < 1e-12


def test_extract_chains_spectrum(qwz: SeparableModel) -> None:
    first, second = extract_chains(qwz, 16)
    assert chain_spectrum_deviation(first, qwz.chain1) < 1e-10
    assert chain_spectrum_deviation(second, qwz.chain2) < 1e-10


def test_verify_separability_qwz(qwz: SeparableModel) -> None:
    assert verify_separability(qwz, 10) <= 1e-12


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_verify_separability_random_model(seed: int) -> None:
    assert verify_separability(random_model(seed, ranges=3), 12) <= 1e-12


def test_corrupted_bond_is_detected(qwz: SeparableModel) -> None:
    from chernlink_app.model import separability_deviation

    corrupted = corrupt_bond(build_real_space(qwz, 10), 0.1, seed=4)
    assert corrupted.hermiticity_residual() < 1e-12
    assert separability_deviation(corrupted, qwz) >= 0.01


def test_spectral_gap_positive_for_topological_point(qwz: SeparableModel) -> None:
    assert spectral_gap(qwz, 64) > 0.5


def test_spectral_gap_closes_at_phase_boundary(qwz_factory: Callable[[float], SeparableModel]) -> None:
    """
    Test that the grid gap at mu = 1 shrinks under refinement and that polishing finds the closing.
    """
    critical = qwz_factory(1.0)
    gaps = [spectral_gap(critical, grid) for grid in (32, 64, 128, 256)]

    assert all(later < earlier for earlier, later in zip(gaps, gaps[1:]))
    assert spectral_gap(critical, 32, refine=True) < 1e-3


def test_spectral_gap_identical_chains() -> None:
    chain = random_model(5).chain1
    model = SeparableModel(chain1=chain, chain2=chain)

    gap, kx, ky = locate_gap_minimum(model, 32)
    assert gap == 0.0
    assert kx == ky


def test_spectral_gap_minimum_grid(qwz: SeparableModel) -> None:
    with pytest.raises(ContractViolationError):
        spectral_gap(qwz, 8)
