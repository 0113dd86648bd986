"""
Separable two-band models r(kx, ky) = r1(kx) - r2(ky).

A model is a pair of one-dimensional chains. Each chain is an on-site vector plus
a finite table of complex coupling vectors d_n entering as e^{ikn} d_n + c.c.
This module evaluates the Bloch vectors, provides the extended QWZ preset,
assembles the periodic real-space lattices (the 2D model and its two chains)
and checks that Fourier transforming the lattice gives back r1 - r2.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import minimize
from typeguard import typechecked

from .constants import DEFAULT_N_MAX, DENSE_CELLS_LIMIT, MIN_GRID, PAULI, REALITY_TOLERANCE
from .exceptions import ContractViolationError, LatticeSizeError
from .geom3 import LoopSamples, half_step_grid

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Hopping:
    """
    One coupling of a chain.

    Attributes:
        distance: Range n of the coupling (n >= 1)
        vector: Complex 3-vector d_n
    """

    distance: int
    vector: np.ndarray

    def __post_init__(self) -> None:
        vector = np.asarray(self.vector, dtype=complex)
        if vector.shape != (3,):
            raise ContractViolationError(f"A coupling vector has three components, got shape {vector.shape}")
        if not np.all(np.isfinite(vector)):
            raise ContractViolationError("Coupling vectors must be finite")
        object.__setattr__(self, "vector", vector)


@dataclass(frozen=True, eq=False)
class ChainSpec:
    """
    A two-band chain r(k) = onsite + sum_n (e^{ikn} d_n + c.c.).

    Attributes:
        onsite: Real 3-vector, the k-independent part of r(k)
        hoppings: Couplings with distinct ranges 1 <= n <= n_max
        n_max: Cap on the coupling range
    """

    onsite: np.ndarray
    hoppings: tuple[Hopping, ...] = ()
    n_max: int = DEFAULT_N_MAX

    def __post_init__(self) -> None:
        onsite = np.asarray(self.onsite, dtype=float)
        if onsite.shape != (3,) or not np.all(np.isfinite(onsite)):
            raise ContractViolationError(f"The on-site term must be a finite real 3-vector, got {self.onsite!r}")
        object.__setattr__(self, "onsite", onsite)
        object.__setattr__(self, "hoppings", tuple(sorted(self.hoppings, key=lambda hop: hop.distance)))

        distances = [hop.distance for hop in self.hoppings]
        if len(set(distances)) != len(distances):
            raise ContractViolationError(f"Coupling ranges must be distinct, got {distances}")
        for distance in distances:
            if not 1 <= distance <= self.n_max:
                raise ContractViolationError(f"Coupling range {distance} outside [1, {self.n_max}]")

    @property
    def max_range(self) -> int:
        """Largest coupling range of the chain, 0 for a chain without couplings."""
        return max((hop.distance for hop in self.hoppings), default=0)

    def sample(self, ks: np.ndarray) -> np.ndarray:
        """
        Bloch vectors at an array of momenta.

        Args:
            ks: Momenta, any shape

        Returns:
            Real array of shape ks.shape + (3,)

        Raises:
            ContractViolationError: If the generated vector is not real within tolerance
        """
        ks = np.asarray(ks, dtype=float)
        total = np.broadcast_to(self.onsite, ks.shape + (3,)).astype(complex)
        for hop in self.hoppings:
            term = np.exp(1j * hop.distance * ks)[..., None] * hop.vector
            total = total + term + np.conj(term)

        if np.abs(total.imag).max(initial=0.0) > REALITY_TOLERANCE:
            raise ContractViolationError("Generated Bloch vector is not real")
        return total.real.copy()

    def derivative(self, ks: np.ndarray) -> np.ndarray:
        """Analytic derivative dr/dk at an array of momenta, same shape as `sample`."""
        ks = np.asarray(ks, dtype=float)
        total = np.zeros(ks.shape + (3,))
        for hop in self.hoppings:
            term = 1j * hop.distance * np.exp(1j * hop.distance * ks)[..., None] * hop.vector
            total = total + 2.0 * term.real
        return total

    def loop(self, samples: int) -> LoopSamples:
        """The closed curve traced by r(k) on the half-step grid."""
        return LoopSamples.from_function(self.sample, samples)


@dataclass(frozen=True, eq=False)
class SeparableModel:
    """
    A 2D two-band model with r(kx, ky) = r1(kx) - r2(ky).

    Attributes:
        chain1: Chain along x
        chain2: Chain along y
    """

    chain1: ChainSpec
    chain2: ChainSpec

    @property
    def max_range(self) -> int:
        return max(self.chain1.max_range, self.chain2.max_range)

    def sample(self, kxs: np.ndarray, kys: np.ndarray) -> np.ndarray:
        """Bloch vectors on the outer-product grid, shape (len(kxs), len(kys), 3)."""
        return self.chain1.sample(kxs)[:, None, :] - self.chain2.sample(kys)[None, :, :]


@dataclass(frozen=True, eq=False)
class LatticeMatrix:
    """
    A periodic real-space Hamiltonian in sparse storage.

    The basis index of sublattice s in the cell with coordinates (l, j) is
    2 (l N + j) + s for the 2D lattice and 2 l + s for a chain.

    Attributes:
        matrix: Sparse CSR matrix of the Hamiltonian
        cells: Number of unit cells per side N
        dimensions: 1 for a chain, 2 for the square lattice
    """

    matrix: sparse.csr_matrix
    cells: int
    dimensions: int = field(default=2)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def triplets(self) -> list[tuple[int, int, complex]]:
        """Nonzero entries as (row, col, value), ordered by row then column."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [(int(coo.row[i]), int(coo.col[i]), complex(coo.data[i])) for i in order]

    def to_dense(self) -> np.ndarray:
        if self.cells > DENSE_CELLS_LIMIT:
            raise ContractViolationError(
                f"Dense conversion is limited to {DENSE_CELLS_LIMIT} cells per side, got {self.cells}"
            )
        return self.matrix.toarray()

    def hermiticity_residual(self) -> float:
        """Largest entry of |H - H^dagger|."""
        difference = self.matrix - self.matrix.conj().T
        return float(abs(difference).max()) if difference.nnz else 0.0

    def eigenvalues(self) -> np.ndarray:
        """Sorted spectrum by dense diagonalisation."""
        return np.linalg.eigvalsh(self.to_dense())


def _pauli_block(vector: np.ndarray) -> np.ndarray:
    """The 2x2 matrix d . sigma for a (possibly complex) 3-vector d."""
    return np.einsum("a,aij->ij", vector, PAULI)


class _TripletBuilder:
    """Accumulates 2x2 blocks between unit cells in a deterministic order."""

    def __init__(self, cells_total: int):
        self.cells_total = cells_total
        self.rows: list[np.ndarray] = []
        self.cols: list[np.ndarray] = []
        self.values: list[np.ndarray] = []

    def add_block(self, source: np.ndarray, target: np.ndarray, block: np.ndarray) -> None:
        for s in range(2):
            for t in range(2):
                if block[s, t] == 0:
                    continue
                self.rows.append(2 * source + s)
                self.cols.append(2 * target + t)
                self.values.append(np.full(source.shape, block[s, t], dtype=complex))

    def add_bond(self, source: np.ndarray, target: np.ndarray, block: np.ndarray) -> None:
        """Add the coupling block and its Hermitian conjugate."""
        self.add_block(source, target, block)
        self.add_block(target, source, block.conj().T)

    def build(self) -> sparse.csr_matrix:
        size = 2 * self.cells_total
        if not self.rows:
            return sparse.csr_matrix((size, size), dtype=complex)
        matrix = sparse.coo_matrix(
            (np.concatenate(self.values), (np.concatenate(self.rows), np.concatenate(self.cols))),
            shape=(size, size),
        )
        return matrix.tocsr()


@typechecked
def bloch_vector_1d(chain: ChainSpec, k: float) -> np.ndarray:
    """
    Bloch vector r(k) of a chain.

    Args:
        chain: The chain
        k: Momentum in radians

    Returns:
        The real 3-vector onsite + sum_n (e^{ikn} d_n + c.c.), 2pi-periodic in k
    """
    return chain.sample(np.array(k))


@typechecked
def bloch_vector_2d(model: SeparableModel, kx: float, ky: float) -> np.ndarray:
    """
    Bloch vector r(kx, ky) = r1(kx) - r2(ky) of a separable model.

    Example:
        ```python
        model = qwz_model(3.0, 1.0, 3.0, 2.0, 2.0, 0.0)
        bloch_vector_2d(model, 0.0, 0.0)
        # array([0., 0., 7.])
        ```
    """
    return bloch_vector_1d(model.chain1, kx) - bloch_vector_1d(model.chain2, ky)


@typechecked
def qwz_model(
    lambda_x: float,
    lambda_y: float,
    rho_x: float,
    rho_y: float,
    mu1: float,
    mu2: float,
    n_max: int = DEFAULT_N_MAX,
) -> SeparableModel:
    """
    The extended Qi-Wu-Zhang model split into two chains.

    r1(kx) = (lambda_x sin kx, 0, mu1 + rho_x cos kx) and
    r2(ky) = (0, -lambda_y sin ky, mu2 - rho_y cos ky), so that r1 - r2 is
    (lambda_x sin kx, lambda_y sin ky, mu + rho_x cos kx + rho_y cos ky) with mu = mu1 - mu2.

    Args:
        lambda_x: Spin-conserved hopping along x
        lambda_y: Spin-conserved hopping along y
        rho_x: Spin-flip hopping along x
        rho_y: Spin-flip hopping along y
        mu1: Potential carried by the x chain
        mu2: Potential carried by the y chain
        n_max: Coupling range cap of the chains

    Returns:
        The separable model
    """
    chain1 = ChainSpec(
        onsite=np.array([0.0, 0.0, mu1]),
        hoppings=(Hopping(1, np.array([-0.5j * lambda_x, 0.0, 0.5 * rho_x])),),
        n_max=n_max,
    )
    chain2 = ChainSpec(
        onsite=np.array([0.0, 0.0, mu2]),
        hoppings=(Hopping(1, np.array([0.0, 0.5j * lambda_y, -0.5 * rho_y])),),
        n_max=n_max,
    )
    return SeparableModel(chain1=chain1, chain2=chain2)


@typechecked
def qwz_critical_mus(rho_x: float, rho_y: float) -> tuple[float, ...]:
    """
    Potentials mu at which the extended QWZ gap closes.

    The gap closes at a high-symmetry momentum where both sines vanish and
    mu + (+/-rho_x) + (+/-rho_y) = 0.

    Examples:
        >>> qwz_critical_mus(3.0, 2.0)
        (-5.0, -1.0, 1.0, 5.0)
    """
    values = {float(sx * rho_x + sy * rho_y) for sx in (-1, 1) for sy in (-1, 1)}
    return tuple(sorted(values))


@typechecked
def random_model(seed: int, ranges: int = 3, scale: float = 1.0, n_max: int = DEFAULT_N_MAX) -> SeparableModel:
    """
    A seeded random separable model with `ranges` couplings per chain.

    Coupling vectors are complex Gaussian with standard deviation scale / (2 n),
    so that longer ranges are progressively weaker.
    """
    rng = np.random.default_rng(seed)

    def random_chain() -> ChainSpec:
        hoppings = tuple(
            Hopping(n, scale / (2 * n) * (rng.normal(size=3) + 1j * rng.normal(size=3))) for n in range(1, ranges + 1)
        )
        return ChainSpec(onsite=scale * rng.normal(size=3), hoppings=hoppings, n_max=n_max)

    return SeparableModel(chain1=random_chain(), chain2=random_chain())


def _check_lattice_size(model_range: int, cells: int) -> None:
    if cells <= 2 * model_range:
        raise LatticeSizeError(
            f"A lattice of {cells} cells per side is too small for coupling range {model_range}; "
            f"need more than {2 * model_range}"
        )


@typechecked
def build_real_space(model: SeparableModel, cells: int) -> LatticeMatrix:
    """
    Periodic 2D lattice Hamiltonian of a separable model.

    Every unit cell carries the on-site block (onsite1 - onsite2) . sigma. The
    x-couplings of chain 1 join cell (l, j) to (l + n, j); the y-couplings join
    (l, j) to (l, j + n) with vector -d_n of chain 2, which is what makes the Bloch
    vector r1 - r2. Indices wrap periodically.

    Args:
        model: The separable model
        cells: Number of unit cells per side N

    Returns:
        The 2N^2-dimensional Hermitian lattice matrix

    Raises:
        LatticeSizeError: If N <= 2 * (largest coupling range)
    """
    _check_lattice_size(model.max_range, cells)

    ls, js = np.meshgrid(np.arange(cells), np.arange(cells), indexing="ij")
    ls, js = ls.ravel(), js.ravel()
    source = ls * cells + js

    builder = _TripletBuilder(cells * cells)
    builder.add_block(source, source, _pauli_block(model.chain1.onsite - model.chain2.onsite))
    for hop in model.chain1.hoppings:
        builder.add_bond(source, ((ls + hop.distance) % cells) * cells + js, _pauli_block(hop.vector))
    for hop in model.chain2.hoppings:
        builder.add_bond(source, ls * cells + (js + hop.distance) % cells, _pauli_block(-hop.vector))

    logger.debug(f"Built {2 * cells * cells}-dimensional lattice with {len(builder.values)} block entries")
    return LatticeMatrix(matrix=builder.build(), cells=cells, dimensions=2)


def _chain_matrix(onsite: np.ndarray, hoppings: list[tuple[int, np.ndarray]], cells: int, sign: float) -> LatticeMatrix:
    source = np.arange(cells)
    builder = _TripletBuilder(cells)
    builder.add_block(source, source, sign * _pauli_block(onsite))
    for distance, vector in hoppings:
        builder.add_bond(source, (source + distance) % cells, sign * _pauli_block(vector))
    return LatticeMatrix(matrix=builder.build(), cells=cells, dimensions=1)


@typechecked
def extract_chains(model: SeparableModel, cells: int) -> tuple[LatticeMatrix, LatticeMatrix]:
    """
    The two independent chains hidden in the 2D lattice.

    H1 collects the x-couplings of the lattice (and the on-site part of chain 1).
    H2 collects the y-couplings, which the lattice stores as -d_n, together with the
    on-site part -onsite2, and carries an overall minus sign; its Bloch vector is
    therefore r2(k) itself.

    Args:
        model: The separable model
        cells: Chain length N

    Returns:
        The pair (H1, H2) of 2N-dimensional periodic chain matrices

    Raises:
        LatticeSizeError: If N <= 2 * (largest coupling range)
    """
    _check_lattice_size(model.max_range, cells)

    first = _chain_matrix(
        model.chain1.onsite, [(hop.distance, hop.vector) for hop in model.chain1.hoppings], cells, sign=1.0
    )
    second = _chain_matrix(
        -model.chain2.onsite, [(hop.distance, -hop.vector) for hop in model.chain2.hoppings], cells, sign=-1.0
    )
    return first, second


def lattice_momenta(cells: int) -> np.ndarray:
    """Allowed momenta 2 pi m / N of a periodic lattice with N cells."""
    return 2.0 * np.pi * np.arange(cells) / cells


@typechecked
def separability_deviation(lattice: LatticeMatrix, model: SeparableModel) -> float:
    """
    Largest deviation between the Fourier-transformed lattice and (r1 - r2) . sigma.

    The blocks of every row of unit cells are transformed on their own,
    h_c(k) = sum_{c'} H[c, c'] e^{ik.(c' - c)}; a translation-invariant lattice gives
    the same h(k) for every cell c, which is the Bloch Hamiltonian of the
    transformation a_k = N^-1 sum e^{-ik.r} a_r. A defect anywhere in the lattice
    therefore shows up with its full magnitude.

    Args:
        lattice: A 2D lattice matrix
        model: The model it is supposed to represent

    Returns:
        Maximum over cells, momenta and matrix entries of the absolute deviation
    """
    cells = lattice.cells
    momenta = lattice_momenta(cells)
    expected = np.einsum("xya,aij->xyij", model.sample(momenta, momenta), PAULI)

    deviation = 0.0
    for l in range(cells):
        for j in range(cells):
            cell = l * cells + j
            rows = lattice.matrix[2 * cell : 2 * cell + 2].toarray().reshape(2, cells, cells, 2)
            blocks = np.roll(rows, shift=(-l, -j), axis=(1, 2))
            transformed = np.fft.ifft2(blocks, axes=(1, 2)) * cells * cells
            bloch = np.transpose(transformed, (1, 2, 0, 3))
            deviation = max(deviation, float(np.abs(bloch - expected).max()))
    return deviation


@typechecked
def verify_separability(model: SeparableModel, cells: int) -> float:
    """
    Build the 2D lattice and check that its momentum-space form is r1(kx) - r2(ky).

    Args:
        model: The separable model
        cells: Number of unit cells per side N

    Returns:
        The maximum deviation over the N x N momentum grid (roundoff for a correct build)
    """
    deviation = separability_deviation(build_real_space(model, cells), model)
    logger.debug(f"Separability deviation at N={cells}: {deviation:.3e}")
    return deviation


@typechecked
def chain_spectrum_deviation(chain_matrix: LatticeMatrix, chain: ChainSpec) -> float:
    """
    Distance between the spectrum of a chain matrix and {+/-|r(k)|} on its momentum grid.

    Both multisets are sorted and compared element by element.
    """
    norms = np.linalg.norm(chain.sample(lattice_momenta(chain_matrix.cells)), axis=-1)
    expected = np.sort(np.concatenate([norms, -norms]))
    return float(np.abs(chain_matrix.eigenvalues() - expected).max())


@typechecked
def corrupt_bond(lattice: LatticeMatrix, magnitude: float = 0.1, seed: int = 0) -> LatticeMatrix:
    """
    Perturb one randomly chosen bond of a lattice, keeping the matrix Hermitian.

    Used by the self-test of the separability check.
    """
    rng = np.random.default_rng(seed)
    coo = lattice.matrix.tocoo()
    off_diagonal = np.flatnonzero(coo.row != coo.col)
    if off_diagonal.size == 0:
        raise ContractViolationError("The lattice has no bond to corrupt")

    index = off_diagonal[rng.integers(off_diagonal.size)]
    row, col = int(coo.row[index]), int(coo.col[index])
    perturbation = sparse.coo_matrix(
        ([magnitude, magnitude], ([row, col], [col, row])), shape=lattice.matrix.shape, dtype=complex
    )
    logger.debug(f"Corrupted bond ({row}, {col}) by {magnitude}")
    return LatticeMatrix(
        matrix=(lattice.matrix + perturbation).tocsr(), cells=lattice.cells, dimensions=lattice.dimensions
    )


@typechecked
def locate_gap_minimum(model: SeparableModel, grid: int, refine: bool = False) -> tuple[float, float, float]:
    """
    Position and size of the smallest |r(kx, ky)|.

    The half-step grid minimum is optionally polished by minimising |r|^2 from the
    best grid point with analytic gradients, which resolves gap closings that fall
    between grid points.

    Args:
        model: The separable model
        grid: Grid size per direction
        refine: Whether to polish the grid minimum

    Returns:
        A tuple (gap, kx, ky)
    """
    if grid < MIN_GRID:
        raise ContractViolationError(f"Gap grid must have at least {MIN_GRID} points, got {grid}")

    ks = half_step_grid(grid)
    norms = np.linalg.norm(model.sample(ks, ks), axis=-1)
    ix, iy = np.unravel_index(np.argmin(norms), norms.shape)
    gap, kx, ky = float(norms[ix, iy]), float(ks[ix]), float(ks[iy])
    if not refine or gap == 0.0:
        return gap, kx, ky

    def objective(point: np.ndarray) -> tuple[float, np.ndarray]:
        r = model.chain1.sample(point[0]) - model.chain2.sample(point[1])
        gradient = np.array([2.0 * r @ model.chain1.derivative(point[0]), -2.0 * r @ model.chain2.derivative(point[1])])
        return float(r @ r), gradient

    result = minimize(
        objective, np.array([kx, ky]), jac=True, method="L-BFGS-B", options={"ftol": 1e-16, "gtol": 1e-14}
    )
    polished = float(np.sqrt(max(result.fun, 0.0)))
    logger.debug(f"Gap polished from {gap:.3e} to {polished:.3e} at ({result.x[0]:.6f}, {result.x[1]:.6f})")
    if polished < gap:
        return polished, float(np.mod(result.x[0], 2 * np.pi)), float(np.mod(result.x[1], 2 * np.pi))
    return gap, kx, ky


@typechecked
def spectral_gap(model: SeparableModel, grid: int, refine: bool = False) -> float:
    """
    Half the band gap, min |r(kx, ky)| over the half-step grid.

    Example:
        ```python
        spectral_gap(qwz_model(3.0, 1.0, 3.0, 2.0, 2.0, 0.0), 64)  # strictly positive
        ```
    """
    return locate_gap_minimum(model, grid, refine=refine)[0]
