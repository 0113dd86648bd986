"""
Topological invariants of separable two-band models.

The Chern number of the lower band is computed by a midpoint quadrature of the
skyrmion density of r(k), by the plaquette Berry-flux method on lower-band
eigenvectors (an exact-integer oracle), and as the Gauss linking number of the
loops traced by r1(kx) and r2(ky).
"""

import logging
from dataclasses import dataclass

import numpy as np
from typeguard import typechecked

from .constants import (
    DEFAULT_EPS_TOUCH,
    DEFAULT_GAP_MIN,
    DEFAULT_LATTICE_GRID,
    DEFAULT_LINKING_SAMPLES,
    DEFAULT_QUADRATURE_GRID,
    GAPLESS_TOLERANCE,
    INVARIANT_AGREEMENT,
    LINKING_SIGN,
    MAX_PLAQUETTE_FLUX,
    MIN_GRID,
    PAULI,
)
from .exceptions import ContractViolationError, GapClosingError, GridTooCoarseError, InconsistentInvariantsError
from .geom3 import gauss_linking, half_step_grid
from .model import SeparableModel, locate_gap_minimum

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InvariantReport:
    """
    The invariants of one model side by side.

    Attributes:
        chern_quadrature: Chern number by Brillouin-zone quadrature
        chern_lattice: Chern number by the plaquette method (exact integer)
        linking_static: Gauss linking number of the r1 and r2 loops
        grid_used: Grid size per direction of the quadrature
        gap: Polished minimum of |r(kx, ky)|, half the band gap
    """

    chern_quadrature: float
    chern_lattice: int
    linking_static: float
    grid_used: int
    gap: float

    def is_consistent(self, tolerance: float = INVARIANT_AGREEMENT) -> bool:
        """Whether the quadrature and the linking number both sit within `tolerance` of the lattice value."""
        return (
            abs(self.chern_quadrature - self.chern_lattice) < tolerance
            and abs(self.linking_static - self.chern_lattice) < tolerance
        )


def _check_grid(grid: int) -> None:
    if grid < MIN_GRID:
        raise ContractViolationError(f"Invariant grids need at least {MIN_GRID} points per direction, got {grid}")


def _raise_if_gapless(norms: np.ndarray, ks: np.ndarray) -> None:
    if norms.min() < GAPLESS_TOLERANCE:
        ix, iy = np.unravel_index(np.argmin(norms), norms.shape)
        kx, ky = float(ks[ix]), float(ks[iy])
        raise GapClosingError(f"Gap closes at (kx, ky) = ({kx:.6f}, {ky:.6f})", kx=kx, ky=ky)


@typechecked
def chern_quadrature(model: SeparableModel, grid: int = DEFAULT_QUADRATURE_GRID) -> float:
    """
    Chern number by midpoint quadrature of (1/4pi) r.(d_kx r x d_ky r) / |r|^3.

    Derivatives are analytic: d_kx r = r1'(kx) and d_ky r = -r2'(ky). The result
    carries the global orientation constant shared with the Gauss linking sum.

    Args:
        model: The separable model
        grid: Number of half-step grid points per direction

    Returns:
        An approximately integer real, converging as the grid is refined

    Raises:
        GapClosingError: If |r| < 1e-9 at a grid point
    """
    _check_grid(grid)
    ks = half_step_grid(grid)
    r = model.sample(ks, ks)
    norms = np.linalg.norm(r, axis=-1)
    _raise_if_gapless(norms, ks)

    dx = np.broadcast_to(model.chain1.derivative(ks)[:, None, :], r.shape)
    dy = np.broadcast_to(-model.chain2.derivative(ks)[None, :, :], r.shape)
    density = np.einsum("xya,xya->xy", r, np.cross(dx, dy)) / norms**3

    step = 2.0 * np.pi / grid
    value = LINKING_SIGN * density.sum() * step * step / (4.0 * np.pi)
    logger.debug(f"Quadrature on {grid}x{grid} grid: {value:.8f}")
    return float(value)


@typechecked
def lower_band_states(model: SeparableModel, grid: int = DEFAULT_LATTICE_GRID) -> np.ndarray:
    """
    Normalised lower-band eigenvectors of h(k) = r(k).sigma on the half-step grid.

    Returns:
        Complex array of shape (grid, grid, 2)

    Raises:
        GapClosingError: If |r| < 1e-9 at a grid point
    """
    _check_grid(grid)
    ks = half_step_grid(grid)
    r = model.sample(ks, ks)
    _raise_if_gapless(np.linalg.norm(r, axis=-1), ks)

    hamiltonians = np.einsum("xya,aij->xyij", r, PAULI)
    _, vectors = np.linalg.eigh(hamiltonians)
    return vectors[..., :, 0]


@typechecked
def berry_flux_chern(states: np.ndarray) -> int:
    """
    Chern number of a band from its eigenvectors on a periodic grid.

    Link variables U_mu(k) = <u(k)|u(k + mu)> / |...| are multiplied around each
    plaquette; the phases of the plaquette products are the Berry fluxes. Their sum
    is 2pi times an integer for any gauge of the input states.

    Args:
        states: Array of shape (N, N, 2) of normalised band eigenvectors

    Returns:
        The Chern number

    Raises:
        GridTooCoarseError: If some plaquette flux is too close to pi
    """
    if states.ndim != 3 or states.shape[0] != states.shape[1]:
        raise ContractViolationError(f"Expected states of shape (N, N, d), got {states.shape}")

    def link(shift_axis: int) -> np.ndarray:
        overlap = np.einsum("xyi,xyi->xy", states.conj(), np.roll(states, -1, axis=shift_axis))
        magnitude = np.abs(overlap)
        if magnitude.min() < GAPLESS_TOLERANCE:
            raise GridTooCoarseError("Neighbouring eigenvectors are orthogonal; refine the grid")
        return overlap / magnitude

    link_x = link(0)
    link_y = link(1)
    plaquettes = link_x * np.roll(link_y, -1, axis=0) * np.conj(np.roll(link_x, -1, axis=1)) * np.conj(link_y)
    fluxes = np.angle(plaquettes)

    largest = float(np.abs(fluxes).max())
    if largest > MAX_PLAQUETTE_FLUX:
        raise GridTooCoarseError(f"Plaquette flux {largest:.3f} is too close to pi on a {states.shape[0]}-point grid")

    return int(round(fluxes.sum() / (2.0 * np.pi)))


@typechecked
def chern_lattice(model: SeparableModel, grid: int = DEFAULT_LATTICE_GRID) -> int:
    """
    Chern number of the lower band by the plaquette Berry-flux method.

    Example:
        ```python
        chern_lattice(qwz_model(3.0, 1.0, 3.0, 2.0, -3.0, 0.0), 50)
        # -1
        ```
    """
    return berry_flux_chern(lower_band_states(model, grid))


@typechecked
def linking_static(
    model: SeparableModel, samples: int = DEFAULT_LINKING_SAMPLES, eps_touch: float = DEFAULT_EPS_TOUCH
) -> float:
    """
    Gauss linking number of the loops r1(k) and r2(k) on the half-step grid.

    Raises:
        NearCriticalLoopsError: If the loops come closer than eps_touch
    """
    return gauss_linking(model.chain1.loop(samples), model.chain2.loop(samples), eps_touch=eps_touch)


@typechecked
def compute_invariants(
    model: SeparableModel,
    quadrature_grid: int = DEFAULT_QUADRATURE_GRID,
    lattice_grid: int = DEFAULT_LATTICE_GRID,
    linking_samples: int = DEFAULT_LINKING_SAMPLES,
    gap_min: float = DEFAULT_GAP_MIN,
    eps_touch: float = DEFAULT_EPS_TOUCH,
    check_consistency: bool = True,
) -> InvariantReport:
    """
    Run all three invariant pipelines on one model.

    The polished spectral gap is checked first, so a gap closing between grid
    points is reported instead of producing a meaningless number.

    Args:
        model: The separable model
        quadrature_grid: Grid of the quadrature, also used to locate the gap
        lattice_grid: Grid of the plaquette method
        linking_samples: Samples per loop of the Gauss sum
        gap_min: Smallest accepted gap
        eps_touch: Loop touching tolerance
        check_consistency: Raise when the pipelines disagree

    Returns:
        The invariant report

    Raises:
        GapClosingError: If the polished gap is below gap_min
        InconsistentInvariantsError: If check_consistency is set and the pipelines disagree
    """
    gap, kx, ky = locate_gap_minimum(model, quadrature_grid, refine=True)
    if gap < gap_min:
        raise GapClosingError(f"Spectral gap {gap:.3e} below {gap_min:.1e} at ({kx:.6f}, {ky:.6f})", kx=kx, ky=ky)

    report = InvariantReport(
        chern_quadrature=chern_quadrature(model, quadrature_grid),
        chern_lattice=chern_lattice(model, lattice_grid),
        linking_static=linking_static(model, linking_samples, eps_touch=eps_touch),
        grid_used=quadrature_grid,
        gap=gap,
    )
    logger.debug(f"Invariants: {report}")

    if not report.is_consistent():
        message = (
            f"Invariants disagree: quadrature {report.chern_quadrature:.4f}, "
            f"lattice {report.chern_lattice}, linking {report.linking_static:.4f}"
        )
        logger.warning(message)
        if check_consistency:
            raise InconsistentInvariantsError(message)
    return report
