"""
Elementary 3D geometry for loops in the auxiliary space of a two-band model.

Vectors are plain numpy arrays of shape (3,). Closed curves are stored as
`LoopSamples`, an ordered array of points whose index order defines the
orientation; the last point is implicitly joined back to the first.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from typeguard import typechecked

from .constants import AXIS_NORM_TOLERANCE, DEFAULT_EPS_TOUCH, LINKING_SIGN, MIN_LOOP_SAMPLES
from .exceptions import ContractViolationError, NearCriticalLoopsError

logger = logging.getLogger(__name__)


@typechecked
def half_step_grid(samples: int) -> np.ndarray:
    """
    Uniform momentum grid of [0, 2pi) shifted by half a step.

    Point i sits at k_i = 2pi (i + 1/2) / N, which keeps the grid away from the
    high-symmetry momenta 0 and pi where critical behaviour tends to sit.

    Args:
        samples: Number of grid points N

    Returns:
        Array of N momenta in increasing order

    Examples:
        >>> half_step_grid(4)
        array([0.78539816, 2.35619449, 3.92699082, 5.49778714])
    """
    if samples < 1:
        raise ContractViolationError(f"A momentum grid needs at least one point, got {samples}")
    return 2.0 * np.pi * (np.arange(samples) + 0.5) / samples


@dataclass(frozen=True, eq=False)
class LoopSamples:
    """
    A discretised closed oriented curve in 3D.

    Attributes:
        points: Array of shape (N, 3); orientation follows the index order
        ks: Parameter value of each point, by default the half-step grid of [0, 2pi)
    """

    points: np.ndarray
    ks: np.ndarray | None = None

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 2 or points.shape[1] != 3:
            raise ContractViolationError(f"Loop points must have shape (N, 3), got {points.shape}")
        if points.shape[0] < MIN_LOOP_SAMPLES:
            raise ContractViolationError(
                f"A closed loop needs at least {MIN_LOOP_SAMPLES} samples, got {points.shape[0]}"
            )
        if not np.all(np.isfinite(points)):
            raise ContractViolationError("Loop points must all be finite")

        ks = half_step_grid(points.shape[0]) if self.ks is None else np.asarray(self.ks, dtype=float)
        if ks.shape != (points.shape[0],):
            raise ContractViolationError(f"Expected {points.shape[0]} parameter values, got shape {ks.shape}")

        object.__setattr__(self, "points", points)
        object.__setattr__(self, "ks", ks)

    def __len__(self) -> int:
        return self.points.shape[0]

    @classmethod
    def from_function(cls, curve: Callable[[np.ndarray], np.ndarray], samples: int) -> "LoopSamples":
        """
        Sample a 2pi-periodic curve on the half-step grid.

        Args:
            curve: Vectorised function mapping an array of k values to an (N, 3) array
            samples: Number of samples N

        Returns:
            The sampled loop
        """
        ks = half_step_grid(samples)
        return cls(points=curve(ks), ks=ks)

    def reversed(self) -> "LoopSamples":
        """Return the same curve traversed in the opposite direction."""
        return LoopSamples(points=self.points[::-1].copy(), ks=self.ks[::-1].copy())

    def transformed(self, rotation: np.ndarray, shift: np.ndarray) -> "LoopSamples":
        """Apply the rigid motion p -> R p + shift to every sample."""
        return LoopSamples(points=self.points @ rotation.T + shift, ks=self.ks.copy())

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        """
        Midpoints and difference vectors of the closing polygon.

        Returns:
            A tuple (midpoints, segments), both of shape (N, 3); segment i joins
            point i to point i + 1 (mod N)
        """
        segments = np.roll(self.points, -1, axis=0) - self.points
        return self.points + 0.5 * segments, segments


@typechecked
def rotate_about_axis(vector: np.ndarray, axis: np.ndarray, angle: float) -> np.ndarray:
    """
    Rotate a vector about a unit axis by the right-hand rule (Rodrigues formula).

    Args:
        vector: The vector to rotate
        axis: Unit rotation axis
        angle: Rotation angle in radians

    Returns:
        The rotated vector, with the same norm as the input

    Raises:
        ContractViolationError: If the axis is not a unit vector within 1e-12

    Example:
        ```python
        rotate_about_axis(np.array([0.0, 0.0, -1.0]), np.array([1.0, 0.0, 0.0]), np.pi / 2)
        # array([0., 1., 0.])
        ```
    """
    if abs(np.linalg.norm(axis) - 1.0) > AXIS_NORM_TOLERANCE:
        raise ContractViolationError(f"Rotation axis must be a unit vector, got |axis| = {np.linalg.norm(axis)!r}")

    cos_angle = np.cos(angle)
    sin_angle = np.sin(angle)
    return (
        vector * cos_angle
        + np.cross(axis, vector) * sin_angle
        + axis * np.dot(axis, vector) * (1.0 - cos_angle)
    )


@typechecked
def rotation_matrix(axis: np.ndarray, angle: float) -> np.ndarray:
    """Matrix form of `rotate_about_axis`, convenient for rotating whole loops."""
    return np.column_stack([rotate_about_axis(basis, axis, angle) for basis in np.eye(3)])


@typechecked
def min_pairwise_distance(first: LoopSamples, second: LoopSamples) -> float:
    """
    Smallest Euclidean distance between any sample of one loop and any sample of the other.

    Args:
        first: First loop
        second: Second loop

    Returns:
        The minimum over all sample pairs, always >= 0
    """
    return float(cdist(first.points, second.points).min())


@typechecked
def gauss_linking(first: LoopSamples, second: LoopSamples, eps_touch: float = DEFAULT_EPS_TOUCH) -> float:
    """
    Gauss linking integral of two closed loops by the midpoint rule.

    Every segment is represented by its midpoint and its difference vector; the
    O(N^2) double sum over segment pairs is evaluated in one vectorised pass with a
    fixed reduction order. The result carries the global `LINKING_SIGN`, so it is
    symmetric in its arguments and changes sign when one loop is reversed.

    Args:
        first: First loop
        second: Second loop
        eps_touch: Minimum allowed distance between the loops

    Returns:
        The (approximately integer) linking number

    Raises:
        NearCriticalLoopsError: If the loops come closer than eps_touch
    """
    min_distance = min_pairwise_distance(first, second)
    if min_distance <= eps_touch:
        raise NearCriticalLoopsError(
            f"Loops are near-critical: minimum distance {min_distance:.3e} <= {eps_touch:.1e}",
            min_distance=min_distance,
        )

    first_mid, first_seg = first.segments()
    second_mid, second_seg = second.segments()

    separation = first_mid[:, None, :] - second_mid[None, :, :]
    orientation = np.cross(second_seg[None, :, :], first_seg[:, None, :])
    numerator = np.einsum("ijk,ijk->ij", separation, orientation)
    distance_cubed = np.linalg.norm(separation, axis=-1) ** 3

    return float(LINKING_SIGN * np.sum(numerator / distance_cubed) / (4.0 * np.pi))
