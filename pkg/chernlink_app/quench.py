"""
Quench dynamics of the two chains and the dynamic linking number.

Each chain is prepared in the sigma_z eigenstate with eigenvalue -1 and evolved by
its own Hamiltonian r(k).sigma. The Bloch vector n(k, t) precesses about r(k); its
time average n(k, T), the precession frequency omega and the precession sign rho
combine into the dynamic loop l(k, T) = rho omega n / (2 |n|), which tends to r(k)
for long times. The Gauss linking number of the two dynamic loops therefore tends
to the Chern number.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.linalg import expm
from scipy.optimize import curve_fit
from typeguard import typechecked

from .constants import (
    CONVERGENCE_TOLERANCE,
    CONVERGENCE_WINDOW_FRACTION,
    DEFAULT_DT,
    DEFAULT_EPS_N,
    DEFAULT_EPS_TOUCH,
    DEFAULT_QUENCH_SAMPLES,
    DEFAULT_T_MAX,
    DEFAULT_T_POINTS,
    GAPLESS_TOLERANCE,
    INITIAL_BLOCH_VECTOR,
    MAX_DROPPED_FRACTION,
    MIN_GRID,
    MIN_LOOP_SAMPLES,
    MIN_PRECESSION_AMPLITUDE,
    PAULI,
    QUENCH_MODES,
)
from .exceptions import (
    ContractViolationError,
    DegenerateSignError,
    GapClosingError,
    NearCriticalLoopsError,
    NoPrecessionError,
    UnreliableLoopError,
)
from .geom3 import LoopSamples, gauss_linking, half_step_grid, rotate_about_axis
from .model import ChainSpec, SeparableModel

logger = logging.getLogger(__name__)

UNIT_NORM_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class BlochTrajectory:
    """
    Sampled Bloch vector of one momentum after the quench.

    Attributes:
        k: Momentum of the chain
        times: Uniform times 0, dt, ..., T
        n_of_t: Unit Bloch vectors, shape (len(times), 3)
        r: The chain's Bloch vector driving the precession
    """

    k: float
    times: np.ndarray
    n_of_t: np.ndarray
    r: np.ndarray

    def __post_init__(self) -> None:
        if self.n_of_t.shape != (self.times.shape[0], 3):
            raise ContractViolationError(
                f"Trajectory of shape {self.n_of_t.shape} does not match {self.times.shape[0]} times"
            )
        if np.abs(np.linalg.norm(self.n_of_t, axis=1) - 1.0).max() > UNIT_NORM_TOLERANCE:
            raise ContractViolationError("Bloch vectors of a pure state must have unit length")

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])


def _unit_axis(r: np.ndarray) -> tuple[float, np.ndarray | None]:
    norm = float(np.linalg.norm(r))
    if norm == 0.0:
        return 0.0, None
    return norm, r / norm


def _check_unit(n0: np.ndarray) -> None:
    if abs(np.linalg.norm(n0) - 1.0) > UNIT_NORM_TOLERANCE:
        raise ContractViolationError(f"Initial Bloch vector must be a unit vector, got {n0!r}")


def _time_samples(t: float, dt: float) -> np.ndarray:
    if dt <= 0:
        raise ContractViolationError(f"Time step must be positive, got {dt}")
    if t <= 0 or not math.isfinite(t):
        raise ContractViolationError(f"Evolution time must be positive and finite, got {t}")
    steps = max(int(round(t / dt)), 1)
    return np.arange(steps + 1) * dt


@typechecked
def evolve_bloch(r: np.ndarray, n0: np.ndarray, t: float) -> np.ndarray:
    """
    Closed-form solution of dn/dt = 2 r x n.

    The component of n0 along r is conserved; the perpendicular part rotates about
    +r by the angle 2|r|t.

    Args:
        r: Driving Bloch vector
        n0: Initial unit Bloch vector
        t: Time

    Returns:
        n(t)

    Example:
        ```python
        evolve_bloch(np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, -1.0]), np.pi / 4)
        # array([0., 1., 0.])
        ```
    """
    _check_unit(n0)
    norm, axis = _unit_axis(r)
    if axis is None:
        return n0.astype(float).copy()
    return rotate_about_axis(n0.astype(float), axis, 2.0 * norm * t)


def _precess(r: np.ndarray, times: np.ndarray, n0: np.ndarray) -> np.ndarray:
    """Vectorised closed-form precession for many driving vectors, shape (K, M, 3)."""
    norms = np.linalg.norm(r, axis=-1)
    axes = np.divide(r, norms[:, None], out=np.zeros_like(r), where=norms[:, None] > 0)
    parallel = axes @ n0
    perpendicular = n0[None, :] - axes * parallel[:, None]
    rotated = np.cross(axes, perpendicular)

    angles = 2.0 * norms[:, None] * times[None, :]
    return (
        (axes * parallel[:, None])[:, None, :]
        + np.cos(angles)[..., None] * perpendicular[:, None, :]
        + np.sin(angles)[..., None] * rotated[:, None, :]
    )


@typechecked
def closed_form_trajectory(
    r: np.ndarray, t: float, dt: float = DEFAULT_DT, n0: np.ndarray = INITIAL_BLOCH_VECTOR, k: float = 0.0
) -> BlochTrajectory:
    """Sample the closed-form precession on the uniform grid 0, dt, ..., t."""
    _check_unit(n0)
    times = _time_samples(t, dt)
    return BlochTrajectory(k=k, times=times, n_of_t=_precess(r[None, :], times, n0)[0], r=r.astype(float))


def _bloch_from_states(states: np.ndarray) -> np.ndarray:
    overlap = np.conj(states[..., 0]) * states[..., 1]
    return np.stack(
        [2.0 * overlap.real, 2.0 * overlap.imag, np.abs(states[..., 0]) ** 2 - np.abs(states[..., 1]) ** 2], axis=-1
    )


def _propagate_states(r: np.ndarray, steps: int, dt: float) -> np.ndarray:
    """
    Evolve |psi(0)> = (0, 1) under r.sigma for many momenta at once.

    Each step applies the exact one-step propagator exp(-i h dt); returns the Bloch
    vectors with shape (K, steps + 1, 3).
    """
    hamiltonians = np.einsum("ka,aij->kij", r, PAULI)
    propagators = np.stack([expm(-1j * h * dt) for h in hamiltonians])

    states = np.empty((r.shape[0], steps + 1, 2), dtype=complex)
    states[:, 0] = np.array([0.0, 1.0])
    for step in range(steps):
        states[:, step + 1] = np.einsum("kij,kj->ki", propagators, states[:, step])
    return _bloch_from_states(states)


@typechecked
def evolve_state_stepwise(r: np.ndarray, t: float, dt: float = DEFAULT_DT, k: float = 0.0) -> BlochTrajectory:
    """
    Evolve the quench state by repeated 2x2 propagators and record its Bloch vector.

    This path never uses the closed form, so it cross-checks `evolve_bloch`. The
    total time is rounded to a whole number of steps.

    Args:
        r: Driving Bloch vector
        t: Total time
        dt: Time step, must be positive
        k: Momentum label stored on the trajectory

    Returns:
        The trajectory starting at n(0) = (0, 0, -1)
    """
    times = _time_samples(t, dt)
    n_of_t = _propagate_states(np.asarray(r, dtype=float)[None, :], times.size - 1, dt)[0]
    return BlochTrajectory(k=k, times=times, n_of_t=n_of_t, r=r.astype(float))


@typechecked
def average_bloch(r: np.ndarray, T: float, n0: np.ndarray = INITIAL_BLOCH_VECTOR) -> np.ndarray:
    """
    Exact time average (1/T) int_0^T n(t) dt of the precessing Bloch vector.

    With omega = 2|r|, c = r.n0 / |r| and n_perp the part of n0 normal to r,
    the average is c r_hat + sin(wT)/(wT) n_perp + (1 - cos wT)/(wT) (r_hat x n_perp).
    T may be infinite, which leaves the steady part c r_hat. A vanishing r leaves
    n0 unchanged.

    Raises:
        ContractViolationError: If T is not positive
    """
    if not T > 0:
        raise ContractViolationError(f"Averaging time must be positive, got {T}")
    _check_unit(n0)
    norm, axis = _unit_axis(r)
    if axis is None:
        return n0.astype(float).copy()

    parallel = float(axis @ n0)
    steady = axis * parallel
    if math.isinf(T):
        return steady

    perpendicular = n0 - steady
    phase = 2.0 * norm * T
    transient = np.sin(phase) / phase * perpendicular + (1.0 - np.cos(phase)) / phase * np.cross(axis, perpendicular)
    return steady + transient


@typechecked
def trajectory_average(trajectory: BlochTrajectory) -> np.ndarray:
    """Trapezoid-rule time average of a sampled trajectory, accurate to O(dt^2)."""
    return trapezoid(trajectory.n_of_t, trajectory.times, axis=0) / trajectory.duration


@typechecked
def steady_average(r: np.ndarray) -> np.ndarray:
    """
    Long-time limit -r_hat (r_hat . z) of the averaged Bloch vector.

    Raises:
        NoPrecessionError: If r vanishes and the direction is undefined
    """
    _, axis = _unit_axis(r)
    if axis is None:
        raise NoPrecessionError("The steady average is undefined for r = 0")
    return -axis * axis[2]


def _oscillation(trajectory: BlochTrajectory) -> np.ndarray:
    centred = trajectory.n_of_t - trajectory_average(trajectory)
    _, _, right = np.linalg.svd(centred, full_matrices=False)
    return centred @ right[0]


def _harmonic(t: np.ndarray, a: float, b: float, omega: float, offset: float) -> np.ndarray:
    return a * np.cos(omega * t) + b * np.sin(omega * t) + offset


@typechecked
def estimate_frequency(trajectory: BlochTrajectory) -> float:
    """
    Precession frequency measured from the trajectory alone.

    The centred trajectory is projected on its principal transverse direction.
    Linearly interpolated upward zero crossings give a first estimate, which a
    least-squares harmonic fit then refines.

    Args:
        trajectory: Trajectory spanning at least three periods

    Returns:
        Angular frequency omega

    Raises:
        NoPrecessionError: If the trajectory does not oscillate
    """
    signal = _oscillation(trajectory)
    if np.abs(signal).max() < MIN_PRECESSION_AMPLITUDE:
        raise NoPrecessionError(f"No precession at k = {trajectory.k:.6f}")

    times = trajectory.times
    upward = np.flatnonzero((signal[:-1] < 0) & (signal[1:] >= 0))
    if upward.size < 3:
        raise NoPrecessionError(f"Fewer than three precession periods at k = {trajectory.k:.6f}")

    crossings = times[upward] + signal[upward] / (signal[upward] - signal[upward + 1]) * (
        times[upward + 1] - times[upward]
    )
    omega = 2.0 * np.pi * (crossings.size - 1) / (crossings[-1] - crossings[0])

    guess = (signal[0], 0.0, omega, 0.0)
    try:
        params, _ = curve_fit(_harmonic, times, signal, p0=guess)
    except (RuntimeError, ValueError) as e:
        logger.warning(f"Harmonic fit failed at k = {trajectory.k:.6f}, keeping crossing estimate: {e}")
        return float(omega)

    fitted = abs(float(params[2]))
    if abs(fitted - omega) > 0.1 * omega:
        logger.warning(f"Harmonic fit drifted to {fitted:.6f} from {omega:.6f}, keeping crossing estimate")
        return float(omega)
    return fitted


@typechecked
def precession_sign(trajectory: BlochTrajectory, eps_n: float = DEFAULT_EPS_N) -> int:
    """
    Sense of precession seen from the averaged Bloch vector.

    Defined as the sign of n_bar . <n x dn/dt>, which equals sgn(r_hat . n0) and
    turns the dynamic loop into +r(k) in the long-time limit.

    Raises:
        DegenerateSignError: If |n_bar| < eps_n or the vector does not move
    """
    average = trajectory_average(trajectory)
    if np.linalg.norm(average) < eps_n:
        raise DegenerateSignError(f"Averaged Bloch vector vanishes at k = {trajectory.k:.6f}")

    velocity = np.gradient(trajectory.n_of_t, trajectory.times, axis=0)
    angular = trapezoid(np.cross(trajectory.n_of_t, velocity), trajectory.times, axis=0) / trajectory.duration
    if np.linalg.norm(angular) < MIN_PRECESSION_AMPLITUDE:
        raise DegenerateSignError(f"No precession to orient at k = {trajectory.k:.6f}")

    return 1 if float(average @ angular) > 0 else -1


@dataclass(frozen=True, eq=False)
class DynamicLoop:
    """
    The dynamic loop of one chain at one averaging time.

    Attributes:
        T: Averaging time
        loop: Samples of l(k, T) on the kept momenta, None when fewer than three remain
        dropped_k: Momenta excluded as near-critical or non-precessing
        reliable: False when more than 10% of the momenta were dropped
    """

    T: float
    loop: LoopSamples | None
    dropped_k: np.ndarray
    reliable: bool

    def require(self) -> LoopSamples:
        """The loop samples, or UnreliableLoopError for a flagged loop."""
        if not self.reliable or self.loop is None:
            raise UnreliableLoopError(f"Dynamic loop at T = {self.T:g} dropped {self.dropped_k.size} momenta")
        return self.loop


@dataclass(frozen=True)
class DynamicLoopSet:
    """Both dynamic loops at a common averaging time."""

    T: float
    loops: tuple[DynamicLoop, DynamicLoop]

    @property
    def reliable(self) -> bool:
        return all(loop.reliable for loop in self.loops)

    @property
    def dropped_k(self) -> tuple[np.ndarray, np.ndarray]:
        return self.loops[0].dropped_k, self.loops[1].dropped_k


def _require_gapped(r: np.ndarray, ks: np.ndarray) -> np.ndarray:
    """Norms |r(k)| on the grid; raises GapClosingError where one vanishes."""
    norms = np.linalg.norm(r, axis=1)
    if norms.min() < GAPLESS_TOLERANCE:
        k = float(ks[np.argmin(norms)])
        raise GapClosingError(f"Chain is gapless at k = {k:.6f}", kx=k, ky=k)
    return norms


def _require_gapped_chains(model: SeparableModel, samples: int) -> None:
    # both chains are checked before either one is evolved
    if samples < MIN_GRID:
        raise ContractViolationError(f"Dynamic loops need at least {MIN_GRID} momenta, got {samples}")
    ks = half_step_grid(samples)
    for chain in (model.chain1, model.chain2):
        _require_gapped(chain.sample(ks), ks)


@typechecked
class QuenchExperiment:
    """
    The quench of one chain on the half-step momentum grid.

    In "analytic" mode the averaged vector, the frequency 2|r| and the sign
    sgn(r_hat . n0) are exact. In "dynamics" mode every momentum is evolved once up
    to t_max with stepwise propagators, and the average, the frequency and the sign
    are all measured from the trajectories, as an experiment would; the averaging
    time is then rounded to the time step.

    Args:
        chain: The chain that drives the quench
        samples: Number of momenta
        t_max: Longest averaging time to be served (may be infinite in analytic mode)
        dt: Time step of the dynamics mode
        mode: "analytic" or "dynamics"
        eps_n: Smallest accepted |n_bar|

    Raises:
        GapClosingError: If r(k) vanishes on the grid
    """

    def __init__(
        self,
        chain: ChainSpec,
        samples: int = DEFAULT_QUENCH_SAMPLES,
        t_max: float = DEFAULT_T_MAX,
        dt: float = DEFAULT_DT,
        mode: str = "analytic",
        eps_n: float = DEFAULT_EPS_N,
    ):
        if mode not in QUENCH_MODES:
            raise ContractViolationError(f"Unknown quench mode {mode!r}, expected one of {QUENCH_MODES}")
        if samples < MIN_GRID:
            raise ContractViolationError(f"Dynamic loops need at least {MIN_GRID} momenta, got {samples}")

        self.chain = chain
        self.mode = mode
        self.eps_n = eps_n
        self.dt = dt
        self.t_max = t_max
        self.ks = half_step_grid(samples)
        self.r = chain.sample(self.ks)

        norms = _require_gapped(self.r, self.ks)

        if mode == "dynamics":
            self._run_dynamics()
        else:
            self.omega = 2.0 * norms
            self.rho = np.sign(self.r @ INITIAL_BLOCH_VECTOR)

    def _run_dynamics(self) -> None:
        times = _time_samples(self.t_max, self.dt)
        logger.debug(f"Evolving {self.ks.size} momenta over {times.size} steps")
        trajectories = _propagate_states(self.r, times.size - 1, self.dt)

        self.times = times
        self.running_integral = cumulative_trapezoid(trajectories, times, axis=1, initial=0.0)
        self.omega = np.full(self.ks.size, np.nan)
        self.rho = np.zeros(self.ks.size)

        for index, k in enumerate(self.ks):
            trajectory = BlochTrajectory(k=float(k), times=times, n_of_t=trajectories[index], r=self.r[index])
            try:
                self.omega[index] = estimate_frequency(trajectory)
                self.rho[index] = precession_sign(trajectory, self.eps_n)
            except (NoPrecessionError, DegenerateSignError) as e:
                logger.debug(f"Dropping k = {k:.6f} at every time: {e}")
                self.omega[index] = np.nan
                self.rho[index] = 0.0

    def averaged(self, T: float) -> np.ndarray:
        """Averaged Bloch vectors n_bar(k, T) for every momentum, shape (K, 3)."""
        if self.mode == "analytic":
            return np.stack([average_bloch(r, T) for r in self.r])

        if T > self.t_max + 0.5 * self.dt:
            raise ContractViolationError(f"T = {T} exceeds the simulated time {self.t_max}")
        index = max(int(round(T / self.dt)), 1)
        return self.running_integral[:, index] / self.times[index]

    def loop_at(self, T: float) -> DynamicLoop:
        """
        The dynamic loop l(k, T) on the kept momenta.

        A momentum is dropped when |n_bar(k, T)| < eps_n, or when no frequency and
        sign could be measured for it.
        """
        if not T > 0:
            raise ContractViolationError(f"Averaging time must be positive, got {T}")

        averages = self.averaged(T)
        lengths = np.linalg.norm(averages, axis=1)
        measured = np.isfinite(self.omega) & (self.rho != 0)
        kept = measured & (lengths >= self.eps_n)

        dropped = self.ks[~kept]
        if dropped.size:
            logger.debug(f"T = {T:g}: dropped {dropped.size} of {self.ks.size} momenta")
        reliable = dropped.size <= MAX_DROPPED_FRACTION * self.ks.size and kept.sum() >= MIN_LOOP_SAMPLES

        loop = None
        if kept.sum() >= MIN_LOOP_SAMPLES:
            scale = self.rho[kept] * self.omega[kept] / (2.0 * lengths[kept])
            loop = LoopSamples(points=scale[:, None] * averages[kept], ks=self.ks[kept])
        if not reliable:
            logger.warning(f"Dynamic loop at T = {T:g} is unreliable: {dropped.size} of {self.ks.size} momenta dropped")
        return DynamicLoop(T=float(T), loop=loop, dropped_k=dropped, reliable=bool(reliable))


@typechecked
def dynamic_loop(
    chain: ChainSpec,
    samples: int = DEFAULT_QUENCH_SAMPLES,
    T: float = DEFAULT_T_MAX,
    dt: float = DEFAULT_DT,
    mode: str = "analytic",
    eps_n: float = DEFAULT_EPS_N,
) -> DynamicLoop:
    """
    The dynamic loop l(k, T) = rho omega n_bar / (2 |n_bar|) of one chain.

    Example:
        ```python
        loop = dynamic_loop(model.chain1, samples=50, T=float("inf"))
        # loop.loop.points equals model.chain1.sample(loop.loop.ks) to machine precision
        ```
    """
    return QuenchExperiment(chain, samples=samples, t_max=T, dt=dt, mode=mode, eps_n=eps_n).loop_at(T)


@dataclass(frozen=True, eq=False)
class LinkingSeries:
    """
    Dynamic linking number as a function of the averaging time.

    Attributes:
        T_grid: Increasing averaging times
        L_of_T: Linking numbers, NaN where the entry could not be computed
        flags: "ok" or "unreliable" per entry
        converged_value: Integer the tail settles on, None if it does not settle
    """

    T_grid: np.ndarray
    L_of_T: np.ndarray
    flags: tuple[str, ...]
    converged_value: int | None = field(default=None)

    @property
    def final_value(self) -> float:
        """Last entry of the series, UnreliableLoopError if it is flagged."""
        if self.flags[-1] != "ok":
            raise UnreliableLoopError(f"Dynamic linking at T = {self.T_grid[-1]:g} is unreliable")
        return float(self.L_of_T[-1])


@typechecked
def default_t_grid(t_max: float = DEFAULT_T_MAX, points: int = DEFAULT_T_POINTS) -> np.ndarray:
    """Log-spaced averaging times in [1, t_max]."""
    if t_max <= 1.0 or points < 2:
        raise ContractViolationError(f"Need t_max > 1 and at least two points, got {t_max} and {points}")
    return np.geomspace(1.0, t_max, points)


@typechecked
def converged_value(values: np.ndarray, flags: tuple[str, ...]) -> int | None:
    """
    Integer the tail of a linking series settles on.

    The last quarter of the entries must all be flagged ok and lie within 0.25 of a
    common integer.
    """
    window = max(1, math.ceil(CONVERGENCE_WINDOW_FRACTION * len(values)))
    tail = values[-window:]
    if any(flag != "ok" for flag in flags[-window:]) or not np.all(np.isfinite(tail)):
        return None
    target = round(float(tail[-1]))
    if np.all(np.abs(tail - target) <= CONVERGENCE_TOLERANCE):
        return int(target)
    return None


@typechecked
def dynamic_linking(
    model: SeparableModel,
    samples: int = DEFAULT_QUENCH_SAMPLES,
    t_grid: np.ndarray | None = None,
    dt: float = DEFAULT_DT,
    mode: str = "analytic",
    eps_n: float = DEFAULT_EPS_N,
    eps_touch: float = DEFAULT_EPS_TOUCH,
) -> LinkingSeries:
    """
    Linking number of the two dynamic loops over a grid of averaging times.

    Momenta are dropped per loop. An entry whose loops are unreliable, or whose
    loops touch, is recorded as NaN with flag "unreliable" rather than fabricated.

    Args:
        model: The separable model
        samples: Momenta per loop
        t_grid: Increasing averaging times, log-spaced up to 200 by default
        dt: Time step of the dynamics mode
        mode: "analytic" or "dynamics"
        eps_n: Smallest accepted |n_bar|
        eps_touch: Loop touching tolerance

    Returns:
        The linking series

    Raises:
        GapClosingError: If either chain is gapless on the momentum grid
    """
    t_grid = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise ContractViolationError("The averaging times must form a non-empty increasing sequence")

    t_max = float(t_grid[-1])
    _require_gapped_chains(model, samples)
    experiments = [
        QuenchExperiment(chain, samples=samples, t_max=t_max, dt=dt, mode=mode, eps_n=eps_n)
        for chain in (model.chain1, model.chain2)
    ]

    values = np.full(t_grid.size, np.nan)
    flags = []
    for index, T in enumerate(t_grid):
        loops = DynamicLoopSet(T=float(T), loops=(experiments[0].loop_at(float(T)), experiments[1].loop_at(float(T))))
        try:
            values[index] = gauss_linking(loops.loops[0].require(), loops.loops[1].require(), eps_touch=eps_touch)
            flags.append("ok")
        except (UnreliableLoopError, NearCriticalLoopsError) as e:
            logger.debug(f"Series entry T = {T:g} flagged: {e}")
            flags.append("unreliable")

    flags = tuple(flags)
    series = LinkingSeries(T_grid=t_grid, L_of_T=values, flags=flags, converged_value=converged_value(values, flags))
    logger.info(f"Dynamic linking ({mode}) over {t_grid.size} times, converged to {series.converged_value}")
    return series


@typechecked
def loop_snapshots(
    model: SeparableModel,
    times: list[float],
    samples: int = DEFAULT_QUENCH_SAMPLES,
    dt: float = DEFAULT_DT,
    mode: str = "analytic",
    eps_n: float = DEFAULT_EPS_N,
) -> list[DynamicLoopSet]:
    """Both dynamic loops at each requested time, in the order given."""
    if not times:
        return []
    t_max = max(times)
    _require_gapped_chains(model, samples)
    experiments = [
        QuenchExperiment(chain, samples=samples, t_max=t_max, dt=dt, mode=mode, eps_n=eps_n)
        for chain in (model.chain1, model.chain2)
    ]
    return [DynamicLoopSet(T=T, loops=(experiments[0].loop_at(T), experiments[1].loop_at(T))) for T in times]
