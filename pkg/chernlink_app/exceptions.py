class ChernLinkError(Exception):
    """
    Base exception class for all chernlink errors.

    All other exceptions of the package inherit from this class, making it
    possible to catch every package-specific error with a single except clause.

    Example:
        ```python
        try:
            report = compute_invariants(model)
        except ChernLinkError as e:
            print(f"Computation failed: {e}")
        ```
    """

    pass


class ContractViolationError(ChernLinkError, ValueError):
    """
    Exception raised when a pure helper receives arguments outside its contract.

    Examples are a rotation axis that is not a unit vector, a loop with fewer than
    three samples or a hopping range outside the configured cap.
    """

    pass


class PhysicsError(ChernLinkError):
    """
    Base class for precondition failures rooted in the physics of the input.

    Each subclass carries a short `status` string that the phase-diagram sweep
    writes into its `status` column instead of aborting the whole sweep.

    Example:
        ```python
        try:
            row = compute_invariants(model)
        except PhysicsError as e:
            status = e.status  # e.g. "gap_closing"
        ```
    """

    status = "physics_error"


class GapClosingError(PhysicsError):
    """
    Exception raised when |r(kx, ky)| vanishes (within tolerance) on the grid.

    Attributes:
        kx: Momentum along x of the offending point
        ky: Momentum along y of the offending point
    """

    status = "gap_closing"

    def __init__(self, message: str, kx: float, ky: float):
        super().__init__(message)
        self.kx = kx
        self.ky = ky


class NearCriticalLoopsError(PhysicsError):
    """
    Exception raised when two loops come closer than the touching tolerance.

    The Gauss kernel diverges as 1/d^2, so the double sum is refused rather than
    returning a meaningless number.

    Attributes:
        min_distance: Smallest distance between samples of the two loops
    """

    status = "near_critical"

    def __init__(self, message: str, min_distance: float):
        super().__init__(message)
        self.min_distance = min_distance


class GridTooCoarseError(PhysicsError):
    """
    Exception raised when a plaquette Berry flux approaches pi.

    The branch of the phase is then ambiguous and the plaquette sum is no longer
    guaranteed to be the Chern number; a finer grid is required.
    """

    status = "grid_too_coarse"


class LatticeSizeError(PhysicsError):
    """
    Exception raised when a real-space lattice is too small for the hopping range.

    Example:
        ```python
        try:
            build_real_space(model, cells=2)
        except LatticeSizeError as e:
            print(f"Use a larger lattice: {e}")
        ```
    """

    status = "lattice_too_small"


class NoPrecessionError(PhysicsError):
    """
    Exception raised when a Bloch trajectory shows no measurable oscillation.

    This happens when |r| = 0 or when the initial state is an eigenstate of the
    driving Hamiltonian (axis-aligned precession).
    """

    status = "no_precession"


class DegenerateSignError(PhysicsError):
    """
    Exception raised when the precession sign cannot be determined.

    The sign is read from the projection of the time-averaged Bloch vector on the
    mean angular momentum; at a critical momentum the average vanishes.
    """

    status = "degenerate_sign"


class UnreliableLoopError(PhysicsError):
    """
    Exception raised when too many momenta of a dynamic loop had to be dropped.
    """

    status = "unreliable"


class InconsistentInvariantsError(PhysicsError):
    """
    Exception raised when independently computed invariants of a gapped model disagree.
    """

    status = "inconsistent"


class ConfigError(ChernLinkError):
    """
    Base class for configuration problems; the CLI exits with code 2 for all of them.

    Example:
        ```python
        try:
            config = parse_config(Path("run.cfg"))
        except ConfigError as e:
            print(f"Fix the configuration: {e}")
        ```
    """

    pass


class ConfigFileNotFoundError(ConfigError):
    """
    Exception raised when the configuration file does not exist or cannot be read.
    """

    pass


class ConfigSyntaxError(ConfigError):
    """
    Exception raised for a line that is not of the form `section.key = value`.

    Attributes:
        line_number: 1-based number of the offending line
    """

    def __init__(self, message: str, line_number: int):
        super().__init__(message)
        self.line_number = line_number


class UnknownConfigKeyError(ConfigError):
    """
    Exception raised for a key the configuration schema does not know.

    Unknown keys are errors so that a typo never silently falls back to a default.

    Attributes:
        key: The unknown key
        line_number: 1-based number of the offending line
    """

    def __init__(self, message: str, key: str, line_number: int):
        super().__init__(message)
        self.key = key
        self.line_number = line_number


class ConfigValueError(ConfigError):
    """
    Exception raised when a configuration value cannot be converted or is out of range.

    Attributes:
        key: The key whose value was rejected
    """

    def __init__(self, message: str, key: str):
        super().__init__(message)
        self.key = key
