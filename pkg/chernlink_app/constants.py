import numpy as np

# Pauli matrices
# -------------

PAULI = np.array(
    [
        [[0.0, 1.0], [1.0, 0.0]],
        [[0.0, -1.0j], [1.0j, 0.0]],
        [[1.0, 0.0], [0.0, -1.0]],
    ],
    dtype=complex,
)

# Geometry constants
# ------------------

# Tolerance on |axis| - 1 accepted by the rotation kernel
AXIS_NORM_TOLERANCE = 1e-12

# Loops closer than this are treated as touching; the Gauss kernel diverges as 1/d^2
DEFAULT_EPS_TOUCH = 1e-6

# Global orientation constant applied to both the Brillouin-zone quadrature and the Gauss double sum.
# Calibrated so that the extended QWZ model at mu = 2 (lambda_x = rho_x = 3, lambda_y = 1, rho_y = 2)
# gives +1 from every pipeline, matching the plaquette Berry-flux oracle for the lower band.
LINKING_SIGN = -1

# Minimum number of samples in a closed loop
MIN_LOOP_SAMPLES = 3


# Model constants
# ---------------

# Default cap on the hopping range n of a chain
DEFAULT_N_MAX = 8

# Tolerance on the imaginary part of a generated Bloch vector
REALITY_TOLERANCE = 1e-12

# Largest lattice (cells per side) that is converted to a dense matrix for diagonalisation
DENSE_CELLS_LIMIT = 32

# Extended QWZ parameters used throughout the documentation and tests
QWZ_DEFAULTS = {
    "lambda_x": 3.0,
    "lambda_y": 1.0,
    "rho_x": 3.0,
    "rho_y": 2.0,
    "mu1": 2.0,
    "mu2": 0.0,
}


# Invariant constants
# -------------------

# |r| below this on a quadrature or lattice grid point is a gap closing
GAPLESS_TOLERANCE = 1e-9

# Default minimum spectral gap accepted by the invariant pipelines
DEFAULT_GAP_MIN = 1e-3

# Default grids for the quadrature, the plaquette method and the static loops
DEFAULT_QUADRATURE_GRID = 200
DEFAULT_LATTICE_GRID = 50
DEFAULT_LINKING_SAMPLES = 400

# Plaquette fluxes this close to pi make the branch choice of arg() ambiguous
MAX_PLAQUETTE_FLUX = 0.9 * np.pi

# Minimum grid size accepted by grid-based operations
MIN_GRID = 16

# Tolerance on the agreement between the pipelines for a gapped model
INVARIANT_AGREEMENT = 0.1


# Quench constants
# ----------------

# Initial Bloch vector: sigma_z eigenstate with eigenvalue -1
INITIAL_BLOCH_VECTOR = np.array([0.0, 0.0, -1.0])

# Defaults of the quench protocol
DEFAULT_DT = 0.01
DEFAULT_QUENCH_SAMPLES = 50
DEFAULT_T_MAX = 200.0
DEFAULT_T_POINTS = 64
DEFAULT_EPS_N = 1e-3

# A loop with more than this fraction of dropped momenta is unreliable
MAX_DROPPED_FRACTION = 0.10

# Oscillation amplitude below which a trajectory is considered stationary
MIN_PRECESSION_AMPLITUDE = 1e-8

# Convergence window of a linking series: last quarter within this distance of an integer
CONVERGENCE_WINDOW_FRACTION = 0.25
CONVERGENCE_TOLERANCE = 0.25

QUENCH_MODES = ("analytic", "dynamics")


# Sweep and output constants
# --------------------------

DEFAULT_MU_MIN = -6.0
DEFAULT_MU_MAX = 6.0
DEFAULT_MU_STEP = 0.25
DEFAULT_EXCLUSION = 0.1

# Default number of sweep rows computed concurrently
DEFAULT_CONCURRENCY = 4

# Significant digits of every float written to CSV/JSON
CSV_SIGNIFICANT_DIGITS = 12

DEFAULT_OUTPUT_DIR = "results"
