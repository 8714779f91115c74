"""Bifidelity Constants"""

__version__ = "1.0.0"

LOGGER_NAME = "bifidelity"
LOG_ENV = "BIFI_LOG"

# Exit codes of the command line harness.
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

MAX_BASIS_SIZE = 10**6

# Solvers
FEASIBILITY_TOL = 1e-6
DEFAULT_ADMM_PENALTY = 1.0
DEFAULT_MAX_ITERS = 5000
DEFAULT_PRIMAL_TOL = 1e-8
DEFAULT_DUAL_TOL = 1e-8
DEFAULT_HOLDOUT_FRACTION = 0.2
DEFAULT_LAMBDA_GRID = tuple(10.0**k for k in range(0, -11, -1))

# Stochastic model reduction
RANK_CUTOFF = 1e-14
DEFAULT_ENERGY_THRESHOLD = 0.9999

# Interpolative decomposition
MID_COND_LIMIT = 1e12
PIVOT_TIE_TOL = 1e-10

# Bounds
DEFAULT_T = 2.0
BERRY_ESSEEN_C = 0.4748
TAU_GRID_POINTS = 25
TAU_GRID_SPAN = 1e3
COHERENCE_POOL_SIZE = 10**4

# Experiments
DEFAULT_REPETITIONS = 100
DEFAULT_BOUND_REPETITIONS = 30
