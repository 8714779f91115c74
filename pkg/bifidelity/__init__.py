"""
bifidelity
~~~~~~~~~~
Bi-fidelity stochastic model reduction with polynomial chaos, interpolative decomposition and
practical error bounds.
:copyright: (c) 2021 bifidelity developers
:license: MIT
"""

from .basis import PcBasis, measurement_matrix, total_degree_indices  # noqa: F401
from .bounds import assess, compute_moments, practical_bounds, rho_k_tau  # noqa: F401
from .config import RunConfig  # noqa: F401
from .const import __version__  # noqa: F401
from .error import (  # noqa: F401
    BifidelityError,
    IncorrectConfig,
    IncorrectData,
    NumericalFailure,
)
from .harness import ExperimentHarness  # noqa: F401
from .mid import mid_bifidelity, mid_decompose  # noqa: F401
from .model import (  # noqa: F401
    BfModel,
    Ensemble,
    Fidelity,
    FitMethod,
    KappaPolicy,
    ModelKind,
    ModelPairSpec,
    PolyFamily,
    RankPolicy,
    SparseSolveOptions,
)
from .pairs import generate_ensemble  # noqa: F401
from .smr import bf_predict, run_smr  # noqa: F401
from .solvers import l12_minimize, least_squares  # noqa: F401
