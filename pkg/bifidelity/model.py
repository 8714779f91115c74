import logging
import typing
from enum import IntEnum

import numpy as np

from . import error
from .const import (
    DEFAULT_ADMM_PENALTY,
    DEFAULT_DUAL_TOL,
    DEFAULT_ENERGY_THRESHOLD,
    DEFAULT_HOLDOUT_FRACTION,
    DEFAULT_LAMBDA_GRID,
    DEFAULT_MAX_ITERS,
    DEFAULT_PRIMAL_TOL,
    FEASIBILITY_TOL,
    LOGGER_NAME,
    RANK_CUTOFF,
)

if typing.TYPE_CHECKING:
    from .basis import PcBasis

logger = logging.getLogger(LOGGER_NAME)


def _frozen(values, ndim: int, what: str) -> np.ndarray:
    """Copies ``values`` into a read-only float array of the given rank."""
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise error.DimensionMismatch(f"{what} rank", ndim, arr.ndim)
    arr.setflags(write=False)
    return arr


def _finite(arr: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise error.IncorrectData(f"{what} contains non-finite entries")
    return arr


def _maybe_list(arr):
    return None if arr is None else np.asarray(arr).tolist()


class Tag(IntEnum):
    """
    Base of the string-tagged enums of this package.

    Members serialize as their lower-case name, see :attr:`tag`.
    """

    @property
    def tag(self) -> str:
        return self.name.lower().replace("_", "-")

    @classmethod
    def from_name(cls, name):
        """
        Gets a member from its tag, its name or one of the aliases in ``_aliases``.

        :param name: Tag string, or a member of this enum.
        :raises: :class:`.error.IncorrectConfig` - Unknown tag.
        """
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        aliases = getattr(cls, "_aliases", lambda: {})()
        if key in aliases:
            return cls[aliases[key]]
        try:
            return cls[key.upper()]
        except KeyError:
            raise error.IncorrectConfig(f"Unknown {cls.__name__} `{name}`") from None


class PolyFamily(Tag):
    """
    Orthonormal polynomial family, bound to the input distribution.
    """

    LEGENDRE = 1
    HERMITE = 2

    @staticmethod
    def _aliases():
        return {"uniform": "LEGENDRE", "gaussian": "HERMITE", "normal": "HERMITE"}


class Fidelity(Tag):
    LF = 1
    HF = 2

    @staticmethod
    def _aliases():
        return {"low": "LF", "high": "HF"}


class SolveMethod(Tag):
    QR = 1
    SVD_PINV = 2


class KappaPolicy(Tag):
    """
    How the residual tolerance of the sparse solver is chosen.

    ``EXPLICIT`` uses the given κ, ``HOLDOUT`` calibrates it on a random split.
    """

    EXPLICIT = 1
    HOLDOUT = 2


class FitMethod(Tag):
    """
    Regression used for PC coefficients. ``AUTO`` is least squares when N ≥ 2P, else ℓ1,2.
    """

    AUTO = 1
    LEAST_SQUARES = 2
    L12 = 3

    @staticmethod
    def _aliases():
        return {"ls": "LEAST_SQUARES", "lstsq": "LEAST_SQUARES", "l1,2": "L12"}


class BasisKind(Tag):
    PC = 1
    REDUCED = 2


class ModelKind(Tag):
    DIFFUSION1D = 1
    ANALYTIC = 2

    @staticmethod
    def _aliases():
        return {"diffusion": "DIFFUSION1D"}


class Ensemble:
    """
    Paired realizations of one fidelity.

    :ivar inputs: ``N×d`` input realizations in canonical coordinates.
    :ivar qoi: ``points×N`` quantity-of-interest samples, one column per realization.
    :ivar fidelity: :class:`Fidelity` of the samples.
    :ivar point_coords: Spatial locations of the QoI points, or ``None``.
    """

    def __init__(self, inputs, qoi, fidelity=Fidelity.LF, point_coords=None):
        inputs = np.asarray(inputs, dtype=float)
        qoi = np.asarray(qoi, dtype=float)
        if inputs.ndim == 1:
            inputs = inputs.reshape(-1, 1)
        self.inputs = _finite(_frozen(inputs, 2, "inputs"), "inputs")
        self.qoi = _finite(_frozen(qoi, 2, "qoi"), "qoi")
        if self.qoi.shape[1] != self.inputs.shape[0]:
            raise error.DimensionMismatch("qoi columns", self.inputs.shape[0], self.qoi.shape[1])
        self.fidelity = Fidelity.from_name(fidelity)
        self.point_coords = None
        if point_coords is not None:
            self.point_coords = _frozen(point_coords, 1, "point_coords")
            if len(self.point_coords) != self.qoi.shape[0]:
                raise error.DimensionMismatch(
                    "point_coords", self.qoi.shape[0], len(self.point_coords)
                )

    @property
    def n_samples(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_points(self) -> int:
        return self.qoi.shape[0]

    @property
    def dimension(self) -> int:
        return self.inputs.shape[1]

    def subset(self, indices) -> "Ensemble":
        """
        Ensemble restricted to the given sample indices (in the given order).

        :param indices: Sample indices into this ensemble.
        """
        indices = np.asarray(indices, dtype=int)
        return Ensemble(
            self.inputs[indices], self.qoi[:, indices], self.fidelity, self.point_coords
        )

    def __eq__(self, other):
        return (
            isinstance(other, Ensemble)
            and self.fidelity == other.fidelity
            and np.array_equal(self.inputs, other.inputs)
            and np.array_equal(self.qoi, other.qoi)
        )


class LsSolveReport:
    """
    Result of a Frobenius-norm least-squares solve.

    :ivar coefficients: ``M×P`` coefficient matrix.
    :ivar residual_fro: ``‖CΨ − U‖_F``.
    :ivar rank_used: Numerical rank of the design.
    :ivar method: :class:`SolveMethod` that produced the solution.
    """

    def __init__(self, coefficients, residual_fro: float, rank_used: int, method: SolveMethod):
        self.coefficients = _frozen(coefficients, 2, "coefficients")
        self.residual_fro = float(residual_fro)
        self.rank_used = int(rank_used)
        self.method = SolveMethod.from_name(method)


class SparseSolveOptions:
    """
    Options of :func:`.solvers.l12_minimize`.

    :ivar kappa_policy: :class:`KappaPolicy`.
    :ivar kappa: Residual tolerance, required for the explicit policy.
    :ivar lambda_grid: Penalty weights swept by the holdout policy, sorted descending.
    :ivar admm_penalty: Augmented Lagrangian penalty ρ.
    :ivar max_iters: Iteration cap of one splitting run.
    :ivar primal_tol: Relative primal residual tolerance.
    :ivar dual_tol: Relative dual residual tolerance.
    :ivar holdout_fraction: Fraction of samples held out when calibrating κ.
    :ivar seed: Seed of the holdout split.
    :ivar feasibility_tol: Relative slack on the κ constraint.
    """

    _keys = (
        "kappa_policy",
        "kappa",
        "lambda_grid",
        "admm_penalty",
        "max_iters",
        "primal_tol",
        "dual_tol",
        "holdout_fraction",
        "seed",
        "feasibility_tol",
    )

    def __init__(
        self,
        kappa_policy=KappaPolicy.HOLDOUT,
        kappa: typing.Optional[float] = None,
        lambda_grid: typing.Sequence[float] = DEFAULT_LAMBDA_GRID,
        admm_penalty: float = DEFAULT_ADMM_PENALTY,
        max_iters: int = DEFAULT_MAX_ITERS,
        primal_tol: float = DEFAULT_PRIMAL_TOL,
        dual_tol: float = DEFAULT_DUAL_TOL,
        holdout_fraction: float = DEFAULT_HOLDOUT_FRACTION,
        seed: int = 0,
        feasibility_tol: float = FEASIBILITY_TOL,
    ):
        self.kappa_policy = KappaPolicy.from_name(kappa_policy)
        if self.kappa_policy == KappaPolicy.EXPLICIT:
            if kappa is None or not kappa >= 0:
                raise error.IncorrectConfig("Explicit kappa policy needs kappa >= 0")
        self.kappa = None if kappa is None else float(kappa)
        grid = sorted({float(x) for x in lambda_grid}, reverse=True)
        if not grid or grid[-1] <= 0:
            raise error.IncorrectConfig("lambda_grid must be a non-empty set of positive reals")
        self.lambda_grid = tuple(grid)
        for name, value in (
            ("admm_penalty", admm_penalty),
            ("primal_tol", primal_tol),
            ("dual_tol", dual_tol),
            ("feasibility_tol", feasibility_tol),
        ):
            if not value > 0:
                raise error.IncorrectConfig(f"{name} must be positive")
        if not 0 < holdout_fraction < 1:
            raise error.IncorrectConfig("holdout_fraction must lie in (0, 1)")
        if int(max_iters) < 1:
            raise error.IncorrectConfig("max_iters must be at least 1")
        self.admm_penalty = float(admm_penalty)
        self.max_iters = int(max_iters)
        self.primal_tol = float(primal_tol)
        self.dual_tol = float(dual_tol)
        self.holdout_fraction = float(holdout_fraction)
        self.seed = int(seed)
        self.feasibility_tol = float(feasibility_tol)

    def replace(self, **kwargs) -> "SparseSolveOptions":
        """Copy of these options with some fields changed."""
        data = self.to_dict()
        data.update(kwargs)
        return SparseSolveOptions.from_dict(data)

    def to_dict(self) -> dict:
        data = {key: getattr(self, key) for key in self._keys}
        data["kappa_policy"] = self.kappa_policy.tag
        data["lambda_grid"] = list(self.lambda_grid)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "SparseSolveOptions":
        unknown = set(data) - set(cls._keys)
        if unknown:
            raise error.IncorrectConfig(f"Unknown solver option(s): {', '.join(sorted(unknown))}")
        return cls(**data)


class SparseSolveReport:
    """
    Result of :func:`.solvers.l12_minimize`.

    :ivar coefficients: ``M×P`` coefficient matrix.
    :ivar objective: ``‖C‖_{1,2}`` of the solution.
    :ivar residual_fro: Realized ``‖CΨ − U‖_F``.
    :ivar kappa: Residual tolerance the solution was computed for.
    :ivar selected_lambda: Penalty weight kept by the holdout sweep, ``None`` for explicit κ.
    :ivar iterations: Splitting iterations spent (summed over the sweep).
    :ivar converged: Whether the tolerances and the κ constraint were met.
    """

    def __init__(
        self,
        coefficients,
        objective: float,
        residual_fro: float,
        kappa: float,
        selected_lambda: typing.Optional[float],
        iterations: int,
        converged: bool,
    ):
        self.coefficients = _frozen(coefficients, 2, "coefficients")
        self.objective = float(objective)
        self.residual_fro = float(residual_fro)
        self.kappa = float(kappa)
        self.selected_lambda = None if selected_lambda is None else float(selected_lambda)
        self.iterations = int(iterations)
        self.converged = bool(converged)


class KlDecomposition:
    """
    Discrete KL expansion of the LF QoI from its PC coefficients.

    :ivar mean: LF mean, the first coefficient column.
    :ivar eigenvalues: Non-increasing, non-negative covariance eigenvalues.
    :ivar eigenvectors: ``m×rank`` orthonormal eigenvectors, columns matching ``eigenvalues``.
    """

    def __init__(self, mean, eigenvalues, eigenvectors):
        self.mean = _frozen(mean, 1, "mean")
        self.eigenvalues = _frozen(eigenvalues, 1, "eigenvalues")
        self.eigenvectors = _frozen(eigenvectors, 2, "eigenvectors")
        if np.any(self.eigenvalues < 0) or np.any(np.diff(self.eigenvalues) > 0):
            raise error.IncorrectData("eigenvalues must be non-negative and non-increasing")
        if self.eigenvectors.shape != (len(self.mean), len(self.eigenvalues)):
            raise error.DimensionMismatch(
                "eigenvectors", (len(self.mean), len(self.eigenvalues)), self.eigenvectors.shape
            )

    @property
    def numerical_rank(self) -> int:
        """Count of eigenvalues above ``RANK_CUTOFF`` times the largest one."""
        if len(self.eigenvalues) == 0 or self.eigenvalues[0] <= 0:
            return 0
        return int(np.count_nonzero(self.eigenvalues > RANK_CUTOFF * self.eigenvalues[0]))

    def normalized(self) -> np.ndarray:
        """Eigenvalues divided by the largest one (all zeros for an empty spectrum)."""
        if len(self.eigenvalues) == 0 or self.eigenvalues[0] <= 0:
            return np.zeros_like(self.eigenvalues)
        return self.eigenvalues / self.eigenvalues[0]


class ReducedBasis:
    """
    Reduced stochastic basis ``{1, η_1, …, η_{r−1}}``.

    .. note::
        The constant function is not stored in ``weights``; it is prepended on evaluation.

    :ivar r: Rank including the constant function.
    :ivar weights: ``(r−1)×(P−1)`` matrix Ω mapping non-constant PC functions to η.
    :ivar basis: The :class:`.basis.PcBasis` the weights refer to.
    :ivar mean: LF mean the basis was built from, if known.
    :ivar eigenvalues: LF KL eigenvalues the basis was built from, if known.
    """

    def __init__(self, weights, basis: "PcBasis", mean=None, eigenvalues=None):
        weights = np.asarray(weights, dtype=float)
        if weights.size == 0:
            weights = weights.reshape(0, len(basis) - 1)
        self.weights = _frozen(weights, 2, "weights")
        if self.weights.shape[1] != len(basis) - 1:
            raise error.DimensionMismatch("weights columns", len(basis) - 1, self.weights.shape[1])
        self.r = self.weights.shape[0] + 1
        self.basis = basis
        self.mean = None if mean is None else _frozen(mean, 1, "mean")
        self.eigenvalues = None if eigenvalues is None else _frozen(eigenvalues, 1, "eigenvalues")

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "weights": self.weights.tolist(),
            "basis": self.basis.to_dict(),
            "mean": _maybe_list(self.mean),
            "eigenvalues": _maybe_list(self.eigenvalues),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReducedBasis":
        from .basis import PcBasis

        basis = PcBasis.from_dict(data["basis"])
        weights = np.asarray(data["weights"], dtype=float).reshape(-1, len(basis) - 1)
        rb = cls(weights, basis, data.get("mean"), data.get("eigenvalues"))
        if "r" in data and data["r"] != rb.r:
            raise error.IncorrectData(f"Model file declares r={data['r']} but stores r={rb.r}")
        return rb


class BfModel:
    """
    Bi-fidelity surrogate: coefficients on a reduced basis.

    :ivar coefficients: ``M×r`` coefficient matrix ``C^B``.
    :ivar reduced: The :class:`ReducedBasis` the coefficients refer to.
    :ivar n_used: Count of HF samples the coefficients were regressed on.
    :ivar hf_indices: Indices of those samples in the shared ensemble.
    """

    def __init__(self, coefficients, reduced: ReducedBasis, hf_indices=()):
        self.coefficients = _frozen(coefficients, 2, "coefficients")
        if self.coefficients.shape[1] != reduced.r:
            raise error.DimensionMismatch(
                "coefficient columns", reduced.r, self.coefficients.shape[1]
            )
        self.reduced = reduced
        self.hf_indices = tuple(int(i) for i in hf_indices)
        self.n_used = len(self.hf_indices)

    @property
    def r(self) -> int:
        return self.reduced.r

    def to_dict(self) -> dict:
        return {
            "coefficients": self.coefficients.tolist(),
            "reduced_basis": self.reduced.to_dict(),
            "n_used": self.n_used,
            "hf_indices": list(self.hf_indices),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BfModel":
        reduced = ReducedBasis.from_dict(data["reduced_basis"])
        coefficients = np.asarray(data["coefficients"], dtype=float).reshape(-1, reduced.r)
        return cls(coefficients, reduced, data.get("hf_indices", ()))


class StatSummary:
    """
    Mean and variance of a vector QoI.

    :ivar mean: Mean per spatial point.
    :ivar variance: Variance per spatial point.
    :ivar kind: :class:`BasisKind` of the coefficients the statistics came from.
    """

    def __init__(self, mean, variance, kind=BasisKind.PC):
        self.mean = _frozen(mean, 1, "mean")
        self.variance = _frozen(variance, 1, "variance")
        if self.mean.shape != self.variance.shape:
            raise error.DimensionMismatch("variance", self.mean.shape, self.variance.shape)
        if np.any(self.variance < 0):
            raise error.IncorrectData("variance must be non-negative")
        self.kind = BasisKind.from_name(kind)

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "variance": self.variance.tolist(),
            "kind": self.kind.tag,
        }


class RankPolicy:
    """
    How the reduced rank ``r`` is chosen: an explicit ``r`` or an energy threshold θ.

    :ivar r: Explicit rank including the constant function, or ``None``.
    :ivar threshold: Captured-energy fraction θ in ``(0, 1]``, or ``None``.
    """

    def __init__(self, r: typing.Optional[int] = None, threshold: typing.Optional[float] = None):
        if r is not None and threshold is not None:
            raise error.IncorrectConfig("Rank policy takes either r or threshold, not both")
        if r is None and threshold is None:
            threshold = DEFAULT_ENERGY_THRESHOLD
        if r is not None and int(r) < 1:
            raise error.IncorrectConfig(f"Reduced rank must be at least 1, got {r}")
        if threshold is not None and not 0 < threshold <= 1:
            raise error.IncorrectConfig(f"Energy threshold must lie in (0, 1], got {threshold}")
        self.r = None if r is None else int(r)
        self.threshold = None if threshold is None else float(threshold)

    @property
    def explicit(self) -> bool:
        return self.r is not None

    def to_dict(self) -> dict:
        return {"r": self.r} if self.explicit else {"threshold": self.threshold}

    @classmethod
    def from_dict(cls, data: dict) -> "RankPolicy":
        unknown = set(data) - {"r", "threshold"}
        if unknown:
            raise error.IncorrectConfig(f"Unknown rank key(s): {', '.join(sorted(unknown))}")
        return cls(data.get("r"), data.get("threshold"))


class MidDecomposition:
    """
    Rank-``r`` matrix interpolative decomposition ``L ≈ L[:, skeleton] C̄``.

    :ivar rank: Rank ``r``.
    :ivar skeleton_indices: The ``r`` selected column indices, in pivot order.
    :ivar coefficients: ``r×N`` interpolation coefficients, identity on the skeleton columns.
    :ivar recon_error_fro: ``‖L − L̄‖_F``.
    """

    def __init__(self, skeleton_indices, coefficients, recon_error_fro: float):
        self.skeleton_indices = tuple(int(i) for i in skeleton_indices)
        if len(set(self.skeleton_indices)) != len(self.skeleton_indices):
            raise error.IncorrectData("skeleton indices must be distinct")
        self.rank = len(self.skeleton_indices)
        self.coefficients = _frozen(coefficients, 2, "coefficients")
        if self.coefficients.shape[0] != self.rank:
            raise error.DimensionMismatch("coefficient rows", self.rank, self.coefficients.shape[0])
        self.recon_error_fro = float(recon_error_fro)

    @property
    def n_samples(self) -> int:
        return self.coefficients.shape[1]

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "skeleton_indices": list(self.skeleton_indices),
            "recon_error_fro": self.recon_error_fro,
        }


class Theorem1Report:
    """
    A priori bound ``‖H − H̄‖₂ ≤ ρ_k(τ)`` evaluated over a (τ, k) grid.

    :ivar tau_grid: Evaluated τ values.
    :ivar k_values: Evaluated k values (those with ``σ_k > 0``).
    :ivar epsilon: ε(τ) per grid τ.
    :ivar rho: ``len(tau_grid)×len(k_values)`` matrix of ρ_k(τ).
    :ivar sigma: Singular values of L.
    :ivar coefficient_norm: ``‖C̄^L‖₂``.
    :ivar recon_error_2: ``‖L − L̄‖₂``.
    :ivar n_hat: HF columns used to estimate ε.
    :ivar scale: Factor ``N/n̂`` applied to ε.
    :ivar notes: Human readable notes, e.g. skipped k.
    """

    def __init__(
        self,
        tau_grid,
        k_values,
        epsilon,
        rho,
        sigma,
        coefficient_norm: float,
        recon_error_2: float,
        n_hat: int,
        scale: float,
        notes=(),
    ):
        self.tau_grid = _frozen(tau_grid, 1, "tau_grid")
        self.k_values = tuple(int(k) for k in k_values)
        self.epsilon = _frozen(epsilon, 1, "epsilon")
        self.rho = _frozen(np.reshape(rho, (len(self.tau_grid), len(self.k_values))), 2, "rho")
        self.sigma = _frozen(sigma, 1, "sigma")
        self.coefficient_norm = float(coefficient_norm)
        self.recon_error_2 = float(recon_error_2)
        self.n_hat = int(n_hat)
        self.scale = float(scale)
        self.notes = tuple(notes)
        if np.any(self.epsilon < 0):
            raise error.IncorrectData("epsilon must be non-negative")

    @property
    def best(self) -> typing.Tuple[typing.Optional[float], typing.Optional[int], float]:
        """``(τ*, k*, ρ*)`` minimizing the evaluated grid; ``(None, None, inf)`` when empty."""
        if self.rho.size == 0:
            return None, None, float("inf")
        i, j = np.unravel_index(int(np.argmin(self.rho)), self.rho.shape)
        return float(self.tau_grid[i]), self.k_values[j], float(self.rho[i, j])

    def to_dict(self) -> dict:
        tau, k, rho = self.best
        return {
            "tau_grid": self.tau_grid.tolist(),
            "k_values": list(self.k_values),
            "epsilon": self.epsilon.tolist(),
            "rho": self.rho.tolist(),
            "best": {"tau": tau, "k": k, "rho": rho},
            "sigma": self.sigma.tolist(),
            "coefficient_norm": self.coefficient_norm,
            "recon_error_2": self.recon_error_2,
            "n_hat": self.n_hat,
            "scale": self.scale,
            "notes": list(self.notes),
        }


class Theorem2Report:
    """
    Sample-count statement for the reduced-basis regression.

    :ivar mu: Coherence estimate.
    :ivar n: HF samples of the regression.
    :ivar r: Reduced rank.
    :ivar probability_lb: ``max(0, 1 − 2r·exp(−0.1 n/μ))``.
    :ivar clamped: Whether the raw probability was negative.
    :ivar bound_factor: ``1 + 4μ/n``.
    :ivar truncation_ms: Mean-square truncation residual per point (reference runs only).
    :ivar rhs: ``bound_factor·truncation_ms`` (reference runs only).
    """

    def __init__(
        self,
        mu: float,
        n: int,
        r: int,
        probability_lb: float,
        clamped: bool,
        bound_factor: float,
        truncation_ms=None,
    ):
        self.mu = float(mu)
        self.n = int(n)
        self.r = int(r)
        self.probability_lb = float(probability_lb)
        self.clamped = bool(clamped)
        self.bound_factor = float(bound_factor)
        self.truncation_ms = None if truncation_ms is None else _frozen(
            truncation_ms, 1, "truncation_ms"
        )
        self.rhs = None if self.truncation_ms is None else self.bound_factor * self.truncation_ms

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "n": self.n,
            "r": self.r,
            "probability_lb": self.probability_lb,
            "clamped": self.clamped,
            "bound_factor": self.bound_factor,
            "truncation_ms": _maybe_list(self.truncation_ms),
            "rhs": _maybe_list(self.rhs),
        }


class Corollary1Diagnostics:
    """
    Reference-only constants of the a priori statement.

    :ivar zeta: ζ_i per spatial point.
    :ivar zeta_bar: ζ̄ of the summed statement.
    :ivar rank: Numerical rank R of ``H − Ĥ``.
    :ivar rho: The ρ* the constants were computed against.
    """

    def __init__(self, zeta, zeta_bar: float, rank: int, rho: float):
        self.zeta = _frozen(zeta, 1, "zeta")
        self.zeta_bar = float(zeta_bar)
        self.rank = int(rank)
        self.rho = float(rho)

    def to_dict(self) -> dict:
        return {
            "zeta": self.zeta.tolist(),
            "zeta_bar": self.zeta_bar,
            "rank": self.rank,
            "rho": self.rho,
        }


class MomentSet:
    """
    Sample moments of the squared residuals ``V_{i,j}`` and their column sums ``W_j``.

    :ivar alpha_v: Mean of ``V_i`` per point.
    :ivar beta2_v: Variance of ``V_i`` per point.
    :ivar gamma_v: Third absolute central moment of ``V_i`` per point.
    :ivar alpha_w: Mean of ``W``.
    :ivar beta2_w: Variance of ``W``.
    :ivar gamma_w: Third absolute central moment of ``W``.
    :ivar n_hat: Sample count the moments were estimated from.
    """

    def __init__(self, alpha_v, beta2_v, gamma_v, alpha_w, beta2_w, gamma_w, n_hat: int):
        self.alpha_v = _frozen(alpha_v, 1, "alpha_v")
        self.beta2_v = _frozen(beta2_v, 1, "beta2_v")
        self.gamma_v = _frozen(gamma_v, 1, "gamma_v")
        self.alpha_w = float(alpha_w)
        self.beta2_w = float(beta2_w)
        self.gamma_w = float(gamma_w)
        self.n_hat = int(n_hat)
        for name in ("alpha_v", "beta2_v", "gamma_v"):
            if np.any(getattr(self, name) < 0):
                raise error.IncorrectData(f"{name} must be non-negative")
        if min(self.alpha_w, self.beta2_w, self.gamma_w) < 0:
            raise error.IncorrectData("moments of W must be non-negative")

    def to_dict(self) -> dict:
        return {
            "alpha_v": self.alpha_v.tolist(),
            "beta2_v": self.beta2_v.tolist(),
            "gamma_v": self.gamma_v.tolist(),
            "alpha_w": self.alpha_w,
            "beta2_w": self.beta2_w,
            "gamma_w": self.gamma_w,
            "n_hat": self.n_hat,
        }


class BoundReport:
    """
    Practical a posteriori error bounds.

    :ivar pointwise_bound: Bound on the mean-square error per point.
    :ivar pointwise_prob: Probability the pointwise bound holds, clamped to ``[0, 1]``.
    :ivar pointwise_clamped: Per point, whether the raw probability was negative.
    :ivar sum_bound: Bound on the summed mean-square error.
    :ivar sum_prob: Probability the summed bound holds, clamped to ``[0, 1]``.
    :ivar sum_clamped: Whether the raw summed probability was negative.
    :ivar t: The normal quantile the bounds were evaluated at.
    :ivar n_hat: HF samples used.
    :ivar true_error: Summed mean-square error over a full reference ensemble, if available.
    :ivar pointwise_true: Pointwise mean-square error over the reference, if available.
    :ivar efficacy: ``√(sum_bound/true_error)``, if available.
    """

    def __init__(
        self,
        pointwise_bound,
        pointwise_prob,
        sum_bound: float,
        sum_prob: float,
        t: float,
        n_hat: int,
        pointwise_clamped=None,
        sum_clamped: bool = False,
        true_error: typing.Optional[float] = None,
        pointwise_true=None,
        efficacy: typing.Optional[float] = None,
    ):
        self.pointwise_bound = _frozen(pointwise_bound, 1, "pointwise_bound")
        self.pointwise_prob = _frozen(pointwise_prob, 1, "pointwise_prob")
        if pointwise_clamped is None:
            pointwise_clamped = np.zeros(len(self.pointwise_prob), dtype=bool)
        self.pointwise_clamped = np.array(pointwise_clamped, dtype=bool)
        self.pointwise_clamped.setflags(write=False)
        self.sum_bound = float(sum_bound)
        self.sum_prob = float(sum_prob)
        self.sum_clamped = bool(sum_clamped)
        self.t = float(t)
        self.n_hat = int(n_hat)
        self.true_error = None if true_error is None else float(true_error)
        self.pointwise_true = None if pointwise_true is None else _frozen(
            pointwise_true, 1, "pointwise_true"
        )
        self.efficacy = None if efficacy is None else float(efficacy)
        if np.any(self.pointwise_bound < 0) or self.sum_bound < 0:
            raise error.IncorrectData("bounds must be non-negative")
        probs = np.append(self.pointwise_prob, self.sum_prob)
        if np.any(probs < 0) or np.any(probs > 1):
            raise error.IncorrectData("probabilities must lie in [0, 1]")

    def with_truth(self, pointwise_true, true_error: float, efficacy) -> "BoundReport":
        """Copy of this report carrying the reference error and efficacy."""
        return BoundReport(
            self.pointwise_bound,
            self.pointwise_prob,
            self.sum_bound,
            self.sum_prob,
            self.t,
            self.n_hat,
            self.pointwise_clamped,
            self.sum_clamped,
            true_error,
            pointwise_true,
            efficacy,
        )

    def to_dict(self) -> dict:
        return {
            "pointwise_bound": self.pointwise_bound.tolist(),
            "pointwise_prob": self.pointwise_prob.tolist(),
            "pointwise_clamped": self.pointwise_clamped.tolist(),
            "sum_bound": self.sum_bound,
            "sum_prob": self.sum_prob,
            "sum_clamped": self.sum_clamped,
            "t": self.t,
            "n_hat": self.n_hat,
            "true_error": self.true_error,
            "pointwise_true": _maybe_list(self.pointwise_true),
            "efficacy": self.efficacy,
        }


class AssessmentReport:
    """
    Everything :func:`.bounds.assess` computes for one bi-fidelity model.

    :ivar bounds: :class:`BoundReport`.
    :ivar theorem1: :class:`Theorem1Report`.
    :ivar theorem2: :class:`Theorem2Report`.
    :ivar mid: :class:`MidDecomposition` used by the a priori bound.
    :ivar corollary1: :class:`Corollary1Diagnostics`, reference runs only.
    """

    def __init__(self, bounds, theorem1, theorem2, mid, corollary1=None):
        self.bounds = bounds
        self.theorem1 = theorem1
        self.theorem2 = theorem2
        self.mid = mid
        self.corollary1 = corollary1

    def to_dict(self) -> dict:
        return {
            "bounds": self.bounds.to_dict(),
            "theorem1": self.theorem1.to_dict(),
            "theorem2": self.theorem2.to_dict(),
            "mid": self.mid.to_dict(),
            "corollary1": None if self.corollary1 is None else self.corollary1.to_dict(),
        }


class ModelPairSpec:
    """
    A built-in LF/HF model pair.

    :ivar kind: :class:`ModelKind`.
    :ivar lf_points: LF grid size ``m`` (nodes, including boundary nodes).
    :ivar hf_points: HF grid size ``M`` (nodes, including boundary nodes).
    :ivar d: Input dimension.
    :ivar input_ranges: Physical ``[a, b]`` range per input, for reporting only.
    :ivar seed: Default sampling seed.
    """

    _keys = ("kind", "lf_points", "hf_points", "d", "input_ranges", "seed")

    def __init__(
        self,
        kind,
        lf_points: int,
        hf_points: int,
        d: int = 2,
        input_ranges=None,
        seed: int = 0,
    ):
        self.kind = ModelKind.from_name(kind)
        self.lf_points = int(lf_points)
        self.hf_points = int(hf_points)
        self.d = int(d)
        if self.d != 2:
            raise error.IncorrectConfig(f"Model `{self.kind.tag}` takes 2 inputs, got d={d}")
        minimum = 3 if self.kind == ModelKind.DIFFUSION1D else 2
        if min(self.lf_points, self.hf_points) < minimum:
            raise error.IncorrectConfig(f"Model `{self.kind.tag}` needs grids of {minimum}+ nodes")
        if input_ranges is None:
            input_ranges = [(-1.0, 1.0)] * self.d
        ranges = [tuple(float(v) for v in pair) for pair in input_ranges]
        if len(ranges) != self.d or any(len(pair) != 2 or not pair[0] < pair[1] for pair in ranges):
            raise error.IncorrectConfig("input_ranges needs one increasing [a, b] pair per input")
        self.input_ranges = tuple(ranges)
        self.seed = int(seed)
        if self.lf_points >= self.hf_points:
            logger.warning(
                f"LF grid ({self.lf_points}) is not coarser than HF grid ({self.hf_points})"
            )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.tag,
            "lf_points": self.lf_points,
            "hf_points": self.hf_points,
            "d": self.d,
            "input_ranges": [list(pair) for pair in self.input_ranges],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelPairSpec":
        unknown = set(data) - set(cls._keys)
        if unknown:
            raise error.IncorrectConfig(f"Unknown model key(s): {', '.join(sorted(unknown))}")
        if "kind" not in data:
            raise error.IncorrectConfig("Model kind must be specified")
        return cls(**data)

    def __eq__(self, other):
        return isinstance(other, ModelPairSpec) and self.to_dict() == other.to_dict()
