"""
Stochastic model reduction: a reduced basis from low-fidelity samples, regressed on a few
high-fidelity samples.
"""

import logging
import typing

import numpy as np
from scipy import linalg

from . import error
from .basis import PcBasis, measurement_matrix
from .const import LOGGER_NAME, RANK_CUTOFF
from .model import (
    BasisKind,
    BfModel,
    Ensemble,
    FitMethod,
    KlDecomposition,
    RankPolicy,
    ReducedBasis,
    SparseSolveOptions,
    StatSummary,
)
from .solvers import l12_minimize, least_squares

logger = logging.getLogger(LOGGER_NAME)

# Cumulative energy fractions this close below θ count as reaching it.
_ENERGY_GUARD = 1e-12


def _numerical_rank(lam: np.ndarray) -> int:
    if lam.size == 0 or lam[0] <= 0:
        return 0
    return int(np.count_nonzero(lam > RANK_CUTOFF * lam[0]))


class SmrResult(typing.NamedTuple):
    model: BfModel
    stats: StatSummary
    diagnostics: dict


def select_hf_indices(n_total: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draws ``n`` distinct sample indices uniformly without replacement, sorted ascending.

    :raises: :class:`.error.IncorrectConfig` - ``n`` is not within ``[1, N]``.
    """
    if not 1 <= n <= n_total:
        raise error.IncorrectConfig(f"Cannot select {n} HF samples out of {n_total}")
    return np.sort(rng.choice(n_total, size=n, replace=False))


def fit_pc(psi: np.ndarray, qoi: np.ndarray, method=FitMethod.AUTO, opts=None) -> np.ndarray:
    """
    PC coefficients of ``qoi`` on the measurement matrix ``psi``.

    :param psi: ``P×N`` measurement matrix.
    :param qoi: ``m×N`` samples.
    :param method: :class:`.model.FitMethod`.
    :param opts: :class:`.model.SparseSolveOptions` of the ℓ1,2 path.
    :return: ``m×P`` coefficients.
    """
    method = FitMethod.from_name(method)
    if method == FitMethod.AUTO:
        enough = psi.shape[1] >= 2 * psi.shape[0]
        method = FitMethod.LEAST_SQUARES if enough else FitMethod.L12
    logger.debug(f"PC fit of {qoi.shape[0]} points from {psi.shape[1]} samples via {method.tag}")
    if method == FitMethod.LEAST_SQUARES:
        return np.array(least_squares(psi, qoi).coefficients)
    report = l12_minimize(psi, qoi, opts or SparseSolveOptions())
    return np.array(report.coefficients)


def fit_lf_pc(
    lf: Ensemble, basis: PcBasis, opts: SparseSolveOptions = None, method=FitMethod.AUTO
) -> np.ndarray:
    """
    Fits the LF PC coefficients ``C^L``.

    :param lf: LF ensemble in canonical coordinates.
    :param basis: PC basis.
    :param opts: Options of the ℓ1,2 solver.
    :param method: :class:`.model.FitMethod`; ``AUTO`` picks least squares when ``N ≥ 2P``.
    :return: ``m×P`` coefficient matrix.
    """
    psi = measurement_matrix(basis, lf.inputs)
    return fit_pc(psi, lf.qoi, method, opts)


def kl_decompose(coefficients) -> KlDecomposition:
    """
    KL decomposition of the covariance ``Σ_{j≥2} c_j c_jᵀ`` through an SVD of ``C(:, 2:P)``.

    Each eigenvector is signed so that its largest-magnitude entry is positive.

    :param coefficients: ``m×P`` PC coefficients.
    :raises: :class:`.error.IncorrectData` - ``P < 2``.
    """
    c = np.atleast_2d(np.asarray(coefficients, dtype=float))
    if c.shape[1] < 2:
        raise error.IncorrectData("KL decomposition needs at least two PC coefficients")
    phi, s, _ = linalg.svd(c[:, 1:], full_matrices=False)
    if phi.size:
        pivots = np.argmax(np.abs(phi), axis=0)
        phi = phi * np.where(phi[pivots, np.arange(phi.shape[1])] < 0, -1.0, 1.0)
    return KlDecomposition(c[:, 0], s**2, phi)


def select_rank(eigenvalues, policy: RankPolicy = None) -> int:
    """
    Reduced rank ``r`` (including the constant function).

    The threshold policy returns the smallest ``r`` whose leading ``r − 1`` eigenvalues hold a
    fraction θ of the total; an explicit ``r`` is clipped to ``1 +`` the numerical rank.

    :raises: :class:`.error.NumericalFailure` - All-zero spectrum under the threshold policy.
    """
    policy = policy or RankPolicy()
    lam = np.asarray(eigenvalues, dtype=float)
    positive = _numerical_rank(lam)
    if policy.explicit:
        r = min(policy.r, 1 + positive)
        if r < policy.r:
            logger.warning(f"Rank {policy.r} clipped to {r} by the numerical rank of the spectrum")
        return r
    total = float(np.sum(lam))
    if total <= 0:
        raise error.NumericalFailure("Energy threshold needs a spectrum with positive energy")
    captured = np.cumsum(lam) / total
    modes = int(np.argmax(captured >= policy.threshold - _ENERGY_GUARD)) + 1
    return min(modes, positive) + 1


def build_reduced_basis(coefficients, kl: KlDecomposition, r: int, basis: PcBasis) -> ReducedBasis:
    """
    Reduced basis weights ``ω_ij = ⟨φ_i, c_j⟩/√λ_i`` for ``i < r``.

    :param coefficients: ``m×P`` LF PC coefficients.
    :param kl: Their :class:`.model.KlDecomposition`.
    :param r: Rank including the constant function.
    :param basis: The PC basis of ``coefficients``.
    :raises: :class:`.error.RankError` - ``r − 1`` exceeds the numerically positive eigenvalues.
    """
    c = np.atleast_2d(np.asarray(coefficients, dtype=float))
    if c.shape[1] != len(basis):
        raise error.DimensionMismatch("coefficient columns", len(basis), c.shape[1])
    if r < 1:
        raise error.IncorrectConfig(f"Reduced rank must be at least 1, got {r}")
    if r - 1 > kl.numerical_rank:
        raise error.RankError(r, 1 + kl.numerical_rank)
    lam = kl.eigenvalues[: r - 1]
    weights = (kl.eigenvectors[:, : r - 1].T @ c[:, 1:]) / np.sqrt(lam)[:, None]
    logger.debug(f"Reduced basis r={r} from P={len(basis)}")
    return ReducedBasis(weights, basis, kl.mean, kl.eigenvalues)


def eval_reduced_basis(rb: ReducedBasis, samples) -> np.ndarray:
    """
    Evaluates ``{1, η_1, …, η_{r−1}}`` at samples.

    :param rb: The reduced basis.
    :param samples: ``N×d`` canonical samples.
    :return: ``r×N`` matrix whose first row is all ones.
    """
    psi = measurement_matrix(rb.basis, samples)
    return np.vstack([np.ones((1, psi.shape[1])), rb.weights @ psi[1:]])


def bf_regress(eta_n, h_n) -> np.ndarray:
    """
    Least-squares BF coefficients ``C^B`` of ``min ‖C^B η_n − H_n‖_F``.

    Warns when fewer than ``r·log r`` samples are used.

    :param eta_n: ``r×n`` reduced basis at the HF samples.
    :param h_n: ``M×n`` HF samples.
    :return: ``M×r`` coefficients.
    """
    eta_n = np.asarray(eta_n, dtype=float)
    r, n = eta_n.shape
    if n < 1:
        raise error.IncorrectData("BF regression needs at least one HF sample")
    if r > 1 and n < r * np.log(r):
        logger.warning(f"Only {n} HF samples for rank {r}; about {r * np.log(r):.1f} recommended")
    return np.array(least_squares(eta_n, h_n).coefficients)


def fit_bf_model(rb: ReducedBasis, hf: Ensemble, indices) -> BfModel:
    """
    Regresses the HF samples at ``indices`` on the reduced basis.

    :param rb: The reduced basis.
    :param hf: Full HF ensemble (or the subset itself).
    :param indices: Sample indices into ``hf``.
    """
    indices = np.asarray(indices, dtype=int)
    eta = eval_reduced_basis(rb, hf.inputs[indices])
    return BfModel(bf_regress(eta, hf.qoi[:, indices]), rb, indices)


def bf_predict(model: BfModel, samples) -> np.ndarray:
    """``Ĥ = C^B η`` at the given ``N×d`` samples, ``M×N``."""
    return model.coefficients @ eval_reduced_basis(model.reduced, samples)


def statistics(coefficients, basis_kind=BasisKind.PC) -> StatSummary:
    """
    Mean (first column) and variance (row sum of squares of the other columns).

    :param coefficients: ``M×K`` coefficients on an orthonormal basis led by the constant.
    :param basis_kind: :class:`.model.BasisKind` the coefficients refer to.
    """
    c = np.atleast_2d(np.asarray(coefficients, dtype=float))
    if c.shape[1] < 1:
        raise error.IncorrectData("Statistics need at least one coefficient column")
    return StatSummary(c[:, 0], np.sum(c[:, 1:] ** 2, axis=1), basis_kind)


def relative_error(est: StatSummary, ref: StatSummary) -> typing.Tuple[float, float]:
    """
    Relative 2-norm errors ``‖ref − est‖/‖ref‖`` of the mean and the variance.

    :raises: :class:`.error.IncorrectData` - Zero-norm reference.
    """
    if len(est.mean) != len(ref.mean):
        raise error.DimensionMismatch("statistics length", len(ref.mean), len(est.mean))
    errors = []
    for name in ("mean", "variance"):
        r, e = getattr(ref, name), getattr(est, name)
        norm = np.linalg.norm(r)
        if norm == 0:
            raise error.IncorrectData(f"Reference {name} has zero norm")
        errors.append(float(np.linalg.norm(r - e) / norm))
    return errors[0], errors[1]


def pc_statistics(
    ensemble: Ensemble,
    basis: PcBasis,
    indices=None,
    method=FitMethod.AUTO,
    opts: SparseSolveOptions = None,
) -> StatSummary:
    """
    Statistics of a direct PC fit on (a subset of) one fidelity.

    :param ensemble: Samples of one fidelity.
    :param basis: PC basis.
    :param indices: Optional sample subset.
    :param method: :class:`.model.FitMethod`.
    :param opts: Options of the ℓ1,2 solver.
    """
    if indices is not None:
        ensemble = ensemble.subset(indices)
    psi = measurement_matrix(basis, ensemble.inputs)
    return statistics(fit_pc(psi, ensemble.qoi, method, opts), BasisKind.PC)


def interpolate_statistics(stats: StatSummary, from_coords, to_coords) -> StatSummary:
    """Linearly interpolates statistics between two sets of spatial points."""
    from_coords = np.asarray(from_coords, dtype=float)
    to_coords = np.asarray(to_coords, dtype=float)
    if len(from_coords) != len(stats.mean):
        raise error.DimensionMismatch("point coordinates", len(stats.mean), len(from_coords))
    order = np.argsort(from_coords)
    xs = from_coords[order]
    return StatSummary(
        np.interp(to_coords, xs, stats.mean[order]),
        np.interp(to_coords, xs, stats.variance[order]),
        stats.kind,
    )


def _shared_indices(lf: Ensemble, hf_subset: Ensemble) -> np.ndarray:
    lookup = {row.tobytes(): i for i, row in enumerate(lf.inputs)}
    try:
        return np.array([lookup[row.tobytes()] for row in hf_subset.inputs], dtype=int)
    except KeyError:
        raise error.IncorrectData("HF samples must be realizations of the LF ensemble") from None


def run_smr(
    lf: Ensemble,
    hf_subset: Ensemble,
    basis: PcBasis,
    rank_policy: RankPolicy = None,
    opts: SparseSolveOptions = None,
    method=FitMethod.AUTO,
) -> SmrResult:
    """
    Runs the whole reduction: LF PC fit, KL decomposition, rank choice, reduced basis, BF
    regression and statistics.

    :param lf: LF ensemble over all ``N`` realizations.
    :param hf_subset: HF samples at ``n`` of those realizations.
    :param basis: PC basis.
    :param rank_policy: :class:`.model.RankPolicy`, energy threshold by default.
    :param opts: Options of the ℓ1,2 solver used for the LF fit.
    :param method: :class:`.model.FitMethod` of the LF fit.
    :return: :class:`SmrResult`; diagnostics hold the LF coefficients, the KL decomposition,
        the spectrum and the chosen rank.
    """
    if hf_subset.dimension != lf.dimension:
        raise error.DimensionMismatch("input dimension", lf.dimension, hf_subset.dimension)
    hf_indices = _shared_indices(lf, hf_subset)
    logger.debug(f"Fitting LF PC expansion on {lf.n_samples} samples")
    c_lf = fit_lf_pc(lf, basis, opts, method)
    kl = kl_decompose(c_lf)
    r = select_rank(kl.eigenvalues, rank_policy)
    rb = build_reduced_basis(c_lf, kl, r, basis)
    eta = eval_reduced_basis(rb, hf_subset.inputs)
    model = BfModel(bf_regress(eta, hf_subset.qoi), rb, hf_indices)
    diagnostics = {
        "lf_coefficients": c_lf,
        "kl": kl,
        "eigenvalues": kl.eigenvalues,
        "r": r,
    }
    return SmrResult(model, statistics(model.coefficients, BasisKind.REDUCED), diagnostics)
