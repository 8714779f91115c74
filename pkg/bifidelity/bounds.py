"""
Error bounds of bi-fidelity estimates.

A priori: the Gramian discrepancy ε(τ), the bound ρ_k(τ) on ``‖H − H̄‖₂``, the coherence of
the reduced basis and the resulting sample-count statement.
A posteriori: Berry-Esseen bounds on the mean-square error from a few HF samples.
"""

import logging
import typing

import numpy as np
from scipy import linalg
from scipy.special import ndtr

from . import error
from .basis import sample_canonical
from .const import (
    BERRY_ESSEEN_C,
    COHERENCE_POOL_SIZE,
    DEFAULT_T,
    LOGGER_NAME,
    TAU_GRID_POINTS,
    TAU_GRID_SPAN,
)
from .mid import mid_bifidelity, mid_decompose
from .model import (
    AssessmentReport,
    BfModel,
    BoundReport,
    Corollary1Diagnostics,
    Ensemble,
    MidDecomposition,
    MomentSet,
    ReducedBasis,
    Theorem1Report,
    Theorem2Report,
)
from .smr import bf_predict, eval_reduced_basis

logger = logging.getLogger(LOGGER_NAME)

# Relative singular value cutoff for the rank of H - Ĥ.
_RESIDUAL_RANK_TOL = 1e-10


def normal_cdf(t):
    """Standard normal CDF Φ(t)."""
    return ndtr(t)


def coherence(rb: ReducedBasis, pool) -> float:
    """
    ``μ̂ = max_ξ Σ_j η_j(ξ)²`` over a pool of candidate inputs.

    .. note::
        This is a lower estimate of the supremum over the whole input domain.

    :param rb: The reduced basis.
    :param pool: ``K×d`` candidate inputs.
    :raises: :class:`.error.IncorrectData` - Empty pool.
    """
    pool = np.asarray(pool, dtype=float)
    if pool.ndim != 2 or pool.shape[0] == 0:
        raise error.IncorrectData("Coherence needs a non-empty pool of inputs")
    eta = eval_reduced_basis(rb, pool)
    return float(np.max(np.sum(eta**2, axis=0)))


def _matched(h_cols, l_cols) -> typing.Tuple[np.ndarray, np.ndarray]:
    h = np.atleast_2d(np.asarray(h_cols, dtype=float))
    l_mat = np.atleast_2d(np.asarray(l_cols, dtype=float))
    if h.shape[1] != l_mat.shape[1]:
        raise error.DimensionMismatch("matched columns", l_mat.shape[1], h.shape[1])
    return h, l_mat


def epsilon_tau(h_cols, l_cols, tau: float, n_total: typing.Optional[int] = None) -> float:
    """
    ``ε(τ) = ‖HᵀH − τLᵀL‖₂`` on matched columns.

    :param h_cols: ``M×n̂`` HF columns.
    :param l_cols: ``m×n̂`` LF columns of the same realizations.
    :param tau: Non-negative scaling τ.
    :param n_total: When given, ε is scaled by ``N/n̂`` to full-ensemble size.
    """
    h, l_mat = _matched(h_cols, l_cols)
    if tau < 0:
        raise error.IncorrectConfig(f"tau must be non-negative, got {tau}")
    gram = h.T @ h - tau * (l_mat.T @ l_mat)
    eps = float(np.max(np.abs(linalg.eigvalsh(gram)))) if gram.size else 0.0
    if n_total is not None:
        eps *= n_total / h.shape[1]
    return eps


def default_tau_grid(
    h_cols, l_cols, points: int = TAU_GRID_POINTS, span: float = TAU_GRID_SPAN
) -> np.ndarray:
    """
    Log-spaced τ values over ``[τ₀/span, τ₀·span]`` with ``τ₀ = ‖H‖²_F/‖L‖²_F``.

    Falls back to ``τ₀ = 1`` when either matrix vanishes.
    """
    h, l_mat = _matched(h_cols, l_cols)
    l_norm = np.linalg.norm(l_mat) ** 2
    tau0 = np.linalg.norm(h) ** 2 / l_norm if l_norm > 0 else 0.0
    if not np.isfinite(tau0) or tau0 <= 0:
        tau0 = 1.0
    return tau0 * np.logspace(-np.log10(span), np.log10(span), points)


def rho_k_tau(
    mat,
    dec: MidDecomposition,
    epsilon: typing.Callable[[float], float],
    tau_grid,
    k_values: typing.Optional[typing.Iterable[int]] = None,
    n_hat: typing.Optional[int] = None,
    scale: float = 1.0,
) -> Theorem1Report:
    """
    Evaluates ``ρ_k(τ) = (1 + ‖C̄‖₂)·√(τσ²_{k+1} + ε(τ)) + ‖L − L̄‖₂·√(τ + ε(τ)/σ_k²)``.

    ``σ_{k+1}`` is taken as zero at ``k = rank(L)``; values of ``k`` with ``σ_k = 0`` are
    skipped with a note.

    :param mat: ``m×N`` LF matrix ``L``.
    :param dec: MID of ``L``.
    :param epsilon: ``τ ↦ ε(τ)``.
    :param tau_grid: Positive τ values.
    :param k_values: ``k`` to evaluate, ``1 … rank(L)`` by default.
    :param n_hat: HF columns behind ``epsilon``, for the report.
    :param scale: Scale factor applied inside ``epsilon``, for the report.
    """
    l_mat = np.asarray(mat, dtype=float)
    tau_grid = np.asarray(tau_grid, dtype=float).ravel()
    if np.any(tau_grid <= 0):
        raise error.IncorrectConfig("tau grid must be positive")
    sigma = linalg.svdvals(l_mat)
    rank = 0
    if sigma.size and sigma[0] > 0:
        rank = int(np.count_nonzero(sigma > max(l_mat.shape) * np.finfo(float).eps * sigma[0]))
    coefficient_norm = float(np.linalg.norm(dec.coefficients, 2))
    l_bar = l_mat[:, list(dec.skeleton_indices)] @ dec.coefficients
    recon_2 = float(np.linalg.norm(l_mat - l_bar, 2))
    if k_values is None:
        k_values = range(1, rank + 1)

    notes = []
    kept = []
    for k in k_values:
        if k < 1 or k > rank:
            notes.append(f"k={k} skipped: sigma_k is zero")
            logger.warning(f"rho grid: k={k} skipped, sigma_k = 0")
            continue
        kept.append(k)
    eps = np.array([epsilon(float(tau)) for tau in tau_grid])
    rho = np.empty((len(tau_grid), len(kept)))
    for j, k in enumerate(kept):
        sigma_k = sigma[k - 1]
        sigma_next = sigma[k] if k < rank else 0.0
        rho[:, j] = (1.0 + coefficient_norm) * np.sqrt(tau_grid * sigma_next**2 + eps)
        rho[:, j] += recon_2 * np.sqrt(tau_grid + eps / sigma_k**2)
    return Theorem1Report(
        tau_grid,
        kept,
        eps,
        rho,
        sigma,
        coefficient_norm,
        recon_2,
        l_mat.shape[1] if n_hat is None else n_hat,
        scale,
        notes,
    )


def theorem2_report(mu: float, n: int, r: int, truncation_ms=None) -> Theorem2Report:
    """
    Probability ``max(0, 1 − 2r·exp(−0.1n/μ))`` and factor ``1 + 4μ/n`` of the regression bound.

    :param mu: Coherence estimate, at least 1.
    :param n: HF samples of the regression.
    :param r: Reduced rank.
    :param truncation_ms: Mean-square truncation residual per point, reference runs only.
    """
    if n < 1:
        raise error.IncorrectConfig(f"Sample count must be at least 1, got {n}")
    if mu < 1:
        raise error.IncorrectData(f"Coherence is at least 1 for a basis led by 1, got {mu}")
    raw = 1.0 - 2.0 * r * np.exp(-0.1 * n / mu)
    if raw < 0:
        logger.debug(f"Sample-count probability {raw:.3g} clamped to 0 (n={n}, mu={mu:.3g})")
    prob = min(max(raw, 0.0), 1.0)
    return Theorem2Report(mu, n, r, prob, raw < 0, 1.0 + 4.0 * mu / n, truncation_ms)


def true_mse(h, h_hat) -> typing.Tuple[np.ndarray, float]:
    """
    Mean-square error over a reference ensemble.

    :return: ``(pointwise MSE over columns, their sum)``.
    """
    h = np.atleast_2d(np.asarray(h, dtype=float))
    h_hat = np.atleast_2d(np.asarray(h_hat, dtype=float))
    if h.shape != h_hat.shape:
        raise error.DimensionMismatch("estimate shape", h.shape, h_hat.shape)
    if h.shape[1] == 0:
        raise error.IncorrectData("Reference ensemble is empty")
    pointwise = np.mean((h - h_hat) ** 2, axis=1)
    return pointwise, float(np.sum(pointwise))


def corollary1_diagnostics(h, h_hat, rho: float, n: int, mu: float) -> Corollary1Diagnostics:
    """
    Constants ``ζ_i = N·E(δ²_i)/ρ²``, ``ζ̄`` and ``R = rank(H − Ĥ)`` of the a priori statement.

    :param h: ``M×N`` full HF reference.
    :param h_hat: BF estimate of it.
    :param rho: Grid minimum ρ*.
    :param n: HF samples of the regression.
    :param mu: Coherence estimate.
    :raises: :class:`.error.DegenerateBound` - ``ρ* = 0``.
    """
    if not rho > 0:
        raise error.DegenerateBound("rho* vanishes, HF and LF Gramians are proportional")
    pointwise, _ = true_mse(h, h_hat)
    n_total = np.shape(h)[1]
    zeta = n_total * pointwise / rho**2
    sv = linalg.svdvals(np.asarray(h, dtype=float) - np.asarray(h_hat, dtype=float))
    rank = int(np.count_nonzero(sv > _RESIDUAL_RANK_TOL * sv[0])) if sv.size and sv[0] > 0 else 0
    factor = 1.0 + 4.0 * mu / n
    zeta_bar = float(np.sum(zeta) / (factor * rank)) if rank else 0.0
    return Corollary1Diagnostics(zeta, zeta_bar, rank, rho)


def _moments(v: np.ndarray) -> typing.Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Plug-in mean, variance and third absolute central moment along the last axis."""
    alpha = np.mean(v, axis=-1)
    dev = v - alpha[..., None]
    beta2 = np.mean(dev**2, axis=-1)
    gamma = np.mean(np.abs(dev) ** 3, axis=-1)
    flat = np.ptp(v, axis=-1) == 0
    alpha = np.where(flat, v[..., 0], alpha)
    beta2 = np.where(flat, 0.0, beta2)
    gamma = np.where(flat, 0.0, gamma)
    return alpha, beta2, gamma


def compute_moments(h_sub, h_hat_sub) -> MomentSet:
    """
    Moments of ``V_ij = |H_ij − Ĥ_ij|²`` per point and of ``W_j = Σ_i V_ij``.

    :param h_sub: ``M×n̂`` HF samples.
    :param h_hat_sub: BF estimate at the same samples.
    :raises: :class:`.error.IncorrectData` - ``n̂ < 2``.
    """
    h = np.atleast_2d(np.asarray(h_sub, dtype=float))
    h_hat = np.atleast_2d(np.asarray(h_hat_sub, dtype=float))
    if h.shape != h_hat.shape:
        raise error.DimensionMismatch("estimate shape", h.shape, h_hat.shape)
    if h.shape[1] < 2:
        raise error.IncorrectData("Moment estimates need at least two HF samples")
    v = (h - h_hat) ** 2
    alpha_v, beta2_v, gamma_v = _moments(v)
    alpha_w, beta2_w, gamma_w = _moments(np.sum(v, axis=0))
    return MomentSet(alpha_v, beta2_v, gamma_v, alpha_w, beta2_w, gamma_w, h.shape[1])


def _berry_esseen(alpha, beta2, gamma, n_hat: int, t: float):
    beta = np.sqrt(beta2)
    bound = alpha + t * beta / np.sqrt(n_hat)
    degenerate = beta == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        penalty = BERRY_ESSEEN_C * gamma / (beta**3 * np.sqrt(n_hat))
    raw = np.where(degenerate, 1.0, normal_cdf(t) - np.where(degenerate, 0.0, penalty))
    return bound, np.clip(raw, 0.0, 1.0), raw < 0


def practical_bounds(moments: MomentSet, t: float = DEFAULT_T) -> BoundReport:
    """
    Bounds ``α + tβ/√n̂`` on the pointwise and the summed mean-square error.

    They hold with probability at least ``Φ(t) − C·γ/(β³√n̂)``, clamped to ``[0, 1]``; a
    vanishing β gives the bound α with probability 1.

    :param moments: :class:`.model.MomentSet` of the residuals.
    :param t: Non-negative normal quantile.
    """
    if t < 0:
        raise error.IncorrectConfig(f"t must be non-negative, got {t}")
    n_hat = moments.n_hat
    bound_v, prob_v, clamped_v = _berry_esseen(
        moments.alpha_v, moments.beta2_v, moments.gamma_v, n_hat, t
    )
    bound_w, prob_w, clamped_w = _berry_esseen(
        np.array(moments.alpha_w), np.array(moments.beta2_w), np.array(moments.gamma_w), n_hat, t
    )
    if np.any(clamped_v) or clamped_w:
        logger.warning(f"Berry-Esseen probabilities clamped to 0 with n_hat={n_hat}")
    return BoundReport(
        bound_v, prob_v, float(bound_w), float(prob_w), t, n_hat, clamped_v, bool(clamped_w)
    )


def efficacy(bound: float, true_mse_value: float) -> float:
    """
    ``√(bound/true)``; at least 1 when the bound does not underestimate.

    :raises: :class:`.error.DegenerateBound` - Zero true error.
    """
    if not true_mse_value > 0:
        raise error.DegenerateBound("Efficacy is undefined for a zero true error")
    if bound < 0:
        raise error.IncorrectData("Bounds are non-negative")
    return float(np.sqrt(bound / true_mse_value))


def assess(
    lf: Ensemble,
    hf: Ensemble,
    model: BfModel,
    mid_rank: typing.Optional[int] = None,
    bound_indices=None,
    t: float = DEFAULT_T,
    reference: bool = True,
    tau_grid=None,
    rng: typing.Optional[np.random.Generator] = None,
    pool_size: int = COHERENCE_POOL_SIZE,
) -> AssessmentReport:
    """
    Practical bounds, a priori quantities and, with a full HF reference, the true errors.

    :param lf: LF ensemble over all ``N`` realizations.
    :param hf: HF ensemble; with ``reference`` set every column is used as truth, otherwise
        only the bound columns are read.
    :param model: The bi-fidelity model under assessment.
    :param mid_rank: Rank of the interpolative decomposition, ``model.r`` by default.
    :param bound_indices: HF samples for the moments and ε, the fitting samples by default.
    :param t: Normal quantile of the practical bounds.
    :param reference: Whether ``hf`` is a full reference ensemble.
    :param tau_grid: τ values, :func:`default_tau_grid` by default.
    :param rng: Generator for the coherence pool.
    :param pool_size: Size of the coherence pool.
    """
    if lf.n_samples != hf.n_samples:
        raise error.DimensionMismatch("sample count", lf.n_samples, hf.n_samples)
    idx = np.asarray(model.hf_indices if bound_indices is None else bound_indices, dtype=int)
    if idx.size == 0:
        raise error.IncorrectData("No HF samples to assess the model with")
    h_sub = hf.qoi[:, idx]
    l_sub = lf.qoi[:, idx]
    h_hat_sub = bf_predict(model, hf.inputs[idx])
    bounds = practical_bounds(compute_moments(h_sub, h_hat_sub), t)

    n_total = lf.n_samples
    rank = min(mid_rank or model.r, *lf.qoi.shape)
    dec = mid_decompose(lf.qoi, rank)
    scale = n_total / len(idx)
    grid = default_tau_grid(h_sub, l_sub) if tau_grid is None else tau_grid
    theorem1 = rho_k_tau(
        lf.qoi,
        dec,
        lambda tau: epsilon_tau(h_sub, l_sub, tau, n_total),
        grid,
        n_hat=len(idx),
        scale=scale,
    )

    rng = rng or np.random.default_rng(0)
    pool = sample_canonical(model.reduced.basis.family, pool_size, lf.dimension, rng)
    mu = coherence(model.reduced, pool)

    corollary = None
    truncation = None
    if reference:
        h_hat = bf_predict(model, hf.inputs)
        pointwise, summed = true_mse(hf.qoi, h_hat)
        truncation = pointwise
        eff = efficacy(bounds.sum_bound, summed) if summed > 0 else None
        bounds = bounds.with_truth(pointwise, summed, eff)
        rho_star = theorem1.best[2]
        if 0 < rho_star < np.inf:
            corollary = corollary1_diagnostics(hf.qoi, h_hat, rho_star, model.n_used, mu)
        logger.debug(f"True MSE {summed:.6g}, sum bound {bounds.sum_bound:.6g}")
    theorem2 = theorem2_report(mu, max(model.n_used, 1), model.r, truncation)
    return AssessmentReport(bounds, theorem1, theorem2, dec, corollary)


def mid_spectral_error(hf_mat, dec: MidDecomposition) -> float:
    """``‖H − H̄‖₂``, the quantity a priori bound controls."""
    h = np.asarray(hf_mat, dtype=float)
    return float(np.linalg.norm(h - mid_bifidelity(h, dec), 2))
