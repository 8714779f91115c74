"""
Regression solvers for coefficient matrices ``C`` of ``CΨ ≈ U``.

Both solvers take the measurement matrix ``Ψ`` as ``P×N`` and the data ``U`` as ``M×N``.
"""

import logging
import typing

import numpy as np
from scipy import linalg

from . import error
from .const import LOGGER_NAME
from .model import KappaPolicy, LsSolveReport, SolveMethod, SparseSolveOptions, SparseSolveReport

logger = logging.getLogger(LOGGER_NAME)

# Residuals within this fraction of ‖U‖_F of the target count as attained.
_ROUNDING_FLOOR = 1e-12


def _operands(psi, u) -> typing.Tuple[np.ndarray, np.ndarray]:
    psi = np.asarray(psi, dtype=float)
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u.reshape(1, -1)
    if psi.ndim != 2 or u.ndim != 2:
        raise error.IncorrectData("Measurement matrix and data must be matrices")
    if psi.shape[1] != u.shape[1]:
        raise error.DimensionMismatch("sample count", psi.shape[1], u.shape[1])
    if psi.size == 0 or u.shape[1] == 0:
        raise error.IncorrectData("Cannot regress on empty inputs")
    if not (np.all(np.isfinite(psi)) and np.all(np.isfinite(u))):
        raise error.IncorrectData("Regression inputs contain non-finite entries")
    return psi, u


def least_squares(psi, u) -> LsSolveReport:
    """
    Minimum-Frobenius-norm minimizer of ``‖CΨ − U‖_F``.

    Full-rank designs are solved with a column-pivoted QR of ``Ψᵀ``; rank-deficient or
    under-determined ones fall back to the SVD-based pseudoinverse solution.

    :param psi: ``P×N`` measurement matrix.
    :param u: ``M×N`` data.
    :raises: :class:`.error.IncorrectData` - Empty or non-finite inputs.
    """
    psi, u = _operands(psi, u)
    a, b = psi.T, u.T
    n_rows, n_cols = a.shape
    q, r, piv = linalg.qr(a, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = max(n_rows, n_cols) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int(np.count_nonzero(diag > tol)) if diag.size and diag[0] > 0 else 0

    if rank == n_cols:
        x = np.empty((n_cols, b.shape[1]))
        x[piv] = linalg.solve_triangular(r, q.T @ b)
        method = SolveMethod.QR
    else:
        x, _, rank, _ = linalg.lstsq(a, b, lapack_driver="gelsd")
        method = SolveMethod.SVD_PINV
    coefficients = x.T
    residual = float(np.linalg.norm(coefficients @ psi - u))
    logger.debug(f"Least squares P={n_cols} N={n_rows} rank={rank} via {method.tag}")
    return LsSolveReport(coefficients, residual, rank, method)


def l12_norm(c) -> float:
    """``‖C‖_{1,2} = (Σ_i ‖C(i,:)‖₁²)^{1/2}``, rows being spatial points."""
    c = np.atleast_2d(np.asarray(c, dtype=float))
    return float(np.sqrt(np.sum(np.sum(np.abs(c), axis=1) ** 2)))


def prox_l12_squared(v, w: float) -> np.ndarray:
    """
    Row-wise proximal map of ``(w/2)‖x‖₁²``.

    The solution soft-thresholds each row at ``θ = w·S_k/(1 + w·k)``, with ``S_k`` the sum of
    the ``k`` largest magnitudes and ``k`` the largest count whose ``k``-th magnitude
    exceeds its threshold.

    :param v: Matrix to shrink, row by row.
    :param w: Non-negative weight.
    """
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if w <= 0 or v.size == 0:
        return v.copy()
    a = -np.sort(-np.abs(v), axis=1)
    s = np.cumsum(a, axis=1)
    k = np.arange(1, v.shape[1] + 1)
    thetas = w * s / (1.0 + w * k)
    active = a > thetas
    last = v.shape[1] - 1 - np.argmax(active[:, ::-1], axis=1)
    theta = np.where(active.any(axis=1), thetas[np.arange(v.shape[0]), last], 0.0)
    return np.sign(v) * np.maximum(np.abs(v) - theta[:, None], 0.0)


def calibrate_kappa(psi, u, holdout_fraction: float, seed: int) -> float:
    """
    Residual tolerance from a preliminary least-squares fit on a random split.

    The holdout residual is scaled by ``√(N/N_holdout)`` to full-data size and floored at the
    full-data least-squares residual.

    :param psi: ``P×N`` measurement matrix.
    :param u: ``M×N`` data.
    :param holdout_fraction: Fraction of columns held out.
    :param seed: Seed of the split.
    :raises: :class:`.error.IncorrectData` - Fewer than two samples.
    """
    psi, u = _operands(psi, u)
    n = psi.shape[1]
    if n < 2:
        raise error.IncorrectData("Holdout calibration needs at least two samples")
    n_hold = min(max(1, int(round(holdout_fraction * n))), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    hold, train = perm[:n_hold], perm[n_hold:]
    fit = least_squares(psi[:, train], u[:, train])
    holdout = np.linalg.norm(fit.coefficients @ psi[:, hold] - u[:, hold])
    kappa = max(float(holdout * np.sqrt(n / n_hold)), least_squares(psi, u).residual_fro)
    logger.debug(f"Calibrated kappa={kappa:.6g} from {n_hold} held-out samples")
    return kappa


class _Scaled:
    """``Ψ`` and ``U`` normalized to unit spectral and Frobenius norm."""

    def __init__(self, psi: np.ndarray, u: np.ndarray):
        self.psi_scale = float(np.linalg.norm(psi, 2)) or 1.0
        self.u_scale = float(np.linalg.norm(u)) or 1.0
        self.psi = psi / self.psi_scale
        self.u = u / self.u_scale

    def unscale(self, c: np.ndarray) -> np.ndarray:
        return c * self.u_scale / self.psi_scale

    def residual(self, c: np.ndarray) -> float:
        return float(np.linalg.norm(c @ self.psi - self.u))


def _stopped(r_pri, eps_pri, r_dual, eps_dual) -> bool:
    return r_pri <= eps_pri and r_dual <= eps_dual


def _penalized_admm(
    prob: _Scaled, lam: float, opts: SparseSolveOptions, start=None
) -> typing.Tuple[np.ndarray, int, bool, tuple]:
    """Splitting for ``½‖CΨ − U‖² + (λ/2)‖C‖²_{1,2}`` on the normalized problem."""
    rho = opts.admm_penalty
    p = prob.psi.shape[0]
    factor = linalg.cho_factor(prob.psi @ prob.psi.T + rho * np.eye(p))
    target = prob.u @ prob.psi.T
    if start is None:
        z = np.zeros((prob.u.shape[0], p))
        y = np.zeros_like(z)
    else:
        z, y = start
    for it in range(1, opts.max_iters + 1):
        c = linalg.cho_solve(factor, (target + rho * (z - y)).T).T
        z_old = z
        z = prox_l12_squared(c + y, lam / rho)
        y = y + c - z
        r_pri = np.linalg.norm(c - z)
        r_dual = rho * np.linalg.norm(z - z_old)
        eps_pri = opts.primal_tol * (1.0 + max(np.linalg.norm(c), np.linalg.norm(z)))
        eps_dual = opts.dual_tol * (1.0 + rho * np.linalg.norm(y))
        if _stopped(r_pri, eps_pri, r_dual, eps_dual):
            return z, it, True, (z, y)
    return z, opts.max_iters, False, (z, y)


def _constrained_admm(
    prob: _Scaled, kappa: float, opts: SparseSolveOptions
) -> typing.Tuple[np.ndarray, int, bool]:
    """Splitting for ``min ½‖Z‖²_{1,2}`` subject to ``Z = C``, ``V = CΨ``, ``‖V − U‖_F ≤ κ``."""
    rho = opts.admm_penalty
    psi, u = prob.psi, prob.u
    m, p = u.shape[0], psi.shape[0]
    factor = linalg.cho_factor(np.eye(p) + psi @ psi.T)
    z = np.zeros((m, p))
    v = np.zeros_like(u)
    y1 = np.zeros_like(z)
    y2 = np.zeros_like(u)
    for it in range(1, opts.max_iters + 1):
        c = linalg.cho_solve(factor, ((z - y1) + (v - y2) @ psi.T).T).T
        cpsi = c @ psi
        z_old, v_old = z, v
        z = prox_l12_squared(c + y1, 1.0 / rho)
        v = cpsi + y2 - u
        norm = np.linalg.norm(v)
        if norm > kappa:
            v = v * (kappa / norm)
        v = v + u
        y1 = y1 + c - z
        y2 = y2 + cpsi - v
        r_pri = np.sqrt(np.linalg.norm(c - z) ** 2 + np.linalg.norm(cpsi - v) ** 2)
        r_dual = rho * np.linalg.norm((z - z_old) + (v - v_old) @ psi.T)
        scale = max(
            np.hypot(np.linalg.norm(c), np.linalg.norm(cpsi)),
            np.hypot(np.linalg.norm(z), np.linalg.norm(v)),
        )
        eps_pri = opts.primal_tol * (1.0 + scale)
        eps_dual = opts.dual_tol * (1.0 + rho * np.linalg.norm(y1 + y2 @ psi.T))
        if _stopped(r_pri, eps_pri, r_dual, eps_dual):
            return z, it, True
    return z, opts.max_iters, False


def _repair(prob: _Scaled, z: np.ndarray, target: float) -> np.ndarray:
    """
    Moves ``z`` towards the nearest least-squares minimizer until ``‖CΨ − U‖_F ≤ target``.

    The residual is affine along the segment, so the entry point solves a quadratic.
    """
    a = z @ prob.psi - prob.u
    if np.linalg.norm(a) <= target:
        return z
    pinv = linalg.pinv(prob.psi)
    ls = prob.u @ pinv + z - (z @ prob.psi) @ pinv
    b = (ls - z) @ prob.psi
    bb = float(np.sum(b * b))
    ab = float(np.sum(a * b))
    disc = ab * ab - bb * (float(np.sum(a * a)) - target * target)
    if bb == 0 or disc < 0:
        return ls
    t = min(max((-ab - np.sqrt(disc)) / bb, 0.0), 1.0)
    candidate = z + t * (ls - z)
    return candidate if prob.residual(candidate) <= target else ls


def _constraint_met(residual: float, kappa: float, tol: float, u_norm: float) -> bool:
    return residual <= kappa * (1.0 + tol) + _ROUNDING_FLOOR * u_norm


def l12_minimize(psi, u, opts: typing.Optional[SparseSolveOptions] = None) -> SparseSolveReport:
    """
    Sparse coefficients minimizing ``‖C‖_{1,2}`` subject to ``‖CΨ − U‖_F ≤ κ``.

    With an explicit κ the constrained problem is split directly, followed by a repair step
    towards the least-squares set when the splitting stops short of feasibility.
    With holdout calibration, κ̂ comes from :func:`calibrate_kappa` and the penalized form
    ``½‖CΨ − U‖² + (λ/2)‖C‖²_{1,2}`` (on normalized ``Ψ``, ``U``) is swept over
    ``lambda_grid`` from large to small with warm starts; the largest λ whose residual meets
    κ̂ is kept. When no λ on the grid does, the constrained problem is solved at κ̂.

    :param psi: ``P×N`` measurement matrix.
    :param u: ``M×N`` data.
    :param opts: :class:`.model.SparseSolveOptions`, holdout calibration by default.
    :raises: :class:`.error.InfeasibleProblem` - κ lies below the least-squares residual.
    """
    psi, u = _operands(psi, u)
    opts = opts or SparseSolveOptions()
    u_norm = float(np.linalg.norm(u))
    if opts.kappa_policy == KappaPolicy.EXPLICIT:
        kappa = opts.kappa
    else:
        kappa = calibrate_kappa(psi, u, opts.holdout_fraction, opts.seed)

    best = least_squares(psi, u).residual_fro
    if not _constraint_met(best, kappa, opts.feasibility_tol, u_norm):
        raise error.InfeasibleProblem(kappa, best)

    m, p = u.shape[0], psi.shape[0]
    if u_norm == 0 or not np.any(psi):
        # Zero is feasible and norm-minimal.
        return SparseSolveReport(np.zeros((m, p)), 0.0, u_norm, kappa, None, 0, True)

    prob = _Scaled(psi, u)
    kappa_scaled = kappa / prob.u_scale
    selected = None
    iterations = 0
    converged = False
    if opts.kappa_policy == KappaPolicy.HOLDOUT:
        # Grid runs large to small, so the first λ meeting κ̂ is the largest feasible one.
        start = None
        for lam in opts.lambda_grid:
            z, its, ok, start = _penalized_admm(prob, lam, opts, start)
            iterations += its
            residual = prob.residual(z)
            logger.debug(f"lambda={lam:.3g}: residual={residual:.6g} after {its} iterations")
            if _constraint_met(residual, kappa_scaled, opts.feasibility_tol, 1.0):
                selected, converged, c = lam, ok, z
                break
        else:
            logger.debug("No lambda on the grid meets the calibrated kappa, solving constrained")

    if selected is None:
        z, iterations_c, converged = _constrained_admm(prob, kappa_scaled, opts)
        iterations += iterations_c
        c = _repair(prob, z, kappa_scaled)

    coefficients = prob.unscale(c)
    residual = float(np.linalg.norm(coefficients @ psi - u))
    converged = converged and _constraint_met(residual, kappa, opts.feasibility_tol, u_norm)
    if not converged:
        logger.warning(
            f"Sparse solve stopped after {iterations} iterations without meeting tolerances"
        )
    return SparseSolveReport(
        coefficients, l12_norm(coefficients), residual, kappa, selected, iterations, converged
    )
