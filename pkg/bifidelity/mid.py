"""
Matrix interpolative decomposition ``L ≈ L[:, skeleton] C̄`` from column-pivoted QR, and the
interpolation-based bi-fidelity estimate ``H̄ = H[:, skeleton] C̄``.
"""

import logging
import typing

import numpy as np
from scipy import linalg

from . import error
from .const import LOGGER_NAME, MID_COND_LIMIT, PIVOT_TIE_TOL
from .model import MidDecomposition

logger = logging.getLogger(LOGGER_NAME)


def pivoted_qr(mat, r: int) -> typing.Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    First ``r`` steps of column-pivoted Gram-Schmidt with one reorthogonalization pass.

    The pivot is the column of largest residual norm; columns within ``PIVOT_TIE_TOL``
    (relative) of the largest count as tied and the lowest original index wins.

    :param mat: ``m×N`` matrix.
    :param r: Steps to take.
    :return: ``(Q m×r, R r×N, permutation)`` with ``mat[:, permutation] ≈ Q R`` on the first
        ``r`` columns and ``R`` upper trapezoidal.
    """
    a = np.asarray(mat, dtype=float)
    m, n = a.shape
    residual = a.copy()
    perm = np.arange(n)
    q = np.zeros((m, r))
    for k in range(r):
        norms = np.linalg.norm(residual[:, perm[k:]], axis=0)
        best = norms.max()
        tied = np.flatnonzero(norms >= best * (1.0 - PIVOT_TIE_TOL))
        j = k + tied[np.argmin(perm[k:][tied])]
        perm[[k, j]] = perm[[j, k]]
        v = residual[:, perm[k]].copy()
        v -= q[:, :k] @ (q[:, :k].T @ v)
        norm = np.linalg.norm(v)
        if norm > 0:
            q[:, k] = v / norm
        residual -= np.outer(q[:, k], q[:, k] @ residual)
    rmat = q.T @ a[:, perm]
    rmat[np.tril_indices(r, -1, n)] = 0.0
    return q, rmat, perm


def mid_decompose(mat, r: int) -> MidDecomposition:
    """
    Rank-``r`` interpolative decomposition of ``L``.

    The skeleton is the first ``r`` pivots of :func:`pivoted_qr`; the coefficients are
    ``[I  R₁₁⁻¹R₁₂]`` in pivot order, with ``R₁₁⁻¹`` by back-substitution when
    ``cond(R₁₁) < MID_COND_LIMIT`` and by pseudoinverse otherwise.

    :param mat: ``m×N`` LF matrix ``L``.
    :param r: Rank, ``1 ≤ r ≤ min(m, N)``.
    :raises: :class:`.error.IncorrectConfig` - ``r`` out of range.
    """
    l_mat = np.asarray(mat, dtype=float)
    if l_mat.ndim != 2:
        raise error.IncorrectData("Interpolative decomposition needs a matrix")
    m, n = l_mat.shape
    if not 1 <= r <= min(m, n):
        raise error.IncorrectConfig(f"MID rank {r} outside [1, {min(m, n)}]")
    _, rmat, perm = pivoted_qr(l_mat, r)
    r11, r12 = rmat[:, :r], rmat[:, r:]
    cond = np.linalg.cond(r11)
    if cond < MID_COND_LIMIT:
        interp = linalg.solve_triangular(r11, r12)
    else:
        logger.debug(f"R11 condition {cond:.3g}, using pseudoinverse")
        interp = linalg.pinv(r11) @ r12
    coefficients = np.zeros((r, n))
    coefficients[:, perm[:r]] = np.eye(r)
    coefficients[:, perm[r:]] = interp
    skeleton = perm[:r]
    recon = float(np.linalg.norm(l_mat - l_mat[:, skeleton] @ coefficients))
    return MidDecomposition(skeleton, coefficients, recon)


def mid_bifidelity(mat, dec: MidDecomposition) -> np.ndarray:
    """
    ``H̄ = H[:, skeleton] C̄``.

    :param mat: ``M×N`` HF matrix; only its skeleton columns are read.
    :param dec: Decomposition of the matching LF matrix.
    """
    h = np.asarray(mat, dtype=float)
    if h.ndim != 2 or h.shape[1] != dec.n_samples:
        raise error.DimensionMismatch("HF columns", dec.n_samples, h.shape[-1])
    return h[:, list(dec.skeleton_indices)] @ dec.coefficients


def run_mid(lf_mat, hf_mat, r: int) -> typing.Tuple[MidDecomposition, np.ndarray]:
    """Decomposes ``L`` and applies it to ``H``; the skeleton is the HF sampling budget."""
    dec = mid_decompose(lf_mat, r)
    logger.debug(f"MID skeleton {list(dec.skeleton_indices)}")
    return dec, mid_bifidelity(hf_mat, dec)
