import numpy as np
import numpy.testing as nptest
import pytest

from bifidelity import error
from bifidelity.mid import mid_bifidelity, mid_decompose, pivoted_qr, run_mid


def _low_rank(rng, m, n, rank):
    return rng.standard_normal((m, rank)) @ rng.standard_normal((rank, n))


def test_pivoted_qr(rng):
    a = rng.standard_normal((8, 12))
    q, r, perm = pivoted_qr(a, 5)
    nptest.assert_allclose(q.T @ q, np.eye(5), atol=1e-12)
    nptest.assert_allclose(np.tril(r[:, :5], -1), 0.0)
    nptest.assert_allclose(q @ r[:, :5], a[:, perm[:5]], atol=1e-12)
    assert sorted(perm) == list(range(12))
    assert perm[0] == np.argmax(np.linalg.norm(a, axis=0))


def test_pivot_ties_prefer_lowest_index():
    a = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    _, _, perm = pivoted_qr(a, 2)
    assert list(perm[:2]) == [0, 1]


def test_exact_rank_reconstruction(rng):
    l_mat = _low_rank(rng, 10, 30, 4)
    dec = mid_decompose(l_mat, 4)
    assert dec.rank == 4
    assert dec.recon_error_fro < 1e-10 * np.linalg.norm(l_mat)
    skeleton = list(dec.skeleton_indices)
    nptest.assert_allclose(l_mat[:, skeleton] @ dec.coefficients, l_mat, atol=1e-10)


def test_interpolation_property(rng):
    l_mat = rng.standard_normal((6, 20))
    h_mat = rng.standard_normal((15, 20))
    dec, h_bar = run_mid(l_mat, h_mat, 4)
    skeleton = list(dec.skeleton_indices)
    nptest.assert_allclose(dec.coefficients[:, skeleton], np.eye(4), atol=1e-12)
    nptest.assert_allclose(h_bar[:, skeleton], h_mat[:, skeleton], atol=1e-12)
    nptest.assert_allclose(h_bar, mid_bifidelity(h_mat, dec))


def test_error_non_increasing_in_rank(rng):
    l_mat = rng.standard_normal((9, 25)) * np.logspace(0, -4, 25)
    errors = [mid_decompose(l_mat, r).recon_error_fro for r in range(1, 10)]
    assert all(b <= a * (1 + 1e-10) + 1e-12 for a, b in zip(errors, errors[1:]))
    assert errors[-1] < 1e-10 * np.linalg.norm(l_mat)


def test_rank_deficient_falls_back(rng):
    l_mat = _low_rank(rng, 6, 10, 2)
    dec = mid_decompose(l_mat, 4)
    assert dec.rank == 4
    assert dec.recon_error_fro < 1e-8 * np.linalg.norm(l_mat)


def test_mid_validation(rng):
    l_mat = rng.standard_normal((3, 5))
    with pytest.raises(error.IncorrectConfig):
        mid_decompose(l_mat, 4)
    with pytest.raises(error.IncorrectConfig):
        mid_decompose(l_mat, 0)
    dec = mid_decompose(l_mat, 2)
    with pytest.raises(error.DimensionMismatch):
        mid_bifidelity(np.ones((4, 6)), dec)
    assert dec.to_dict()["skeleton_indices"] == list(dec.skeleton_indices)


def test_linear_hf_is_reproduced(rng):
    l_mat = rng.standard_normal((6, 20))
    a = rng.standard_normal((9, 6))
    dec = mid_decompose(l_mat, 3)
    l_bar = l_mat[:, list(dec.skeleton_indices)] @ dec.coefficients
    nptest.assert_allclose(mid_bifidelity(a @ l_mat, dec), a @ l_bar, atol=1e-10)


def test_repeated_column():
    l_mat = np.tile(np.array([[2.0], [-1.0], [0.5]]), (1, 7))
    dec = mid_decompose(l_mat, 1)
    assert list(dec.skeleton_indices) == [0]
    nptest.assert_allclose(dec.coefficients, np.ones((1, 7)), atol=1e-12)
    assert dec.recon_error_fro < 1e-12
