import logging

import numpy as np
import numpy.testing as nptest
import pytest

from bifidelity import error
from bifidelity.basis import PcBasis, gauss_quadrature
from bifidelity.model import (
    BasisKind,
    BfModel,
    Ensemble,
    Fidelity,
    FitMethod,
    KlDecomposition,
    RankPolicy,
    StatSummary,
)
from bifidelity.smr import (
    bf_predict,
    bf_regress,
    build_reduced_basis,
    eval_reduced_basis,
    fit_bf_model,
    fit_lf_pc,
    fit_pc,
    interpolate_statistics,
    kl_decompose,
    pc_statistics,
    relative_error,
    run_smr,
    select_hf_indices,
    select_rank,
    statistics,
)
from bifidelity.solvers import least_squares
from bifidelity.utils.streams import HF_SUBSET, substream

from .conftest import planted


def test_weights_orthonormal(rng):
    basis = PcBasis(2, 4)
    for _ in range(100):
        m = int(rng.integers(2, 12))
        c = rng.standard_normal((m, len(basis)))
        kl = kl_decompose(c)
        r = int(rng.integers(1, kl.numerical_rank + 2))
        rb = build_reduced_basis(c, kl, r, basis)
        nptest.assert_allclose(rb.weights @ rb.weights.T, np.eye(r - 1), atol=1e-8)


def test_kl_decompose(rng):
    c = rng.standard_normal((5, 10))
    kl = kl_decompose(c)
    nptest.assert_array_equal(kl.mean, c[:, 0])
    cov = c[:, 1:] @ c[:, 1:].T
    nptest.assert_allclose(np.sort(kl.eigenvalues), np.sort(np.linalg.eigvalsh(cov)), atol=1e-10)
    pivots = np.argmax(np.abs(kl.eigenvectors), axis=0)
    assert np.all(kl.eigenvectors[pivots, np.arange(kl.eigenvectors.shape[1])] > 0)
    with pytest.raises(error.IncorrectData):
        kl_decompose(np.ones((3, 1)))


def test_select_rank():
    lam = np.array([4.0, 2.0, 1.0, 1e-20])
    assert select_rank(lam, RankPolicy(threshold=0.5)) == 2
    assert select_rank(lam, RankPolicy(threshold=1.0)) == 4
    assert select_rank(lam) == 4
    assert select_rank(lam, RankPolicy(r=3)) == 3
    with pytest.raises(error.NumericalFailure):
        select_rank(np.zeros(3))


def test_select_rank_clips(caplog):
    with caplog.at_level(logging.WARNING, logger="bifidelity"):
        assert select_rank([1.0, 0.5, 0.0], RankPolicy(r=10)) == 3
    assert "clipped" in caplog.text


def test_rank_error(rng):
    basis = PcBasis(1, 4)
    c = rng.standard_normal((2, len(basis)))
    kl = kl_decompose(c)
    with pytest.raises(error.RankError) as info:
        build_reduced_basis(c, kl, 4, basis)
    assert info.value.available == 3


def test_select_hf_indices(rng):
    indices = select_hf_indices(50, 10, rng)
    assert len(set(indices)) == 10
    nptest.assert_array_equal(indices, np.sort(indices))
    assert indices.max() < 50
    with pytest.raises(error.IncorrectConfig):
        select_hf_indices(5, 6, rng)
    with pytest.raises(error.IncorrectConfig):
        select_hf_indices(5, 0, rng)


def test_fit_pc_auto(rng):
    basis = PcBasis(2, 2)
    _, inputs, qoi = planted(rng, 3, basis, 20)
    psi = basis.measurement_matrix(inputs)
    nptest.assert_allclose(fit_pc(psi, qoi), least_squares(psi, qoi).coefficients)


def test_statistics():
    stats = statistics([[1.0, 2.0, 2.0], [0.5, 0.0, 3.0]])
    nptest.assert_allclose(stats.mean, [1.0, 0.5])
    nptest.assert_allclose(stats.variance, [8.0, 9.0])
    assert stats.kind == BasisKind.PC


def test_relative_error():
    ref = StatSummary([1.0, 0.0], [2.0, 0.0])
    e_mean, e_var = relative_error(StatSummary([1.0, 0.1], [2.0, 0.2]), ref)
    nptest.assert_allclose([e_mean, e_var], [0.1, 0.1])
    with pytest.raises(error.IncorrectData):
        relative_error(ref, StatSummary([0.0, 0.0], [1.0, 1.0]))
    with pytest.raises(error.DimensionMismatch):
        relative_error(StatSummary([1.0], [1.0]), ref)


def test_interpolate_statistics():
    stats = StatSummary([0.0, 1.0, 0.0], [0.0, 2.0, 4.0])
    out = interpolate_statistics(stats, [0.0, 0.5, 1.0], [0.25, 0.5, 0.75])
    nptest.assert_allclose(out.mean, [0.5, 1.0, 0.5])
    nptest.assert_allclose(out.variance, [1.0, 2.0, 3.0])


def test_bf_regress_warns(caplog, rng):
    eta = np.vstack([np.ones(3), rng.standard_normal((3, 3))])
    with caplog.at_level(logging.WARNING, logger="bifidelity"):
        bf_regress(eta, rng.standard_normal((2, 3)))
    assert "HF samples for rank 4" in caplog.text
    with pytest.raises(error.IncorrectData):
        bf_regress(np.ones((1, 0)), np.ones((2, 0)))


def _identical_pair(rng, m=20, n_samples=60):
    basis = PcBasis(2, 4)
    _, inputs, qoi = planted(rng, m, basis, n_samples)
    lf = Ensemble(inputs, qoi, Fidelity.LF)
    hf = Ensemble(inputs, qoi, Fidelity.HF)
    return basis, lf, hf


def test_identical_pair_full_rank_matches_hf_fit(rng):
    basis, lf, hf = _identical_pair(rng)
    result = run_smr(lf, hf, basis, RankPolicy(r=len(basis)), method=FitMethod.LEAST_SQUARES)
    assert result.model.r == len(basis)
    direct = pc_statistics(hf, basis, method=FitMethod.LEAST_SQUARES)
    nptest.assert_allclose(result.stats.mean, direct.mean, atol=1e-8)
    nptest.assert_allclose(result.stats.variance, direct.variance, rtol=1e-8, atol=1e-8)
    assert result.stats.kind == BasisKind.REDUCED
    nptest.assert_array_equal(result.model.hf_indices, np.arange(lf.n_samples))
    nptest.assert_allclose(bf_predict(result.model, hf.inputs), hf.qoi, atol=1e-8)


def test_hf_subset_indices(rng):
    basis, lf, hf = _identical_pair(rng)
    indices = select_hf_indices(lf.n_samples, 12, substream(0, HF_SUBSET))
    result = run_smr(lf, hf.subset(indices), basis, RankPolicy(r=4), method="ls")
    nptest.assert_array_equal(result.model.hf_indices, indices)
    direct = fit_bf_model(result.model.reduced, hf, indices)
    nptest.assert_allclose(direct.coefficients, result.model.coefficients)
    other = Ensemble(hf.inputs[:3] * 0.5, hf.qoi[:, :3], Fidelity.HF)
    with pytest.raises(error.IncorrectData):
        run_smr(lf, other, basis, RankPolicy(r=4), method="ls")


def test_sign_flip_invariance(rng):
    basis, lf, hf = _identical_pair(rng, m=8)
    c = fit_lf_pc(lf, basis, method=FitMethod.LEAST_SQUARES)
    kl = kl_decompose(c)
    signs = np.where(np.arange(kl.eigenvectors.shape[1]) % 2 == 0, -1.0, 1.0)
    flipped = KlDecomposition(kl.mean, kl.eigenvalues, kl.eigenvectors * signs)
    indices = np.arange(0, 60, 3)
    models = [fit_bf_model(build_reduced_basis(c, k, 5, basis), hf, indices) for k in (kl, flipped)]
    predictions = [bf_predict(model, hf.inputs) for model in models]
    nptest.assert_allclose(predictions[0], predictions[1], atol=1e-10)
    stats = [statistics(model.coefficients, BasisKind.REDUCED) for model in models]
    nptest.assert_allclose(stats[0].mean, stats[1].mean, atol=1e-10)
    nptest.assert_allclose(stats[0].variance, stats[1].variance, atol=1e-10)


def test_reduced_basis_evaluation(rng):
    basis, lf, _ = _identical_pair(rng, m=6)
    c = fit_lf_pc(lf, basis, method="least_squares")
    rb = build_reduced_basis(c, kl_decompose(c), 4, basis)
    eta = eval_reduced_basis(rb, lf.inputs[:7])
    assert eta.shape == (4, 7)
    nptest.assert_array_equal(eta[0], np.ones(7))


def test_model_file_round_trip(rng):
    basis, lf, hf = _identical_pair(rng, m=6)
    model = run_smr(lf, hf.subset(range(0, 60, 2)), basis, RankPolicy(r=3), method="ls").model
    loaded = BfModel.from_dict(model.to_dict())
    assert loaded.r == 3
    assert loaded.hf_indices == model.hf_indices
    assert loaded.reduced.basis == basis
    nptest.assert_allclose(bf_predict(loaded, lf.inputs), bf_predict(model, lf.inputs))


def test_kl_rank_one():
    v = np.array([3.0, -1.0, 0.0, 2.0])
    c = np.zeros((4, 6))
    c[:, 0] = 1.5
    c[:, 1] = v
    kl = kl_decompose(c)
    nptest.assert_allclose(kl.eigenvalues[0], v @ v)
    nptest.assert_allclose(kl.eigenvalues[1:], 0.0, atol=1e-20)
    nptest.assert_allclose(kl.eigenvectors[:, 0], v / np.linalg.norm(v), atol=1e-12)
    assert kl.numerical_rank == 1
    rb = build_reduced_basis(c, kl, 2, PcBasis(1, 5))
    nptest.assert_allclose(rb.weights, [[1.0, 0.0, 0.0, 0.0, 0.0]], atol=1e-12)


def test_kl_zero_spread():
    c = np.zeros((3, 6))
    c[:, 0] = [1.0, 2.0, 3.0]
    kl = kl_decompose(c)
    nptest.assert_array_equal(kl.eigenvalues, np.zeros(3))
    assert kl.numerical_rank == 0
    with pytest.raises(error.NumericalFailure):
        select_rank(kl.eigenvalues)
    rb = build_reduced_basis(c, kl, 1, PcBasis(1, 5))
    assert rb.r == 1 and rb.weights.shape == (0, 5)
    with pytest.raises(error.RankError):
        build_reduced_basis(c, kl, 2, PcBasis(1, 5))


def test_reduced_basis_second_moments(rng):
    basis = PcBasis(2, 2)
    c = rng.standard_normal((4, len(basis)))
    rb = build_reduced_basis(c, kl_decompose(c), 4, basis)
    n_samples = 100000
    eta = eval_reduced_basis(rb, rng.uniform(-1.0, 1.0, size=(n_samples, 2)))
    moments = eta @ eta.T / n_samples
    assert np.max(np.abs(moments - np.eye(4))) < 5 / np.sqrt(n_samples)


def test_run_smr_rank_one(rng):
    basis, lf, hf = _identical_pair(rng, m=5)
    subset = hf.subset(range(0, 60, 4))
    result = run_smr(lf, subset, basis, RankPolicy(r=1), method="ls")
    assert result.model.r == 1
    nptest.assert_allclose(result.stats.mean, subset.qoi.mean(axis=1), atol=1e-12)
    nptest.assert_array_equal(result.stats.variance, np.zeros(5))
    prediction = bf_predict(result.model, lf.inputs[:4])
    nptest.assert_allclose(prediction, np.repeat(prediction[:, :1], 4, axis=1))


def test_permuted_samples(rng):
    basis = PcBasis(2, 3)
    _, inputs, qoi = planted(rng, 8, basis, 60, noise=0.05)
    lf = Ensemble(inputs, qoi, Fidelity.LF)
    hf = Ensemble(inputs, 1.2 * qoi + 0.1, Fidelity.HF).subset(range(0, 60, 3))
    perm = rng.permutation(60)
    shuffled = Ensemble(inputs[perm], qoi[:, perm], Fidelity.LF)
    results = [
        run_smr(ens, hf, basis, RankPolicy(r=4), method=FitMethod.LEAST_SQUARES)
        for ens in (lf, shuffled)
    ]
    first, second = (result.diagnostics for result in results)
    nptest.assert_allclose(first["lf_coefficients"], second["lf_coefficients"], atol=1e-10)
    nptest.assert_allclose(first["eigenvalues"], second["eigenvalues"], rtol=1e-10, atol=1e-10)
    nptest.assert_allclose(results[0].stats.mean, results[1].stats.mean, atol=1e-10)
    nptest.assert_allclose(results[0].stats.variance, results[1].stats.variance, atol=1e-10)


def test_statistics_match_quadrature(rng):
    basis = PcBasis(2, 3)
    c = rng.standard_normal((3, len(basis)))
    nodes, weights = gauss_quadrature(basis.family, 4, 2)
    values = c @ basis.measurement_matrix(nodes)
    mean = values @ weights
    variance = (values - mean[:, None]) ** 2 @ weights
    stats = statistics(c)
    nptest.assert_allclose(stats.mean, mean, atol=1e-10)
    nptest.assert_allclose(stats.variance, variance, atol=1e-10)


@pytest.mark.slow
def test_bifidelity_beats_single_fidelity(diffusion_pair, basis_2_4):
    lf, hf = diffusion_pair
    c_lf = fit_lf_pc(lf, basis_2_4)
    rb = build_reduced_basis(c_lf, kl_decompose(c_lf), 4, basis_2_4)
    reference = pc_statistics(hf, basis_2_4)
    lf_stats = interpolate_statistics(statistics(c_lf), lf.point_coords, hf.point_coords)
    lf_var = relative_error(lf_stats, reference)[1]
    bf_var, hf_var = [], []
    for rep in range(100):
        indices = select_hf_indices(lf.n_samples, 10, substream(11, HF_SUBSET, 10, rep))
        model = fit_bf_model(rb, hf, indices)
        bf_var.append(relative_error(statistics(model.coefficients), reference)[1])
        hf_var.append(relative_error(pc_statistics(hf, basis_2_4, indices), reference)[1])
    assert np.median(bf_var) < np.median(hf_var)
    assert np.median(bf_var) < lf_var
