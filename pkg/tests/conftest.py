import numpy as np
import pytest

from bifidelity.basis import PcBasis
from bifidelity.model import ModelPairSpec
from bifidelity.pairs import generate_ensemble


@pytest.fixture
def rng():
    return np.random.default_rng(20211019)


@pytest.fixture(scope="session")
def diffusion_spec():
    return ModelPairSpec("diffusion1d", lf_points=9, hf_points=33, seed=0)


@pytest.fixture(scope="session")
def diffusion_pair(diffusion_spec):
    return generate_ensemble(diffusion_spec, 200, seed=7)


@pytest.fixture(scope="session")
def basis_2_4():
    return PcBasis(2, 4)


def planted(rng, m, basis, n, noise=0.0):
    """Random coefficients on ``basis`` and the samples they produce."""
    coefficients = rng.standard_normal((m, len(basis)))
    inputs = rng.uniform(-1.0, 1.0, size=(n, basis.dimension))
    qoi = coefficients @ basis.measurement_matrix(inputs)
    return coefficients, inputs, qoi + noise * rng.standard_normal(qoi.shape)
