"""
Built-in LF/HF model pairs sharing two canonical inputs ``ξ ∈ [-1, 1]²``.

``diffusion1d``
    ``−(a u′)′ = 1`` on ``(0, 1)``, ``u(0) = u(1) = 0``, with
    ``a(x, ξ) = 1 + 0.5ξ₁ + 0.25ξ₂ sin(2πx)``; the QoI is ``u`` on the interior grid nodes and
    the fidelities differ in grid size.
``analytic``
    HF ``u = exp(−(1 + 0.2ξ₁)x)·cos((2 + ξ₂)πx)``, LF replaces the exponential by its
    first-order expansion; the QoI is ``u`` on every grid node.
"""

import logging
import typing

import numpy as np
from scipy import linalg

from . import error
from .const import LOGGER_NAME
from .model import Ensemble, Fidelity, ModelKind, ModelPairSpec
from .utils.streams import SAMPLING, substream

logger = logging.getLogger(LOGGER_NAME)

# Lower bound of the diffusion coefficient on the input box.
MIN_DIFFUSIVITY = 0.25


def grid(points: int) -> np.ndarray:
    """Uniform grid of ``points`` nodes on ``[0, 1]``, boundary nodes included."""
    return np.linspace(0.0, 1.0, points)


def diffusivity(x, xi) -> np.ndarray:
    """``a(x, ξ) = 1 + 0.5ξ₁ + 0.25ξ₂ sin(2πx)``."""
    return 1.0 + 0.5 * xi[0] + 0.25 * xi[1] * np.sin(2 * np.pi * np.asarray(x, dtype=float))


def diffusion1d_solve(points: int, xi) -> np.ndarray:
    """
    Conservative second-order finite differences for ``−(a u′)′ = 1`` with zero Dirichlet data.

    The coefficient is sampled at cell midpoints and the tridiagonal system is solved in banded
    form.

    :param points: Grid size including both boundary nodes, at least 3.
    :param xi: Canonical inputs ``(ξ₁, ξ₂)``.
    :return: ``u`` on the ``points − 2`` interior nodes.
    """
    if points < 3:
        raise error.IncorrectConfig(f"Diffusion grid needs at least 3 nodes, got {points}")
    xi = np.asarray(xi, dtype=float).ravel()
    if len(xi) != 2:
        raise error.DimensionMismatch("diffusion inputs", 2, len(xi))
    h = 1.0 / (points - 1)
    a = diffusivity((np.arange(points - 1) + 0.5) * h, xi)
    if np.min(a) <= 0:
        raise error.NumericalFailure(f"Diffusion coefficient {np.min(a):.3g} is not positive")
    interior = points - 2
    banded = np.zeros((3, interior))
    banded[0, 1:] = -a[1:-1]
    banded[1, :] = a[:-1] + a[1:]
    banded[2, :-1] = -a[1:-1]
    return linalg.solve_banded((1, 1), banded, np.full(interior, h * h))


def analytic_pair_eval(fidelity, xi, points: int) -> np.ndarray:
    """
    Evaluates the analytic pair on ``points`` grid nodes.

    :param fidelity: :class:`.model.Fidelity`.
    :param xi: Canonical inputs ``(ξ₁, ξ₂)``.
    :param points: Grid size.
    """
    fidelity = Fidelity.from_name(fidelity)
    xi = np.asarray(xi, dtype=float).ravel()
    if len(xi) != 2:
        raise error.DimensionMismatch("analytic inputs", 2, len(xi))
    x = grid(points)
    rate = 1.0 + 0.2 * xi[0]
    wave = np.cos((2.0 + xi[1]) * np.pi * x)
    if fidelity == Fidelity.HF:
        return np.exp(-rate * x) * wave
    return (1.0 - rate * x) * wave


def _points(spec: ModelPairSpec, fidelity: Fidelity) -> int:
    return spec.hf_points if fidelity == Fidelity.HF else spec.lf_points


def point_coords(spec: ModelPairSpec, fidelity) -> np.ndarray:
    """Spatial coordinates of the QoI points of one fidelity."""
    fidelity = Fidelity.from_name(fidelity)
    x = grid(_points(spec, fidelity))
    return x[1:-1] if spec.kind == ModelKind.DIFFUSION1D else x


def evaluate(spec: ModelPairSpec, fidelity, xi) -> np.ndarray:
    """QoI vector of one fidelity of ``spec`` at one input."""
    fidelity = Fidelity.from_name(fidelity)
    points = _points(spec, fidelity)
    if spec.kind == ModelKind.DIFFUSION1D:
        return diffusion1d_solve(points, xi)
    return analytic_pair_eval(fidelity, xi, points)


def generate_ensemble(
    spec: ModelPairSpec, n_samples: int, seed: typing.Optional[int] = None
) -> typing.Tuple[Ensemble, Ensemble]:
    """
    Draws ``N`` inputs uniformly on ``[-1, 1]^d`` and evaluates both fidelities at each.

    :param spec: The model pair.
    :param n_samples: Ensemble size ``N`` (zero gives empty ensembles).
    :param seed: Root seed, ``spec.seed`` by default; inputs come from its sampling stream.
    :return: ``(lf, hf)`` with bitwise-identical inputs.
    """
    if n_samples < 0:
        raise error.IncorrectConfig(f"Ensemble size must be non-negative, got {n_samples}")
    seed = spec.seed if seed is None else seed
    inputs = substream(seed, SAMPLING).uniform(-1.0, 1.0, size=(n_samples, spec.d))
    logger.debug(f"Evaluating {spec.kind.tag} pair at {n_samples} inputs")
    ensembles = []
    for fidelity in (Fidelity.LF, Fidelity.HF):
        coords = point_coords(spec, fidelity)
        qoi = np.empty((len(coords), n_samples))
        for i, xi in enumerate(inputs):
            qoi[:, i] = evaluate(spec, fidelity, xi)
        ensembles.append(Ensemble(inputs, qoi, fidelity, coords))
    return ensembles[0], ensembles[1]
