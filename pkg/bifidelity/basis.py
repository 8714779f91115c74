import logging
import typing

import numpy as np
from numpy.polynomial import hermite_e, legendre
from scipy.special import comb

from . import error
from .const import LOGGER_NAME, MAX_BASIS_SIZE
from .model import PolyFamily

logger = logging.getLogger(LOGGER_NAME)

MultiIndex = typing.Tuple[int, ...]

# Legendre arguments this far outside [-1, 1] are rounding, not user error.
_DOMAIN_SLACK = 1e-12


def basis_size(d: int, p: int) -> int:
    """
    Exact count ``(p+d)!/(p!d!)`` of a total-degree basis.

    :param d: Input dimension.
    :param p: Total polynomial order.
    :raises: :class:`.error.BasisTooLarge` - The count exceeds ``MAX_BASIS_SIZE``.
    """
    if d < 1 or p < 0:
        raise error.IncorrectConfig(f"Basis needs d >= 1 and p >= 0, got d={d}, p={p}")
    size = int(comb(p + d, d, exact=True))
    if size > MAX_BASIS_SIZE:
        raise error.BasisTooLarge(d, p, size, MAX_BASIS_SIZE)
    return size


def _compositions(total: int, d: int) -> typing.Iterator[MultiIndex]:
    if d == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, d - 1):
            yield (first,) + rest


def total_degree_indices(d: int, p: int) -> typing.List[MultiIndex]:
    """
    Total-degree multi-index set, graded by total degree.

    Within one degree indices are in descending lexicographic order, so for ``d=2`` the set
    starts ``(0, 0), (1, 0), (0, 1), (2, 0), …``.

    :param d: Input dimension.
    :param p: Total polynomial order.
    :return: List of ``basis_size(d, p)`` tuples, all-zeros first.
    """
    size = basis_size(d, p)
    indices = [index for total in range(p + 1) for index in _compositions(total, d)]
    assert len(indices) == size
    return indices


def _check_domain(family: PolyFamily, x: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise error.IncorrectData("Polynomial argument contains non-finite entries")
    if family == PolyFamily.LEGENDRE:
        if np.any(np.abs(x) > 1 + _DOMAIN_SLACK):
            worst = float(x[np.argmax(np.abs(x))])
            raise error.DomainError(f"Legendre argument {worst:.6g} lies outside [-1, 1]")
        x = np.clip(x, -1.0, 1.0)
    return x


def eval_poly_1d_table(family, k_max: int, x) -> np.ndarray:
    """
    Evaluates the orthonormal polynomials ``ψ_0 … ψ_kmax`` by three-term recurrence.

    :param family: :class:`.model.PolyFamily` or its tag.
    :param k_max: Highest degree.
    :param x: Points, any shape (flattened).
    :return: ``len(x)×(k_max+1)`` table.
    :raises: :class:`.error.DomainError` - Legendre argument outside ``[-1, 1]``.
    """
    family = PolyFamily.from_name(family)
    x = _check_domain(family, np.asarray(x, dtype=float).ravel())
    table = np.zeros((len(x), k_max + 1))
    table[:, 0] = 1.0
    if k_max == 0:
        return table
    table[:, 1] = x
    if family == PolyFamily.LEGENDRE:
        for k in range(1, k_max):
            table[:, k + 1] = ((2 * k + 1) * x * table[:, k] - k * table[:, k - 1]) / (k + 1)
        table *= np.sqrt(2 * np.arange(k_max + 1) + 1)
    else:
        # Already normalized: ψ_{k+1} = (x ψ_k - √k ψ_{k-1}) / √(k+1).
        for k in range(1, k_max):
            table[:, k + 1] = (x * table[:, k] - np.sqrt(k) * table[:, k - 1]) / np.sqrt(k + 1)
    return table


def eval_poly_1d(family, k: int, x: float) -> float:
    """
    Evaluates the degree-``k`` orthonormal polynomial of a family at one point.

    :param family: :class:`.model.PolyFamily` or its tag.
    :param k: Degree.
    :param x: Argument, canonical coordinates.
    """
    if k < 0:
        raise error.IncorrectConfig(f"Polynomial degree must be non-negative, got {k}")
    return float(eval_poly_1d_table(family, k, [x])[0, k])


def gauss_quadrature(family, nodes_per_dim: int, d: int) -> typing.Tuple[np.ndarray, np.ndarray]:
    """
    Tensor Gauss rule normalized to a probability measure.

    Gauss-Legendre for the uniform measure on ``[-1, 1]^d``, Gauss-Hermite (probabilists')
    for the standard normal.

    :param family: :class:`.model.PolyFamily` or its tag.
    :param nodes_per_dim: Nodes per dimension.
    :param d: Dimension.
    :return: ``(nodes n×d, weights n)`` with weights summing to one.
    """
    family = PolyFamily.from_name(family)
    if nodes_per_dim < 1 or d < 1:
        raise error.IncorrectConfig("Quadrature needs at least one node and one dimension")
    if family == PolyFamily.LEGENDRE:
        x, w = legendre.leggauss(nodes_per_dim)
        w = w / 2.0
    else:
        x, w = hermite_e.hermegauss(nodes_per_dim)
        w = w / np.sqrt(2 * np.pi)
    grids = np.meshgrid(*([x] * d), indexing="ij")
    weights = np.meshgrid(*([w] * d), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    return nodes, np.prod(np.stack([g.ravel() for g in weights], axis=1), axis=1)


def _ranges(ranges, d: int) -> np.ndarray:
    ranges = np.asarray(ranges, dtype=float).reshape(-1, 2)
    if ranges.shape[0] != d:
        raise error.DimensionMismatch("input ranges", d, ranges.shape[0])
    if np.any(ranges[:, 1] <= ranges[:, 0]):
        raise error.IncorrectConfig("Every input range must satisfy a < b")
    return ranges


def to_canonical(x, ranges) -> np.ndarray:
    """
    Maps physical uniform inputs on ``[a, b]`` boxes affinely onto ``[-1, 1]``.

    :param x: ``N×d`` physical inputs.
    :param ranges: One ``(a, b)`` pair per input.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = _ranges(ranges, x.shape[1])
    return 2.0 * (x - r[:, 0]) / (r[:, 1] - r[:, 0]) - 1.0


def from_canonical(xi, ranges) -> np.ndarray:
    """Inverse of :func:`to_canonical`."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    r = _ranges(ranges, xi.shape[1])
    return r[:, 0] + (xi + 1.0) * (r[:, 1] - r[:, 0]) / 2.0


class PcBasis:
    """
    Multivariate orthonormal polynomial chaos basis on a total-degree index set.

    Instances are immutable and may be shared between threads.

    :ivar dimension: Input dimension ``d``.
    :ivar order: Total polynomial order ``p``.
    :ivar family: :class:`.model.PolyFamily` of every input.
    :ivar indices: Read-only ``P×d`` integer array of multi-indices, all-zeros first.
    """

    def __init__(self, dimension: int, order: int, family=PolyFamily.LEGENDRE):
        self.dimension = int(dimension)
        self.order = int(order)
        self.family = PolyFamily.from_name(family)
        indices = np.array(total_degree_indices(self.dimension, self.order), dtype=int)
        indices.setflags(write=False)
        self.indices = indices
        logger.debug(
            f"Built {self.family.tag} basis d={self.dimension} p={self.order} P={len(self)}"
        )

    def __len__(self):
        return self.indices.shape[0]

    @property
    def size(self) -> int:
        return len(self)

    def __eq__(self, other):
        return (
            isinstance(other, PcBasis)
            and (self.dimension, self.order, self.family)
            == (other.dimension, other.order, other.family)
        )

    def __hash__(self):
        return hash((self.dimension, self.order, self.family))

    def __repr__(self):
        return f"PcBasis(d={self.dimension}, p={self.order}, family={self.family.tag})"

    def measurement_matrix(self, samples) -> np.ndarray:
        """Shortcut of :func:`measurement_matrix`."""
        return measurement_matrix(self, samples)

    def to_dict(self) -> dict:
        return {"d": self.dimension, "p": self.order, "family": self.family.tag}

    @classmethod
    def from_dict(cls, data: dict) -> "PcBasis":
        unknown = set(data) - {"d", "p", "family"}
        if unknown:
            raise error.IncorrectConfig(f"Unknown basis key(s): {', '.join(sorted(unknown))}")
        try:
            return cls(int(data["d"]), int(data["p"]), data.get("family", "legendre"))
        except (KeyError, TypeError, ValueError) as ex:
            raise error.IncorrectConfig(f"Invalid basis section: {data!r}") from ex


def eval_multivariate(basis: PcBasis, index, xi) -> float:
    """
    Evaluates one tensor-product basis function at one point.

    :param basis: Basis providing dimension and family.
    :param index: Multi-index of per-dimension degrees.
    :param xi: Point of length ``d``, canonical coordinates.
    :raises: :class:`.error.DimensionMismatch`
    """
    index = tuple(int(k) for k in index)
    xi = np.asarray(xi, dtype=float).ravel()
    if len(index) != basis.dimension:
        raise error.DimensionMismatch("multi-index length", basis.dimension, len(index))
    if len(xi) != basis.dimension:
        raise error.DimensionMismatch("point length", basis.dimension, len(xi))
    value = 1.0
    for k, x in zip(index, xi):
        value *= eval_poly_1d(basis.family, k, x)
    return value


def measurement_matrix(basis: PcBasis, samples) -> np.ndarray:
    """
    Assembles ``Ψ(j, i) = ψ_j(ξ_i)``.

    :param basis: The basis.
    :param samples: ``N×d`` canonical samples; a 1-D vector is read as ``N`` samples when ``d = 1``.
    :return: ``P×N`` matrix whose first row is all ones.
    :raises: :class:`.error.DimensionMismatch`, :class:`.error.DomainError`
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1 and basis.dimension == 1:
        samples = samples.reshape(-1, 1)
    if samples.ndim != 2 or samples.shape[1] != basis.dimension:
        got = samples.shape[1] if samples.ndim == 2 else samples.shape
        raise error.DimensionMismatch("sample dimension", basis.dimension, got)
    n = samples.shape[0]
    psi = np.ones((n, len(basis)))
    for k in range(basis.dimension):
        table = eval_poly_1d_table(basis.family, basis.order, samples[:, k])
        psi *= table[:, basis.indices[:, k]]
    return psi.T.copy()


def sample_canonical(family, n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draws ``n×d`` i.i.d. inputs from the measure of ``family``.

    Uniform on ``[-1, 1]`` for Legendre, standard normal for Hermite.
    """
    family = PolyFamily.from_name(family)
    if family == PolyFamily.LEGENDRE:
        return rng.uniform(-1.0, 1.0, size=(n, d))
    return rng.standard_normal(size=(n, d))
