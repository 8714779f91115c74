from .const import EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL


class BifidelityError(Exception):
    """
    All exceptions of this package can be captured with this.

    :ivar exit_code: Process exit code the command line harness reports for this error.
    """

    exit_code = 1


class IncorrectConfig(BifidelityError):
    """
    Some configuration values are missing, unknown or out of range.
    """

    exit_code = EXIT_CONFIG


class BasisTooLarge(IncorrectConfig):
    """
    The total-degree basis would have more functions than the package allows.

    :ivar size: Requested basis size.
    :ivar limit: Largest allowed basis size.
    """

    def __init__(self, dimension: int, order: int, size: int, limit: int):
        self.size = size
        self.limit = limit
        super().__init__(
            f"Basis of dimension {dimension} and order {order} has {size} functions "
            f"(limit {limit})"
        )


class IncorrectData(BifidelityError):
    """
    Input data is empty, non-finite or inconsistent.
    """

    exit_code = EXIT_DATA


class DimensionMismatch(IncorrectData):
    """
    Two arrays that have to agree in shape don't.

    :ivar what: Name of the offending quantity.
    :ivar expected: Expected size.
    :ivar got: Received size.
    """

    def __init__(self, what: str, expected, got):
        self.what = what
        self.expected = expected
        self.got = got
        super().__init__(f"Dimension mismatch for {what}: expected {expected}, got {got}")


class DomainError(IncorrectData):
    """
    An argument lies outside the canonical domain of the polynomial family.

    .. note::
        Physical uniform inputs must be mapped with :func:`.basis.to_canonical` first.
    """


class NumericalFailure(BifidelityError):
    """
    A numerical step of the pipeline cannot produce a meaningful result.
    """

    exit_code = EXIT_NUMERICAL


class InfeasibleProblem(NumericalFailure):
    """
    No candidate solution satisfies the residual constraint.

    :ivar kappa: The residual tolerance that had to be met.
    :ivar best_residual: Smallest residual that was attained.
    """

    def __init__(self, kappa: float, best_residual: float):
        self.kappa = kappa
        self.best_residual = best_residual
        super().__init__(
            f"Residual constraint {kappa:.6g} not attained; best residual {best_residual:.6g}"
        )


class RankError(NumericalFailure):
    """
    Requested reduced rank exceeds what the spectrum supports.
    """

    def __init__(self, requested: int, available: int):
        self.requested = requested
        self.available = available
        super().__init__(f"Requested rank {requested}, but at most {available} is available")


class DegenerateBound(NumericalFailure):
    """
    A bound or ratio is undefined because its reference quantity vanishes.
    """
