import hashlib
import json
import typing

from . import error
from .basis import PcBasis
from .const import DEFAULT_BOUND_REPETITIONS, DEFAULT_REPETITIONS, DEFAULT_T
from .files import read_json
from .model import FitMethod, ModelPairSpec, RankPolicy, SparseSolveOptions

FORMATS = ("csv", "json")
# Keys that change where and how a run executes, not what it computes.
RUNTIME_KEYS = ("threads", "output", "format")


def _int(name: str, value, minimum: int = 0, maximum: typing.Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise error.IncorrectConfig(f"`{name}` must be an integer, got {value!r}")
    if value < minimum or (maximum is not None and value > maximum):
        raise error.IncorrectConfig(f"`{name}` = {value} is out of range")
    return value


def _float(name: str, value, minimum: float = 0.0) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise error.IncorrectConfig(f"`{name}` must be a number, got {value!r}")
    if not value >= minimum:
        raise error.IncorrectConfig(f"`{name}` = {value} is out of range")
    return float(value)


def _int_list(name: str, values, minimum: int) -> typing.Tuple[int, ...]:
    if not isinstance(values, (list, tuple)) or not values:
        raise error.IncorrectConfig(f"`{name}` must be a non-empty list")
    return tuple(_int(name, v, minimum) for v in values)


class DataFiles:
    """
    External ensemble files.

    :ivar lf: Path of the LF QoI matrix (points × N).
    :ivar hf: Path of the HF QoI matrix (points × N), optional for ``eigs``.
    :ivar inputs: Path of the canonical inputs (N × d).
    """

    def __init__(self, lf: str, inputs: str, hf: typing.Optional[str] = None):
        for name, value in (("lf", lf), ("inputs", inputs), ("hf", hf)):
            if value is not None and not isinstance(value, str):
                raise error.IncorrectConfig(f"data.{name} must be a path")
        self.lf = lf
        self.hf = hf
        self.inputs = inputs

    def to_dict(self) -> dict:
        return {"lf": self.lf, "hf": self.hf, "inputs": self.inputs}

    @classmethod
    def from_dict(cls, data: dict) -> "DataFiles":
        unknown = set(data) - {"lf", "hf", "inputs"}
        if unknown:
            raise error.IncorrectConfig(f"Unknown data key(s): {', '.join(sorted(unknown))}")
        if "lf" not in data or "inputs" not in data:
            raise error.IncorrectConfig("data needs at least `lf` and `inputs`")
        return cls(data["lf"], data["inputs"], data.get("hf"))


class RunConfig:
    """
    Validated run configuration, loaded from JSON.

    :ivar model: :class:`.model.ModelPairSpec` of a built-in pair, or ``None``.
    :ivar data: :class:`DataFiles` of external ensembles, or ``None``.
    :ivar basis: ``{"d", "p", "family"}`` of the PC basis.
    :ivar solver: :class:`.model.SparseSolveOptions` of LF fits.
    :ivar fit_method: :class:`.model.FitMethod` of PC fits.
    :ivar rank: :class:`.model.RankPolicy`.
    :ivar n: HF samples of the BF regression.
    :ivar n_hat: HF samples of the bounds, ``n`` (the fitting samples) when ``None``.
    :ivar N: Ensemble size.
    :ivar t: Normal quantile of the practical bounds.
    :ivar tau_grid: τ values of the a priori bound, automatic when ``None``.
    :ivar mid_rank: Rank of the interpolative decomposition, ``r`` when ``None``.
    :ivar repetitions: Repetitions per sweep cell.
    :ivar bound_repetitions: Leading repetitions per cell that also evaluate bounds.
    :ivar sweep: ``{"n": [...], "r": [...]}`` grids of the sweep.
    :ivar seed: Root seed of every random stream.
    :ivar threads: Worker threads of the sweep.
    :ivar output: Output directory.
    :ivar format: Tabular output format, ``csv`` or ``json``.
    """

    _keys = (
        "model",
        "data",
        "basis",
        "solver",
        "fit_method",
        "rank",
        "n",
        "n_hat",
        "N",
        "t",
        "tau_grid",
        "mid_rank",
        "repetitions",
        "bound_repetitions",
        "sweep",
        "seed",
        "threads",
        "output",
        "format",
    )

    def __init__(
        self,
        model=None,
        data=None,
        basis=None,
        solver=None,
        fit_method="auto",
        rank=None,
        n: int = 15,
        n_hat: typing.Optional[int] = None,
        N: int = 200,  # noqa: N803
        t: float = DEFAULT_T,
        tau_grid=None,
        mid_rank: typing.Optional[int] = None,
        repetitions: int = DEFAULT_REPETITIONS,
        bound_repetitions: int = DEFAULT_BOUND_REPETITIONS,
        sweep=None,
        seed: int = 0,
        threads: int = 1,
        output: str = "out",
        format: str = "csv",
    ):
        self.model = None if model is None else _section(ModelPairSpec, model, "model")
        self.data = None if data is None else _section(DataFiles, data, "data")
        basis = dict(basis or {})
        basis.setdefault("d", self.model.d if self.model else 2)
        basis.setdefault("p", 4)
        basis.setdefault("family", "legendre")
        self.basis = PcBasis.from_dict(basis).to_dict()
        self.solver = _section(SparseSolveOptions, solver or {}, "solver")
        self.fit_method = FitMethod.from_name(fit_method)
        self.rank = _section(RankPolicy, rank or {}, "rank")
        self.n = _int("n", n, 1)
        self.n_hat = None if n_hat is None else _int("n_hat", n_hat, 2)
        self.N = _int("N", N, 0)
        if self.n > self.N and self.N > 0:
            raise error.IncorrectConfig(f"n = {self.n} exceeds N = {self.N}")
        self.t = _float("t", t)
        self.tau_grid = None
        if tau_grid is not None:
            if not isinstance(tau_grid, (list, tuple)) or not tau_grid:
                raise error.IncorrectConfig("`tau_grid` must be a non-empty list")
            self.tau_grid = tuple(_float("tau_grid", v, 1e-300) for v in tau_grid)
        self.mid_rank = None if mid_rank is None else _int("mid_rank", mid_rank, 1)
        self.repetitions = _int("repetitions", repetitions, 1)
        self.bound_repetitions = _int("bound_repetitions", bound_repetitions, 0)
        sweep = dict(sweep or {"n": [5, 10, 20, 40], "r": [2, 4, 7]})
        unknown = set(sweep) - {"n", "r"}
        if unknown:
            raise error.IncorrectConfig(f"Unknown sweep key(s): {', '.join(sorted(unknown))}")
        self.sweep = {
            "n": _int_list("sweep.n", sweep.get("n", [self.n]), 1),
            "r": _int_list("sweep.r", sweep.get("r", [4]), 1),
        }
        self.seed = _int("seed", seed, 0, 2**64 - 1)
        self.threads = _int("threads", threads, 1)
        if not isinstance(output, str) or not output:
            raise error.IncorrectConfig("`output` must be a directory path")
        self.output = output
        if format not in FORMATS:
            raise error.IncorrectConfig(f"`format` must be one of {', '.join(FORMATS)}")
        self.format = format

    def pc_basis(self) -> PcBasis:
        return PcBasis.from_dict(self.basis)

    def to_dict(self) -> dict:
        return {
            "model": None if self.model is None else self.model.to_dict(),
            "data": None if self.data is None else self.data.to_dict(),
            "basis": dict(self.basis),
            "solver": self.solver.to_dict(),
            "fit_method": self.fit_method.tag,
            "rank": self.rank.to_dict(),
            "n": self.n,
            "n_hat": self.n_hat,
            "N": self.N,
            "t": self.t,
            "tau_grid": None if self.tau_grid is None else list(self.tau_grid),
            "mid_rank": self.mid_rank,
            "repetitions": self.repetitions,
            "bound_repetitions": self.bound_repetitions,
            "sweep": {"n": list(self.sweep["n"]), "r": list(self.sweep["r"])},
            "seed": self.seed,
            "threads": self.threads,
            "output": self.output,
            "format": self.format,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise error.IncorrectConfig("Configuration must be a JSON object")
        unknown = set(data) - set(cls._keys)
        if unknown:
            raise error.IncorrectConfig(f"Unknown config key(s): {', '.join(sorted(unknown))}")
        return cls(**data)

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        """
        Loads a configuration file.

        :raises: :class:`.error.IncorrectConfig` - Unreadable or invalid file.
        """
        try:
            data = read_json(path)
        except error.IncorrectData as ex:
            raise error.IncorrectConfig(str(ex)) from ex
        return cls.from_dict(data)

    def with_overrides(self, **overrides) -> "RunConfig":
        """Copy of this configuration with the non-``None`` overrides applied."""
        data = self.to_dict()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig.from_dict(data)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON of this configuration, without :data:`RUNTIME_KEYS`."""
        data = {k: v for k, v in self.to_dict().items() if k not in RUNTIME_KEYS}
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.to_dict() == other.to_dict()


def _section(cls, value, name: str):
    if isinstance(value, cls):
        return value
    if not isinstance(value, dict):
        raise error.IncorrectConfig(f"`{name}` must be an object")
    try:
        return cls.from_dict(value)
    except TypeError as ex:
        raise error.IncorrectConfig(f"Invalid `{name}` section: {ex}") from ex
