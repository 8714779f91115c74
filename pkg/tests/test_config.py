import json

import pytest

from bifidelity import error
from bifidelity.config import RunConfig
from bifidelity.model import FitMethod, KappaPolicy, ModelKind
from bifidelity.utils.streams import HF_SUBSET, SAMPLING, substream, substream_seed


def test_defaults():
    config = RunConfig()
    assert config.model is None and config.data is None
    assert config.basis == {"d": 2, "p": 4, "family": "legendre"}
    assert config.pc_basis().size == 15
    assert (config.n, config.N, config.t) == (15, 200, 2.0)
    assert (config.repetitions, config.bound_repetitions) == (100, 30)
    assert config.sweep == {"n": (5, 10, 20, 40), "r": (2, 4, 7)}
    assert config.fit_method == FitMethod.AUTO
    assert config.solver.kappa_policy == KappaPolicy.HOLDOUT


def test_load(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(
        json.dumps(
            {
                "model": {"kind": "diffusion1d", "lf_points": 9, "hf_points": 33},
                "basis": {"p": 3},
                "solver": {"kappa_policy": "explicit", "kappa": 0.1},
                "rank": {"r": 4},
                "fit_method": "least_squares",
                "sweep": {"n": [5], "r": [2]},
                "seed": 7,
            }
        )
    )
    config = RunConfig.load(str(path))
    assert config.model.kind == ModelKind.DIFFUSION1D
    assert config.basis["p"] == 3 and config.basis["d"] == 2
    assert config.rank.r == 4
    assert config.solver.kappa == 0.1
    assert config == RunConfig.from_dict(config.to_dict())


@pytest.mark.parametrize(
    "data",
    [
        {"colour": "red"},
        {"n": 0},
        {"n": 300},
        {"N": -1},
        {"n": True},
        {"t": "two"},
        {"seed": -3},
        {"threads": 0},
        {"format": "xml"},
        {"sweep": {"n": []}},
        {"sweep": {"m": [3]}},
        {"rank": {"r": 2, "threshold": 0.9}},
        {"solver": {"rho": 1.0}},
        {"basis": {"d": 2, "p": 4, "family": "chebyshev"}},
        {"data": {"lf": "L.csv"}},
        {"model": {"kind": "analytic", "lf_points": 1, "hf_points": 9}},
        {"tau_grid": [1.0, 0.0]},
        {"fit_method": "magic"},
    ],
)
def test_invalid(data):
    with pytest.raises(error.IncorrectConfig):
        RunConfig.from_dict(data)


def test_load_errors_are_config_errors(tmp_path):
    with pytest.raises(error.IncorrectConfig):
        RunConfig.load(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    with pytest.raises(error.IncorrectConfig):
        RunConfig.load(str(bad))


def test_hash_and_overrides():
    config = RunConfig(seed=1)
    assert config.config_hash() == RunConfig(seed=1).config_hash()
    assert len(config.config_hash()) == 64
    changed = config.with_overrides(seed=2, output="elsewhere", threads=None)
    assert changed.seed == 2 and changed.output == "elsewhere" and changed.threads == 1
    assert changed.config_hash() != config.config_hash()
    runtime = config.with_overrides(threads=8, output="elsewhere", format="json")
    assert runtime.config_hash() == config.config_hash()


def test_substreams():
    a = substream(5, HF_SUBSET, 10, 3).random(4)
    assert (a == substream(5, HF_SUBSET, 10, 3).random(4)).all()
    assert not (a == substream(5, HF_SUBSET, 10, 4).random(4)).all()
    assert not (a == substream(5, SAMPLING).random(4)).all()
    with pytest.raises(error.IncorrectConfig):
        substream_seed(-1, SAMPLING)
