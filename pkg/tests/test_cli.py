import json
import logging

import numpy as np
import numpy.testing as nptest
import pytest

from bifidelity.cli import _log_level, build_arg_parser, main
from bifidelity.config import RunConfig
from bifidelity.files import read_json, read_matrix
from bifidelity.harness import SWEEP_COLUMNS, ExperimentHarness


def _config(tmp_path, name="run.json", **overrides):
    data = {
        "model": {"kind": "diffusion1d", "lf_points": 9, "hf_points": 17},
        "basis": {"p": 2},
        "fit_method": "least_squares",
        "rank": {"r": 3},
        "n": 8,
        "N": 40,
        "repetitions": 3,
        "bound_repetitions": 2,
        "sweep": {"n": [6, 8], "r": [2, 3]},
        "seed": 11,
        "output": str(tmp_path / "out"),
    }
    data.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


@pytest.fixture(autouse=True)
def detach_cli_handler():
    yield
    package_logger = logging.getLogger("bifidelity")
    for handler in list(package_logger.handlers):
        if getattr(handler, "_bifidelity_cli", False):
            package_logger.removeHandler(handler)
    package_logger.setLevel(logging.NOTSET)


@pytest.fixture
def generated(tmp_path):
    config = _config(tmp_path)
    assert main(["generate", "--config", config]) == 0
    return config, tmp_path / "out"


def test_generate_is_reproducible(generated, tmp_path):
    config, out = generated
    first = (out / "L.csv").read_bytes()
    assert main(["generate", "--config", config, "--out", str(tmp_path / "again")]) == 0
    assert (tmp_path / "again" / "L.csv").read_bytes() == first
    assert read_matrix(str(out / "L.csv")).shape == (7, 40)
    assert read_matrix(str(out / "H.csv")).shape == (15, 40)
    assert read_matrix(str(out / "inputs.csv")).shape == (40, 2)
    manifest = read_json(str(out / "manifest.json"))
    assert manifest["seed"] == 11 and manifest["model"]["kind"] == "diffusion1d"
    assert manifest["config_hash"] == RunConfig.load(config).config_hash()


def test_generate_empty_and_analytic(tmp_path):
    config = _config(tmp_path, N=0)
    assert main(["generate", "--config", config]) == 0
    assert read_matrix(str(tmp_path / "out" / "inputs.csv"), ncols=2).shape == (0, 2)
    analytic = _config(
        tmp_path, "analytic.json", model={"kind": "analytic", "lf_points": 33, "hf_points": 129}
    )
    assert main(["generate", "--config", analytic, "--out", str(tmp_path / "a")]) == 0
    assert read_matrix(str(tmp_path / "a" / "L.csv")).shape == (33, 40)
    assert read_matrix(str(tmp_path / "a" / "H.csv")).shape == (129, 40)


def test_fit_predict_bound(generated):
    config, out = generated
    assert main(["fit", "--config", config]) == 0
    report = read_json(str(out / "fit_report.json"))
    assert report["r"] == 3
    assert len(report["hf_indices"]) == 8
    errors = report["relative_errors"]
    assert set(errors) == {"bf", "hf_only", "lf"}
    assert errors["bf"]["mean"] < 0.1
    assert errors["lf"]["variance"] is not None

    inputs = str(out / "inputs.csv")
    assert main(["predict", str(out / "model.json"), inputs, "--config", config]) == 0
    h_hat = read_matrix(str(out / "H_hat.csv"))
    assert h_hat.shape == (15, 40)

    assert main(["bound", "--config", config]) == 0
    bound = read_json(str(out / "bound_report.json"))
    nptest.assert_allclose(bound["phi_t"], 0.977250, atol=1e-6)
    assert bound["bounds"]["n_hat"] == 8
    assert bound["bounds"]["efficacy"] > 0
    assert len(bound["skeleton_indices"]) == 3
    assert bound["mid_spectral_error"] >= 0
    lines = (out / "pointwise_bounds.csv").read_text().splitlines()
    assert lines[0] == "point,coord,bound,prob,clamped,true_mse"
    assert len(lines) == 16


def test_identical_fidelities(generated, tmp_path):
    config, out = generated
    data = {"lf": str(out / "L.csv"), "hf": str(out / "L.csv"), "inputs": str(out / "inputs.csv")}
    same = _config(tmp_path, "same.json", model=None, data=data, rank={"r": 6})
    assert main(["fit", "--config", same, "--out", str(tmp_path / "same")]) == 0
    errors = read_json(str(tmp_path / "same" / "fit_report.json"))["relative_errors"]
    for stat in ("mean", "variance"):
        assert errors["bf"][stat] <= errors["hf_only"][stat] + 1e-8


def test_sweep_rows_and_determinism(generated, tmp_path):
    config, out = generated
    data = {"lf": str(out / "L.csv"), "hf": str(out / "H.csv"), "inputs": str(out / "inputs.csv")}
    sweep = _config(tmp_path, "sweep.json", data=data)
    assert main(["sweep", "--config", sweep, "--out", str(tmp_path / "one")]) == 0
    assert main(["sweep", "--config", sweep, "--out", str(tmp_path / "two"), "--threads", "4"]) == 0
    first = (tmp_path / "one" / "sweep.csv").read_bytes()
    assert first == (tmp_path / "two" / "sweep.csv").read_bytes()
    lines = first.decode().splitlines()
    assert lines[0] == ",".join(SWEEP_COLUMNS)
    assert len(lines) == 1 + 2 * 2 * 3
    rows = ExperimentHarness(RunConfig.load(sweep)).sweep()
    assert [(row["n"], row["r"], row["rep"]) for row in rows] == sorted(
        (n, r, rep) for n in (6, 8) for r in (2, 3) for rep in range(3)
    )
    assert all(row["status"] == "ok" for row in rows)
    assert all(("bound" in row) == (row["rep"] < 2) for row in rows)


def test_sweep_single_cell_json(generated, tmp_path):
    config, out = generated
    data = {"lf": str(out / "L.csv"), "hf": str(out / "H.csv"), "inputs": str(out / "inputs.csv")}
    single = _config(tmp_path, "single.json", data=data, repetitions=1, sweep={"n": [8], "r": [3]})
    target = tmp_path / "single"
    assert main(["sweep", "--config", single, "--out", str(target), "--format", "json"]) == 0
    document = read_json(str(target / "sweep.json"))
    assert len(document["rows"]) == 1
    assert document["columns"] == list(SWEEP_COLUMNS)


def test_eigs(generated, tmp_path):
    config, out = generated
    data = {"lf": str(out / "L.csv"), "hf": str(out / "H.csv"), "inputs": str(out / "inputs.csv")}
    eigs = _config(tmp_path, "eigs.json", data=data)
    rows = ExperimentHarness(RunConfig.load(eigs)).eigs()
    assert rows[0]["mode"] == 1
    nptest.assert_allclose([rows[0]["lf"], rows[0]["hf"]], [1.0, 1.0])
    assert all(np.diff([row["lf"] for row in rows if row["lf"] is not None]) <= 0)

    same = dict(data, hf=data["lf"])
    identical = ExperimentHarness(RunConfig.load(_config(tmp_path, "same.json", data=same)))
    for row in identical.eigs():
        nptest.assert_allclose(row["lf"], row["hf"], atol=1e-8)


def test_exit_codes(generated, tmp_path):
    config, out = generated
    assert main(["fit", "--config", _config(tmp_path, "bad.json", colour="red")]) == 2
    assert main(["fit", "--config", config, "--out", str(tmp_path / "nothing")]) == 3
    infeasible = _config(
        tmp_path, "l12.json", fit_method="l12", solver={"kappa_policy": "explicit", "kappa": 0.0}
    )
    assert main(["fit", "--config", infeasible, "--out", str(out)]) == 4
    with pytest.raises(SystemExit) as info:
        main(["unknown"])
    assert info.value.code == 2


def test_parser_and_log_level():
    args = build_arg_parser().parse_args(["predict", "m.json", "x.csv", "--seed", "3"])
    assert (args.command, args.model, args.inputs, args.seed) == ("predict", "m.json", "x.csv", 3)
    assert _log_level(None) == logging.WARNING
    assert _log_level("debug") == logging.DEBUG
    assert _log_level("15") == 15
    assert _log_level("loud") == logging.WARNING


def test_linear_algebra_failure_exit_code(generated, monkeypatch):
    config, _ = generated

    def diverge(self):
        raise np.linalg.LinAlgError("SVD did not converge")

    monkeypatch.setattr(ExperimentHarness, "fit", diverge)
    assert main(["fit", "--config", config]) == 4
