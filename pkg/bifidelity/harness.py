"""
Experiment harness behind the command line: ensemble generation, fitting, prediction, error
bounds, parameter sweeps and eigenvalue spectra. Every output lands in the configured output
directory and every random choice comes from a named sub-stream of the configured seed.
"""

import logging
import os
import time
import typing
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import error
from .bounds import (
    assess,
    compute_moments,
    efficacy,
    mid_spectral_error,
    normal_cdf,
    practical_bounds,
    true_mse,
)
from .config import RunConfig
from .const import LOGGER_NAME, __version__
from .files import read_json, read_matrix, write_json, write_matrix, write_table
from .model import BasisKind, BfModel, Ensemble, Fidelity, StatSummary
from .pairs import generate_ensemble, point_coords
from .smr import (
    bf_predict,
    build_reduced_basis,
    fit_bf_model,
    fit_lf_pc,
    interpolate_statistics,
    kl_decompose,
    pc_statistics,
    relative_error,
    run_smr,
    select_hf_indices,
    statistics,
)
from .utils.streams import (
    BOUND_SUBSET,
    COHERENCE_POOL,
    HF_SUBSET,
    SOLVER_HOLDOUT,
    substream,
    substream_int,
)

SWEEP_COLUMNS = (
    "n",
    "r",
    "rep",
    "e_mean",
    "e_var",
    "bound",
    "prob",
    "efficacy",
    "hf_e_mean",
    "hf_e_var",
    "lf_e_mean",
    "lf_e_var",
    "status",
)
POINTWISE_COLUMNS = ("point", "coord", "bound", "prob", "clamped", "true_mse")


class ExperimentHarness:
    """
    Runs the experiment commands of one configuration.

    :param config: The validated :class:`.config.RunConfig`.

    :ivar config: Configuration of this harness.
    :ivar logger: Logger of this harness.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.logger = logging.getLogger(LOGGER_NAME)

    def path(self, name: str) -> str:
        """Path of an output file."""
        return os.path.join(self.config.output, name)

    def _metadata(self) -> dict:
        return {
            "seed": self.config.seed,
            "config_hash": self.config.config_hash(),
            "version": __version__,
        }

    def _solver_options(self):
        seed = substream_int(self.config.seed, SOLVER_HOLDOUT, self.config.solver.seed)
        return self.config.solver.replace(seed=seed)

    def _write_rows(self, stem: str, header: typing.Sequence[str], rows: typing.List[dict]) -> str:
        if self.config.format == "json":
            target = self.path(f"{stem}.json")
            write_json(target, {"columns": list(header), "rows": rows})
        else:
            target = self.path(f"{stem}.csv")
            write_table(target, header, rows)
        return target

    def generate(self) -> typing.Dict[str, str]:
        """
        Samples the configured model pair and writes ``L.csv``, ``H.csv``, ``inputs.csv`` and
        ``manifest.json``.

        :raises: :class:`.error.IncorrectConfig` - No model pair configured.
        :return: Paths of the written files.
        """
        spec = self.config.model
        if spec is None:
            raise error.IncorrectConfig("`generate` needs a `model` section")
        self.logger.info(f"Generating {spec.kind.tag} ensembles of {self.config.N} samples")
        lf, hf = generate_ensemble(spec, self.config.N, seed=self.config.seed)
        files = {
            "lf": self.path("L.csv"),
            "hf": self.path("H.csv"),
            "inputs": self.path("inputs.csv"),
        }
        write_matrix(files["lf"], lf.qoi)
        write_matrix(files["hf"], hf.qoi)
        write_matrix(files["inputs"], lf.inputs)
        manifest = dict(self._metadata(), model=spec.to_dict(), N=self.config.N, files=files)
        manifest["lf_points"] = lf.n_points
        manifest["hf_points"] = hf.n_points
        files["manifest"] = self.path("manifest.json")
        write_json(files["manifest"], manifest)
        return files

    def _coords(self, fidelity: Fidelity, n_points: int):
        spec = self.config.model
        if spec is None:
            return None
        coords = point_coords(spec, fidelity)
        return coords if len(coords) == n_points else None

    def load_data(
        self, require_hf: bool = True
    ) -> typing.Tuple[Ensemble, typing.Optional[Ensemble]]:
        """
        Reads the ensembles named in the ``data`` section, or the files :meth:`generate` wrote.

        :param require_hf: Whether a missing HF file is an error.
        :raises: :class:`.error.IncorrectData` - Missing or inconsistent files.
        """
        data = self.config.data
        if data is not None:
            lf_path, hf_path, inputs_path = data.lf, data.hf, data.inputs
        else:
            lf_path, hf_path = self.path("L.csv"), self.path("H.csv")
            inputs_path = self.path("inputs.csv")
        d = self.config.basis["d"]
        inputs = read_matrix(inputs_path, ncols=d)
        if inputs.shape[1] != d:
            raise error.DimensionMismatch("input columns", d, inputs.shape[1])
        l_mat = read_matrix(lf_path, ncols=inputs.shape[0])
        lf = Ensemble(inputs, l_mat, Fidelity.LF, self._coords(Fidelity.LF, l_mat.shape[0]))
        hf = None
        if hf_path is not None and (require_hf or os.path.exists(hf_path)):
            h_mat = read_matrix(hf_path, ncols=inputs.shape[0])
            if h_mat.shape[1] != l_mat.shape[1]:
                raise error.DimensionMismatch("HF sample count", l_mat.shape[1], h_mat.shape[1])
            hf = Ensemble(inputs, h_mat, Fidelity.HF, self._coords(Fidelity.HF, h_mat.shape[0]))
        elif require_hf:
            raise error.IncorrectData("This command needs HF samples (`data.hf`)")
        self.logger.debug(
            f"Loaded {lf.n_samples} samples: LF {lf.n_points} points, "
            f"HF {None if hf is None else hf.n_points} points"
        )
        return lf, hf

    def _lf_errors(self, lf_stats: StatSummary, lf: Ensemble, hf: Ensemble, reference, reasons):
        if lf.n_points != hf.n_points:
            if lf.point_coords is None or hf.point_coords is None:
                reasons["lf"] = "LF and HF points differ and their coordinates are unknown"
                return None, None
            lf_stats = interpolate_statistics(lf_stats, lf.point_coords, hf.point_coords)
        return _safe_errors(lf_stats, reference, "lf", reasons)

    def fit(self) -> typing.Tuple[BfModel, dict]:
        """
        Fits the bi-fidelity model on ``n`` HF samples and writes ``model.json`` and
        ``fit_report.json``.

        The report compares BF, HF-only and LF statistics with the PC statistics of all ``N``
        HF samples.
        """
        started = time.perf_counter()
        cfg = self.config
        lf, hf = self.load_data()
        basis = cfg.pc_basis()
        opts = self._solver_options()
        indices = select_hf_indices(lf.n_samples, cfg.n, substream(cfg.seed, HF_SUBSET))
        self.logger.info(f"Fitting bi-fidelity model on {cfg.n} of {lf.n_samples} HF samples")
        result = run_smr(lf, hf.subset(indices), basis, cfg.rank, opts, cfg.fit_method)
        model = BfModel(result.model.coefficients, result.model.reduced, indices)

        reasons = {}
        reference = pc_statistics(hf, basis, None, cfg.fit_method, opts)
        errors = {"bf": _safe_errors(result.stats, reference, "bf", reasons)}
        try:
            hf_only = pc_statistics(hf, basis, indices, cfg.fit_method, opts)
            errors["hf_only"] = _safe_errors(hf_only, reference, "hf_only", reasons)
        except error.NumericalFailure as ex:
            reasons["hf_only"] = str(ex)
            errors["hf_only"] = (None, None)
        lf_stats = statistics(result.diagnostics["lf_coefficients"])
        errors["lf"] = self._lf_errors(lf_stats, lf, hf, reference, reasons)

        write_json(self.path("model.json"), model.to_dict())
        report = dict(
            self._metadata(),
            r=result.diagnostics["r"],
            eigenvalues=result.diagnostics["eigenvalues"],
            n=cfg.n,
            N=lf.n_samples,
            hf_indices=list(indices),
            relative_errors={
                name: {"mean": e_mean, "variance": e_var}
                for name, (e_mean, e_var) in errors.items()
            },
            bf_mean=result.stats.mean,
            bf_variance=result.stats.variance,
            timing_seconds=time.perf_counter() - started,
        )
        write_json(
            self.path("fit_report.json"),
            report,
            {f"/relative_errors/{name}": reason for name, reason in reasons.items()},
        )
        self.logger.info(f"Fit completed with r={model.r}")
        return model, report

    def load_model(self, model_path: typing.Optional[str] = None) -> BfModel:
        """
        Reads a model file, ``model.json`` of the output directory by default.

        :raises: :class:`.error.IncorrectData` - Missing or malformed file.
        """
        model_path = model_path or self.path("model.json")
        data = read_json(model_path)
        try:
            return BfModel.from_dict(data)
        except (KeyError, TypeError, ValueError) as ex:
            raise error.IncorrectData(f"{model_path} is not a model file: {ex}") from ex

    def predict(self, model_path: str, inputs_path: str) -> np.ndarray:
        """
        Evaluates a saved model at the canonical inputs of ``inputs_path`` and writes ``H_hat``.

        :return: ``M×K`` prediction.
        """
        model = self.load_model(model_path)
        d = model.reduced.basis.dimension
        inputs = read_matrix(inputs_path, ncols=d)
        if inputs.shape[1] != d:
            raise error.DimensionMismatch("input columns", d, inputs.shape[1])
        h_hat = bf_predict(model, inputs)
        if self.config.format == "json":
            write_json(self.path("H_hat.json"), {"H_hat": h_hat})
        else:
            write_matrix(self.path("H_hat.csv"), h_hat)
        self.logger.info(f"Predicted {inputs.shape[0]} samples")
        return h_hat

    def _bound_indices(self, n_total: int, model: BfModel, *keys: int):
        if self.config.n_hat is None:
            return np.asarray(model.hf_indices, dtype=int)
        return select_hf_indices(
            n_total, self.config.n_hat, substream(self.config.seed, BOUND_SUBSET, *keys)
        )

    def bound(self, model_path: typing.Optional[str] = None) -> dict:
        """
        Evaluates practical and a priori bounds of a saved model and writes
        ``bound_report.json`` and ``pointwise_bounds``.

        The full HF file serves as reference for true errors and efficacy.
        """
        started = time.perf_counter()
        cfg = self.config
        lf, hf = self.load_data()
        model = self.load_model(model_path)
        if max(model.hf_indices, default=-1) >= lf.n_samples:
            raise error.IncorrectData("Model was fitted on samples the data files do not hold")
        indices = self._bound_indices(lf.n_samples, model)
        self.logger.info(f"Bounding model errors with {len(indices)} HF samples, t={cfg.t}")
        assessment = assess(
            lf,
            hf,
            model,
            mid_rank=cfg.mid_rank,
            bound_indices=indices,
            t=cfg.t,
            reference=True,
            tau_grid=cfg.tau_grid,
            rng=substream(cfg.seed, COHERENCE_POOL),
        )
        bounds = assessment.bounds
        coords, truth = hf.point_coords, bounds.pointwise_true
        rows = [
            {
                "point": i,
                "coord": None if coords is None else float(coords[i]),
                "bound": float(bounds.pointwise_bound[i]),
                "prob": float(bounds.pointwise_prob[i]),
                "clamped": int(bounds.pointwise_clamped[i]),
                "true_mse": None if truth is None else float(truth[i]),
            }
            for i in range(len(bounds.pointwise_bound))
        ]
        self._write_rows("pointwise_bounds", POINTWISE_COLUMNS, rows)
        report = dict(
            self._metadata(),
            **assessment.to_dict(),
            phi_t=float(normal_cdf(cfg.t)),
            bound_indices=list(indices),
            skeleton_indices=list(assessment.mid.skeleton_indices),
            mid_spectral_error=mid_spectral_error(hf.qoi, assessment.mid),
            timing_seconds=time.perf_counter() - started,
        )
        reasons = {}
        if bounds.efficacy is None:
            reasons["/bounds/efficacy"] = "true error over the reference is zero"
        if assessment.corollary1 is None:
            reasons["/corollary1"] = "no finite positive a priori bound on the grid"
        write_json(self.path("bound_report.json"), report, reasons)
        return report

    def _sweep_unit(self, unit, lf, hf, reduced, reference, basis, opts, lf_errors):
        n, rep = unit
        cfg = self.config
        rows = []
        try:
            indices = select_hf_indices(lf.n_samples, n, substream(cfg.seed, HF_SUBSET, n, rep))
        except error.BifidelityError as ex:
            self.logger.exception(f"Sweep cell n={n} rep={rep} failed")
            return [_error_row(n, r, rep, ex) for r in reduced]
        try:
            hf_only = pc_statistics(hf, basis, indices, cfg.fit_method, opts)
            hf_errors = _safe_errors(hf_only, reference, "hf_only", {})
        except error.NumericalFailure:
            hf_errors = (None, None)
        for r, rb in reduced.items():
            if isinstance(rb, Exception):
                rows.append(_error_row(n, r, rep, rb))
                continue
            try:
                model = fit_bf_model(rb, hf, indices)
                stats = statistics(model.coefficients, BasisKind.REDUCED)
                e_mean, e_var = _safe_errors(stats, reference, "bf", {})
                row = {
                    "n": n,
                    "r": r,
                    "rep": rep,
                    "e_mean": e_mean,
                    "e_var": e_var,
                    "hf_e_mean": hf_errors[0],
                    "hf_e_var": hf_errors[1],
                    "lf_e_mean": lf_errors[0],
                    "lf_e_var": lf_errors[1],
                    "status": "ok",
                }
                if rep < cfg.bound_repetitions:
                    row.update(self._sweep_bound(lf, hf, model, n, rep))
                rows.append(row)
            except (error.BifidelityError, np.linalg.LinAlgError) as ex:
                self.logger.exception(f"Sweep cell n={n} r={r} rep={rep} failed")
                rows.append(_error_row(n, r, rep, ex))
        self.logger.debug(f"Sweep cell n={n} rep={rep} done")
        return rows

    def _sweep_bound(self, lf: Ensemble, hf: Ensemble, model: BfModel, n: int, rep: int) -> dict:
        indices = self._bound_indices(lf.n_samples, model, n, rep)
        if len(indices) < 2:
            return {}
        h_hat_sub = bf_predict(model, hf.inputs[indices])
        report = practical_bounds(compute_moments(hf.qoi[:, indices], h_hat_sub), self.config.t)
        _, summed = true_mse(hf.qoi, bf_predict(model, hf.inputs))
        eff = efficacy(report.sum_bound, summed) if summed > 0 else None
        return {"bound": report.sum_bound, "prob": report.sum_prob, "efficacy": eff}

    def sweep(self) -> typing.List[dict]:
        """
        Repeats the bi-fidelity fit over the ``n × r`` grid and writes one long-form row per
        ``(n, r, rep)`` to ``sweep``.

        The LF fit and its KL decomposition are shared by every cell; the HF subset of a cell
        depends only on the seed, ``n`` and the repetition, so all ranks see the same samples
        and results do not depend on the thread count.
        """
        started = time.perf_counter()
        cfg = self.config
        lf, hf = self.load_data()
        basis = cfg.pc_basis()
        opts = self._solver_options()
        self.logger.info("Fitting LF PC expansion...")
        c_lf = fit_lf_pc(lf, basis, opts, cfg.fit_method)
        kl = kl_decompose(c_lf)
        reference = pc_statistics(hf, basis, None, cfg.fit_method, opts)
        lf_errors = self._lf_errors(statistics(c_lf), lf, hf, reference, {})

        reduced = {}
        for r in sorted(set(cfg.sweep["r"])):
            try:
                reduced[r] = build_reduced_basis(c_lf, kl, r, basis)
            except error.BifidelityError as ex:
                self.logger.warning(f"Sweep rank r={r} unavailable: {ex}")
                reduced[r] = ex

        units = [(n, rep) for n in sorted(set(cfg.sweep["n"])) for rep in range(cfg.repetitions)]
        self.logger.info(f"Sweeping {len(units) * len(reduced)} cells on {cfg.threads} thread(s)")
        with ThreadPoolExecutor(max_workers=cfg.threads) as executor:
            results = executor.map(
                lambda unit: self._sweep_unit(
                    unit, lf, hf, reduced, reference, basis, opts, lf_errors
                ),
                units,
            )
            rows = [row for unit_rows in results for row in unit_rows]
        rows.sort(key=lambda row: (row["n"], row["r"], row["rep"]))
        self._write_rows("sweep", SWEEP_COLUMNS, rows)
        self.logger.info(f"Sweep completed in {time.perf_counter() - started:.1f}s")
        return rows

    def eigs(self) -> typing.List[dict]:
        """
        Writes the normalized KL spectra of the LF fit and, when HF samples exist, of an HF PC
        fit on all samples, to ``eigenvalues``.
        """
        cfg = self.config
        lf, hf = self.load_data(require_hf=False)
        basis = cfg.pc_basis()
        opts = self._solver_options()
        spectra = {"lf": kl_decompose(fit_lf_pc(lf, basis, opts, cfg.fit_method)).normalized()}
        if hf is not None:
            spectra["hf"] = kl_decompose(fit_lf_pc(hf, basis, opts, cfg.fit_method)).normalized()
        modes = max(len(values) for values in spectra.values())
        rows = [
            {
                "mode": k + 1,
                **{
                    name: float(values[k]) if k < len(values) else None
                    for name, values in spectra.items()
                },
            }
            for k in range(modes)
        ]
        self._write_rows("eigenvalues", ("mode", "lf", "hf"), rows)
        return rows


def _safe_errors(est: StatSummary, reference: StatSummary, name: str, reasons: dict):
    try:
        return relative_error(est, reference)
    except error.IncorrectData as ex:
        reasons[name] = str(ex)
        return None, None


def _error_row(n: int, r: int, rep: int, ex: Exception) -> dict:
    return {"n": n, "r": r, "rep": rep, "status": f"error: {ex}"}
