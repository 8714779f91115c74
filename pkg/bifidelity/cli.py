"""
Command line entry point ``bifidelity``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""

import argparse
import logging
import os
import sys
import typing

import numpy as np

from . import error
from .config import FORMATS, RunConfig
from .const import EXIT_OK, LOG_ENV, LOGGER_NAME, __version__
from .harness import ExperimentHarness

logger = logging.getLogger(LOGGER_NAME)


def _log_level(value: typing.Optional[str]) -> int:
    if not value:
        return logging.WARNING
    if value.isdigit():
        return int(value)
    level = logging.getLevelName(value.upper())
    return level if isinstance(level, int) else logging.WARNING


def setup_logging(environ=None) -> logging.Handler:
    """Attaches a stream handler to the package logger at the level named by ``BIFI_LOG``."""
    environ = os.environ if environ is None else environ
    level = _log_level(environ.get(LOG_ENV))
    package_logger = logging.getLogger(LOGGER_NAME)
    for handler in list(package_logger.handlers):
        if getattr(handler, "_bifidelity_cli", False):
            package_logger.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    handler._bifidelity_cli = True
    package_logger.addHandler(handler)
    package_logger.setLevel(level)
    return handler


def build_arg_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="Output directory (overrides `output`)")
    common.add_argument("--seed", type=int, help="Root seed (overrides `seed`)")
    common.add_argument("--threads", type=int, help="Worker threads (overrides `threads`)")
    common.add_argument("--format", choices=FORMATS, help="Tabular output format")

    parser = argparse.ArgumentParser(
        prog="bifidelity", description="Bi-fidelity stochastic model reduction experiments"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("generate", parents=[common], help="Sample the configured model pair")
    commands.add_parser("fit", parents=[common], help="Fit a bi-fidelity model")
    predict = commands.add_parser("predict", parents=[common], help="Evaluate a saved model")
    predict.add_argument("model", help="Model file written by `fit`")
    predict.add_argument("inputs", help="Canonical inputs, one sample per row")
    bound = commands.add_parser("bound", parents=[common], help="Error bounds of a saved model")
    bound.add_argument("--model", dest="model_path", help="Model file, <out>/model.json by default")
    commands.add_parser("sweep", parents=[common], help="Repeat fits over the n and r grids")
    commands.add_parser("eigs", parents=[common], help="Normalized KL spectra per fidelity")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """Reads ``--config`` (defaults without it) and applies the command line overrides."""
    config = RunConfig.load(args.config) if args.config else RunConfig()
    return config.with_overrides(
        seed=args.seed, output=args.out, threads=args.threads, format=args.format
    )


def run(args: argparse.Namespace) -> None:
    harness = ExperimentHarness(load_config(args))
    if args.command == "generate":
        harness.generate()
    elif args.command == "fit":
        harness.fit()
    elif args.command == "predict":
        harness.predict(args.model, args.inputs)
    elif args.command == "bound":
        harness.bound(args.model_path)
    elif args.command == "sweep":
        harness.sweep()
    elif args.command == "eigs":
        harness.eigs()


def main(argv: typing.Optional[typing.Sequence[str]] = None) -> int:
    """
    Runs one subcommand.

    :param argv: Arguments without the program name, ``sys.argv[1:]`` by default.
    :return: Process exit code.
    """
    args = build_arg_parser().parse_args(argv)
    setup_logging()
    try:
        run(args)
    except error.BifidelityError as ex:
        logger.error(f"{type(ex).__name__}: {ex}")
        return ex.exit_code
    except np.linalg.LinAlgError as ex:
        logger.error(f"Linear algebra failure: {ex}")
        return error.NumericalFailure.exit_code
    return EXIT_OK
