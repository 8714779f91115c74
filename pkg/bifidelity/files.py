"""
Matrix and report files.

Matrices are headerless CSV of decimal floats written with 17 significant digits, so a
write-then-read round trip is exact. JSON reports never carry NaN or infinities: such values
are written as ``null`` and the reason is recorded under ``null_reasons``.
"""

import csv
import json
import logging
import math
import os
import typing

import numpy as np

from . import error
from .const import LOGGER_NAME

logger = logging.getLogger(LOGGER_NAME)

FLOAT_FORMAT = "%.17g"


def _ensure_parent(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(parent, exist_ok=True)
    except OSError as ex:
        raise error.IncorrectData(f"Cannot create output directory {parent}: {ex}") from ex


def write_matrix(path: str, matrix) -> None:
    """
    Writes a matrix as headerless CSV, one row per line.

    :raises: :class:`.error.IncorrectData` - Unwritable path or non-finite values.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    if not np.all(np.isfinite(matrix)):
        raise error.IncorrectData(f"Refusing to write non-finite values to {path}")
    _ensure_parent(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            for row in matrix:
                writer.writerow([FLOAT_FORMAT % value for value in row])
    except OSError as ex:
        raise error.IncorrectData(f"Cannot write {path}: {ex}") from ex
    logger.debug(f"Wrote {matrix.shape[0]}x{matrix.shape[1]} matrix to {path}")


def read_matrix(path: str, ncols: typing.Optional[int] = None) -> np.ndarray:
    """
    Reads a headerless CSV matrix.

    :param path: File to read.
    :param ncols: Column count to give an empty file (zero rows).
    :raises: :class:`.error.IncorrectData` - Missing, ragged or non-numeric file.
    """
    try:
        with open(path, "r", newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
    except OSError as ex:
        raise error.IncorrectData(f"Cannot read {path}: {ex}") from ex
    if not rows:
        return np.zeros((0, ncols or 0))
    if not any(rows):
        # Blank lines are the rows of a matrix without columns.
        return np.zeros((len(rows), 0))
    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise error.IncorrectData(f"{path} is not rectangular")
    try:
        matrix = np.array([[float(value) for value in row] for row in rows])
    except ValueError as ex:
        raise error.IncorrectData(f"{path} holds a non-numeric entry: {ex}") from ex
    if not np.all(np.isfinite(matrix)):
        raise error.IncorrectData(f"{path} holds non-finite entries")
    return matrix


def _sanitize(value, where: str, reasons: dict):
    if isinstance(value, dict):
        return {str(k): _sanitize(v, f"{where}/{k}", reasons) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v, f"{where}/{i}", reasons) for i, v in enumerate(value)]
    if isinstance(value, np.ndarray):
        return _sanitize(value.tolist(), where, reasons)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            reasons[where or "/"] = f"non-finite value ({value})"
            return None
        return value
    return value


def to_json_safe(data: dict, reasons: typing.Optional[dict] = None) -> dict:
    """
    Converts numpy values to plain JSON types and non-finite floats to ``None``.

    :param data: Report document.
    :param reasons: Reasons for fields that are already ``None``, keyed by JSON pointer.
    :return: Document with ``null_reasons`` added when any field is null for a reason.
    """
    found = dict(reasons or {})
    clean = _sanitize(data, "", found)
    if found:
        clean["null_reasons"] = dict(sorted(found.items()))
    return clean


def write_json(path: str, data: dict, reasons: typing.Optional[dict] = None) -> None:
    """
    Writes a report document, see :func:`to_json_safe`.

    :raises: :class:`.error.IncorrectData` - Unwritable path.
    """
    _ensure_parent(path)
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(to_json_safe(data, reasons), f, indent=2, sort_keys=True, allow_nan=False)
            f.write("\n")
    except OSError as ex:
        raise error.IncorrectData(f"Cannot write {path}: {ex}") from ex


def read_json(path: str) -> dict:
    """
    Reads a JSON document.

    :raises: :class:`.error.IncorrectData` - Missing or malformed file.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except OSError as ex:
        raise error.IncorrectData(f"Cannot read {path}: {ex}") from ex
    except json.JSONDecodeError as ex:
        raise error.IncorrectData(f"{path} is not valid JSON: {ex}") from ex


def write_table(path: str, header: typing.Sequence[str], rows: typing.Iterable[dict]) -> None:
    """
    Writes long-form rows as CSV with a header; ``None`` becomes an empty cell.

    Floats use the matrix format so identical runs produce identical bytes.
    """
    _ensure_parent(path)

    def cell(value):
        if value is None:
            return ""
        if isinstance(value, (float, np.floating)):
            return FLOAT_FORMAT % value if math.isfinite(value) else ""
        return str(value)

    try:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([cell(row.get(key)) for key in header])
    except OSError as ex:
        raise error.IncorrectData(f"Cannot write {path}: {ex}") from ex
