import json

import numpy as np
import numpy.testing as nptest
import pytest

from bifidelity import error
from bifidelity.files import read_json, read_matrix, write_json, write_matrix, write_table


def test_matrix_round_trip_is_exact(tmp_path, rng):
    matrix = rng.standard_normal((4, 7)) * np.logspace(-300, 300, 7)
    path = str(tmp_path / "m.csv")
    write_matrix(path, matrix)
    nptest.assert_array_equal(read_matrix(path), matrix)


def test_empty_matrices(tmp_path):
    no_rows = str(tmp_path / "rows.csv")
    write_matrix(no_rows, np.zeros((0, 2)))
    assert read_matrix(no_rows, ncols=2).shape == (0, 2)
    no_cols = str(tmp_path / "cols.csv")
    write_matrix(no_cols, np.zeros((3, 0)))
    assert read_matrix(no_cols).shape == (3, 0)


def test_bad_matrices(tmp_path):
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1,2\n3\n")
    with pytest.raises(error.IncorrectData):
        read_matrix(str(ragged))
    words = tmp_path / "words.csv"
    words.write_text("1,x\n")
    with pytest.raises(error.IncorrectData):
        read_matrix(str(words))
    with pytest.raises(error.IncorrectData):
        read_matrix(str(tmp_path / "missing.csv"))
    with pytest.raises(error.IncorrectData):
        write_matrix(str(tmp_path / "nan.csv"), [[1.0, np.nan]])


def test_json_nulls_carry_reasons(tmp_path):
    path = str(tmp_path / "r" / "report.json")
    write_json(path, {"a": np.float64(np.inf), "b": [1, np.nan], "c": None}, {"/c": "unknown"})
    data = read_json(path)
    assert data["a"] is None and data["b"] == [1, None]
    assert data["null_reasons"] == {
        "/a": "non-finite value (inf)",
        "/b/1": "non-finite value (nan)",
        "/c": "unknown",
    }
    with open(path, encoding="utf-8") as f:
        assert json.load(f) == data


def test_read_json_errors(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(error.IncorrectData):
        read_json(str(broken))


def test_write_table(tmp_path):
    path = tmp_path / "t.csv"
    write_table(str(path), ("n", "e", "status"), [{"n": 5, "e": 0.5}, {"n": 10, "status": "ok"}])
    assert path.read_text() == "n,e,status\n5,0.5,\n10,,ok\n"
