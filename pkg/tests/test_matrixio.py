import json

import numpy as np
import pytest

from shadowqpt.matrixio import choi_from_json, choi_to_json, read_choi, read_choi_csv, write_choi, write_choi_csv
from shadowqpt.qmat import ChoiMatrix

from conftest import random_hermitian


def test_json_roundtrip(tmp_path, rng):
    l = ChoiMatrix(2, random_hermitian(16, rng))
    write_choi(tmp_path / "c.json", l, "ancilla", stage="raw")
    back, header = read_choi(tmp_path / "c.json")
    assert np.array_equal(back.mat, l.mat) and not back.normalized
    assert header == {"n": 2, "normalized": False, "scheme": "ancilla", "stage": "raw"}


def test_json_layout_row_major():
    m = np.arange(16).reshape(4, 4) + 1j * np.arange(16).reshape(4, 4) * 0.5
    d = choi_to_json(ChoiMatrix(1, m, normalized=True))
    assert d["data"][1] == [1.0, 0.5] and d["data"][4] == [4.0, 2.0]
    assert d["header"]["normalized"] is True
    json.dumps(d)


def test_csv_roundtrip(tmp_path, rng):
    l = ChoiMatrix(1, random_hermitian(4, rng), normalized=True)
    write_choi_csv(tmp_path / "c.csv", l, "two_sided")
    back, header = read_choi_csv(tmp_path / "c.csv")
    assert np.array_equal(back.mat, l.mat) and back.normalized
    assert header == {"n": 1, "normalized": True, "scheme": "two_sided"}


def test_bad_shape():
    d = choi_to_json(ChoiMatrix(1, np.eye(4)))
    d["data"] = d["data"][:-1]
    with pytest.raises(ValueError):
        choi_from_json(d)
