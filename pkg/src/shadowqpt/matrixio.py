"""Choi matrix dumps: row-major complex entries as ``[re, im]`` pairs plus a small header."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .qmat import ChoiMatrix


def choi_header(l: ChoiMatrix, scheme: str | None = None, **extra) -> dict:
    return {"n": l.n, "normalized": bool(l.normalized), "scheme": scheme, **extra}


def choi_to_json(l: ChoiMatrix, scheme: str | None = None, **extra) -> dict:
    flat = np.asarray(l.mat, dtype=complex).reshape(-1)
    return {"header": choi_header(l, scheme, **extra), "data": np.column_stack([flat.real, flat.imag]).tolist()}


def choi_from_json(d: dict) -> tuple[ChoiMatrix, dict]:
    h = d["header"]
    n = int(h["n"])
    a = np.asarray(d["data"], dtype=float)
    dim = 4**n
    if a.shape != (dim * dim, 2):
        raise ValueError(f"matrix dump for n={n} needs {dim * dim} [re, im] pairs, got shape {a.shape}")
    return ChoiMatrix(n, (a[:, 0] + 1j * a[:, 1]).reshape(dim, dim), bool(h["normalized"])), h


def write_choi(path, l: ChoiMatrix, scheme: str | None = None, **extra) -> None:
    Path(path).write_text(json.dumps(choi_to_json(l, scheme, **extra)) + "\n")


def read_choi(path) -> tuple[ChoiMatrix, dict]:
    return choi_from_json(json.loads(Path(path).read_text()))


def write_choi_csv(path, l: ChoiMatrix, scheme: str | None = None) -> None:
    """CSV with one header row ``n,normalized,scheme`` then one ``re,im`` row per entry."""
    flat = np.asarray(l.mat, dtype=complex).reshape(-1)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["n", "normalized", "scheme"])
        w.writerow([l.n, int(l.normalized), scheme or ""])
        w.writerow(["re", "im"])
        w.writerows(zip(map(repr, flat.real.tolist()), map(repr, flat.imag.tolist())))


def read_choi_csv(path) -> tuple[ChoiMatrix, dict]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    n, normalized, scheme = int(rows[1][0]), bool(int(rows[1][1])), rows[1][2] or None
    a = np.array(rows[3:], dtype=float)
    dim = 4**n
    if a.shape != (dim * dim, 2):
        raise ValueError(f"matrix dump for n={n} needs {dim * dim} rows, got {len(a)}")
    return ChoiMatrix(n, (a[:, 0] + 1j * a[:, 1]).reshape(dim, dim), normalized), {"n": n, "normalized": normalized, "scheme": scheme}
