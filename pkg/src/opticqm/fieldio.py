"""Flat CSV + JSON-header serialization for fields.

A field ``name`` is written as ``name.csv`` (one row per node, columns
``i,j,k[,c],re,im``) next to ``name.json`` (grid description and column
list).  Floats are written with 17 significant digits so that a read
returns the identical IEEE doubles.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import Grid, ScalarField, VectorField3

FORMAT_VERSION = 1
_FMT = "%.17g"


def _paths(path):
    p = Path(path)
    stem = p.with_suffix("") if p.suffix in (".csv", ".json") else p
    return stem.with_suffix(".csv"), stem.with_suffix(".json")


def _index_columns(grid: Grid) -> np.ndarray:
    idx = np.indices(grid.shape).reshape(grid.dim, -1).T
    pad = np.zeros((idx.shape[0], 3 - grid.dim), dtype=int)
    return np.hstack([idx, pad])


def write_field(path, field) -> tuple:
    """Write a ScalarField or VectorField3; returns the (csv, json) paths."""
    csv_path, json_path = _paths(path)
    grid = field.grid
    idx = _index_columns(grid)
    if isinstance(field, VectorField3):
        kind = "vector"
        columns = ["i", "j", "k", "c", "re", "im"]
        blocks = []
        for c in range(3):
            v = field.values[c].ravel()
            blocks.append(np.column_stack([idx, np.full(len(v), c), v.real, v.imag]))
        rows = np.vstack(blocks)
        n_int = 4
    else:
        kind = "scalar"
        columns = ["i", "j", "k", "re", "im"]
        v = field.values.ravel()
        rows = np.column_stack([idx, v.real, v.imag])
        n_int = 3
    header = {"format": "opticqm-field", "version": FORMAT_VERSION, "kind": kind,
              "complex": bool(np.iscomplexobj(field.values)), "columns": columns,
              "grid": grid.header()}
    fmt = ["%d"] * n_int + [_FMT, _FMT]
    np.savetxt(csv_path, rows, fmt=fmt, delimiter=",", header=",".join(columns), comments="")
    json_path.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def read_field(path):
    csv_path, json_path = _paths(path)
    header = json.loads(json_path.read_text())
    if header.get("format") != "opticqm-field":
        raise ValueError(f"{json_path} is not a field header")
    grid = Grid.from_header(header["grid"])
    rows = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    idx = rows[:, :grid.dim].astype(int)
    values = rows[:, -2] + 1j * rows[:, -1] if header["complex"] else rows[:, -2].copy()
    if header["kind"] == "vector":
        comp = rows[:, 3].astype(int)
        arr = np.zeros((3,) + grid.shape, dtype=values.dtype)
        arr[(comp,) + tuple(idx.T)] = values
        return VectorField3(grid, arr)
    arr = np.zeros(grid.shape, dtype=values.dtype)
    arr[tuple(idx.T)] = values
    return ScalarField(grid, arr)
