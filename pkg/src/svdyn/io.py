"""CSV and JSON readers/writers.  Floats are written with ``repr`` so they round-trip exactly."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .domains import Grid, Trajectory
from .measures import DiscreteMeasure, EmpiricalMeasure
from .relations import EdgeCoupling, FiniteRelation


class FormatError(ValueError):
    """A file does not have the expected layout."""


def _rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        return [h.strip() for h in header], [r for r in reader if r]


def _write(path, header, rows):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _floats(row, path):
    try:
        return [float(v) for v in row]
    except ValueError:
        raise FormatError(f"{path}: non-numeric entry in row {row}") from None


def write_trajectory(path, X: Trajectory):
    header = ["t"] + [f"x{i}" for i in range(X.dim)]
    _write(path, header, ([repr(float(t))] + [repr(float(v)) for v in p]
                          for t, p in zip(X.times, X.points)))


def read_trajectory(path, domain=None) -> Trajectory:
    """Trajectory from ``t,x0[,x1...]``; circle steps are taken as shortest arcs."""
    header, rows = _rows(path)
    if not header or header[0] != "t" or header[1:] != [f"x{i}" for i in range(len(header) - 1)]:
        raise FormatError(f"{path}: expected header t,x0[,x1...]")
    data = np.array([_floats(r, path) for r in rows])
    if data.ndim != 2 or data.shape[0] == 0:
        raise FormatError(f"{path}: no trajectory rows")
    return Trajectory(data[:, 0], data[:, 1:], domain)


def write_measure(path, mu: EmpiricalMeasure):
    grid = mu.grid
    header = ["cell"] + [f"center{i}" for i in range(grid.dim)] + ["weight"]
    centers = grid.centers()
    _write(path, header, ([str(c)] + [repr(float(v)) for v in centers[c]] + [repr(float(w))]
                          for c, w in enumerate(mu.weights)))


def read_measure(path, grid: Grid) -> EmpiricalMeasure:
    header, rows = _rows(path)
    expect = ["cell"] + [f"center{i}" for i in range(grid.dim)] + ["weight"]
    if header != expect:
        raise FormatError(f"{path}: expected header {','.join(expect)}")
    w = np.zeros(grid.n_cells)
    seen = set()
    for r in rows:
        c = int(r[0])
        if not 0 <= c < grid.n_cells or c in seen:
            raise FormatError(f"{path}: bad or repeated cell index {c}")
        seen.add(c)
        vals = _floats(r[1:], path)
        if not np.allclose(vals[:-1], grid.center(c), rtol=0, atol=1e-12):
            raise FormatError(f"{path}: cell {c} centre does not match the grid")
        w[c] = vals[-1]
    return EmpiricalMeasure(grid, w)


def write_edges(path, F: FiniteRelation):
    _write(path, ["from", "to"], ([str(a), str(b)] for a, b in F.edges()))


def read_edges(path, n: int | None = None) -> FiniteRelation:
    header, rows = _rows(path)
    if header != ["from", "to"]:
        raise FormatError(f"{path}: expected header from,to")
    try:
        edges = [(int(a), int(b)) for a, b in rows]
    except ValueError:
        raise FormatError(f"{path}: edges must be integer pairs") from None
    if n is None:
        n = 1 + max(max(a, b) for a, b in edges) if edges else 0
    return FiniteRelation.from_edges(n, edges)


def write_state_measure(path, mu: DiscreteMeasure):
    _write(path, ["state", "weight"], ([str(i), repr(float(v))] for i, v in enumerate(mu.p)))


def read_state_measure(path, n: int | None = None) -> DiscreteMeasure:
    header, rows = _rows(path)
    if header != ["state", "weight"]:
        raise FormatError(f"{path}: expected header state,weight")
    pairs = [(int(r[0]), float(r[1])) for r in rows]
    size = n if n is not None else 1 + max(i for i, _ in pairs)
    p = np.zeros(size)
    for i, v in pairs:
        if not 0 <= i < size:
            raise FormatError(f"{path}: state {i} out of range")
        p[i] = v
    return DiscreteMeasure(p)


def write_coupling(path, c: EdgeCoupling):
    _write(path, ["from", "to", "weight"],
           ([str(a), str(b), repr(float(w))] for (a, b), w in zip(c.edges, c.weights)))


def read_coupling(path) -> EdgeCoupling:
    header, rows = _rows(path)
    if header != ["from", "to", "weight"]:
        raise FormatError(f"{path}: expected header from,to,weight")
    return EdgeCoupling(np.array([(int(r[0]), int(r[1])) for r in rows]).reshape(-1, 2),
                        np.array([float(r[2]) for r in rows]))


def write_states(path, states):
    _write(path, ["state"], ([str(int(s))] for s in states))


def read_states(path) -> np.ndarray:
    header, rows = _rows(path)
    if header != ["state"]:
        raise FormatError(f"{path}: expected header state")
    return np.array([int(r[0]) for r in rows], dtype=np.int64)


DEFECT_HEADER = ["t", "T", "lower", "upper", "model_err", "certified"]


def write_defects(path, bounds):
    _write(path, DEFECT_HEADER,
           ([repr(b.t), repr(b.T), repr(b.lower), repr(b.upper), repr(b.model_err),
             str(int(b.certified))] for b in bounds))


def read_defects(path) -> list[dict]:
    header, rows = _rows(path)
    if header != DEFECT_HEADER:
        raise FormatError(f"{path}: expected header {','.join(DEFECT_HEADER)}")
    out = []
    for r in rows:
        vals = _floats(r[:5], path)
        out.append(dict(zip(DEFECT_HEADER[:5], vals), certified=r[5] == "1"))
    return out


def to_plain(obj):
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path, obj):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(to_plain(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
