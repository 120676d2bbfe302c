"""State spaces, grids on them, and piecewise-affine trajectories."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .geometry import GeometryError, as_point


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``prod [lo_i, hi_i]``."""

    lo: tuple
    hi: tuple

    periodic = False

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or not lo:
            raise GeometryError("box bounds must be nonempty and of equal length")
        if any(a >= b for a, b in zip(lo, hi)):
            raise GeometryError(f"empty box: lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(np.subtract(self.hi, self.lo)))

    def wrap(self, x):
        return np.asarray(x, dtype=np.float64)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(x >= np.subtract(self.lo, tol)) and np.all(x <= np.add(self.hi, tol)))

    def clip(self, x):
        """Clip into the box; returns ``(point, clipped)``."""
        x = np.asarray(x, dtype=np.float64)
        y = np.clip(x, self.lo, self.hi)
        return y, bool(np.any(y != x))

    def displacement(self, a, b):
        """Vector from ``a`` to ``b``."""
        return np.asarray(b, dtype=np.float64) - np.asarray(a, dtype=np.float64)

    def distance(self, a, b) -> float:
        d = self.displacement(a, b)
        return float(math.sqrt(float(np.dot(d, d))))

    def distances(self, A, B):
        return np.linalg.norm(np.asarray(B, dtype=np.float64) - np.asarray(A, dtype=np.float64),
                              axis=-1)

    def to_dict(self):
        return {"kind": "box", "lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class Circle:
    """The circle ``R / period Z`` with arc-length metric, states in ``[0, period)``."""

    period: float = 1.0

    periodic = True
    dim = 1

    def __post_init__(self):
        if not (self.period > 0 and math.isfinite(self.period)):
            raise GeometryError(f"circle period must be positive, got {self.period}")
        object.__setattr__(self, "period", float(self.period))

    @property
    def lo(self):
        return (0.0,)

    @property
    def hi(self):
        return (self.period,)

    @property
    def diameter(self) -> float:
        return self.period / 2.0

    def wrap(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 0:
            return np.float64(kernels.wrap_periodic(float(x), self.period))
        P = self.period
        r = x - P * np.floor(x / P)
        return np.where((r >= P) | (r < 0.0), 0.0, r)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(x >= -tol) and np.all(x < self.period + tol))

    def clip(self, x):
        return self.wrap(x), False

    def displacement(self, a, b):
        """Shortest signed arc from ``a`` to ``b``, in ``[-period/2, period/2)``."""
        d = np.asarray(b, dtype=np.float64) - np.asarray(a, dtype=np.float64)
        P = self.period
        return d - P * np.floor(d / P + 0.5)

    def distance(self, a, b) -> float:
        return float(np.max(np.abs(self.displacement(a, b))))

    def distances(self, A, B):
        return np.max(np.abs(self.displacement(A, B)), axis=-1)

    def to_dict(self):
        return {"kind": "circle", "period": self.period}


Domain = Box | Circle


def domain_from_dict(d: dict) -> Domain:
    kind = d.get("kind")
    if kind == "box":
        return Box(tuple(d["lo"]), tuple(d["hi"]))
    if kind == "circle":
        return Circle(float(d.get("period", 1.0)))
    raise ValueError(f"unknown domain kind {kind!r}")


@dataclass(frozen=True)
class Grid:
    """Uniform cell grid over a domain, cells flattened in C order."""

    domain: Domain
    cells_per_axis: tuple

    def __post_init__(self):
        n = tuple(int(v) for v in np.atleast_1d(self.cells_per_axis))
        if len(n) == 1 and self.domain.dim > 1:
            n = n * self.domain.dim
        if len(n) != self.domain.dim:
            raise GeometryError("cells_per_axis does not match the domain dimension")
        if any(v < 1 for v in n):
            raise GeometryError("need at least one cell per axis")
        object.__setattr__(self, "cells_per_axis", n)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def periodic(self) -> bool:
        return self.domain.periodic

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.domain.lo)

    @property
    def widths(self) -> np.ndarray:
        return (np.array(self.domain.hi) - np.array(self.domain.lo)) / np.array(self.cells_per_axis)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cells_per_axis))

    @property
    def cell_radius(self) -> float:
        """Half the cell diagonal."""
        return float(np.linalg.norm(self.widths)) / 2.0

    def unravel(self, idx):
        return np.array(np.unravel_index(np.asarray(idx), self.cells_per_axis)).T

    def ravel(self, multi):
        multi = np.asarray(multi)
        return np.ravel_multi_index(tuple(multi.T), self.cells_per_axis)

    def centers(self, idx=None) -> np.ndarray:
        if idx is None:
            idx = np.arange(self.n_cells)
        multi = self.unravel(idx)
        return self.lo + (multi + 0.5) * self.widths

    def center(self, c: int) -> np.ndarray:
        return self.centers(np.array([c]))[0]

    def cell_bounds(self, c: int):
        multi = self.unravel(np.array([c]))[0]
        a = self.lo + multi * self.widths
        return a, a + self.widths

    def cell_of(self, points) -> np.ndarray:
        """Flat index of the cell containing each point (one point per row)."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if self.dim == 1 and pts.shape[0] == 1 and pts.shape[1] != 1:
            pts = pts.T
        if self.periodic:
            pts = self.domain.wrap(pts)
        k = np.floor((pts - self.lo) / self.widths).astype(np.int64)
        n = np.array(self.cells_per_axis)
        k = np.mod(k, n) if self.periodic else np.clip(k, 0, n - 1)
        return np.ravel_multi_index(tuple(k.T), self.cells_per_axis)

    def nearest_node(self, p) -> np.ndarray:
        """Nearest vertex of the cell lattice."""
        p = as_point(p, self.dim)
        k = np.round((p - self.lo) / self.widths)
        node = self.lo + k * self.widths
        if self.periodic:
            return self.domain.wrap(node).reshape(1)
        return np.clip(node, self.domain.lo, self.domain.hi)

    def cells_in_box(self, lo, hi):
        """Cells meeting the closed box ``[lo, hi]``; returns ``(indices, clipped)``.

        On a box domain the part outside the grid is dropped and reported as
        clipped; on the circle the range wraps.
        """
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        n = np.array(self.cells_per_axis)
        kl = np.floor((lo - self.lo) / self.widths).astype(np.int64)
        kh = np.floor((hi - self.lo) / self.widths).astype(np.int64)
        clipped = False
        if self.periodic:
            if (kh - kl)[0] + 1 >= n[0]:
                return np.arange(n[0]), False
            ks = np.mod(np.arange(kl[0], kh[0] + 1), n[0])
            return np.unique(ks), False
        if np.any(lo < np.array(self.domain.lo) - 1e-12) or np.any(hi > np.array(self.domain.hi) + 1e-12):
            clipped = True
        kl = np.clip(kl, 0, n - 1)
        kh = np.clip(kh, 0, n - 1)
        ranges = [range(a, b + 1) for a, b in zip(kl, kh)]
        multi = np.array(list(itertools.product(*ranges)), dtype=np.int64)
        return np.ravel_multi_index(tuple(multi.T), self.cells_per_axis), clipped

    def index_distance(self, a: int, b: int) -> float:
        """Euclidean distance between multi-indices, wrapping on the circle."""
        d = (self.unravel(np.array([a]))[0] - self.unravel(np.array([b]))[0]).astype(float)
        if self.periodic:
            n = self.cells_per_axis[0]
            d = np.abs(d) % n
            d = np.minimum(d, n - d)
        return float(np.linalg.norm(d))

    def to_dict(self):
        return {"domain": self.domain.to_dict(), "cells_per_axis": list(self.cells_per_axis)}


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Piecewise-affine path through knots ``(times[i], points[i])``.

    ``steps[i]`` is the displacement travelled on segment ``i``.  On a box it
    is the chord ``points[i+1] - points[i]``; on the circle it is the actual
    increment, so a path can go the long way round.  Before the first knot the
    path is constant.
    """

    times: np.ndarray
    points: np.ndarray
    domain: Domain | None = None
    steps: np.ndarray | None = None
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64).reshape(-1)
        x = np.asarray(self.points, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.shape[0] != t.shape[0] or t.shape[0] == 0:
            raise GeometryError("times and points must have the same nonzero length")
        if np.any(np.diff(t) <= 0):
            raise GeometryError("times must be strictly increasing")
        if not np.all(np.isfinite(x)):
            raise GeometryError("trajectory points must be finite")
        if self.steps is None:
            if self.domain is not None and self.domain.periodic:
                s = self.domain.displacement(x[:-1], x[1:])
            else:
                s = np.diff(x, axis=0)
        else:
            s = np.asarray(self.steps, dtype=np.float64).reshape(x.shape[0] - 1, x.shape[1])
        for arr in (t, x, s):
            arr.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", x)
        object.__setattr__(self, "steps", s)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def __len__(self):
        return self.times.shape[0]

    def __call__(self, t):
        """States at time(s) ``t``; a scalar gives one point, an array gives rows."""
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=np.float64))
        if np.any(ts > self.times[-1] * (1 + 1e-12) + 1e-12):
            raise GeometryError(f"time beyond trajectory horizon {self.times[-1]}")
        i = np.searchsorted(self.times, ts, side="right") - 1
        out = np.empty((ts.shape[0], self.dim))
        before = i < 0
        out[before] = self.points[0]
        last = i >= len(self) - 1
        out[last] = self.points[-1]
        mid = ~(before | last)
        if np.any(mid):
            j = i[mid]
            frac = (ts[mid] - self.times[j]) / (self.times[j + 1] - self.times[j])
            out[mid] = self.points[j] + frac[:, None] * self.steps[j]
        if self.domain is not None and self.domain.periodic:
            out = self.domain.wrap(out)
        return out[0] if scalar else out

    def segments(self, t0: float, t1: float):
        """Affine pieces on ``[t0, t1]`` as ``(starts, steps, durations)``."""
        if t1 > self.times[-1] * (1 + 1e-12) + 1e-12:
            raise GeometryError(f"t={t1} exceeds trajectory horizon {self.times[-1]}")
        t1 = min(t1, self.times[-1])
        starts, steps, durs = [], [], []
        if t0 < self.times[0]:
            end = min(t1, self.times[0])
            starts.append(self.points[:1])
            steps.append(np.zeros((1, self.dim)))
            durs.append(np.array([end - t0]))
        a, b = self.times[:-1], self.times[1:]
        lo = np.maximum(a, t0)
        hi = np.minimum(b, t1)
        keep = hi > lo
        if np.any(keep):
            seg = b[keep] - a[keep]
            f0 = (lo[keep] - a[keep]) / seg
            f1 = (hi[keep] - a[keep]) / seg
            st = self.steps[keep]
            p0 = self.points[:-1][keep] + f0[:, None] * st
            starts.append(p0)
            steps.append((f1 - f0)[:, None] * st)
            durs.append(hi[keep] - lo[keep])
        if not starts:
            return np.zeros((0, self.dim)), np.zeros((0, self.dim)), np.zeros(0)
        return np.concatenate(starts), np.concatenate(steps), np.concatenate(durs)

    def lifted(self) -> np.ndarray:
        """Knot positions with the circle unrolled (cumulative steps)."""
        return self.points[0] + np.concatenate([np.zeros((1, self.dim)),
                                                np.cumsum(self.steps, axis=0)])
