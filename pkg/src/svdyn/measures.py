"""Occupation measures of paths on a grid and distances between them."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .domains import Grid, Trajectory
from .geometry import GeometryError, as_point

NORM_TOL = 1e-12


def _readonly(a):
    a = np.array(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Probability weights on the cells of a grid."""

    grid: Grid
    weights: np.ndarray

    def __post_init__(self):
        w = _readonly(self.weights).reshape(-1)
        if w.shape[0] != self.grid.n_cells:
            raise GeometryError("one weight per grid cell required")
        if np.any(w < 0) or abs(math.fsum(w) - 1.0) > NORM_TOL:
            raise GeometryError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def dirac(cls, grid: Grid, point) -> "EmpiricalMeasure":
        w = np.zeros(grid.n_cells)
        w[grid.cell_of(as_point(point, grid.dim))[0]] = 1.0
        return cls(grid, w)

    @classmethod
    def uniform(cls, grid: Grid) -> "EmpiricalMeasure":
        return cls(grid, np.full(grid.n_cells, 1.0 / grid.n_cells))

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights)


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability vector on states ``0..n-1``."""

    p: np.ndarray

    def __post_init__(self):
        p = _readonly(self.p).reshape(-1)
        if p.size == 0 or np.any(p < 0) or abs(math.fsum(p) - 1.0) > NORM_TOL:
            raise GeometryError("a measure needs nonnegative entries summing to 1")
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.p > 0)

    @classmethod
    def uniform_on(cls, n: int, states) -> "DiscreteMeasure":
        states = list(states)
        p = np.zeros(n)
        p[states] = 1.0 / len(states)
        return cls(p)

    def __getitem__(self, i):
        return self.p[i]


def _occupation_nd(starts, steps, durs, grid):
    """Cell times for m-D box segments via per-axis crossing parameters."""
    out = np.zeros(grid.n_cells)
    lo, w = grid.lo, grid.widths
    for p, d, tau in zip(starts, steps, durs):
        if tau <= 0:
            continue
        u0 = (p - lo) / w
        du = d / w
        cuts = [0.0, 1.0]
        for i in range(grid.dim):
            if du[i] == 0.0:
                continue
            a, b = sorted((u0[i], u0[i] + du[i]))
            ks = np.arange(math.floor(a) + 1, math.ceil(b))
            cuts.extend(((ks - u0[i]) / du[i]).tolist())
        cuts = np.unique(np.clip(cuts, 0.0, 1.0))
        mids = 0.5 * (cuts[:-1] + cuts[1:])
        cells = grid.cell_of(p + mids[:, None] * d)
        np.add.at(out, cells, tau * np.diff(cuts))
    return out


def occupation_measure(X: Trajectory, t: float, grid: Grid, t0: float = 0.0) -> EmpiricalMeasure:
    """``mu(c) = (1 / (t - t0)) * |{s in [t0, t] : X(s) in c}|``, integrated exactly.

    Each affine piece is split at its cell-boundary crossings.  The weights
    are normalized by their compensated sum, which equals ``t - t0`` up to
    rounding.
    """
    if t <= t0:
        raise GeometryError("need t > t0")
    if t > X.horizon * (1 + 1e-12) + 1e-12:
        raise GeometryError(f"t={t} exceeds the trajectory horizon {X.horizon}")
    if X.dim != grid.dim:
        raise GeometryError("trajectory and grid dimensions differ")
    starts, steps, durs = X.segments(t0, t)
    if grid.dim == 1:
        out = kernels.occupation_1d(starts[:, 0], steps[:, 0], durs, float(grid.lo[0]),
                                    float(grid.widths[0]), grid.n_cells, grid.periodic)
    else:
        out = _occupation_nd(starts, steps, durs, grid)
    total = math.fsum(out)
    return EmpiricalMeasure(grid, np.asarray(out) / total)


def _same_grid(a: Grid, b: Grid) -> bool:
    return a.to_dict() == b.to_dict()


def measure_distance(mu: EmpiricalMeasure, nu: EmpiricalMeasure):
    """``(W1, TV)`` between two measures on one grid; W1 is None beyond 1-D.

    W1 treats mass as sitting at cell centres.  On an interval it is the
    ``L^1`` norm of the CDF difference; on the circle the CDF difference is
    shifted by its median, the optimal rotation constant.
    """
    if not _same_grid(mu.grid, nu.grid):
        raise GeometryError("measures live on different grids")
    diff = mu.weights - nu.weights
    tv = 0.5 * float(np.sum(np.abs(diff)))
    grid = mu.grid
    if grid.dim != 1:
        return None, tv
    w = float(grid.widths[0])
    F = np.cumsum(diff)
    if grid.periodic:
        w1 = w * float(np.sum(np.abs(F - np.median(F))))
    else:
        w1 = w * float(np.sum(np.abs(F[:-1])))
    return w1, tv


def mass_near(mu: EmpiricalMeasure, p, r: float) -> float:
    """Total weight of cells whose centre is within ``r`` of ``p`` (domain metric)."""
    if not r > 0:
        raise GeometryError("r must be positive")
    grid = mu.grid
    p = as_point(p, grid.dim)
    centers = grid.centers()
    d = grid.domain.distances(np.broadcast_to(p, centers.shape), centers)
    return float(math.fsum(mu.weights[d <= r * (1 + 1e-12)]))
