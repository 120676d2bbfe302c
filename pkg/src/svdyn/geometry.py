"""Metric primitives on convex sets and paths.

Convex sets are V-polytopes (a finite generator list) fattened by a closed
ball, ``conv(generators) + B(0, inflation_radius)``.  This family is closed
under the inflation ``F -> F^delta`` and lets Hausdorff semidistances be read
off at the generators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._backend import kernels

TOL_GEO = 1e-9
MAX_ITER = 10_000


class GeometryError(ValueError):
    """Invalid geometric input (dimension mismatch, empty set, bad radius)."""


class ConvergenceError(RuntimeError):
    """The hull projection did not reach ``TOL_GEO`` within ``MAX_ITER``."""


def as_point(p, dim: int | None = None) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(p, dtype=np.float64))
    if arr.ndim != 1:
        raise GeometryError(f"point must be a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("point has non-finite coordinates")
    if dim is not None and arr.shape[0] != dim:
        raise GeometryError(f"dimension mismatch: expected {dim}, got {arr.shape[0]}")
    return arr


@dataclass(frozen=True, eq=False)
class VPolytope:
    """``conv(generators) + B(0, inflation_radius)``.

    Parameters
    ----------
    generators : array_like, shape (k, m) or (k,)
        Nonempty list of points; a 1-D array is read as ``k`` points in R^1.
    inflation_radius : float
        Radius of the closed ball added to the hull.
    """

    generators: np.ndarray
    inflation_radius: float = 0.0

    def __post_init__(self):
        g = np.asarray(self.generators, dtype=np.float64)
        if g.ndim == 1:
            g = g.reshape(-1, 1)
        if g.ndim != 2 or g.shape[0] == 0:
            raise GeometryError("VPolytope needs a nonempty generator list")
        if not np.all(np.isfinite(g)):
            raise GeometryError("generators must be finite")
        r = float(self.inflation_radius)
        if not (r >= 0.0 and math.isfinite(r)):
            raise GeometryError(f"inflation radius must be finite and >= 0, got {r}")
        g = g.copy()
        g.flags.writeable = False
        object.__setattr__(self, "generators", g)
        object.__setattr__(self, "inflation_radius", r)

    @property
    def dim(self) -> int:
        return self.generators.shape[1]

    @classmethod
    def point(cls, p, radius: float = 0.0) -> "VPolytope":
        return cls(as_point(p).reshape(1, -1), radius)

    def max_norm(self) -> float:
        """sup of ||v|| over the set."""
        return float(np.max(np.linalg.norm(self.generators, axis=1))) + self.inflation_radius

    def __repr__(self):
        return (f"VPolytope({self.generators.shape[0]} generators in R^{self.dim}, "
                f"r={self.inflation_radius:g})")


def _check(p, P: VPolytope) -> np.ndarray:
    return as_point(p, P.dim)


def _hull_nearest(p: np.ndarray, G: np.ndarray, tol: float) -> np.ndarray:
    """Nearest point to ``p`` in conv(G) (no inflation)."""
    if G.shape[0] == 1:
        return G[0].copy()
    if G.shape[1] == 1:
        return np.clip(p, G[:, 0].min(), G[:, 0].max())
    x, status, _ = kernels.min_norm_point(G - p, tol, MAX_ITER)
    if status == 1:
        raise ConvergenceError(f"hull projection exceeded {MAX_ITER} iterations")
    return x + p


def project(p, P: VPolytope, tol: float = TOL_GEO) -> np.ndarray:
    """Metric projection of ``p`` onto ``P`` (within ``tol``)."""
    p = _check(p, P)
    q = _hull_nearest(p, P.generators, tol)
    r = P.inflation_radius
    if r == 0.0:
        return q
    d = p - q
    nd = math.sqrt(float(d @ d))
    if nd <= r:
        return p.copy()
    return q + d * (r / nd)


def dist_point_polytope(p, P: VPolytope, tol: float = TOL_GEO) -> float:
    """Euclidean distance from ``p`` to ``P``.

    Computed as ``max(0, dist(p, conv(generators)) - inflation_radius)``, the
    hull distance coming from Wolfe's minimum-norm-point iteration stopped on a
    duality-gap certificate of ``tol``.
    """
    p = _check(p, P)
    q = _hull_nearest(p, P.generators, tol)
    d = p - q
    return max(0.0, math.sqrt(float(d @ d)) - P.inflation_radius)


class Hausdorff(NamedTuple):
    d_ab: float
    d_ba: float
    D: float


def semidistance(A: VPolytope, B: VPolytope, tol: float = TOL_GEO) -> float:
    """``sup_{a in A} d(a, B)``; attained at a generator of A since ``d(., B)`` is convex."""
    if A.dim != B.dim:
        raise GeometryError("dimension mismatch")
    if A.inflation_radius or B.inflation_radius:
        raise GeometryError("Hausdorff distance of inflated sets is not supported")
    return max(dist_point_polytope(a, B, tol) for a in A.generators)


def hausdorff(A: VPolytope, B: VPolytope, tol: float = TOL_GEO) -> Hausdorff:
    """Both semidistances and the Hausdorff distance between two V-polytopes."""
    ab = semidistance(A, B, tol)
    ba = semidistance(B, A, tol)
    return Hausdorff(ab, ba, max(ab, ba))


def inflate(P: VPolytope, delta: float) -> VPolytope:
    """``P + B(0, delta)``."""
    delta = float(delta)
    if delta < 0 or not math.isfinite(delta):
        raise GeometryError(f"inflation must be finite and >= 0, got {delta}")
    if delta == 0.0:
        return P
    return VPolytope(P.generators, P.inflation_radius + delta)


class PathDistance(NamedTuple):
    value: float
    truncation_bound: float


def path_metric_D(x, y, K: float, distance=None) -> PathDistance:
    """Truncated metric of uniform convergence on compacts.

    ``sum_{k=0}^{floor(K)} 2^-k min(1, sup_{|t|<=k} d(x(t), y(t)))``.  Both
    paths are piecewise affine, so each sup is attained on the union of their
    breakpoints.  The omitted tail is at most ``2^-floor(K)``.

    Parameters
    ----------
    x, y : Trajectory
        Paths defined on all of ``[-K, K]``.
    K : float
        Window half-width, ``K >= 1``.
    distance : callable, optional
        Pointwise metric on states; Euclidean by default.
    """
    if K < 1:
        raise GeometryError("path metric needs K >= 1")
    for path in (x, y):
        if path.times[0] > -K or path.times[-1] < K:
            raise GeometryError(f"path defined on [{path.times[0]}, {path.times[-1]}], "
                                f"window [-{K}, {K}] required")
    kmax = int(math.floor(K))
    knots = np.union1d(x.times, y.times)
    total = 0.0
    for k in range(kmax + 1):
        ts = knots[(knots >= -k) & (knots <= k)]
        ts = np.union1d(ts, [-float(k), float(k)])
        xa = x(ts)
        ya = y(ts)
        if distance is None:
            d = np.linalg.norm(xa - ya, axis=1)
        else:
            d = np.array([distance(a, b) for a, b in zip(xa, ya)])
        total += 2.0 ** -k * min(1.0, float(d.max()))
    return PathDistance(total, 2.0 ** -kmax)
