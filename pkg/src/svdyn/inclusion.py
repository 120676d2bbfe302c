"""Differential inclusions ``dz/dt in F(z)``: Euler solutions, grid tubes, defect bounds."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .domains import Grid, Trajectory
from .fields import SetValuedField
from .geometry import TOL_GEO, GeometryError, VPolytope, as_point, project


@dataclass(frozen=True)
class MinNorm:
    """Select the point of ``F(x)`` nearest the origin."""

    name = "min_norm"

    def select(self, value: VPolytope, x, t_next, h, rng):
        return project(np.zeros(value.dim), value)


@dataclass(frozen=True)
class Chase:
    """Select the velocity closest to the one reaching ``target(offset + t_next)`` in one step."""

    target: Trajectory
    offset: float = 0.0
    domain: object = None

    name = "chase"

    def select(self, value, x, t_next, h, rng):
        goal = self.target(self.offset + t_next)
        if self.domain is not None:
            want = self.domain.displacement(x, goal) / h
        else:
            want = (goal - x) / h
        return project(want, value)


@dataclass(frozen=True)
class RandomVertex:
    """A uniformly chosen generator, pushed to the ball boundary in a random direction."""

    seed: int | None = None

    name = "random_vertex"

    def select(self, value, x, t_next, h, rng):
        v = value.generators[rng.integers(value.generators.shape[0])].copy()
        if value.inflation_radius > 0:
            d = rng.normal(size=value.dim)
            v += value.inflation_radius * d / np.linalg.norm(d)
        return v


def _n_steps(T: float, h: float) -> int:
    n = int(round(T / h))
    if n < 1 or abs(n * h - T) > 1e-9 * max(1.0, abs(T)):
        raise GeometryError(f"T={T} must be a positive multiple of h={h}")
    return n


def euler_trajectory(F: SetValuedField, x0, h: float, T: float, selection=None, seed=None,
                     domain=None, t0: float = 0.0) -> Trajectory:
    """Explicit Euler solution ``x_{k+1} = x_k + h v_k``, ``v_k in F(x_k)``.

    On the circle the step is wrapped; on a box it is clipped and the number
    of clip events goes into ``info["clip_events"]``.  The selected
    velocities are kept in ``info["velocities"]``.
    """
    if h <= 0:
        raise GeometryError("h must be positive")
    if T < h * (1 - 1e-12):
        raise GeometryError("need T >= h")
    n = _n_steps(T, h)
    selection = selection or MinNorm()
    if isinstance(selection, RandomVertex) and seed is None:
        seed = selection.seed
    rng = np.random.default_rng(seed)
    x = as_point(x0, F.dim).copy()
    if domain is not None and domain.periodic:
        x = np.atleast_1d(domain.wrap(x))
    elif domain is not None and not domain.contains(x):
        raise GeometryError("x0 outside the domain")
    times = t0 + h * np.arange(n + 1)
    xs = np.empty((n + 1, F.dim))
    steps = np.empty((n, F.dim))
    vs = np.empty((n, F.dim))
    xs[0] = x
    clips = 0
    for k in range(n):
        v = selection.select(F(x), x, h * (k + 1), h, rng)
        y = x + h * v
        if domain is not None and domain.periodic:
            steps[k] = h * v
            y = np.atleast_1d(domain.wrap(y))
        elif domain is not None:
            y, clipped = domain.clip(y)
            clips += clipped
            steps[k] = y - x
        else:
            steps[k] = y - x
        vs[k] = v
        xs[k + 1] = y
        x = y
    if clips:
        warnings.warn(f"{clips} Euler steps clipped to the box; the domain is not invariant "
                      "for this field", RuntimeWarning, stacklevel=2)
    info = {"clip_events": clips, "velocities": vs, "selection": selection.name}
    return Trajectory(times, xs, domain, steps, info)


def _box_hull_distance(P: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Distance between conv(P) and the box ``[a, b]``."""
    if P.shape[1] == 1:
        lo, hi = P[:, 0].min(), P[:, 0].max()
        return float(max(0.0, a[0] - hi, lo - b[0]))
    corners = np.array(np.meshgrid(*zip(a, b), indexing="ij")).reshape(len(a), -1).T
    diff = (P[:, None, :] - corners[None, :, :]).reshape(-1, P.shape[1])
    x, status, _ = kernels.min_norm_point(diff, TOL_GEO, 10_000)
    return float(np.linalg.norm(x))


CONTACT_TOL = 1e-9


class CellImages:
    """Successor cells ``c -> cells whose interior meets center(c) + h F(center(c)) + B(0, R)``.

    ``R = radius(F) * h + cell_radius * (1 + h L) + extra``.  For any ``x`` in
    cell ``c`` and Hausdorff-Lipschitz ``F`` with constant ``L`` the whole set
    ``x + h F(x)`` lies in that image, so iterating it over-approximates the
    Euler difference inclusion.  Results are cached per cell.
    """

    def __init__(self, F: SetValuedField, grid: Grid, h: float, extra: float = 0.0):
        if h <= 0:
            raise GeometryError("h must be positive")
        self.F = F
        self.grid = grid
        self.h = float(h)
        self.certified = F.lipschitz_hint is not None
        L = F.lipschitz_hint or 0.0
        self.inflation = grid.cell_radius * (1.0 + self.h * L) + float(extra)
        self._cache: dict[int, tuple[np.ndarray, bool]] = {}

    def __call__(self, c: int):
        hit = self._cache.get(c)
        if hit is not None:
            return hit
        grid = self.grid
        p = grid.center(c)
        value = self.F(p)
        P = p + self.h * value.generators
        R = self.inflation + self.h * value.inflation_radius
        # only interior contact counts: an image touching a cell edge does not enter it
        tol = CONTACT_TOL * grid.widths
        cand, clipped = grid.cells_in_box(P.min(axis=0) - R + tol, P.max(axis=0) + R - tol)
        if grid.dim > 1:
            keep = []
            for d in cand:
                a, b = grid.cell_bounds(int(d))
                if _box_hull_distance(P, a, b) < R - float(tol.min()):
                    keep.append(d)
            cand = np.array(keep, dtype=np.int64)
        if cand.size == 0:
            # the image centre always lies in the grid after clipping
            cand = grid.cell_of(grid.domain.clip(p + self.h * project(np.zeros(grid.dim), value))[0])
        out = (np.unique(cand).astype(np.int64), bool(clipped))
        self._cache[c] = out
        return out

    def image(self, cells):
        acc = []
        clipped = False
        for c in np.asarray(cells, dtype=np.int64):
            s, cl = self(int(c))
            acc.append(s)
            clipped |= cl
        return np.unique(np.concatenate(acc)), clipped


@dataclass(frozen=True)
class ReachTube:
    """Grid outer approximation of ``Phi_{kh}(X0)``, slice ``k`` at time ``k h``."""

    h: float
    slices: tuple
    certified: tuple
    clipped: tuple

    def __len__(self):
        return len(self.slices)

    @property
    def any_clipped(self) -> bool:
        return any(self.clipped)


def _propagate(images: CellImages, start, n: int):
    slices = [np.unique(np.asarray(start, dtype=np.int64))]
    clips = [False]
    for _ in range(n):
        s, cl = images.image(slices[-1])
        slices.append(s)
        clips.append(cl)
    return slices, clips


def reachable_tube(F: SetValuedField, start_cells, h: float, T: float, grid: Grid,
                   extra_inflation: float = 0.0, images: CellImages | None = None) -> ReachTube:
    """Propagate cell sets through :class:`CellImages` for ``T / h`` steps."""
    start = np.atleast_1d(np.asarray(start_cells, dtype=np.int64))
    if start.size == 0:
        raise GeometryError("start cell set is empty")
    if np.any(start < 0) or np.any(start >= grid.n_cells):
        raise GeometryError("start cell index out of range")
    L = F.lipschitz_hint
    if L is not None and h * L > 0.5:
        warnings.warn(f"h * L = {h * L:g} > 0.5; tube will be very coarse",
                      RuntimeWarning, stacklevel=2)
    images = images or CellImages(F, grid, h, extra_inflation)
    slices, clips = _propagate(images, start, _n_steps(T, h))
    cert = tuple([images.certified] * len(slices))
    return ReachTube(float(h), tuple(slices), cert, tuple(clips))


def cell_set_hausdorff(grid: Grid, A, B) -> float:
    """Hausdorff distance between two cell sets, in cell-index units."""
    A = np.unique(np.asarray(A, dtype=np.int64))
    B = np.unique(np.asarray(B, dtype=np.int64))
    if A.size == 0 or B.size == 0:
        return 0.0 if A.size == B.size else math.inf
    if np.array_equal(A, B):
        return 0.0
    ma = grid.unravel(A).astype(float)
    mb = grid.unravel(B).astype(float)
    d = np.abs(ma[:, None, :] - mb[None, :, :])
    if grid.periodic:
        n = grid.cells_per_axis[0]
        d = np.minimum(d, n - d)
    dist = np.sqrt((d ** 2).sum(axis=2))
    return float(max(dist.min(axis=1).max(), dist.min(axis=0).max()))


def semigroup_check(F: SetValuedField, grid: Grid, h: float, j: int, k: int, start_cells) -> float:
    """Distance between slice ``j + k`` and ``k`` steps restarted from slice ``j``.

    Zero by construction; kept as a regression tripwire for the propagation.
    """
    if j < 0 or k < 0:
        raise GeometryError("j and k must be >= 0")
    images = CellImages(F, grid, h)
    direct, _ = _propagate(images, np.atleast_1d(start_cells), j + k)
    restarted, _ = _propagate(images, direct[j], k)
    return cell_set_hausdorff(grid, direct[j + k], restarted[k])


@dataclass(frozen=True)
class DefectBounds:
    """Bracket ``lower <= inf_z sup_s d(X(t+s), z(s)) <= upper + model_err``."""

    t: float
    T: float
    lower: float
    upper: float
    model_err: float
    certified: bool

    def to_dict(self):
        return {"t": self.t, "T": self.T, "lower": self.lower, "upper": self.upper,
                "model_err": self.model_err, "certified": self.certified}


def field_sup_norm(F: SetValuedField, grid: Grid) -> float:
    """``max |F|`` over grid cell centres (an estimate of ``||F||_inf`` on the domain)."""
    return max(F(c).max_norm() for c in grid.centers())


def _sup_gap(X: Trajectory, Z: Trajectory, t: float, T: float, domain) -> float:
    """``sup_{s in [0,T]} d(X(t+s), Z(t+s))``, on the merged breakpoints."""
    ts = np.union1d(X.times[(X.times > t) & (X.times < t + T)], Z.times)
    ts = ts[(ts >= t) & (ts <= t + T)]
    a, b = X(ts), Z(ts)
    if domain is None:
        return float(np.linalg.norm(a - b, axis=1).max())
    return float(np.max(domain.distances(a, b)))


def wapt_defect_bounds(X: Trajectory, t: float, T: float, F: SetValuedField, grid: Grid,
                       h: float, compute_lower: bool = True, sup_norm: float | None = None
                       ) -> DefectBounds:
    """Bracket the defect ``inf_z sup_{s<=T} d(X(t+s), z(s))`` over solutions ``z``.

    Upper: Euler chasers of ``X`` started at ``X(t)`` and at the nearest grid
    node, best of the two.  ``model_err = h |F| (1 + L T e^{L T})`` bounds the
    gap between Euler chasers and true solutions.

    Lower: any optimal ``z`` starts within ``upper + model_err`` of ``X(t)``.
    From every candidate start cell a tube is grown whose extra inflation
    ``L h^2 |F|`` per step covers true solutions, and
    ``lower = max(0, min_c max_k [d(X(t+kh), slice_k(c))])`` with distances
    to a slice measured to cell boundaries.  Without a Lipschitz hint the
    lower bound is heuristic and ``certified`` is False.
    """
    domain = grid.domain
    n = _n_steps(T, h)
    if t < X.times[0] - 1e-12 or t + T > X.horizon * (1 + 1e-12) + 1e-12:
        raise GeometryError(f"X is not defined on [{t}, {t + T}]")
    L = F.lipschitz_hint
    fmax = field_sup_norm(F, grid) if sup_norm is None else float(sup_norm)
    Lv = L or 0.0
    model_err = h * fmax * (1.0 + Lv * T * math.exp(Lv * T))
    x_t = X(t)
    chase = Chase(X, t, domain if domain.periodic else None)
    upper = math.inf
    starts = [x_t]
    node = grid.nearest_node(x_t)
    if domain.distance(node, x_t) > 0:
        starts.append(node)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for x0 in starts:
            Z = euler_trajectory(F, x0, h, T, chase, domain=domain, t0=t)
            upper = min(upper, _sup_gap(X, Z, t, T, domain))
    lower = 0.0
    if compute_lower:
        r0 = upper + model_err
        cr = grid.cell_radius
        cand, _ = grid.cells_in_box(x_t - r0 - cr, x_t + r0 + cr)
        centers = grid.centers(cand)
        cand = cand[domain.distances(np.broadcast_to(x_t, centers.shape), centers) <= r0 + cr]
        samples = X(t + h * np.arange(n + 1))
        images = CellImages(F, grid, h, extra=Lv * h * h * fmax)
        best = math.inf
        for c in cand:
            slices, _ = _propagate(images, [int(c)], n)
            worst = 0.0
            for k, s in enumerate(slices):
                cs = grid.centers(s)
                gap = np.min(domain.distances(np.broadcast_to(samples[k], cs.shape), cs)) - cr
                worst = max(worst, gap)
                if worst >= best:
                    break
            best = min(best, worst)
        lower = max(0.0, best) if cand.size else 0.0
    return DefectBounds(float(t), float(T), float(lower), float(upper), float(model_err),
                        L is not None)
