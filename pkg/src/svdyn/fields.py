"""Set-valued vector fields ``x -> F(x)`` with convex polytope values."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .geometry import (TOL_GEO, GeometryError, VPolytope, as_point, dist_point_polytope,
                       hausdorff)


class SetValuedField:
    """A map ``F : R^m => R^m`` given by an evaluator returning V-polytopes.

    Parameters
    ----------
    dim : int
        State dimension ``m``.
    evaluator : callable
        ``evaluator(x) -> VPolytope`` for a state ``x`` (already wrapped into
        the domain on the circle).
    growth_c : float
        Linear growth constant: ``sup_{v in F(x)} |v| <= c (1 + |x|)``.
    lipschitz_hint : float, optional
        Hausdorff-Lipschitz constant used to certify grid computations.
    """

    #: name of a compiled SA kernel able to run this field, if any
    kernel: str | None = None

    def __init__(self, dim, evaluator, growth_c, lipschitz_hint=None, name=None):
        if growth_c <= 0:
            raise GeometryError("growth constant must be positive")
        self.dim = int(dim)
        self._evaluator = evaluator
        self.growth_c = float(growth_c)
        self.lipschitz_hint = None if lipschitz_hint is None else float(lipschitz_hint)
        self.name = name or getattr(evaluator, "__name__", "field")

    def __call__(self, x) -> VPolytope:
        x = as_point(x, self.dim)
        value = self._evaluator(x)
        if not isinstance(value, VPolytope):
            value = VPolytope(value)
        if value.dim != self.dim:
            raise GeometryError(f"field value has dimension {value.dim}, expected {self.dim}")
        return value

    def membership_residuals(self, xs, vs) -> np.ndarray:
        """``d(v_n, F(x_n))`` for each row pair."""
        xs = np.asarray(xs, dtype=np.float64).reshape(-1, self.dim)
        vs = np.asarray(vs, dtype=np.float64).reshape(-1, self.dim)
        return np.array([dist_point_polytope(v, self(x)) for x, v in zip(xs, vs)])

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r}, dim={self.dim})"


class CircleAffineField(SetValuedField):
    """``F(x) = {a + b x}`` for ``x`` in ``(0, period)``, convexified at 0.

    Within wrap distance ``eps`` of 0 the value is ``conv{a, a + b*period}``,
    the hull of the two one-sided limits, which makes ``F`` upper
    semicontinuous there.
    """

    kernel = "circle_affine"

    def __init__(self, a, b, period=1.0, eps=1e-9, growth_c=None, lipschitz_hint=None,
                 name=None):
        self.a = float(a)
        self.b = float(b)
        self.period = float(period)
        self.eps = float(eps)
        if growth_c is None:
            growth_c = max(abs(self.a), abs(self.a + self.b * self.period), 1e-12)
        if lipschitz_hint is None:
            lipschitz_hint = abs(self.b)
        super().__init__(1, self._value, growth_c, lipschitz_hint, name or "circle_affine")

    def near_zero(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return np.minimum(x, self.period - x) < self.eps

    def _value(self, x):
        xh = float(x[0])
        if self.near_zero(xh):
            return VPolytope(np.array([[self.a], [self.a + self.b * self.period]]))
        return VPolytope(np.array([[self.a + self.b * xh]]))

    def membership_residuals(self, xs, vs):
        xs = np.asarray(xs, dtype=np.float64).reshape(-1)
        vs = np.asarray(vs, dtype=np.float64).reshape(-1)
        res = np.abs(vs - (self.a + self.b * xs))
        near = self.near_zero(xs)
        if np.any(near):
            lo = min(self.a, self.a + self.b * self.period)
            hi = max(self.a, self.a + self.b * self.period)
            v = vs[near]
            res[near] = np.maximum(0.0, np.maximum(lo - v, v - hi))
        return res


class AffineBallField(SetValuedField):
    """``F(x) = {A x + c} + B(0, radius)``."""

    kernel = "affine_ball"

    def __init__(self, A, c=None, radius=0.0, growth_c=None, name=None):
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        if A.shape[0] != A.shape[1]:
            raise GeometryError("A must be square")
        m = A.shape[0]
        self.A = A
        self.c = np.zeros(m) if c is None else as_point(c, m)
        self.radius = float(radius)
        opnorm = float(np.linalg.norm(A, 2))
        if growth_c is None:
            growth_c = max(opnorm, float(np.linalg.norm(self.c)) + self.radius, 1e-12)
        super().__init__(m, self._value, growth_c, opnorm, name or "affine_ball")

    def _value(self, x):
        return VPolytope((self.A @ x + self.c).reshape(1, -1), self.radius)

    def membership_residuals(self, xs, vs):
        xs = np.asarray(xs, dtype=np.float64).reshape(-1, self.dim)
        vs = np.asarray(vs, dtype=np.float64).reshape(-1, self.dim)
        q = xs @ self.A.T + self.c
        return np.maximum(0.0, np.linalg.norm(vs - q, axis=1) - self.radius)


@dataclass
class StandardReport:
    """Outcome of :func:`check_standard_field`."""

    nonempty: bool
    growth: bool
    growth_failures: list = field(default_factory=list)
    usc_table: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.nonempty and self.growth

    def to_dict(self):
        return {
            "nonempty": self.nonempty,
            "growth": self.growth,
            "passed": self.passed,
            "growth_failures": [
                {"probe": list(map(float, p)), "sup_norm": n, "bound": b}
                for p, n, b in self.growth_failures
            ],
            "usc_table": [{"eta": e, "epsilon": v} for e, v in self.usc_table],
        }


def _value_semidistance(A: VPolytope, B: VPolytope) -> float:
    """``d_H(A, B)``; exact when the radii agree, an upper bound otherwise."""
    if A.inflation_radius == B.inflation_radius:
        return hausdorff(VPolytope(A.generators), VPolytope(B.generators)).d_ab
    base = hausdorff(VPolytope(A.generators), VPolytope(B.generators)).d_ab
    return base + max(0.0, A.inflation_radius - B.inflation_radius)


def check_standard_field(F: SetValuedField, probes, domain=None,
                         etas=(0.2, 0.1, 0.05, 0.01)) -> StandardReport:
    """Test the checkable clauses of a standard set-valued map at probe points.

    Nonemptiness and the linear growth bound are asserted.  Upper
    semicontinuity is a limit statement, so only the table
    ``eta -> max d_H(F(x'), F(x))`` over probe pairs with ``|x - x'| <= eta``
    is reported.
    """
    probes = [as_point(p, F.dim) for p in probes]
    values = []
    nonempty = True
    for p in probes:
        try:
            values.append(F(p))
        except GeometryError:
            nonempty = False
            values.append(None)
    failures = []
    for p, v in zip(probes, values):
        if v is None:
            continue
        sup = v.max_norm()
        bound = F.growth_c * (1.0 + float(np.linalg.norm(p)))
        if sup > bound + TOL_GEO:
            failures.append((p, sup, bound))
    dist = domain.distance if domain is not None else (lambda a, b: float(np.linalg.norm(a - b)))
    table = []
    for eta in etas:
        eps = 0.0
        for (i, x), (j, y) in itertools.combinations(enumerate(probes), 2):
            if values[i] is None or values[j] is None or dist(x, y) > eta:
                continue
            eps = max(eps, _value_semidistance(values[j], values[i]),
                      _value_semidistance(values[i], values[j]))
        table.append((float(eta), eps))
    return StandardReport(nonempty, not failures, failures, table)


def ball_samples(dim: int, count: int) -> np.ndarray:
    """Deterministic points of the closed unit ball.

    The ``2*dim`` axis points of the sphere come first, then Halton points
    mapped radially (radius ``u^(1/dim)``, direction from inverse-normal
    coordinates).
    """
    axes = np.vstack([np.eye(dim), -np.eye(dim)])
    if count <= axes.shape[0]:
        return axes[:count]
    rest = count - axes.shape[0]
    if dim == 1:
        u = qmc.Halton(d=1, scramble=False).random(rest + 1)[1:, 0]
        return np.vstack([axes, (2.0 * u - 1.0).reshape(-1, 1)])
    from scipy.special import ndtri
    h = qmc.Halton(d=dim + 1, scramble=False).random(rest + 1)[1:]
    h = np.clip(h, 1e-12, 1 - 1e-12)
    g = ndtri(h[:, 1:])
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = h[:, 0] ** (1.0 / dim)
    return np.vstack([axes, g * r[:, None]])


def eval_inflated(F: SetValuedField, x, delta: float, n_samples: int = 32,
                  domain=None) -> VPolytope:
    """Inner approximation of ``F^delta(x) = {y : d(y, F(z)) < delta, z in B(x, delta)}``.

    Returns ``conv(union of F(z) generators, z in Z) + B(0, delta)`` with
    ``Z = {x}`` plus ``n_samples`` deterministic points of the closed ball.
    The result always contains ``F(x) + B(0, delta)``.
    """
    delta = float(delta)
    if delta < 0:
        raise GeometryError("delta must be >= 0")
    x = as_point(x, F.dim)
    base = F(x)
    if delta == 0.0:
        return base
    zs = x + delta * ball_samples(F.dim, n_samples)
    if domain is not None:
        zs = np.array([domain.wrap(z) if domain.periodic else domain.clip(z)[0] for z in zs])
    gens = [base.generators]
    radius = base.inflation_radius
    for z in zs:
        v = F(z)
        gens.append(v.generators)
        radius = max(radius, v.inflation_radius)
    # values with a larger own radius are covered by using the largest radius
    G = np.unique(np.vstack(gens), axis=0)
    return VPolytope(G, radius + delta)
