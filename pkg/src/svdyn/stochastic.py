"""Weak stochastic approximation ``x_{n+1} = x_n + gamma_{n+1} (v_n + U_{n+1})``, ``v_n in F_n(x_n)``."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import BACKEND, kernels
from .domains import Box, Circle, Trajectory
from .fields import SetValuedField
from .geometry import TOL_GEO, GeometryError, as_point
from .inclusion import MinNorm


@dataclass(frozen=True)
class StepSchedule:
    """``gamma_n = a / (n + n0)^alpha`` for ``n >= 1``."""

    a: float = 1.0
    n0: float = 0.0
    alpha: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise GeometryError("schedule needs a > 0")
        if not self.n0 >= 0:
            raise GeometryError("schedule needs n0 >= 0")
        if not 0.5 < self.alpha <= 1.0:
            raise GeometryError("schedule needs alpha in (1/2, 1]")

    def gammas(self, N: int) -> np.ndarray:
        """``[gamma_1, ..., gamma_N]``."""
        n = np.arange(1, N + 1, dtype=np.float64)
        return self.a / (n + self.n0) ** self.alpha

    def taus(self, N: int) -> np.ndarray:
        """``[tau_0, ..., tau_N]`` with ``tau_0 = 0``, ``tau_n = sum_{i<=n} gamma_i``."""
        return np.concatenate([[0.0], np.cumsum(self.gammas(N))])

    def to_dict(self):
        return {"a": self.a, "n0": self.n0, "alpha": self.alpha}


@dataclass(frozen=True)
class NoiseModel:
    """Bounded zero-mean i.i.d. noise.

    ``kind`` is ``"uniform_ball"`` (uniform on the ball of ``radius``),
    ``"gaussian_truncated"`` (``N(0, sigma^2 I)`` conditioned on norm at most
    ``cap``) or ``"zero"``.  All three are symmetric, hence mean zero.
    """

    kind: str = "zero"
    radius: float = 0.0
    sigma: float = 0.0
    cap: float = 0.0

    def __post_init__(self):
        if self.kind not in ("uniform_ball", "gaussian_truncated", "zero"):
            raise GeometryError(f"unknown noise kind {self.kind!r}")
        if self.kind == "uniform_ball" and not self.radius >= 0:
            raise GeometryError("noise radius must be >= 0")
        if self.kind == "gaussian_truncated" and not (self.sigma > 0 and self.cap > 0):
            raise GeometryError("truncated gaussian needs sigma > 0 and cap > 0")

    @classmethod
    def uniform_ball(cls, radius: float):
        return cls("uniform_ball", radius=float(radius))

    @classmethod
    def gaussian_truncated(cls, sigma: float, cap: float):
        return cls("gaussian_truncated", sigma=float(sigma), cap=float(cap))

    @classmethod
    def zero(cls):
        return cls("zero")

    @property
    def bound(self) -> float:
        return {"uniform_ball": self.radius, "gaussian_truncated": self.cap, "zero": 0.0}[self.kind]

    def sample(self, rng: np.random.Generator, N: int, dim: int) -> np.ndarray:
        if self.kind == "zero" or self.bound == 0.0:
            return np.zeros((N, dim))
        if self.kind == "uniform_ball":
            if dim == 1:
                return rng.uniform(-self.radius, self.radius, size=(N, 1))
            d = rng.normal(size=(N, dim))
            d /= np.linalg.norm(d, axis=1, keepdims=True)
            r = self.radius * rng.random(N) ** (1.0 / dim)
            return d * r[:, None]
        out = np.empty((N, dim))
        filled = 0
        while filled < N:
            z = self.sigma * rng.normal(size=(N - filled, dim))
            z = z[np.linalg.norm(z, axis=1) <= self.cap]
            out[filled:filled + z.shape[0]] = z
            filled += z.shape[0]
        return out

    def to_dict(self):
        return {"kind": self.kind, "radius": self.radius, "sigma": self.sigma, "cap": self.cap,
                "bound": self.bound}


@dataclass(frozen=True, eq=False)
class SARun:
    """Stored iterates ``x_0..x_N``, selections ``v_0..v_{N-1}`` and noises ``U_1..U_N``."""

    xs: np.ndarray
    vs: np.ndarray
    noise: np.ndarray
    schedule: StepSchedule
    domain: Box | Circle
    field: SetValuedField
    seed: int | None = None
    family: object = None
    deltas: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.vs.shape[0]

    @property
    def gammas(self) -> np.ndarray:
        return self.schedule.gammas(self.N)

    @property
    def taus(self) -> np.ndarray:
        return self.schedule.taus(self.N)

    @property
    def terminal(self) -> np.ndarray:
        return self.xs[-1]

    def field_at(self, n: int) -> SetValuedField:
        return self.field if self.family is None else self.family(n)


def _rngs(seed):
    noise_ss, sel_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(noise_ss), np.random.default_rng(sel_ss)


def _fast_path(F, domain, x0, g, U):
    if F.kernel == "circle_affine" and isinstance(domain, Circle) and F.period == domain.period:
        xs, vs = kernels.sa_circle_affine(float(x0[0]), g, U[:, 0], F.a, F.b, F.period, F.eps)
        return xs.reshape(-1, 1), vs.reshape(-1, 1)
    if F.kernel == "affine_ball" and isinstance(domain, Box):
        xs, vs, done = kernels.sa_box_affine_ball(
            x0, g, U, F.A, F.c, F.radius, np.array(domain.lo), np.array(domain.hi))
        if done < g.shape[0]:
            raise GeometryError(f"iterate {done + 1} left the domain box")
        return xs, vs
    return None


def sa_run(F: SetValuedField, x0, schedule: StepSchedule, noise: NoiseModel, N: int,
           selection=None, seed=None, domain=None, family=None, deltas=None) -> SARun:
    """Run the recursion for ``N`` steps with noise drawn up front from ``seed``.

    Parameters
    ----------
    F : SetValuedField
        Limit field; also ``F_n`` when ``family`` is None.
    family : callable, optional
        ``n -> F_n`` for a time-varying perturbation of ``F``; pair it with
        the declared inflation levels ``deltas`` (``F_n(x) in F^{delta_n}(x)``).
    domain : Box or Circle
        State space; a box iterate leaving the box raises ``GeometryError``.
    """
    if N < 1:
        raise GeometryError("N must be >= 1")
    if domain is None:
        raise GeometryError("sa_run needs a domain")
    x0 = as_point(x0, F.dim)
    if domain.periodic:
        x0 = np.atleast_1d(domain.wrap(x0))
    elif not domain.contains(x0):
        raise GeometryError("x0 outside the domain")
    noise_rng, sel_rng = _rngs(seed)
    U = noise.sample(noise_rng, N, F.dim)
    g = schedule.gammas(N)
    selection = selection or MinNorm()
    info = {"selection": selection.name, "backend": BACKEND}
    if deltas is not None:
        deltas = np.asarray(deltas, dtype=np.float64)
        info["deltas_nonincreasing"] = bool(np.all(np.diff(deltas) <= 0))
        info["deltas_final"] = float(deltas[-1])
    out = None
    if family is None and isinstance(selection, MinNorm):
        out = _fast_path(F, domain, x0, g, U)
    if out is None:
        info["backend"] = "python-loop"
        out = _python_loop(F, family, domain, x0, g, U, selection, sel_rng)
    xs, vs = out
    return SARun(xs, vs, U, schedule, domain, F, seed, family, deltas, info)


def _python_loop(F, family, domain, x0, g, U, selection, rng):
    N, m = U.shape
    xs = np.empty((N + 1, m))
    vs = np.empty((N, m))
    x = x0.copy()
    xs[0] = x
    for n in range(N):
        Fn = F if family is None else family(n)
        v = selection.select(Fn(x), x, None, g[n], rng)
        y = x + g[n] * (v + U[n])
        if domain.periodic:
            y = np.atleast_1d(domain.wrap(y))
        elif not domain.contains(y):
            raise GeometryError(f"iterate {n + 1} left the domain box")
        vs[n] = v
        xs[n + 1] = y
        x = y
    return xs, vs


def interpolate(run: SARun) -> Trajectory:
    """Affine interpolation ``X(tau_i + s) = x_i + s (x_{i+1} - x_i) / gamma_{i+1}``.

    On the circle each piece follows the actual increment
    ``gamma_{i+1} (v_i + U_{i+1})`` rather than the chord.
    """
    steps = None
    if run.domain.periodic:
        steps = run.gammas[:, None] * (run.vs + run.noise)
    return Trajectory(run.taus, run.xs, run.domain, steps)


def noise_sup_stat(run: SARun, n: int, T: float) -> float:
    """``max_k || sum_{i=n}^{k-1} gamma_{i+1} U_{i+1} ||`` over ``k >= n`` with ``sum_{i=n}^{k-1} gamma_i <= T``."""
    if n < 1:
        raise GeometryError("n must be >= 1")
    g = run.gammas
    taus = run.taus
    if n > run.N or taus[n] + T > taus[-1] * (1 + 1e-12):
        raise GeometryError(f"window of length {T} after step {n} exceeds the run horizon "
                            f"{taus[-1]}")
    # elapsed(k) = sum_{i=n}^{k-1} gamma_i = tau_{k-1} - tau_{n-1}
    elapsed = taus[n - 1:run.N] - taus[n - 1]
    kmax = n + int(np.searchsorted(elapsed, T * (1 + 1e-12), side="right")) - 1
    if kmax <= n:
        return 0.0
    partial = np.cumsum(g[n:kmax, None] * run.noise[n:kmax], axis=0)
    return float(np.max(np.linalg.norm(partial, axis=1)))


def check_recursion(run: SARun, tol: float = TOL_GEO) -> bool:
    """Bit-exact replay of every step plus ``d(v_n, F_n(x_n)) <= tol``."""
    xs, vs, U = run.xs, run.vs, run.noise
    if xs.shape[0] != vs.shape[0] + 1 or U.shape != vs.shape:
        return False
    g = run.gammas[:, None]
    y = xs[:-1] + g * (vs + U)
    if run.domain.periodic:
        y = run.domain.wrap(y)
    elif not (np.all(xs >= np.array(run.domain.lo)) and np.all(xs <= np.array(run.domain.hi))):
        return False
    if not np.array_equal(y, xs[1:]):
        return False
    if run.family is None:
        res = run.field.membership_residuals(xs[:-1], vs)
    else:
        res = np.array([run.family(n).membership_residuals(xs[n], vs[n])[0]
                        for n in range(run.N)])
    return bool(np.all(res <= tol))
