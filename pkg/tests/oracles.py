"""Independent reference computations used as test oracles."""
import itertools
import math

import numpy as np
from scipy.spatial import ConvexHull


def segment_distance(p, a, b):
    d = b - a
    L = float(d @ d)
    s = 0.0 if L == 0 else min(1.0, max(0.0, float((p - a) @ d) / L))
    return float(np.linalg.norm(p - (a + s * d)))


def polygon_distance(p, pts):
    """Exact distance from ``p`` to conv(pts) in 2-D: 0 inside, else nearest hull edge."""
    hull = ConvexHull(pts)
    if np.all(hull.equations[:, :2] @ p + hull.equations[:, 2] <= 1e-13):
        return 0.0
    return min(segment_distance(p, pts[i], pts[j]) for i, j in itertools.combinations(range(len(pts)), 2))


def sampled_distance(p, pts, rng, n=100_000):
    lam = rng.dirichlet(np.ones(len(pts)), size=n)
    return float(np.min(np.linalg.norm(lam @ pts - p, axis=1)))


def inflated_extent_1d(f, x, delta, n=2001):
    """Grid search of ``{y : exists z in [x-d, x+d], |y - f(z)| < d}``; returns (min y, max y)."""
    zs = np.linspace(x - delta, x + delta, n)
    ys = np.linspace(x - 4 * delta, x + 4 * delta, 8 * (n - 1) + 1)
    hit = np.abs(ys[:, None] - f(zs)[None, :]) < delta
    ok = ys[hit.any(axis=1)]
    return float(ok.min()), float(ok.max())


def closed_walk_recurrent(A):
    """States with a closed walk of length 1..n, by boolean matrix powers."""
    n = A.shape[0]
    M = A.astype(np.int64)
    P = M.copy()
    rec = np.zeros(n, dtype=bool)
    for _ in range(n):
        rec |= np.diag(P) > 0
        P = np.minimum(P @ M, 1)
    return np.flatnonzero(rec)


def omega_by_powers(A, x):
    """``{y : a walk x -> y of some length in [n^2, n^2 + n]}``.

    Any ``y`` reached by arbitrarily long walks is reached at some length in
    every window of ``n`` consecutive lengths past ``n^2``; other states are
    not reachable at length ``>= n``.
    """
    n = A.shape[0]
    M = A.astype(np.int64)
    v = np.zeros(n, dtype=np.int64)
    v[x] = 1
    for _ in range(n * n):
        v = np.minimum(v @ M, 1)
    hit = v.copy()
    for _ in range(n):
        v = np.minimum(v @ M, 1)
        hit |= v
    return np.flatnonzero(hit)


def circle_flow(z0, s):
    """Slow solution of ``x' = 1 - x`` on the circle started at ``z0`` in (0, 1)."""
    return 1.0 - (1.0 - z0) * np.exp(-s)


def circle_defect_oracle(Xs, ss, n0=4000):
    """min over a fine family of exact solutions of ``max_s d(X(s), z(s))``.

    Family: solutions from ``z0`` in (0, 1), plus solutions resting at 0 for
    a time ``r`` and then leaving along ``1 - e^{-(s - r)}``.  Brute force,
    so the result bounds the true defect from above.
    """
    def arc(a, b):
        d = np.abs(a - b) % 1.0
        return np.minimum(d, 1.0 - d)

    best = math.inf
    for z0 in np.linspace(0.0, 1.0, n0 + 1)[1:-1]:
        best = min(best, float(arc(Xs, circle_flow(z0, ss)).max()))
    for r in np.linspace(0.0, ss[-1], 200):
        z = np.where(ss <= r, 0.0, 1.0 - np.exp(-(ss - r)))
        best = min(best, float(arc(Xs, z % 1.0).max()))
    return best
