"""Time every hot kernel under each available backend.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from svdyn import _backend
from svdyn.geometry import TOL_GEO


def cases():
    rng = np.random.default_rng(0)
    polys = [rng.normal(size=(12, 3)) + 2.0 for _ in range(200)]
    N = 100_000
    gammas = 1.0 / np.arange(1, N + 1) ** 0.7
    u1 = rng.uniform(-0.1, 0.1, N)
    u2 = rng.uniform(-0.07, 0.07, (N, 2))
    M = 20_000
    starts = rng.random(M)
    steps = rng.normal(scale=0.05, size=M)
    durs = rng.uniform(0.001, 0.01, M)
    A = -np.eye(2)
    return {
        "min_norm_point x200": lambda k: [k.min_norm_point(P, TOL_GEO, 10_000) for P in polys],
        "sa_circle_affine N=1e5": lambda k: k.sa_circle_affine(0.5, gammas, u1, 1.0, -1.0, 1.0, 1e-9),
        "sa_box_affine_ball N=1e5": lambda k: k.sa_box_affine_ball(
            np.array([0.9, 0.9]), gammas, u2, A, np.zeros(2), 0.05, -np.ones(2), np.ones(2)),
        "occupation_1d segs=2e4": lambda k: k.occupation_1d(starts, steps, durs, 0.0, 0.01, 100,
                                                            True),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = _backend.available_backends()
    names = sorted(backends)
    print(f"{'kernel':28s}" + "".join(f"{n:>12s}" for n in names) + "     speedup")
    for label, fn in cases().items():
        best = {}
        for n in names:
            k = backends[n]
            best[n] = min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat))
        row = f"{label:28s}" + "".join(f"{best[n]:11.4f}s" for n in names)
        if "cython" in best:
            row += f"  {best['python'] / best['cython']:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
