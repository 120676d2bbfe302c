"""Pure-Python versions of the hot kernels.

Each function mirrors its twin in ``_ckernels.pyx`` statement for statement,
including the order of floating-point operations, so the stochastic
approximation kernels produce bit-identical iterates on either backend.
"""
import math

import numpy as np

# status codes shared with the compiled kernels
MNP_OK = 0
MNP_MAX_ITER = 1
MNP_SINGULAR = 2

_ALPHA_EPS = 1e-12
_PIVOT_EPS = 1e-14


def _affine_minimizer(P, S, alpha):
    """Coefficients (summing to 1) of the point of aff{P[S]} nearest the origin.

    Returns False when the active points are affinely dependent.
    """
    s = len(S)
    m = len(P[0])
    if s == 1:
        alpha[0] = 1.0
        return True
    q0 = P[S[0]]
    n = s - 1
    D = [[P[S[i + 1]][k] - q0[k] for k in range(m)] for i in range(n)]
    # normal equations (D D^T) beta = -D q0, augmented
    A = [[0.0] * (n + 1) for _ in range(n)]
    scale = 0.0
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(m):
                acc += D[i][k] * D[j][k]
            A[i][j] = acc
        acc = 0.0
        for k in range(m):
            acc += D[i][k] * q0[k]
        A[i][n] = -acc
        if A[i][i] > scale:
            scale = A[i][i]
    for col in range(n):
        piv = col
        best = abs(A[col][col])
        for r in range(col + 1, n):
            if abs(A[r][col]) > best:
                best = abs(A[r][col])
                piv = r
        if best <= _PIVOT_EPS * (scale + 1e-300):
            return False
        if piv != col:
            A[col], A[piv] = A[piv], A[col]
        for r in range(col + 1, n):
            f = A[r][col] / A[col][col]
            if f != 0.0:
                for c in range(col, n + 1):
                    A[r][c] -= f * A[col][c]
    beta = [0.0] * n
    for i in range(n - 1, -1, -1):
        acc = A[i][n]
        for j in range(i + 1, n):
            acc -= A[i][j] * beta[j]
        beta[i] = acc / A[i][i]
    total = 0.0
    for i in range(n):
        alpha[i + 1] = beta[i]
        total += beta[i]
    alpha[0] = 1.0 - total
    return True


def min_norm_point(points, tol, max_iter):
    """Wolfe's algorithm for the point of conv(rows of ``points``) nearest 0.

    Stops once the duality gap certifies the distance to within ``tol``.
    Returns ``(x, status, iterations)``.
    """
    P = np.asarray(points, dtype=np.float64).tolist()
    k = len(P)
    m = len(P[0])
    best = 0
    best_nn = math.inf
    for i in range(k):
        acc = 0.0
        for c in range(m):
            acc += P[i][c] * P[i][c]
        if acc < best_nn:
            best_nn = acc
            best = i
    S = [best]
    lam = [1.0]
    x = list(P[best])
    it = 0
    while True:
        it += 1
        if it > max_iter:
            return np.array(x), MNP_MAX_ITER, it
        xx = 0.0
        for c in range(m):
            xx += x[c] * x[c]
        if xx <= tol * tol:
            return np.array(x), MNP_OK, it
        j = 0
        jval = math.inf
        for i in range(k):
            acc = 0.0
            for c in range(m):
                acc += P[i][c] * x[c]
            if acc < jval:
                jval = acc
                j = i
        nx = math.sqrt(xx)
        if nx - jval / nx <= tol or j in S:
            return np.array(x), MNP_OK, it
        S.append(j)
        lam.append(0.0)
        while True:
            alpha = [0.0] * len(S)
            if not _affine_minimizer(P, S, alpha):
                S.pop()
                lam.pop()
                return np.array(x), MNP_SINGULAR, it
            if min(alpha) > _ALPHA_EPS:
                lam = alpha
                break
            it += 1
            if it > max_iter:
                return np.array(x), MNP_MAX_ITER, it
            theta = 1.0
            drop = -1
            for i in range(len(S)):
                if alpha[i] <= _ALPHA_EPS:
                    r = lam[i] / (lam[i] - alpha[i])
                    if r < theta:
                        theta = r
                        drop = i
            if drop < 0:
                # alpha has a tiny nonpositive entry with lam == alpha there
                for i in range(len(S)):
                    if alpha[i] <= _ALPHA_EPS:
                        drop = i
                        theta = 1.0
                        break
            newS = []
            newlam = []
            for i in range(len(S)):
                v = (1.0 - theta) * lam[i] + theta * alpha[i]
                if i != drop and v > _ALPHA_EPS:
                    newS.append(S[i])
                    newlam.append(v)
            total = 0.0
            for v in newlam:
                total += v
            S = newS
            lam = [v / total for v in newlam]
            x = [0.0] * m
            for i in range(len(S)):
                for c in range(m):
                    x[c] += lam[i] * P[S[i]][c]
        x = [0.0] * m
        for i in range(len(S)):
            for c in range(m):
                x[c] += lam[i] * P[S[i]][c]


def wrap_periodic(y, period):
    r = y - period * math.floor(y / period)
    if r >= period or r < 0.0:
        r = 0.0
    return r


def sa_circle_affine(x0, gammas, noise, a, b, period, eps):
    """SA recursion for a circle field {a + b*x} with a convexified jump at 0.

    Near 0 (wrap distance below ``eps``) the value is conv{a, a + b*period};
    the minimum-norm element is selected everywhere.
    """
    N = len(gammas)
    xs = np.empty(N + 1)
    vs = np.empty(N)
    g = np.asarray(gammas, dtype=np.float64).tolist()
    u = np.asarray(noise, dtype=np.float64).reshape(-1).tolist()
    x = float(x0)
    xs[0] = x
    lo = a
    hi = a + b * period
    if lo > hi:
        lo, hi = hi, lo
    if lo <= 0.0 <= hi:
        v_jump = 0.0
    elif hi < 0.0:
        v_jump = hi
    else:
        v_jump = lo
    for n in range(N):
        d0 = x if x < period - x else period - x
        if d0 < eps:
            v = v_jump
        else:
            v = a + b * x
        y = x + g[n] * (v + u[n])
        x = wrap_periodic(y, period)
        vs[n] = v
        xs[n + 1] = x
    return xs, vs


def sa_box_affine_ball(x0, gammas, noise, A, c, radius, lo, hi):
    """SA recursion for {A x + c} + B(0, radius) on a box, min-norm selection.

    Returns ``(xs, vs, n_done)``; ``n_done < len(gammas)`` means iterate
    ``n_done`` left the box and the arrays are truncated there.
    """
    N = len(gammas)
    m = len(x0)
    xs = np.empty((N + 1, m))
    vs = np.empty((N, m))
    g = np.asarray(gammas, dtype=np.float64).tolist()
    U = np.asarray(noise, dtype=np.float64).tolist()
    Al = np.asarray(A, dtype=np.float64).tolist()
    cl = np.asarray(c, dtype=np.float64).tolist()
    lol = np.asarray(lo, dtype=np.float64).tolist()
    hil = np.asarray(hi, dtype=np.float64).tolist()
    x = [float(v) for v in x0]
    xs[0] = x
    q = [0.0] * m
    for n in range(N):
        nq2 = 0.0
        for i in range(m):
            acc = cl[i]
            for j in range(m):
                acc = acc + Al[i][j] * x[j]
            q[i] = acc
            nq2 += acc * acc
        nq = math.sqrt(nq2)
        if nq <= radius:
            v = [0.0] * m
        else:
            s = 1.0 - radius / nq
            v = [q[i] * s for i in range(m)]
        y = [x[i] + g[n] * (v[i] + U[n][i]) for i in range(m)]
        vs[n] = v
        for i in range(m):
            if y[i] < lol[i] or y[i] > hil[i]:
                return xs[: n + 1], vs[: n + 1], n
        xs[n + 1] = y
        x = y
    return xs, vs, N


def occupation_1d(starts, steps, durations, lo, width, ncells, periodic):
    """Exact time spent per cell by 1-D affine segments.

    Segment ``i`` starts at ``starts[i]``, moves by ``steps[i]`` at constant
    speed over ``durations[i]`` time units.
    """
    out = [0.0] * ncells
    st = np.asarray(starts, dtype=np.float64).tolist()
    dx = np.asarray(steps, dtype=np.float64).tolist()
    du = np.asarray(durations, dtype=np.float64).tolist()
    for i in range(len(st)):
        tau = du[i]
        if tau <= 0.0:
            continue
        u = (st[i] - lo) / width
        d = dx[i] / width
        if periodic:
            u = u - ncells * math.floor(u / ncells)
            if u >= ncells:
                u = 0.0
        if d == 0.0:
            cidx = int(math.floor(u))
            if periodic:
                cidx %= ncells
            elif cidx < 0:
                cidx = 0
            elif cidx >= ncells:
                cidx = ncells - 1
            out[cidx] += tau
            continue
        ad = abs(d)
        rate = tau / ad
        rem = ad
        if periodic and ad >= ncells:
            loops = math.floor(ad / ncells)
            for cidx in range(ncells):
                out[cidx] += rate * loops
            rem = ad - loops * ncells
        cur = u
        while rem > 0.0:
            if d > 0.0:
                cell = math.floor(cur)
                room = (cell + 1.0) - cur
            else:
                cell = math.ceil(cur) - 1.0
                room = cur - cell
            if room <= 0.0:
                room = 1.0
            if room >= rem:
                seg = rem
                rem = 0.0
            else:
                seg = room
                rem = rem - room
                cur = cell + 1.0 if d > 0.0 else cell
            cidx = int(cell)
            if periodic:
                cidx %= ncells
            elif cidx < 0:
                cidx = 0
            elif cidx >= ncells:
                cidx = ncells - 1
            out[cidx] += rate * seg
    return np.array(out)
