# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; see ``_pykernels`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, floor, ceil, fabs, INFINITY

cnp.import_array()

cdef double ALPHA_EPS = 1e-12
cdef double PIVOT_EPS = 1e-14

MNP_OK = 0
MNP_MAX_ITER = 1
MNP_SINGULAR = 2


cdef bint _affine_minimizer(double[:, ::1] P, int* S, int s, double* alpha,
                            double[:, ::1] D, double[:, ::1] A) nogil:
    cdef int m = P.shape[1]
    cdef int n = s - 1
    cdef int i, j, k, r, c, col, piv
    cdef double acc, scale, best, f, tmp, total
    if s == 1:
        alpha[0] = 1.0
        return True
    for i in range(n):
        for k in range(m):
            D[i, k] = P[S[i + 1], k] - P[S[0], k]
    scale = 0.0
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(m):
                acc += D[i, k] * D[j, k]
            A[i, j] = acc
        acc = 0.0
        for k in range(m):
            acc += D[i, k] * P[S[0], k]
        A[i, n] = -acc
        if A[i, i] > scale:
            scale = A[i, i]
    for col in range(n):
        piv = col
        best = fabs(A[col, col])
        for r in range(col + 1, n):
            if fabs(A[r, col]) > best:
                best = fabs(A[r, col])
                piv = r
        if best <= PIVOT_EPS * (scale + 1e-300):
            return False
        if piv != col:
            for c in range(n + 1):
                tmp = A[col, c]
                A[col, c] = A[piv, c]
                A[piv, c] = tmp
        for r in range(col + 1, n):
            f = A[r, col] / A[col, col]
            if f != 0.0:
                for c in range(col, n + 1):
                    A[r, c] -= f * A[col, c]
    for i in range(n - 1, -1, -1):
        acc = A[i, n]
        for j in range(i + 1, n):
            acc -= A[i, j] * alpha[j + 1]
        alpha[i + 1] = acc / A[i, i]
    total = 0.0
    for i in range(n):
        total += alpha[i + 1]
    alpha[0] = 1.0 - total
    return True


def min_norm_point(points, double tol, int max_iter):
    cdef double[:, ::1] P = np.ascontiguousarray(points, dtype=np.float64)
    cdef int k = P.shape[0]
    cdef int m = P.shape[1]
    cdef int cap = m + 3
    cdef int[::1] S = np.empty(cap, dtype=np.intc)
    cdef int[::1] newS = np.empty(cap, dtype=np.intc)
    cdef double[::1] lam = np.empty(cap)
    cdef double[::1] alpha = np.empty(cap)
    cdef double[::1] newlam = np.empty(cap)
    cdef double[:, ::1] D = np.empty((cap, m))
    cdef double[:, ::1] A = np.empty((cap, cap + 1))
    cdef double[::1] x = np.empty(m)
    cdef int s, i, c, j, best, it, drop, ns
    cdef double acc, best_nn, xx, jval, nx, theta, r, v, total, amin
    cdef bint member
    best = 0
    best_nn = INFINITY
    for i in range(k):
        acc = 0.0
        for c in range(m):
            acc += P[i, c] * P[i, c]
        if acc < best_nn:
            best_nn = acc
            best = i
    s = 1
    S[0] = best
    lam[0] = 1.0
    for c in range(m):
        x[c] = P[best, c]
    it = 0
    while True:
        it += 1
        if it > max_iter:
            return np.asarray(x).copy(), MNP_MAX_ITER, it
        xx = 0.0
        for c in range(m):
            xx += x[c] * x[c]
        if xx <= tol * tol:
            return np.asarray(x).copy(), MNP_OK, it
        j = 0
        jval = INFINITY
        for i in range(k):
            acc = 0.0
            for c in range(m):
                acc += P[i, c] * x[c]
            if acc < jval:
                jval = acc
                j = i
        nx = sqrt(xx)
        member = False
        for i in range(s):
            if S[i] == j:
                member = True
        if nx - jval / nx <= tol or member:
            return np.asarray(x).copy(), MNP_OK, it
        if s == cap:
            return np.asarray(x).copy(), MNP_SINGULAR, it
        S[s] = j
        lam[s] = 0.0
        s += 1
        while True:
            if not _affine_minimizer(P, &S[0], s, &alpha[0], D, A):
                s -= 1
                return np.asarray(x).copy(), MNP_SINGULAR, it
            amin = alpha[0]
            for i in range(1, s):
                if alpha[i] < amin:
                    amin = alpha[i]
            if amin > ALPHA_EPS:
                for i in range(s):
                    lam[i] = alpha[i]
                break
            it += 1
            if it > max_iter:
                return np.asarray(x).copy(), MNP_MAX_ITER, it
            theta = 1.0
            drop = -1
            for i in range(s):
                if alpha[i] <= ALPHA_EPS:
                    r = lam[i] / (lam[i] - alpha[i])
                    if r < theta:
                        theta = r
                        drop = i
            if drop < 0:
                for i in range(s):
                    if alpha[i] <= ALPHA_EPS:
                        drop = i
                        theta = 1.0
                        break
            ns = 0
            for i in range(s):
                v = (1.0 - theta) * lam[i] + theta * alpha[i]
                if i != drop and v > ALPHA_EPS:
                    newS[ns] = S[i]
                    newlam[ns] = v
                    ns += 1
            total = 0.0
            for i in range(ns):
                total += newlam[i]
            s = ns
            for i in range(s):
                S[i] = newS[i]
                lam[i] = newlam[i] / total
            for c in range(m):
                x[c] = 0.0
            for i in range(s):
                for c in range(m):
                    x[c] += lam[i] * P[S[i], c]
        for c in range(m):
            x[c] = 0.0
        for i in range(s):
            for c in range(m):
                x[c] += lam[i] * P[S[i], c]


cdef inline double _wrap(double y, double period) nogil:
    cdef double r = y - period * floor(y / period)
    if r >= period or r < 0.0:
        r = 0.0
    return r


def wrap_periodic(double y, double period):
    return _wrap(y, period)


def sa_circle_affine(double x0, gammas, noise, double a, double b,
                     double period, double eps):
    cdef double[::1] g = np.ascontiguousarray(gammas, dtype=np.float64)
    cdef double[::1] u = np.ascontiguousarray(noise, dtype=np.float64).reshape(-1)
    cdef Py_ssize_t N = g.shape[0]
    xs_arr = np.empty(N + 1)
    vs_arr = np.empty(N)
    cdef double[::1] xs = xs_arr
    cdef double[::1] vs = vs_arr
    cdef double x = x0, y, v, d0, lo, hi, tmp, v_jump
    cdef Py_ssize_t n
    xs[0] = x
    lo = a
    hi = a + b * period
    if lo > hi:
        tmp = lo
        lo = hi
        hi = tmp
    if lo <= 0.0 and 0.0 <= hi:
        v_jump = 0.0
    elif hi < 0.0:
        v_jump = hi
    else:
        v_jump = lo
    with nogil:
        for n in range(N):
            if x < period - x:
                d0 = x
            else:
                d0 = period - x
            if d0 < eps:
                v = v_jump
            else:
                v = a + b * x
            y = x + g[n] * (v + u[n])
            x = _wrap(y, period)
            vs[n] = v
            xs[n + 1] = x
    return xs_arr, vs_arr


def sa_box_affine_ball(x0, gammas, noise, A, c, double radius, lo, hi):
    cdef double[::1] g = np.ascontiguousarray(gammas, dtype=np.float64)
    cdef double[:, ::1] U = np.ascontiguousarray(noise, dtype=np.float64)
    cdef double[:, ::1] Am = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef double[::1] lov = np.ascontiguousarray(lo, dtype=np.float64)
    cdef double[::1] hiv = np.ascontiguousarray(hi, dtype=np.float64)
    cdef Py_ssize_t N = g.shape[0]
    cdef int m = cv.shape[0]
    xs_arr = np.empty((N + 1, m))
    vs_arr = np.empty((N, m))
    cdef double[:, ::1] xs = xs_arr
    cdef double[:, ::1] vs = vs_arr
    cdef double[::1] x = np.ascontiguousarray(x0, dtype=np.float64).copy()
    cdef double[::1] q = np.empty(m)
    cdef double[::1] y = np.empty(m)
    cdef double acc, nq2, nq, s
    cdef Py_ssize_t n
    cdef int i, j
    cdef Py_ssize_t done = N
    for i in range(m):
        xs[0, i] = x[i]
    with nogil:
        for n in range(N):
            nq2 = 0.0
            for i in range(m):
                acc = cv[i]
                for j in range(m):
                    acc = acc + Am[i, j] * x[j]
                q[i] = acc
                nq2 += acc * acc
            nq = sqrt(nq2)
            if nq <= radius:
                for i in range(m):
                    vs[n, i] = 0.0
            else:
                s = 1.0 - radius / nq
                for i in range(m):
                    vs[n, i] = q[i] * s
            for i in range(m):
                y[i] = x[i] + g[n] * (vs[n, i] + U[n, i])
            for i in range(m):
                if y[i] < lov[i] or y[i] > hiv[i]:
                    done = n
                    break
            if done < N:
                break
            for i in range(m):
                xs[n + 1, i] = y[i]
                x[i] = y[i]
    if done < N:
        return xs_arr[: done + 1], vs_arr[: done + 1], done
    return xs_arr, vs_arr, N


def occupation_1d(starts, steps, durations, double lo, double width,
                  int ncells, bint periodic):
    cdef double[::1] st = np.ascontiguousarray(starts, dtype=np.float64)
    cdef double[::1] dx = np.ascontiguousarray(steps, dtype=np.float64)
    cdef double[::1] du = np.ascontiguousarray(durations, dtype=np.float64)
    out_arr = np.zeros(ncells)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, nseg = st.shape[0]
    cdef double tau, u, d, ad, rate, rem, loops, cur, cell, room, seg
    cdef long cidx
    cdef int cc
    with nogil:
        for i in range(nseg):
            tau = du[i]
            if tau <= 0.0:
                continue
            u = (st[i] - lo) / width
            d = dx[i] / width
            if periodic:
                u = u - ncells * floor(u / ncells)
                if u >= ncells:
                    u = 0.0
            if d == 0.0:
                cidx = <long>floor(u)
                if periodic:
                    cidx = cidx % ncells
                    if cidx < 0:
                        cidx += ncells
                elif cidx < 0:
                    cidx = 0
                elif cidx >= ncells:
                    cidx = ncells - 1
                out[cidx] += tau
                continue
            ad = fabs(d)
            rate = tau / ad
            rem = ad
            if periodic and ad >= ncells:
                loops = floor(ad / ncells)
                for cc in range(ncells):
                    out[cc] += rate * loops
                rem = ad - loops * ncells
            cur = u
            while rem > 0.0:
                if d > 0.0:
                    cell = floor(cur)
                    room = (cell + 1.0) - cur
                else:
                    cell = ceil(cur) - 1.0
                    room = cur - cell
                if room <= 0.0:
                    room = 1.0
                if room >= rem:
                    seg = rem
                    rem = 0.0
                else:
                    seg = room
                    rem = rem - room
                    if d > 0.0:
                        cur = cell + 1.0
                    else:
                        cur = cell
                cidx = <long>cell
                if periodic:
                    cidx = cidx % ncells
                    if cidx < 0:
                        cidx += ncells
                elif cidx < 0:
                    cidx = 0
                elif cidx >= ncells:
                    cidx = ncells - 1
                out[cidx] += rate * seg
    return out_arr
