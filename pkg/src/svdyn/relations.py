"""Invariant measures, recurrence and Birkhoff centres of finite closed relations."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .domains import Grid
from .fields import SetValuedField
from .inclusion import CellImages
from .measures import DiscreteMeasure

SUM_TOL = 1e-12
FLOW_TOL = 1e-10
MAX_SUBSET_SUPPORT = 22
MAX_DENOMINATOR = 10**6
MAX_WINDOWS = 10**6


class RelationError(ValueError):
    """Malformed relation, measure or certificate."""


@dataclass(frozen=True, eq=False)
class FiniteRelation:
    """A relation on ``{0..n-1}`` with nonempty successor sets."""

    n: int
    successors: tuple

    def __post_init__(self):
        succ = []
        for x, s in enumerate(self.successors):
            arr = np.unique(np.asarray(list(s), dtype=np.int64))
            if arr.size == 0:
                raise RelationError(f"state {x} has no successor")
            if arr[0] < 0 or arr[-1] >= self.n:
                raise RelationError(f"successor of state {x} out of range")
            arr.flags.writeable = False
            succ.append(arr)
        if len(succ) != self.n:
            raise RelationError("one successor set per state required")
        object.__setattr__(self, "successors", tuple(succ))

    @classmethod
    def from_edges(cls, n: int, edges) -> "FiniteRelation":
        succ = [[] for _ in range(n)]
        for a, b in edges:
            if not 0 <= a < n:
                raise RelationError(f"edge source {a} out of range")
            succ[int(a)].append(int(b))
        return cls(n, tuple(succ))

    @classmethod
    def identity(cls, n: int) -> "FiniteRelation":
        return cls(n, tuple([x] for x in range(n)))

    def edges(self) -> np.ndarray:
        return np.array([(x, y) for x, s in enumerate(self.successors) for y in s],
                        dtype=np.int64).reshape(-1, 2)

    def has_edge(self, x: int, y: int) -> bool:
        s = self.successors[x]
        i = np.searchsorted(s, y)
        return bool(i < s.size and s[i] == y)

    def adjacency(self) -> csr_matrix:
        e = self.edges()
        return csr_matrix((np.ones(len(e), dtype=np.int8), (e[:, 0], e[:, 1])),
                          shape=(self.n, self.n))

    def dense(self) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=bool)
        e = self.edges()
        A[e[:, 0], e[:, 1]] = True
        return A

    def image(self, states) -> np.ndarray:
        states = np.atleast_1d(np.asarray(states, dtype=np.int64))
        return np.unique(np.concatenate([self.successors[x] for x in states]))


@dataclass(frozen=True, eq=False)
class EdgeCoupling:
    """Probability weights on relation edges ``(from, to)``."""

    edges: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if e.shape[0] != w.shape[0]:
            raise RelationError("one weight per edge required")
        if np.any(w < 0) or abs(math.fsum(w) - 1.0) > SUM_TOL:
            raise RelationError("coupling weights must be nonnegative and sum to 1")
        e, w = e.copy(), w.copy()
        e.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "weights", w)

    def marginals(self, n: int):
        first = np.bincount(self.edges[:, 0], self.weights, minlength=n)
        second = np.bincount(self.edges[:, 1], self.weights, minlength=n)
        return first, second

    def within(self, F: FiniteRelation) -> bool:
        return all(F.has_edge(int(a), int(b))
                   for (a, b), w in zip(self.edges, self.weights) if w > 0)


@dataclass(frozen=True, eq=False)
class MarkovKernel:
    """Transition matrix; rows outside ``defined`` are left unspecified (zero)."""

    P: np.ndarray
    defined: np.ndarray

    def __post_init__(self):
        P = np.array(self.P, dtype=np.float64)
        d = np.array(self.defined, dtype=bool)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or d.shape != (P.shape[0],):
            raise RelationError("kernel must be square with one flag per row")
        if np.any(P < 0) or np.any(np.abs(P[d].sum(axis=1) - 1.0) > FLOW_TOL):
            raise RelationError("defined kernel rows must be probability vectors")
        P.flags.writeable = False
        d.flags.writeable = False
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "defined", d)

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @classmethod
    def full(cls, P) -> "MarkovKernel":
        P = np.asarray(P, dtype=np.float64)
        return cls(P, np.ones(P.shape[0], dtype=bool))

    def push(self, mu: np.ndarray) -> np.ndarray:
        """``(mu kappa)(y) = sum_x mu(x) kappa(x, y)``."""
        if np.any(mu[~self.defined] > 0):
            raise RelationError("measure charges states where the kernel is undefined")
        return mu @ self.P

    def within(self, F: FiniteRelation) -> bool:
        rows, cols = np.nonzero(self.P)
        return all(F.has_edge(int(a), int(b)) for a, b in zip(rows, cols))


def _as_measure(mu, n: int) -> np.ndarray:
    p = mu.p if isinstance(mu, DiscreteMeasure) else DiscreteMeasure(mu).p
    if p.shape[0] != n:
        raise RelationError(f"measure has {p.shape[0]} entries for {n} states")
    return p


def check_condition_subsets(F: FiniteRelation, mu) -> bool:
    """``mu(A) <= mu(F^{-1}(A)) + 1e-12`` for every subset ``A`` of the support.

    Other subsets need no check: ``mu(A) = mu(A & supp)`` while
    ``F^{-1}(A) contains F^{-1}(A & supp)``.
    """
    p = _as_measure(mu, F.n)
    supp = np.flatnonzero(p > 0)
    s = supp.size
    if s > MAX_SUBSET_SUPPORT:
        raise RelationError(f"support of size {s} is too large for subset enumeration; "
                            "use check_condition_flow")
    pos = {int(y): j for j, y in enumerate(supp)}
    muA = np.zeros(1 << s)
    for j, y in enumerate(supp):
        muA[1 << j: 1 << (j + 1)] = muA[: 1 << j] + p[y]
    masks = np.arange(1 << s, dtype=np.int64)
    pre = np.zeros(1 << s)
    for x in supp:
        row = 0
        for y in F.successors[x]:
            j = pos.get(int(y))
            if j is not None:
                row |= 1 << j
        if row:
            pre += p[x] * ((masks & row) != 0)
    return bool(np.all(muA <= pre + SUM_TOL))


def _exact_scale(p: np.ndarray):
    """Common integer scaling of ``p`` when every entry has denominator <= 10^6."""
    fracs = []
    for v in p:
        f = Fraction(float(v)).limit_denominator(MAX_DENOMINATOR)
        if abs(float(f) - v) > 1e-15:
            return None
        fracs.append(f)
    if sum(fracs) != 1:
        return None
    D = math.lcm(*(f.denominator for f in fracs))
    return [int(f * D) for f in fracs], D


def check_condition_flow(F: FiniteRelation, mu) -> EdgeCoupling | None:
    """An edge coupling with both marginals ``mu``, or None if none exists.

    Max flow on ``source -> x_out (mu(x)) -> y_in (unbounded, y in F(x)) -> sink (mu(y))``.
    Measures with denominators at most ``10^6`` are scaled to integers, so
    the flow value is compared exactly; otherwise a ``1e-10`` tolerance is used.
    """
    p = _as_measure(mu, F.n)
    supp = [int(x) for x in np.flatnonzero(p > 0)]
    scaled = _exact_scale(p)
    if scaled is not None:
        cap, total = scaled
    else:
        cap, total = [float(v) for v in p], 1.0
    G = nx.DiGraph()
    G.add_node("s")
    G.add_node("t")
    for x in supp:
        G.add_edge("s", ("o", x), capacity=cap[x])
        G.add_edge(("i", x), "t", capacity=cap[x])
    support = set(supp)
    for x in supp:
        for y in F.successors[x]:
            if int(y) in support:
                G.add_edge(("o", x), ("i", int(y)))
    value, flow = nx.maximum_flow(G, "s", "t")
    if scaled is not None:
        if value != total:
            return None
    elif abs(value - 1.0) > FLOW_TOL:
        return None
    edges, weights = [], []
    for x in supp:
        for node, f in flow[("o", x)].items():
            if f > 0:
                edges.append((x, node[1]))
                weights.append(f / total)
    w = np.array(weights, dtype=np.float64)
    return EdgeCoupling(np.array(edges, dtype=np.int64).reshape(-1, 2), w / math.fsum(w))


def coupling_residual(coupling: EdgeCoupling, mu, n: int) -> float:
    p = _as_measure(mu, n)
    a, b = coupling.marginals(n)
    return float(max(np.max(np.abs(a - p)), np.max(np.abs(b - p))))


def kernel_from_coupling(coupling: EdgeCoupling, mu, n: int | None = None) -> MarkovKernel:
    """``kappa(x, y) = coupling(x, y) / mu(x)`` on the support of ``mu``.

    Raises ``RelationError`` when a marginal differs from ``mu`` by more than
    ``1e-10`` or when the resulting kernel fails stationarity.
    """
    n = n or (mu.n if isinstance(mu, DiscreteMeasure) else len(mu))
    p = _as_measure(mu, n)
    if coupling_residual(coupling, p, n) > FLOW_TOL:
        raise RelationError("coupling marginals do not match the measure")
    P = np.zeros((n, n))
    np.add.at(P, (coupling.edges[:, 0], coupling.edges[:, 1]), coupling.weights)
    defined = p > 0
    P[defined] /= P[defined].sum(axis=1, keepdims=True)
    K = MarkovKernel(P, defined)
    if stationarity_residual(K, p) > FLOW_TOL:
        raise RelationError("derived kernel is not stationary for the measure")
    return K


def stationarity_residual(K: MarkovKernel, mu) -> float:
    p = _as_measure(mu, K.n)
    return float(np.max(np.abs(K.push(p) - p)))


def window_measure(K: MarkovKernel, mu, k: int):
    """Positive-probability windows ``(x_0..x_{k-1})`` under the stationary chain, with probabilities."""
    p = _as_measure(mu, K.n)
    supp = np.flatnonzero(p > 0)
    paths = supp.reshape(-1, 1)
    probs = p[supp]
    S = csr_matrix(K.P)
    for _ in range(k - 1):
        last = paths[:, -1]
        counts = np.diff(S.indptr)[last]
        total = int(counts.sum())
        if total > MAX_WINDOWS:
            raise RelationError(f"window enumeration exceeds {MAX_WINDOWS} paths")
        owner = np.repeat(np.arange(paths.shape[0]), counts)
        starts = np.repeat(S.indptr[last], counts)
        offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        slot = starts + offs
        paths = np.hstack([paths[owner], S.indices[slot].reshape(-1, 1)])
        probs = probs[owner] * S.data[slot]
    keep = probs > 0
    return paths[keep], probs[keep]


def _window_marginal(paths, probs, n):
    codes = np.zeros(paths.shape[0], dtype=np.int64)
    for col in paths.T:
        codes = codes * n + col
    u, inv = np.unique(codes, return_inverse=True)
    return dict(zip(u.tolist(), np.bincount(inv, probs).tolist()))


def pathspace_shift_check(K: MarkovKernel, mu, k: int, F: FiniteRelation | None = None) -> float:
    """``max_w |P(X_1..X_{k-1} = w) - P(X_0..X_{k-2} = w)|`` for the stationary window measure.

    With ``F`` given, every positive window must also be a path of ``F``.
    """
    if k < 2:
        raise RelationError("window length must be >= 2")
    paths, probs = window_measure(K, mu, k)
    if F is not None:
        for a, b in zip(paths[:, :-1].ravel(), paths[:, 1:].ravel()):
            if not F.has_edge(int(a), int(b)):
                raise RelationError(f"window uses a step {a}->{b} outside the relation")
    head = _window_marginal(paths[:, :-1], probs, K.n)
    tail = _window_marginal(paths[:, 1:], probs, K.n)
    keys = head.keys() | tail.keys()
    return max(abs(head.get(w, 0.0) - tail.get(w, 0.0)) for w in keys)


def recurrent_set(F: FiniteRelation) -> np.ndarray:
    """States on a directed cycle: nontrivial strong components and self-loops.

    For a finite relation this is also the Birkhoff centre (the set is closed).
    """
    _, labels = connected_components(F.adjacency(), directed=True, connection="strong")
    sizes = np.bincount(labels)
    self_loop = np.array([F.has_edge(x, x) for x in range(F.n)])
    return np.flatnonzero((sizes[labels] > 1) | self_loop)


birkhoff_center = recurrent_set


def reachable(F: FiniteRelation, x: int) -> np.ndarray:
    """States reachable from ``x`` in zero or more steps."""
    order = breadth_first_order(F.adjacency(), int(x), directed=True, return_predecessors=False)
    return np.sort(order)


def omega_limit(F: FiniteRelation, x: int) -> np.ndarray:
    """States reachable from ``x`` by arbitrarily long walks."""
    rec = np.intersect1d(recurrent_set(F), reachable(F, x))
    if rec.size == 0:
        return rec
    return np.unique(np.concatenate([reachable(F, int(r)) for r in rec]))


def certifies(F: FiniteRelation, mu, coupling: EdgeCoupling) -> bool:
    """``coupling`` lives on Graph(F) and has both marginals equal to ``mu``."""
    return coupling.within(F) and coupling_residual(coupling, mu, F.n) <= FLOW_TOL


def poincare_verify(F: FiniteRelation, mu, coupling: EdgeCoupling) -> bool:
    """``mu`` gives full mass to the recurrent set; ``coupling`` must certify ``mu``."""
    p = _as_measure(mu, F.n)
    if not certifies(F, p, coupling):
        raise RelationError("coupling does not certify the measure as invariant")
    return bool(np.all(np.isin(np.flatnonzero(p > 0), recurrent_set(F))))


def _cycle_from(F: FiniteRelation, x: int, choose):
    seen = {}
    walk = []
    while x not in seen:
        seen[x] = len(walk)
        walk.append(x)
        x = int(choose(F.successors[x]))
    return walk[seen[x]:]


def cycle_coupling(n: int, cycle) -> tuple[DiscreteMeasure, EdgeCoupling]:
    L = len(cycle)
    edges = [(cycle[i], cycle[(i + 1) % L]) for i in range(L)]
    return DiscreteMeasure.uniform_on(n, cycle), EdgeCoupling(np.array(edges), np.full(L, 1.0 / L))


def some_invariant_measure(F: FiniteRelation) -> tuple[DiscreteMeasure, EdgeCoupling]:
    """Uniform measure on the cycle reached from state 0 by always taking the lowest successor."""
    return cycle_coupling(F.n, _cycle_from(F, 0, lambda s: s[0]))


def cesaro_invariance_defect(K: MarkovKernel, mu0, k: int) -> float:
    """``TV(A_k kappa, A_k)`` with ``A_k = (1/k) sum_{j<k} mu0 kappa^j``; checked against ``1/k``."""
    if k < 1:
        raise RelationError("k must be >= 1")
    cur = _as_measure(mu0, K.n).copy()
    acc = np.zeros(K.n)
    for _ in range(k):
        acc += cur
        cur = K.push(cur)
    A = acc / k
    tv = 0.5 * float(np.sum(np.abs(K.push(A) - A)))
    if tv > 1.0 / k + SUM_TOL:
        raise RuntimeError(f"Cesaro defect {tv} exceeds 1/k = {1.0 / k}")
    return tv


def discretize_field(F: SetValuedField, grid: Grid, h: float) -> FiniteRelation:
    """Cell relation sharing the image rule of :func:`svdyn.inclusion.reachable_tube`."""
    images = CellImages(F, grid, h)
    return FiniteRelation(grid.n_cells, tuple(images(c)[0] for c in range(grid.n_cells)))


class RandomInstance(NamedTuple):
    relation: FiniteRelation
    measure: DiscreteMeasure


def random_relation(rng: np.random.Generator, n: int, p: float = 0.3) -> FiniteRelation:
    """Each edge present with probability ``p``; an empty row gets one uniform successor."""
    A = rng.random((n, n)) < p
    for x in range(n):
        if not A[x].any():
            A[x, rng.integers(n)] = True
    return FiniteRelation(n, tuple(np.flatnonzero(row) for row in A))


def random_measure(rng: np.random.Generator, n: int, denom: int = 64) -> DiscreteMeasure:
    """Random measure with entries in ``(1/denom) Z`` on a random support."""
    size = int(rng.integers(1, min(n, denom) + 1))
    supp = rng.choice(n, size=size, replace=False)
    counts = np.zeros(n, dtype=np.int64)
    counts[supp] = 1 + rng.multinomial(denom - size, np.full(size, 1.0 / size))
    return DiscreteMeasure(counts / denom)


def random_invariant_measure(rng: np.random.Generator, F: FiniteRelation,
                             max_mass: int = 64) -> DiscreteMeasure:
    """Integer circulation built from random cycles of ``F``, normalized.

    Every such measure is invariant; the denominator is the total mass (at most ``max_mass``).
    """
    counts = np.zeros(F.n, dtype=np.int64)
    total = 0
    for _ in range(int(rng.integers(1, 4))):
        cyc = _cycle_from(F, int(rng.integers(F.n)), lambda s: s[rng.integers(s.size)])
        room = (max_mass - total) // len(cyc)
        if room < 1:
            break
        w = int(rng.integers(1, room + 1))
        counts[cyc] += w
        total += w * len(cyc)
    if total == 0:
        cyc = _cycle_from(F, 0, lambda s: s[0])
        counts[cyc] = 1
    return DiscreteMeasure(counts / counts.sum())


def random_kernel(rng: np.random.Generator, n: int, p: float = 0.5) -> MarkovKernel:
    """Full kernel on ``n`` states with random sparse rows."""
    F = random_relation(rng, n, p)
    P = np.zeros((n, n))
    for x, s in enumerate(F.successors):
        P[x, s] = rng.dirichlet(np.ones(s.size))
    return MarkovKernel.full(P)
