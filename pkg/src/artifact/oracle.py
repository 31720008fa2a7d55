"""Brute-force ground truth for small instances.

Everything here is deliberately naive and depends only on the graph module:
exhaustive cut enumeration, augmenting-path max flow, Tarjan SCC and a
hop-limited residual search.  Size gates raise instead of sampling.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graph import GraphError

MAX_ENUM_VERTICES = 16
MAX_FLOW_EDGES = 10_000


class OracleSizeError(GraphError):
    pass


@dataclass(frozen=True)
class CutReport:
    side: tuple
    out_count: int
    in_count: int
    volume: int
    r_mass: int

    @property
    def out_ratio(self) -> Fraction:
        return Fraction(self.out_count + self.r_mass, self.volume + self.r_mass)

    @property
    def in_ratio(self) -> Fraction:
        return Fraction(self.in_count + self.r_mass, self.volume + self.r_mass)


class _Masks:
    """Per-subset cut statistics for every nonempty proper vertex subset."""

    def __init__(self, g, max_vertices):
        verts = sorted(g.vertices())
        n = len(verts)
        if n > max_vertices:
            raise OracleSizeError(f"{n} vertices exceed the enumeration gate of {max_vertices}")
        self.verts = verts
        self.n = n
        if n < 2:
            self.masks = np.zeros(0, dtype=np.int64)
            return
        index = {v: i for i, v in enumerate(verts)}
        self.masks = np.arange(1, (1 << n) - 1, dtype=np.int64)
        self.bits = [(self.masks >> i) & 1 for i in range(n)]
        pairs: dict[tuple[int, int], int] = {}
        deg = np.zeros(n, dtype=np.int64)
        for v in verts:
            for e in g.out_edges(v):
                t, h = index[v], index[g.head(e)]
                deg[t] += 1
                deg[h] += 1
                if t != h:
                    pairs[(t, h)] = pairs.get((t, h), 0) + 1
        self.out = np.zeros_like(self.masks)
        self.inc = np.zeros_like(self.masks)
        for (t, h), c in pairs.items():
            self.out += c * (self.bits[t] & (1 - self.bits[h]))
            self.inc += c * (self.bits[h] & (1 - self.bits[t]))
        self.deg = deg
        self.vol = self.weigh([int(d) for d in deg])
        self.total_vol = int(deg.sum())

    def weigh(self, values) -> np.ndarray:
        acc = np.zeros_like(self.masks)
        for i, x in enumerate(values):
            if x:
                acc += int(x) * self.bits[i]
        return acc

    def vector(self, vec) -> list[int]:
        vec = vec or {}
        return [int(vec.get(v, 0)) for v in self.verts]

    def side(self, mask: int) -> tuple:
        return tuple(v for i, v in enumerate(self.verts) if mask >> i & 1)


def enumerate_sparsest_cut(g, r=None, weight=None, *, direction: str = "out",
                           max_vertices: int = MAX_ENUM_VERTICES) -> CutReport | None:
    """Exhaustively find the cut minimising (|E(S, S̄)| + r(S)) / (vol(S) + r(S)).

    Only sides with ``weight(S) <= weight(S̄)`` are considered; ``weight``
    defaults to ``vol + r``.  ``direction`` selects out-edges, in-edges or the
    smaller of the two ("min").  Ties go to the lexicographically smallest side.
    Returns None when no cut has positive ``vol(S) + r(S)``.
    """
    M = _Masks(g, max_vertices)
    if M.n < 2:
        return None
    rv = M.weigh(M.vector(r))
    denom = M.vol + rv
    if weight is None:
        w = denom
        w_total = M.total_vol + sum(M.vector(r))
    else:
        wl = M.vector(weight)
        w = M.weigh(wl)
        w_total = sum(wl)
    if direction == "out":
        cross = M.out
    elif direction == "in":
        cross = M.inc
    elif direction == "min":
        cross = np.minimum(M.out, M.inc)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    ok = (2 * w <= w_total) & (denom > 0)
    if not ok.any():
        return None
    idx = np.nonzero(ok)[0]
    num = cross[idx] + rv[idx]
    den = denom[idx]
    approx = num / den
    lo = approx.min()
    near = idx[np.abs(approx - lo) <= 1e-9 * max(1.0, abs(lo))]
    best = None
    for i in near:
        ratio = Fraction(int(cross[i] + rv[i]), int(denom[i]))
        side = M.side(int(M.masks[i]))
        key = (ratio, side)
        if best is None or key < best[0]:
            best = (key, i)
    i = best[1]
    return CutReport(M.side(int(M.masks[i])), int(M.out[i]), int(M.inc[i]),
                     int(M.vol[i]), int(rv[i]))


def _lt_scaled(q: int, a: np.ndarray, p: int, b: np.ndarray) -> np.ndarray:
    """Elementwise q*a < p*b; falls back to Python integers when int64 could overflow."""
    top = max(int(a.max(initial=0)), int(b.max(initial=0)), 1)
    if max(p, q) * top < (1 << 62):
        return q * a < p * b
    return np.array([q * int(x) < p * int(y) for x, y in zip(a, b)], dtype=bool)


def find_sparse_cut(g, threshold: Fraction, *, max_vertices: int = MAX_ENUM_VERTICES,
                    min_volume=0) -> CutReport | None:
    """Return a cut with vol(S) <= vol(S̄), vol(S) >= min_volume and
    min(out, in) < threshold * vol(S), or None if there is none."""
    M = _Masks(g, max_vertices)
    if M.n < 2:
        return None
    threshold = Fraction(threshold)
    p, q = threshold.numerator, threshold.denominator
    cross = np.minimum(M.out, M.inc)
    hit = (2 * M.vol <= M.total_vol) & (M.vol >= min_volume) & _lt_scaled(q, cross, p, M.vol)
    if not hit.any():
        return None
    i = int(np.nonzero(hit)[0][0])
    return CutReport(M.side(int(M.masks[i])), int(M.out[i]), int(M.inc[i]), int(M.vol[i]), 0)


def is_expander(g, phi, **kw) -> bool:
    return find_sparse_cut(g, phi, **kw) is None


# -- flow ---------------------------------------------------------------------

def _flow_arcs(g, capacity):
    arcs = []
    for e in g.edges():
        t, h = g.tail(e), g.head(e)
        if t != h:
            arcs.append((e, t, h, capacity))
    return arcs


def max_flow_exact(g, capacity: int, source, sink, *, max_edges: int = MAX_FLOW_EDGES):
    """Maximum absorbable source mass via a super-source/super-sink reduction.

    Returns ``(value, flow)`` where ``flow`` maps edge id to flow.  Self-loops
    carry nothing.
    """
    if g.num_edges > max_edges:
        raise OracleSizeError(f"{g.num_edges} edges exceed the max-flow gate of {max_edges}")
    S, T = ("s",), ("t",)
    # arc list: [to, cap, rev_index, edge_id]
    adj: dict = {S: [], T: []}
    for v in g.vertices():
        adj[v] = []

    def arc(u, v, cap, eid=None):
        adj[u].append([v, cap, len(adj[v]), eid])
        adj[v].append([u, 0, len(adj[u]) - 1, None])

    for e, t, h, c in _flow_arcs(g, capacity):
        arc(t, h, c, e)
    for v, d in (source or {}).items():
        if d:
            arc(S, v, d)
    for v, d in (sink or {}).items():
        if d:
            arc(v, T, d)
    value = 0
    while True:
        parent = {S: None}
        q = deque([S])
        while q and T not in parent:
            u = q.popleft()
            for i, a in enumerate(adj[u]):
                if a[1] > 0 and a[0] not in parent:
                    parent[a[0]] = (u, i)
                    q.append(a[0])
        if T not in parent:
            break
        push = None
        v = T
        while parent[v] is not None:
            u, i = parent[v]
            push = adj[u][i][1] if push is None else min(push, adj[u][i][1])
            v = u
        v = T
        while parent[v] is not None:
            u, i = parent[v]
            a = adj[u][i]
            a[1] -= push
            adj[a[0]][a[2]][1] += push
            v = u
        value += push
    flow = {}
    for u, arcs in adj.items():
        for a in arcs:
            if a[3] is not None:
                flow[a[3]] = capacity - a[1]
    return value, flow


def excess_and_absorption(g, flow, source, sink):
    """Recompute (ex, abs) from scratch for a preflow given as edge -> value."""
    net: dict = {v: 0 for v in g.vertices()}
    for e, f in flow.items():
        if f:
            net[g.tail(e)] -= f
            net[g.head(e)] += f
    ex, ab = {}, {}
    for v in g.vertices():
        total = net[v] + (source or {}).get(v, 0)
        a = min(total, (sink or {}).get(v, 0))
        ab[v] = a
        ex[v] = total - a
    return ex, ab


def residual_path_within(g, capacity: int, flow, source, sink, hops: int) -> bool:
    """True iff some excess vertex reaches an unsaturated sink in <= hops residual edges."""
    ex, ab = excess_and_absorption(g, flow, source, sink)
    targets = {v for v in g.vertices() if ab[v] < (sink or {}).get(v, 0)}
    dist = {v: 0 for v in g.vertices() if ex[v] > 0}
    if any(v in targets for v in dist):
        return True
    q = deque(dist)
    while q:
        u = q.popleft()
        if dist[u] >= hops:
            continue
        nxt = [g.head(e) for e in g.out_edges(u) if not g.is_loop(e) and flow.get(e, 0) < capacity]
        nxt += [g.tail(e) for e in g.in_edges(u) if not g.is_loop(e) and flow.get(e, 0) > 0]
        for w in nxt:
            if w not in dist:
                if w in targets:
                    return True
                dist[w] = dist[u] + 1
                q.append(w)
    return False


# -- strongly connected components -------------------------------------------

def tarjan_scc(g, excluded=()) -> list[list[int]]:
    """SCCs of g minus ``excluded`` edges, each sorted, ordered by smallest member."""
    excluded = set(excluded)
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in sorted(g.vertices()):
        if root in index:
            continue
        work = [(root, iter(list(g.out_edges(root))))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for e in it:
                if e in excluded:
                    continue
                w = g.head(e)
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(list(g.out_edges(w)))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    comps.sort(key=lambda c: c[0])
    return comps


def condensation_is_dag(g, excluded=(), partition=None) -> bool:
    """Whether contracting ``partition`` (default: the SCCs) in g minus
    ``excluded`` leaves an acyclic graph, self-loops aside."""
    excluded = set(excluded)
    if partition is None:
        partition = tarjan_scc(g, excluded)
    label = {}
    for i, part in enumerate(partition):
        for v in part:
            label[v] = i
    succ: dict[int, set[int]] = {i: set() for i in range(len(partition))}
    for e in g.edges():
        if e in excluded:
            continue
        a, b = label[g.tail(e)], label[g.head(e)]
        if a != b:
            succ[a].add(b)
    indeg = {i: 0 for i in succ}
    for a in succ:
        for b in succ[a]:
            indeg[b] += 1
    q = deque(i for i, d in indeg.items() if d == 0)
    seen = 0
    while q:
        a = q.popleft()
        seen += 1
        for b in succ[a]:
            indeg[b] -= 1
            if indeg[b] == 0:
                q.append(b)
    return seen == len(succ)


def undirected_components(vertices, edge_ends) -> list[list[int]]:
    """Connected components by BFS, ignoring edge direction; sorted lists."""
    adj: dict[int, list[int]] = {v: [] for v in vertices}
    for a, b in edge_ends:
        adj[a].append(b)
        adj[b].append(a)
    seen: set[int] = set()
    comps = []
    for root in sorted(adj):
        if root in seen:
            continue
        seen.add(root)
        comp, q = [root], deque([root])
        while q:
            x = q.popleft()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    comp.append(y)
                    q.append(y)
        comps.append(sorted(comp))
    return comps
