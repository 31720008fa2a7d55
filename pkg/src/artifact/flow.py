"""Integral preflows: bounded-round blocking flow, residual queries and
unit path decomposition."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping


class FlowError(ValueError):
    pass


MAX_MAGNITUDE = 1 << 62


class VertexVector:
    """Sparse non-negative integer vector over vertex ids with a cached l1 norm."""

    __slots__ = ("_data", "_norm")

    def __init__(self, data: Mapping[int, int] | Iterable[tuple[int, int]] | None = None):
        self._data: dict[int, int] = {}
        self._norm = 0
        if data is not None:
            items = data.items() if isinstance(data, Mapping) or isinstance(data, VertexVector) else data
            for v, x in items:
                self[v] = x

    def __getitem__(self, v: int) -> int:
        return self._data.get(v, 0)

    def get(self, v: int, default: int = 0) -> int:
        return self._data.get(v, default)

    def __setitem__(self, v: int, x: int) -> None:
        if x < 0:
            raise FlowError(f"negative entry {x} at vertex {v}")
        old = self._data.get(v, 0)
        if x:
            self._data[v] = x
        else:
            self._data.pop(v, None)
        self._norm += x - old

    def add(self, v: int, delta: int) -> None:
        self[v] = self[v] + delta

    def items(self):
        return self._data.items()

    def keys(self):
        return self._data.keys()

    def __iter__(self):
        return iter(self._data)

    def __contains__(self, v) -> bool:
        return v in self._data

    def __len__(self) -> int:
        return len(self._data)

    @property
    def norm(self) -> int:
        return self._norm

    def total(self, S: Iterable[int]) -> int:
        return sum(self._data.get(v, 0) for v in S)

    def restrict(self, S) -> "VertexVector":
        if len(S) < len(self._data):
            return VertexVector((v, self._data[v]) for v in S if v in self._data)
        return VertexVector((v, x) for v, x in self._data.items() if v in S)

    def copy(self) -> "VertexVector":
        out = VertexVector()
        out._data = dict(self._data)
        out._norm = self._norm
        return out

    def scaled(self, k: int) -> "VertexVector":
        return VertexVector((v, k * x) for v, x in self._data.items())

    def __add__(self, other: "VertexVector") -> "VertexVector":
        out = self.copy()
        for v, x in other.items():
            out.add(v, x)
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, VertexVector):
            return self._data == other._data
        if isinstance(other, Mapping):
            return self._data == {v: x for v, x in other.items() if x}
        return NotImplemented

    def as_dict(self) -> dict[int, int]:
        return dict(sorted(self._data.items()))

    def __repr__(self) -> str:
        return f"VertexVector({self.as_dict()})"


@dataclass
class FlowProblem:
    graph: object
    capacity: int
    source: VertexVector
    sink: VertexVector


@dataclass(frozen=True)
class FlowPath:
    edges: tuple
    start: int
    end: int


@dataclass
class Preflow:
    problem: FlowProblem
    flow: dict = field(default_factory=dict)
    net_inflow: dict = field(default_factory=dict)
    rounds: int = 0
    visited: list = field(default_factory=list)

    def available(self, v: int) -> int:
        return self.net_inflow.get(v, 0) + self.problem.source[v]

    def absorbed_at(self, v: int) -> int:
        return min(self.available(v), self.problem.sink[v])

    def excess_at(self, v: int) -> int:
        return max(0, self.available(v) - self.problem.sink[v])

    def _touched(self):
        keys = set(self.net_inflow) | set(self.problem.source.keys())
        return sorted(keys)

    @property
    def excess(self) -> VertexVector:
        return VertexVector((v, self.excess_at(v)) for v in self._touched())

    @property
    def absorption(self) -> VertexVector:
        return VertexVector((v, self.absorbed_at(v)) for v in self._touched())

    @property
    def excess_norm(self) -> int:
        return sum(self.excess_at(v) for v in self._touched())

    def __getitem__(self, e: int) -> int:
        return self.flow.get(e, 0)


def _push(f: Preflow, e: int, tail: int, head: int, amount: int) -> None:
    x = f.flow.get(e, 0) + amount
    if x:
        f.flow[e] = x
    else:
        f.flow.pop(e, None)
    net = f.net_inflow
    net[tail] = net.get(tail, 0) - amount
    net[head] = net.get(head, 0) + amount


def bounded_blocking_flow(p: FlowProblem, h: int) -> Preflow:
    """Run level-graph blocking-flow rounds until no residual path of at most
    ``h`` edges joins an excess vertex to a vertex with spare sink.

    Each round explores from the excess vertices and only expands through
    vertices whose sink is already full, so the work is local to the region
    that the source mass has flooded.
    """
    if h < 1:
        raise FlowError("h must be positive")
    c = p.capacity
    if c < 0 or c > MAX_MAGNITUDE:
        raise FlowError(f"capacity {c} out of range")
    if p.source.norm > MAX_MAGNITUDE or p.sink.norm > MAX_MAGNITUDE:
        raise FlowError("source or sink mass out of range")
    g = p.graph
    sink = p.sink
    f = Preflow(p)
    if c == 0:
        return f
    flow = f.flow
    net = f.net_inflow
    src = p.source
    out_edges, in_edges, head, tail = g.out_edges, g.in_edges, g.head, g.tail

    while f.rounds < h:
        level = {v: 0 for v, x in p.source.items() if f.excess_at(v) > 0}
        if not level:
            break
        seen_edges: set[int] = set()
        frontier = list(level)
        targets: set[int] = set()
        depth = 0
        while frontier and not targets and depth < h:
            depth += 1
            nxt = []
            for u in frontier:
                for e in out_edges(u):
                    seen_edges.add(e)
                    w = head(e)
                    if w not in level and w != u and flow.get(e, 0) < c:
                        level[w] = depth
                        nxt.append(w)
                        if net.get(w, 0) + src[w] < sink[w]:
                            targets.add(w)
                for e in in_edges(u):
                    seen_edges.add(e)
                    w = tail(e)
                    if w not in level and w != u and flow.get(e, 0) > 0:
                        level[w] = depth
                        nxt.append(w)
                        if net.get(w, 0) + src[w] < sink[w]:
                            targets.add(w)
            # unsaturated vertices absorb; only saturated ones keep expanding
            frontier = [w for w in nxt if w not in targets]
        f.visited.append(len(seen_edges) + sum(1 for v in level if level[v] == 0))
        if not targets:
            break
        f.rounds += 1
        _blocking_round(f, level, depth, targets)
    return f


def _blocking_round(f: Preflow, level: dict, top: int, targets: set) -> None:
    p = f.problem
    g = p.graph
    c = p.capacity
    flow = f.flow
    arcs: dict[int, list] = {}
    ptr: dict[int, int] = {}
    dead: set[int] = set()

    out_edges, in_edges, head, tail = g.out_edges, g.in_edges, g.head, g.tail

    def admissible(u):
        lu = level[u] + 1
        out = []
        for e in out_edges(u):
            w = head(e)
            if level.get(w) == lu and w != u:
                out.append((e, u, w, True))
        for e in in_edges(u):
            w = tail(e)
            if level.get(w) == lu and w != u:
                out.append((e, w, u, False))
        return out

    def residual(arc):
        e, _, _, forward = arc
        return c - flow.get(e, 0) if forward else flow.get(e, 0)

    sources = sorted(v for v, d in level.items() if d == 0)
    for s in sources:
        while f.excess_at(s) > 0 and s not in dead:
            path = []
            u = s
            while True:
                if u in targets:
                    break
                if u not in arcs:
                    arcs[u] = admissible(u)
                    ptr[u] = 0
                lst = arcs[u]
                i = ptr[u]
                while i < len(lst):
                    arc = lst[i]
                    nxt = arc[2] if arc[3] else arc[1]
                    if nxt not in dead and residual(arc) > 0:
                        break
                    i += 1
                ptr[u] = i
                if i == len(lst):
                    dead.add(u)
                    if not path:
                        break
                    u = path.pop()[0]
                    continue
                path.append((u, lst[i]))
                u = lst[i][2] if lst[i][3] else lst[i][1]
            if u not in targets:
                break
            amount = min(f.excess_at(s), p.sink[u] - f.available(u))
            for _, arc in path:
                amount = min(amount, residual(arc))
            for _, (e, t, hd, forward) in path:
                if forward:
                    _push(f, e, t, hd, amount)
                else:
                    _push(f, e, t, hd, -amount)
            if f.available(u) >= p.sink[u]:
                targets.discard(u)
                dead.add(u)


def is_R_flow(f: Preflow, R) -> bool:
    return f.excess_norm <= R


def residual_neighbors(f: Preflow, S) -> set[int]:
    """Vertices outside S at residual distance exactly one from S."""
    g = f.problem.graph
    c = f.problem.capacity
    S = S if isinstance(S, (set, frozenset)) else set(S)
    out = set()
    for u in S:
        for e in g.out_edges(u):
            w = g.head(e)
            if w not in S and f.flow.get(e, 0) < c:
                out.add(w)
        for e in g.in_edges(u):
            w = g.tail(e)
            if w not in S and f.flow.get(e, 0) > 0:
                out.add(w)
    return out


def path_decomposition(f: Preflow) -> list[FlowPath]:
    """Split the flow into unit paths from net emitters to net receivers.

    Circulations are cancelled and dropped.  Identical unit paths share one
    FlowPath object.
    """
    g = f.problem.graph
    rest = {e: x for e, x in f.flow.items() if x}
    for x in rest.values():
        if not isinstance(x, int):
            raise FlowError("flow must be integral")
    start_left = {v: -x for v, x in f.net_inflow.items() if x < 0}
    end_left = {v: x for v, x in f.net_inflow.items() if x > 0}
    cursor: dict[int, list] = {}

    out_edges, head = g.out_edges, g.head

    def next_edge(u):
        lst = cursor.get(u)
        if lst is None:
            lst = cursor[u] = [e for e in out_edges(u) if e in rest]
        while lst and rest.get(lst[-1], 0) == 0:
            lst.pop()
        return lst[-1] if lst else None

    paths: list[FlowPath] = []
    for s in sorted(start_left):
        while start_left[s] > 0:
            verts = [s]
            edges: list[int] = []
            pos = {s: 0}
            u = s
            while not (u != s and end_left.get(u, 0) > 0):
                e = next_edge(u)
                if e is None:
                    raise FlowError(f"flow conservation broken at vertex {u}")
                w = head(e)
                edges.append(e)
                if w in pos:
                    k = pos[w]
                    cycle = edges[k:]
                    low = min(rest[x] for x in cycle)
                    for x in cycle:
                        rest[x] -= low
                    for v in verts[k + 1:]:
                        del pos[v]
                    del verts[k + 1:]
                    del edges[k:]
                    u = w
                    continue
                pos[w] = len(verts)
                verts.append(w)
                u = w
            amount = min(start_left[s], end_left[u], min(rest[e] for e in edges))
            for e in edges:
                rest[e] -= amount
            start_left[s] -= amount
            end_left[u] -= amount
            fp = FlowPath(tuple(edges), s, u)
            paths.extend([fp] * amount)
    return paths
