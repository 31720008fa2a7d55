"""Directed multigraph with stable edge ids.

Supports the three update kinds the decomposition reacts to (edge deletion,
vertex split, self-loop insertion).  A self-loop contributes 2 to the degree
of its vertex, so ``volume(V) == 2 * num_edges``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class DeleteEdge:
    edge: int


@dataclass(frozen=True)
class InsertSelfLoop:
    vertex: int


@dataclass(frozen=True)
class SplitVertex:
    vertex: int
    moved: frozenset


UpdateEvent = DeleteEdge | InsertSelfLoop | SplitVertex


class DynGraph:
    """Multigraph whose edge ids survive vertex splits and are never reused.

    Adjacency is kept as insertion-ordered dicts so that iteration order is a
    pure function of the update history.
    """

    def __init__(self, n: int = 0):
        self._tail: dict[int, int] = {}
        self._head: dict[int, int] = {}
        self._out: dict[int, dict[int, None]] = {}
        self._in: dict[int, dict[int, None]] = {}
        self._next_edge = 0
        self._next_vertex = 0
        for _ in range(n):
            self.add_vertex()

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "DynGraph":
        g = cls(n)
        for u, v in edges:
            g.add_edge(u, v)
        return g

    # -- construction -----------------------------------------------------

    def add_vertex(self, vid: int | None = None) -> int:
        if vid is None:
            vid = self._next_vertex
        elif vid in self._out:
            raise GraphError(f"vertex {vid} already exists")
        self._out[vid] = {}
        self._in[vid] = {}
        self._next_vertex = max(self._next_vertex, vid + 1)
        return vid

    def add_edge(self, u: int, v: int) -> int:
        self._require_vertex(u)
        self._require_vertex(v)
        e = self._next_edge
        self._next_edge += 1
        self._link(e, u, v)
        return e

    def _link(self, e: int, u: int, v: int) -> None:
        self._tail[e] = u
        self._head[e] = v
        self._out[u][e] = None
        self._in[v][e] = None

    def _unlink(self, e: int) -> tuple[int, int]:
        u = self._tail.pop(e)
        v = self._head.pop(e)
        del self._out[u][e]
        del self._in[v][e]
        return u, v

    # -- updates ----------------------------------------------------------

    def delete_edge(self, e: int) -> tuple[int, int]:
        self._require_edge(e)
        return self._unlink(e)

    def insert_self_loop(self, v: int) -> int:
        return self.add_edge(v, v)

    def split_vertex(self, v: int, moved: Iterable[int], *, enforce_degree: bool = True,
                     new_id: int | None = None) -> int:
        """Move the ``moved`` edges from ``v`` onto a fresh vertex and return it.

        With ``enforce_degree`` the split must leave the new vertex with degree
        at most that of ``v``.  ``new_id`` lets a mirror graph reuse the id
        issued by another graph.
        """
        self._require_vertex(v)
        moved = list(dict.fromkeys(moved))
        for e in moved:
            self._require_edge(e)
            if self._tail[e] != v and self._head[e] != v:
                raise GraphError(f"edge {e} is not incident to vertex {v}")
        if enforce_degree:
            moved_deg = sum((self._tail[e] == v) + (self._head[e] == v) for e in moved)
            if moved_deg > self.degree(v) - moved_deg:
                raise GraphError(f"split of {v} would give the new vertex the larger degree")
        w = self.add_vertex(new_id)
        for e in moved:
            u, x = self._unlink(e)
            self._link(e, w if u == v else u, w if x == v else x)
        return w

    def reattach(self, e: int, u: int, v: int) -> None:
        """Give edge ``e`` new endpoints, keeping its id."""
        self._require_edge(e)
        self._require_vertex(u)
        self._require_vertex(v)
        self._unlink(e)
        self._link(e, u, v)

    def pair_self_loops(self, loop_u: int, loop_v: int) -> tuple[int, int]:
        """Turn a loop at u and a loop at v into the pair u->v, v->u.

        Degrees are unchanged; both edge ids are kept.
        """
        for e in (loop_u, loop_v):
            self._require_edge(e)
            if not self.is_loop(e):
                raise GraphError(f"edge {e} is not a self-loop")
        if loop_u == loop_v:
            raise GraphError("need two distinct loops")
        u = self._tail[loop_u]
        v = self._tail[loop_v]
        self._unlink(loop_u)
        self._unlink(loop_v)
        self._link(loop_u, u, v)
        self._link(loop_v, v, u)
        return loop_u, loop_v

    # -- queries ----------------------------------------------------------

    def _require_vertex(self, v: int) -> None:
        if v not in self._out:
            raise GraphError(f"unknown vertex {v}")

    def _require_edge(self, e: int) -> None:
        if e not in self._tail:
            state = "retired" if 0 <= e < self._next_edge else "unknown"
            raise GraphError(f"{state} edge {e}")

    def has_vertex(self, v: int) -> bool:
        return v in self._out

    def has_edge(self, e: int) -> bool:
        return e in self._tail

    def is_retired(self, e: int) -> bool:
        return 0 <= e < self._next_edge and e not in self._tail

    def tail(self, e: int) -> int:
        self._require_edge(e)
        return self._tail[e]

    def head(self, e: int) -> int:
        self._require_edge(e)
        return self._head[e]

    def endpoints(self, e: int) -> tuple[int, int]:
        self._require_edge(e)
        return self._tail[e], self._head[e]

    def is_loop(self, e: int) -> bool:
        return self._tail[e] == self._head[e]

    def vertices(self) -> list[int]:
        return list(self._out)

    def edges(self) -> list[int]:
        return list(self._tail)

    @property
    def num_vertices(self) -> int:
        return len(self._out)

    @property
    def num_edges(self) -> int:
        return len(self._tail)

    @property
    def next_vertex_id(self) -> int:
        return self._next_vertex

    def out_edges(self, v: int):
        return self._out[v].keys()

    def in_edges(self, v: int):
        return self._in[v].keys()

    def degree(self, v: int) -> int:
        self._require_vertex(v)
        return len(self._out[v]) + len(self._in[v])

    def volume(self, S: Iterable[int]) -> int:
        return sum(self.degree(v) for v in S)

    def boundary(self, S: Iterable[int]) -> tuple[set[int], set[int]]:
        S = set(S)
        out, inc = set(), set()
        for v in S:
            out.update(e for e in self._out[v] if self._head[e] not in S)
            inc.update(e for e in self._in[v] if self._tail[e] not in S)
        return out, inc

    def reversed_view(self) -> "ReversedView":
        return ReversedView(self)

    def copy(self) -> "DynGraph":
        g = DynGraph()
        for v in self._out:
            g.add_vertex(v)
        for e in sorted(self._tail):
            g._link(e, self._tail[e], self._head[e])
        g._next_edge = self._next_edge
        g._next_vertex = self._next_vertex
        return g

    def __repr__(self) -> str:
        return f"DynGraph(n={self.num_vertices}, m={self.num_edges})"


class ReversedView:
    """Zero-copy view of a graph with every edge reversed.

    Mutations are forwarded to the underlying graph with tail and head swapped.
    """

    def __init__(self, base):
        self._base = base

    def reversed_view(self):
        return self._base

    def add_edge(self, u: int, v: int) -> int:
        return self._base.add_edge(v, u)

    def delete_edge(self, e: int) -> tuple[int, int]:
        u, v = self._base.delete_edge(e)
        return v, u

    def insert_self_loop(self, v: int) -> int:
        return self._base.insert_self_loop(v)

    def split_vertex(self, v: int, moved: Iterable[int], **kw) -> int:
        return self._base.split_vertex(v, moved, **kw)

    def tail(self, e: int) -> int:
        return self._base.head(e)

    def head(self, e: int) -> int:
        return self._base.tail(e)

    def endpoints(self, e: int) -> tuple[int, int]:
        u, v = self._base.endpoints(e)
        return v, u

    def out_edges(self, v: int):
        return self._base.in_edges(v)

    def in_edges(self, v: int):
        return self._base.out_edges(v)

    def boundary(self, S: Iterable[int]) -> tuple[set[int], set[int]]:
        out, inc = self._base.boundary(S)
        return inc, out

    def __getattr__(self, name):
        # degree, volume, vertices, edges, has_edge, is_loop, ... are orientation-free
        return getattr(self._base, name)

    def __repr__(self) -> str:
        return f"ReversedView({self._base!r})"


class ClusterView:
    """A graph restricted to a vertex set that no edge leaves.

    The decomposition removes every crossing edge before it splits a cluster,
    so restricting the vertex set is enough to obtain the induced subgraph.
    """

    def __init__(self, base, members: Iterable[int]):
        self._base = base
        self._members = members if isinstance(members, (set, frozenset)) else set(members)

    @property
    def members(self):
        return self._members

    def vertices(self) -> list[int]:
        return sorted(self._members)

    @property
    def num_vertices(self) -> int:
        return len(self._members)

    def edges(self) -> list[int]:
        return [e for v in self.vertices() for e in self._base.out_edges(v)]

    @property
    def num_edges(self) -> int:
        return self.volume(self._members) // 2

    def reversed_view(self) -> "ClusterView":
        return ClusterView(self._base.reversed_view(), self._members)

    def boundary(self, S: Iterable[int]) -> tuple[set[int], set[int]]:
        return self._base.boundary(S)

    def __getattr__(self, name):
        return getattr(self._base, name)
