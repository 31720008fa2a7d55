"""Applications built on the decomposition: undirected and boundary-linked
decompositions, the expander hierarchy with connectivity queries, and an
SCC view for directed graphs.

Undirected graphs are directed graphs whose edges come in anti-parallel
pairs; a self-loop is its own partner.
"""
from __future__ import annotations

import hashlib
import json
from collections import Counter, deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil

from . import oracle
from .decomp import DecompositionError, DecompositionState, ParameterRegimeError
from .graph import DeleteEdge, DynGraph, GraphError, InsertSelfLoop, SplitVertex
from .validate import induced


class BudgetError(ParameterRegimeError):
    pass


def undirected_graph(n: int, pairs) -> tuple[DynGraph, dict]:
    """Edge i of ``pairs`` becomes ids 2i (u->v) and 2i+1 (v->u)."""
    g = DynGraph(n)
    partner = {}
    for u, v in pairs:
        a = g.add_edge(u, v)
        b = g.add_edge(v, u)
        partner[a], partner[b] = b, a
    return g, partner


class UndirectedAdapter:
    """Drives a DecompositionState with paired updates and keeps R closed
    under the pairing."""

    def __init__(self, g: DynGraph, partner: dict, phi, lmax: int = 1, psi_cmg=None, seed: int = 0, **kw):
        self.partner = dict(partner)
        for e in g.edges():
            p = self.partner.setdefault(e, e) if g.is_loop(e) else self.partner.get(e)
            if p is None or self.partner.get(p) != e or g.endpoints(p) != g.endpoints(e)[::-1]:
                raise GraphError(f"edge {e} has no anti-parallel partner")
        self._closed = 0
        self.state = DecompositionState(g, phi, lmax, psi_cmg, seed, **kw)
        self.state.reopen_stage()
        self._stabilize()
        self.state.finish_stage()

    # -- stage control --------------------------------------------------------

    @property
    def graph(self) -> DynGraph:
        return self.state.graph

    def begin(self):
        return self.state.begin_stage()

    def finish(self):
        self._stabilize()
        return self.state.finish_stage()

    def _stabilize(self) -> None:
        self.state.settle()
        self.close_R()

    def close_R(self) -> int:
        added = 0
        R = self.state.R
        while self._closed < len(R):
            e = R[self._closed].edge
            self._closed += 1
            p = self.partner.get(e, e)
            if p != e and self.state.record_extra(p):
                added += 1
        return added

    # -- primitive updates (inside an open stage) ------------------------------

    def delete(self, e: int) -> None:
        p = self.partner.get(e)
        if p is None or not self.graph.has_edge(e):
            raise GraphError(f"stale edge {e}")
        self.state.apply_update(DeleteEdge(e))
        if p != e:
            self.state.apply_update(DeleteEdge(p))

    def insert_loop(self, v: int) -> int:
        e = self.state.apply_update(InsertSelfLoop(v))
        self.partner[e] = e
        return e

    def split(self, v: int, moved) -> int:
        closed = set(moved)
        closed |= {self.partner[e] for e in moved}
        return self.state.apply_update(SplitVertex(v, frozenset(closed)))

    def pair_loops(self, loop_a: int, loop_b: int) -> None:
        self.state.convert_loops_to_pair(loop_a, loop_b)
        self.partner[loop_a], self.partner[loop_b] = loop_b, loop_a

    # -- one-stage conveniences -------------------------------------------------

    def undirected_delete(self, e: int):
        self.begin()
        self.delete(e)
        return self.finish()

    def undirected_loop(self, v: int) -> int:
        self.begin()
        e = self.insert_loop(v)
        self.finish()
        return e

    def undirected_split(self, v: int, moved) -> int:
        self.begin()
        w = self.split(v, moved)
        self.finish()
        return w

    def closure_ok(self) -> bool:
        return all(self.partner.get(r.edge, r.edge) in self.state.R_set for r in self.state.R)


class BoundaryLinkedState(UndirectedAdapter):
    """Undirected decomposition of H = G plus regularizing self-loops.

    After every stage each vertex u carries at least ceil(|R_u| / phi)
    regularizing loops, where |R_u| counts live cut edges at u.
    """

    def __init__(self, g: DynGraph, partner: dict, phi, lmax: int = 1, psi_cmg=None, seed: int = 0,
                 *, slack: int = 2, hard_cap: int = 4, **kw):
        self.regularizing: set[int] = set()
        self.loops_at: Counter = Counter()
        self.slack = slack
        self.m0 = max(1, sum(1 for e in g.edges() if partner.get(e, e) >= e))
        self.budget = 2 * self.m0 * slack
        self.hard_cap = hard_cap
        super().__init__(g, partner, phi, lmax, psi_cmg, seed, **kw)

    @property
    def loops_inserted(self) -> int:
        return len(self.regularizing)

    @property
    def within_budget(self) -> bool:
        return self.loops_inserted <= self.budget

    def cut_degree(self, u: int) -> int:
        g, Rs = self.graph, self.state.R_set
        return sum(1 for e in g.out_edges(u) if e in Rs and g.head(e) != u)

    def _stabilize(self) -> None:
        phi = Fraction(self.state.phi)
        while True:
            self.state.settle()
            self.close_R()
            need = {}
            for u in self.graph.vertices():
                want = ceil(self.cut_degree(u) / phi)
                if want > self.loops_at[u]:
                    need[u] = want - self.loops_at[u]
            if not need:
                return
            if self.loops_inserted + sum(need.values()) > self.hard_cap * self.budget:
                raise BudgetError(f"regularizing loops would exceed {self.hard_cap} times the budget of {self.budget}")
            for u in sorted(need):
                for _ in range(need[u]):
                    e = self.insert_loop(u)
                    self.regularizing.add(e)
                    self.loops_at[u] += 1

    def split(self, v: int, moved) -> int:
        if any(e in self.regularizing for e in moved):
            raise GraphError("regularizing loops cannot be moved by a split")
        return super().split(v, moved)

    def delete(self, e: int) -> None:
        if e in self.regularizing:
            raise GraphError("regularizing loops cannot be deleted")
        super().delete(e)

    def base_edges(self) -> list[int]:
        """Live edges of G, i.e. of H without the regularizing loops."""
        return [e for e in self.graph.edges() if e not in self.regularizing]

    def boundary_linked_check(self, cid: int, certified=None, *, max_vertices: int = 16):
        """Enumerate G[X] with ceil(boundary(v) / phi) loops per vertex for sparse cuts.

        Returns the offending CutReport, or None when the cluster certifies.
        """
        s = self.state
        X = set(s.clusters[cid].members)
        phi = Fraction(s.phi)
        certified = s.schedule.psi[0] ** 2 * phi if certified is None else Fraction(certified)
        g = DynGraph()
        for v in sorted(X):
            g.add_vertex(v)
        for e in sorted(self.base_edges()):
            t, h = self.graph.endpoints(e)
            if t in X and h in X:
                g.add_edge(t, h)
        for v in sorted(X):
            out = sum(1 for e in self.graph.out_edges(v)
                      if e not in self.regularizing and self.graph.head(e) not in X)
            for _ in range(ceil(out / phi)):
                g.add_edge(v, v)
        if g.num_vertices < 2:
            return None
        return oracle.find_sparse_cut(g, certified, max_vertices=max_vertices)


# -- expander hierarchy --------------------------------------------------------------

@dataclass
class Level:
    bl: BoundaryLinkedState
    # cluster id -> vertex of the next level
    cid2v: dict = field(default_factory=dict)
    # inter-cluster edge -> its image one level up, and back
    up: dict = field(default_factory=dict)
    down: dict = field(default_factory=dict)
    cuts_seen: int = 0


@dataclass
class Parked:
    """An inserted edge kept outside the decompositions until a rebuild absorbs it."""
    tail: int
    head: int
    real_level: int | None = None
    key: int | None = None


class HierarchyState:
    """Tower of boundary-linked decompositions: level i+1 is level i with every
    cluster contracted to one vertex and intra-cluster edges dropped.

    Vertex ids of the input graph and public edge ids are stable.  Inserted
    edges are parked, not decomposed, until a level's cut edges plus parked
    edges exceed ``factor**i * m_ref``, which rebuilds that level and those above.
    """

    def __init__(self, n: int, pairs, phi, lmax: int = 1, psi_cmg=None, seed: int = 0, *,
                 factor=Fraction(1, 2), slack: int = 2, max_levels: int = 64):
        self.phi = Fraction(phi)
        self.lmax = lmax
        self.psi_cmg = psi_cmg
        self.seed = seed
        self.factor = Fraction(factor)
        self.slack = slack
        self.max_levels = max_levels
        self.stage = 0
        self.rebuilds = 0
        self.loops_total = 0
        self.budget_total = 0
        self.partner: dict[int, int] = {}
        self.ends: dict[int, tuple[int, int]] = {}
        self.parked: dict[int, Parked] = {}
        self.hid2key: dict[int, int] = {}
        self.key2hid: dict[int, int] = {}
        self._next_hid = 0
        self.n_vertices = n
        for u, v in pairs:
            self._new_pair(u, v)
        self.levels: list[Level] = []
        self._rebuild_from(0)

    # -- ids -----------------------------------------------------------------

    def _new_pair(self, u, v) -> tuple[int, int]:
        a, b = self._next_hid, self._next_hid + 1
        self._next_hid += 2
        self.ends[a], self.ends[b] = (u, v), (v, u)
        self.partner[a], self.partner[b] = b, a
        return a, b

    def vertices(self) -> list[int]:
        return sorted(self.levels[0].bl.graph.vertices())

    def edges(self) -> dict[int, tuple[int, int]]:
        return dict(self.ends)

    # -- images ---------------------------------------------------------------

    def image(self, x: int, level: int) -> int:
        for j in range(level):
            lv = self.levels[j]
            x = lv.cid2v[lv.bl.state.cluster_of[x]]
        return x

    def top_cluster(self, x: int) -> int:
        k = len(self.levels) - 1
        return self.levels[k].bl.state.cluster_of[self.image(x, k)]

    def connected(self, u: int, v: int) -> bool:
        for x in (u, v):
            if not self.levels[0].bl.graph.has_vertex(x):
                raise GraphError(f"unknown vertex {x}")
        return u == v or self.top_cluster(u) == self.top_cluster(v)

    def bfs_connected(self, u: int, v: int) -> bool:
        adj: dict[int, list] = {}
        for a, b in self.ends.values():
            adj.setdefault(a, []).append(b)
        seen, q = {u}, deque([u])
        while q:
            x = q.popleft()
            for y in adj.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    q.append(y)
        return v in seen

    def pending_crossings(self) -> int:
        """Parked edges whose ends lie in different top clusters."""
        return sum(1 for h, p in self.parked.items()
                   if h < self.partner[h] and self.top_cluster(p.tail) != self.top_cluster(p.head))

    # -- building --------------------------------------------------------------

    def _make_bl(self, g, partner) -> BoundaryLinkedState:
        bl = BoundaryLinkedState(g, partner, self.phi, self.lmax, self.psi_cmg,
                                 self.seed + len(self.levels), slack=self.slack)
        bl.state.enforce_split_degree = False
        self.budget_total += bl.budget
        return bl

    def _rebuild_from(self, i: int) -> None:
        """Restart the decompositions of levels i and above."""
        for lv in self.levels[i:]:
            self.loops_total += lv.bl.loops_inserted
        del self.levels[i:]
        if i == 0:
            g = DynGraph()
            for v in range(self.n_vertices):
                g.add_vertex(v)
            partner, self.hid2key, self.key2hid = {}, {}, {}
            for h in sorted(self.ends):
                if h in self.hid2key:
                    continue
                p = self.partner[h]
                t, hd = self.ends[h]
                a = g.add_edge(t, hd)
                self.hid2key[h], self.key2hid[a] = a, h
                if p == h:
                    partner[a] = a
                else:
                    b = g.add_edge(hd, t)
                    self.hid2key[p], self.key2hid[b] = b, p
                    partner[a], partner[b] = b, a
            self.parked.clear()
            self.levels.append(Level(self._make_bl(g, partner)))
        else:
            self.levels[i - 1].up.clear()
            for p in self.parked.values():
                if p.real_level is not None and p.real_level >= i:
                    p.real_level = p.key = None
        self.rebuilds += 1
        self._grow()

    def _crossing_parked(self, i: int) -> list[int]:
        """Parked edges (one id per pair) not yet absorbed at or below level i whose
        ends lie in different level-i clusters."""
        co = self.levels[i].bl.state.cluster_of
        out = []
        for h in sorted(self.parked):
            p = self.parked[h]
            if h > self.partner[h] or (p.real_level is not None and p.real_level <= i):
                continue
            if co[self.image(p.tail, i)] != co[self.image(p.head, i)]:
                out.append(h)
        return out

    def _grow(self) -> None:
        """Add contracted levels until the top one has no inter-cluster edges,
        counting parked edges that still cross there."""
        while True:
            top = self.levels[-1]
            co = top.bl.state.cluster_of
            g = top.bl.graph
            real = [k for k in sorted(top.bl.base_edges()) if co[g.tail(k)] != co[g.head(k)]]
            parked = self._crossing_parked(len(self.levels) - 1)
            if not real and not parked:
                return
            if len(self.levels) >= self.max_levels:
                raise DecompositionError("hierarchy exceeded its level cap")
            if not parked and len(top.bl.state.clusters) == g.num_vertices:
                # every cluster is a single vertex, so contraction would repeat this level
                raise ParameterRegimeError(
                    f"level {len(self.levels) - 1} split into singletons and cannot contract; "
                    "phi is too large for the regularizing loops")
            top.cid2v = {cid: min(X.members) for cid, X in top.bl.state.clusters.items()}
            top.up.clear()
            i = len(self.levels)
            g2 = DynGraph()
            for v in sorted(top.cid2v.values()):
                g2.add_vertex(v)
            partner, down = {}, {}
            done = set()
            for k in real:
                if k in done:
                    continue
                kp = top.bl.partner[k]
                t, h = co[g.tail(k)], co[g.head(k)]
                a = g2.add_edge(top.cid2v[t], top.cid2v[h])
                b = g2.add_edge(top.cid2v[h], top.cid2v[t])
                partner[a], partner[b] = b, a
                top.up[k], top.up[kp] = a, b
                down[a], down[b] = ("edge", k), ("edge", kp)
                done |= {k, kp}
            for hid in parked:
                hp = self.partner[hid]
                pa = self.parked[hid]
                ta, tb = self.image(pa.tail, i), self.image(pa.head, i)
                a = g2.add_edge(ta, tb)
                b = g2.add_edge(tb, ta)
                partner[a], partner[b] = b, a
                down[a], down[b] = ("parked", hid), ("parked", hp)
                pa.real_level, pa.key = i, a
                self.parked[hp].real_level, self.parked[hp].key = i, b
            lv = Level(self._make_bl(g2, partner))
            lv.down = down
            lv.cuts_seen = 0
            top.cuts_seen = len(top.bl.state.cut_log)
            self.levels.append(lv)

    # -- updates ---------------------------------------------------------------

    def _lower_ends(self, i: int, key: int) -> tuple[int, int]:
        """Level-(i-1) endpoints of a level-i edge."""
        src = self.levels[i].down[key]
        if src[0] == "edge":
            return self.levels[i - 1].bl.graph.endpoints(src[1])
        p = self.parked[src[1]]
        return self.image(p.tail, i - 1), self.image(p.head, i - 1)

    def _propagate(self, start: int, deletions=()) -> None:
        """Apply deletions at level ``start`` and carry deletions and
        refinements upward level by level."""
        pending = sorted(deletions)
        for i in range(start, len(self.levels)):
            lv = self.levels[i]
            bl = lv.bl
            refine = []
            if i > 0:
                below = self.levels[i - 1]
                log = below.bl.state.cut_log
                refine = log[below.cuts_seen:]
                below.cuts_seen = len(log)
            if not pending and not refine:
                continue
            bl.begin()
            nxt = set()
            for k in pending:
                if not bl.graph.has_edge(k):
                    continue
                for x in {k, bl.partner[k]}:
                    if x in lv.up:
                        nxt.add(lv.up.pop(x))
                    lv.down.pop(x, None)
                bl.delete(k)
            for ev in refine:
                self._refine(i, ev)
            bl.finish()
            pending = sorted(nxt)
        top = self.levels[-1]
        top.cuts_seen = len(top.bl.state.cut_log)
        self._grow()

    def _refine(self, i: int, ev) -> None:
        """Materialize a level-(i-1) cluster split as a split of its vertex at level i.

        Loops are inserted at the vertex, half of them move with the split,
        and each moved loop is paired with a remaining one to become the image
        of one crossing edge pair.
        """
        below = self.levels[i - 1]
        bl = self.levels[i].bl
        lv = self.levels[i]
        x = below.cid2v[ev.parent]
        S = set(ev.side)
        g = bl.graph
        ours, theirs = [], []
        for k in sorted(set(g.out_edges(x)) | set(g.in_edges(x))):
            if k in bl.regularizing:
                continue
            t, h = self._lower_ends(i, k)
            (ours if (t in S or h in S) else theirs).append(k)
        bg = below.bl.graph
        pairs = []
        crossing = set(ev.crossing)
        for e in sorted(crossing):
            p = below.bl.partner[e]
            if e < p or p not in crossing:
                pairs.append((e, p) if bg.tail(e) in S else (p, e))
        c = len(pairs)
        loops = [bl.insert_loop(x) for _ in range(2 * c)]
        move_S = len(ours) <= len(theirs)
        x2 = bl.split(x, (ours if move_S else theirs) + loops[:c])
        if move_S:
            below.cid2v[ev.child] = x2
        else:
            below.cid2v[ev.child] = x
            below.cid2v[ev.parent] = x2
        for j, (a, b) in enumerate(pairs):
            at_new, at_old = loops[j], loops[c + j]
            # the first loop of a pair sits at the image of S and becomes S -> rest
            la, lb = (at_new, at_old) if move_S else (at_old, at_new)
            bl.pair_loops(la, lb)
            below.up[a], below.up[b] = la, lb
            lv.down[la], lv.down[lb] = ("edge", a), ("edge", b)

    def cut_load(self, i: int) -> int:
        """Cut edge pairs of level i plus parked pairs still crossing there."""
        return len(self.levels[i].bl.state.R) // 2 + len(self._crossing_parked(i))

    def _check_rebuild(self) -> None:
        m_ref = max(1, len(self.ends) // 2)
        for i in range(len(self.levels)):
            if self.cut_load(i) > max(1, self.factor ** i * m_ref):
                self._rebuild_from(i)
                return

    def _finish_update(self) -> None:
        self.stage += 1
        self._check_rebuild()

    def delete(self, hid: int) -> None:
        if hid not in self.ends:
            raise GraphError(f"stale edge {hid}")
        pair = {hid, self.partner[hid]}
        if hid in self.parked:
            p = self.parked[hid]
            level, key = p.real_level, p.key
            for h in pair:
                del self.parked[h]
                del self.ends[h]
            if level is not None:
                self._propagate(level, [key])
        else:
            key = self.hid2key[hid]
            for h in pair:
                del self.ends[h]
            self._propagate(0, [key])
        self._finish_update()

    def insert_loop(self, v: int) -> int:
        hid = self._next_hid
        self._next_hid += 1
        self.ends[hid] = (v, v)
        self.partner[hid] = hid
        lv = self.levels[0]
        lv.bl.begin()
        k = lv.bl.insert_loop(v)
        lv.bl.finish()
        self.hid2key[hid], self.key2hid[k] = k, hid
        self._propagate(1, [])
        self._finish_update()
        return hid

    def insert(self, u: int, v: int) -> tuple[int, int]:
        if u == v:
            raise GraphError("use a loop insertion for u == v")
        for x in (u, v):
            if not self.levels[0].bl.graph.has_vertex(x):
                raise GraphError(f"unknown vertex {x}")
        a, b = self._new_pair(u, v)
        self.parked[a] = Parked(u, v)
        self.parked[b] = Parked(v, u)
        self._grow()
        self._finish_update()
        return a, b

    def split(self, v: int, moved) -> int:
        moved = set(moved)
        moved |= {self.partner[h] for h in moved}
        for h in moved:
            if h not in self.ends or v not in self.ends[h]:
                raise GraphError(f"edge {h} is not incident to vertex {v}")
        lv = self.levels[0]
        lv.bl.begin()
        real = [self.hid2key[h] for h in sorted(moved) if h not in self.parked]
        v2 = lv.bl.split(v, real)
        lv.bl.finish()
        self.n_vertices = max(self.n_vertices, v2 + 1)
        for h in moved:
            t, hd = self.ends[h]
            self.ends[h] = (v2 if t == v else t, v2 if hd == v else hd)
            if h in self.parked:
                self.parked[h].tail, self.parked[h].head = self.ends[h]
        self._propagate(1, [])
        self._finish_update()
        return v2

    # -- checks ----------------------------------------------------------------

    def edge_decay_ok(self) -> bool:
        for i in range(len(self.levels) - 1):
            if len(self.levels[i + 1].bl.base_edges()) > len(self.levels[i].bl.state.R) + 2 * len(self.parked):
                return False
        return True

    def loops_inserted(self) -> int:
        return self.loops_total + sum(lv.bl.loops_inserted for lv in self.levels)

    def digest(self) -> str:
        h = hashlib.sha256()
        for lv in self.levels:
            h.update(lv.bl.state.digest().encode())
            h.update(json.dumps([sorted(lv.cid2v.items()), sorted(lv.up.items())]).encode())
        h.update(json.dumps(sorted((k, p.tail, p.head, p.real_level) for k, p in self.parked.items())).encode())
        return h.hexdigest()


class SccView:
    """SCCs of the maintained directed graph minus R, read off the partition."""

    def __init__(self, state: DecompositionState):
        self.state = state

    def scc_of(self, v: int) -> int:
        return self.state.query_cluster(v)

    def scc_all(self) -> list[list[int]]:
        return self.state.query_partition()

    def matches_tarjan(self) -> bool:
        return self.scc_all() == oracle.tarjan_scc(self.state.graph, self.state.R_set)


def cluster_is_expander(state: DecompositionState, cid: int, phi_certified, max_vertices: int = 12) -> bool:
    X = state.clusters[cid].members
    return oracle.find_sparse_cut(induced(state.graph, X), phi_certified, max_vertices=max_vertices) is None
