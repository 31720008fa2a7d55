"""Dynamic expander decomposition maintained under deletions, vertex splits
and self-loop insertions.

Each cluster keeps one witness per level.  Updates damage witnesses and add
slack mass ``r``; when a level's slack crosses its threshold the witness is
rebuilt, from the level above by pruning or from scratch by cut-or-embed at
the top level.  Sparse cuts found along the way split the cluster, and the
smaller crossing edge set is appended to the monotone record list ``R``.
"""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .cutmatch import Witness, cut_or_embed
from .exact import Bound
from .flow import VertexVector
from .graph import ClusterView, DeleteEdge, DynGraph, GraphError, InsertSelfLoop, SplitVertex
from .prune import Cut, RepairedPair, prune_or_repair_both
from .witness import (WitnessBundle, cap_degree_overflow, check_witness, delete_host_edge_cascade,
                      split_host_vertex_cascade, union_witnesses)


class DecompositionError(RuntimeError):
    pass


class ParameterRegimeError(DecompositionError):
    """The run left the regime where the thresholds are known to converge."""


@dataclass(frozen=True)
class LevelSchedule:
    lmax: int
    psi: tuple

    @classmethod
    def build(cls, psi_cmg, lmax: int) -> "LevelSchedule":
        if lmax < 1:
            raise ValueError("lmax must be positive")
        psi = [Fraction(0)] * (lmax + 1)
        psi[lmax] = Fraction(psi_cmg) / 2
        for l in range(lmax - 1, -1, -1):
            psi[l] = psi[l + 1] ** 4 / 144
        return cls(lmax, tuple(psi))

    def slack_bound(self, l: int, m: int) -> Bound:
        """psi_l / 8 * m ** (l / lmax)."""
        return Bound(self.psi[l] / 8, m, l, self.lmax)


def default_psi_cmg(phi) -> Fraction:
    return min(Fraction(1, 8), 2 * Fraction(phi))


def threshold_check(r_norm: int, m_X: int, l: int, schedule: LevelSchedule) -> bool:
    """Exact test of ``8 * r_norm >= psi_l * m_X ** (l / lmax)``.

    Zero slack never counts as a violation, so clusters without edges settle.
    """
    if r_norm <= 0:
        return False
    psi = schedule.psi[l]
    p, q, L = psi.numerator, psi.denominator, schedule.lmax
    return (8 * q * r_norm) ** L >= p ** L * m_X ** l


@dataclass
class ClusterState:
    cid: int
    members: set
    gamma: VertexVector
    levels: list
    edge_count: int


@dataclass(frozen=True)
class RRecord:
    edge: int
    tail: int
    head: int
    stage: int


@dataclass
class CutEvent:
    stage: int
    level: int
    source: str
    parent: int
    child: int
    side: frozenset
    crossing: tuple
    batch: tuple
    volume: int
    r_mass: int
    psi: Fraction
    window_low: Bound | None = None
    window_high: Bound | None = None

    def batch_ok(self, phi) -> bool:
        return len(self.batch) < Fraction(phi) * (self.volume + self.r_mass)

    def window_ok(self) -> bool:
        if self.window_low is None:
            return True
        x = self.volume + self.r_mass
        return self.window_low <= x and x <= self.window_high


@dataclass
class StageMetrics:
    stage: int
    r_size: int = 0
    clusters: int = 0
    embed_calls: int = 0
    prune_calls: list = field(default_factory=list)
    cuts: int = 0
    flow_visited: int = 0
    flow_visited_max: int = 0
    wall_ns: int = 0

    def as_dict(self, timing: bool = False) -> dict:
        d = {"stage": self.stage, "R": self.r_size, "clusters": self.clusters,
             "embed_calls": self.embed_calls, "prune_calls": list(self.prune_calls),
             "cuts": self.cuts, "flow_visited": self.flow_visited,
             "flow_visited_max": self.flow_visited_max}
        if timing:
            d["wall_ns"] = self.wall_ns
        return d


class DecompositionState:
    """Partition, per-level witnesses and the record list R for one graph.

    ``graph`` is the adversarial graph; ``work`` is the maintained copy from
    which every cut-induced deletion has also been removed.  Clusters are
    closed in ``work``: no live edge of ``work`` joins two clusters.
    """

    def __init__(self, g: DynGraph, phi, lmax: int = 1, psi_cmg=None, seed: int = 0,
                 *, max_check_vertices: int = 16):
        phi = Fraction(phi)
        if not 0 < phi < 1:
            raise ValueError("phi must lie in (0, 1)")
        if g.num_vertices == 0:
            raise ValueError("graph must have a vertex")
        self.phi = phi
        # the exhaustive fallback certifies psi = phi, so the top level must not ask for more
        psi_cmg = default_psi_cmg(phi) if psi_cmg is None else Fraction(psi_cmg)
        self.psi_cmg = psi_cmg
        self.schedule = LevelSchedule.build(psi_cmg, lmax)
        self.seed = seed
        self.max_check_vertices = max_check_vertices
        self.graph = g
        self.work = g.copy()
        self.clusters: dict[int, ClusterState] = {}
        self.cluster_of: dict[int, int] = {}
        self.R: list[RRecord] = []
        self.R_set: set[int] = set()
        self.stage = 0
        self.metrics: list[StageMetrics] = []
        self.cut_log: list[CutEvent] = []
        self.split_parent: dict[int, int] = {}
        self._next_cid = 0
        self._embed_counter = 0
        self._dirty: set[int] = set()
        self._current: StageMetrics | None = None
        self._t0 = 0
        self.enforce_split_degree = True

        members = set(g.vertices())
        deg = VertexVector((v, g.degree(v)) for v in members)
        levels = [WitnessBundle.empty(self.work, self.schedule.psi[l], phi, deg.copy())
                  for l in range(lmax + 1)]
        self._add_cluster(members, deg.copy(), levels, g.num_edges)
        self._run_stage(())

    # -- helpers ------------------------------------------------------------

    @property
    def lmax(self) -> int:
        return self.schedule.lmax

    def _add_cluster(self, members, gamma, levels, edge_count) -> ClusterState:
        cid = self._next_cid
        self._next_cid += 1
        X = ClusterState(cid, set(members), gamma, levels, edge_count)
        self.clusters[cid] = X
        for v in members:
            self.cluster_of[v] = cid
        self._dirty.add(cid)
        return X

    def host(self, X: ClusterState) -> ClusterView:
        return ClusterView(self.work, X.members)

    def _record(self, e: int) -> None:
        t, h = self.work.endpoints(e)
        self.R.append(RRecord(e, t, h, self.stage))
        self.R_set.add(e)

    def record_extra(self, e: int) -> bool:
        """Append an edge to R from outside the cut logic (used for partner closure)."""
        if e in self.R_set:
            return False
        if self.graph.has_edge(e):
            t, h = self.graph.endpoints(e)
        else:
            t = h = -1
        self.R.append(RRecord(e, t, h, self.stage))
        self.R_set.add(e)
        return True

    # -- updates ------------------------------------------------------------

    def apply_update(self, u, *, internal: bool = False):
        """Apply one primitive update; returns the new loop id or new vertex id if any."""
        if isinstance(u, DeleteEdge):
            return self._apply_delete(u.edge, internal)
        elif isinstance(u, InsertSelfLoop):
            return self._apply_loop(u.vertex)
        elif isinstance(u, SplitVertex):
            return self._apply_split(u.vertex, u.moved)
        else:
            raise TypeError(f"unknown update {u!r}")

    def _cascade_cap(self, X, host, cand) -> None:
        for b in X.levels:
            cap_degree_overflow(b, host, cand)

    def _apply_delete(self, e: int, internal: bool) -> None:
        if not internal:
            self.graph.delete_edge(e)
        if not self.work.has_edge(e):
            return
        t, h = self.work.endpoints(e)
        if self.cluster_of[t] != self.cluster_of[h]:
            raise DecompositionError(f"live edge {e} joins two clusters")
        X = self.clusters[self.cluster_of[t]]
        self.work.delete_edge(e)
        X.edge_count -= 1
        host = self.host(X)
        for b in X.levels:
            cand = {t, h}
            for a, c in delete_host_edge_cascade(b, e):
                cand.add(a)
                cand.add(c)
            cap_degree_overflow(b, host, cand)
        self._dirty.add(X.cid)

    def _apply_loop(self, v: int) -> int:
        e = self.graph.insert_self_loop(v)
        e2 = self.work.insert_self_loop(v)
        if e != e2:
            raise DecompositionError("edge ids of the maintained graph drifted")
        X = self.clusters[self.cluster_of[v]]
        X.edge_count += 1
        host = self.host(X)
        for b in X.levels:
            b.r.add(v, 2)
            cap_degree_overflow(b, host, {v})
        self._dirty.add(X.cid)
        return e

    def _apply_split(self, v: int, moved) -> int:
        moved = sorted(set(moved))
        v2 = self.graph.split_vertex(v, moved, enforce_degree=self.enforce_split_degree)
        live = [e for e in moved if self.work.has_edge(e)]
        # degrees in the maintained graph can differ, so the split condition is not re-checked there
        self.work.split_vertex(v, live, enforce_degree=False, new_id=v2)
        X = self.clusters[self.cluster_of[v]]
        X.members.add(v2)
        self.cluster_of[v2] = X.cid
        self.split_parent[v2] = v
        X.gamma[v2] = 0
        host = self.host(X)
        d2 = self.work.degree(v2)
        for b in X.levels:
            cand = {v, v2}
            for a, c in split_host_vertex_cascade(b, host, v, v2):
                cand.add(a)
                cand.add(c)
            if b.W.degree(v2) + b.r[v2] < d2:
                b.r[v2] = d2 - b.W.degree(v2)
            cap_degree_overflow(b, host, cand)
        self._dirty.add(X.cid)
        return v2

    def convert_loops_to_pair(self, loop_a: int, loop_b: int) -> None:
        """Turn two loops of one cluster into an anti-parallel pair between their vertices."""
        for g in (self.graph, self.work):
            if not (g.has_edge(loop_a) and g.has_edge(loop_b)):
                raise DecompositionError("loops to pair must be live")
        a, b_ = self.work.tail(loop_a), self.work.tail(loop_b)
        if self.cluster_of[a] != self.cluster_of[b_]:
            raise DecompositionError("paired loops must share a cluster")
        X = self.clusters[self.cluster_of[a]]
        cand = {a, b_}
        for b in X.levels:
            for e in (loop_a, loop_b):
                for x, y in delete_host_edge_cascade(b, e):
                    cand.add(x)
                    cand.add(y)
        self.graph.pair_self_loops(loop_a, loop_b)
        self.work.pair_self_loops(loop_a, loop_b)
        host = self.host(X)
        for b in X.levels:
            cap_degree_overflow(b, host, cand)
        self._dirty.add(X.cid)

    def update(self, events=()) -> StageMetrics:
        """Run one adversarial stage: apply ``events`` then restore all thresholds."""
        if isinstance(events, (DeleteEdge, InsertSelfLoop, SplitVertex)):
            events = (events,)
        self.begin_stage()
        for u in events:
            self.apply_update(u)
        self.settle()
        return self.finish_stage()

    def begin_stage(self) -> StageMetrics:
        """Open a stage for composite updates; close it with ``finish_stage``."""
        if self._current is not None:
            raise DecompositionError("a stage is already open")
        self.stage += 1
        return self._open()

    def _open(self) -> StageMetrics:
        self._current = StageMetrics(self.stage, prune_calls=[0] * self.lmax)
        self._t0 = time.perf_counter_ns()
        return self._current

    def reopen_stage(self) -> StageMetrics:
        """Reopen the last finished stage so a wrapper can append work to it."""
        if self._current is not None:
            raise DecompositionError("a stage is already open")
        m = self.metrics.pop()
        self._current = m
        self._t0 = time.perf_counter_ns() - m.wall_ns
        return m

    def finish_stage(self) -> StageMetrics:
        m = self._current
        if m is None:
            raise DecompositionError("no open stage")
        self.settle()
        m.r_size = len(self.R)
        m.clusters = len(self.clusters)
        m.wall_ns = time.perf_counter_ns() - self._t0
        self.metrics.append(m)
        self._current = None
        return m

    def _run_stage(self, events) -> StageMetrics:
        self._open()
        for u in events:
            self.apply_update(u)
        self.settle()
        return self.finish_stage()

    def settle(self) -> None:
        """The main repair loop; also usable after composite updates within a stage."""
        m = self._current or StageMetrics(self.stage, prune_calls=[0] * self.lmax)
        cap = 4 * max(1, self.work.num_vertices)
        splits = 0
        while True:
            found = self._next_violation()
            if found is None:
                break
            cid, l = found
            X = self.clusters[cid]
            if l == self.lmax:
                outcome = self._embed(X, m)
            else:
                outcome = self._prune(X, l, m)
            if outcome is not None:
                splits += 1
                if splits > cap:
                    raise DecompositionError("cluster split guard tripped; thresholds are not converging")
        self._split_isolated()

    def _next_violation(self):
        for cid in sorted(self._dirty):
            X = self.clusters.get(cid)
            if X is None:
                self._dirty.discard(cid)
                continue
            for l in range(self.lmax, -1, -1):
                if threshold_check(X.levels[l].r.norm, X.edge_count, l, self.schedule):
                    return cid, l
            self._dirty.discard(cid)
        return None

    def _embed(self, X: ClusterState, m: StageMetrics):
        m.embed_calls += 1
        host = self.host(X)
        L = self.lmax
        R = self.schedule.psi[L] / 16 * X.edge_count
        self._embed_counter += 1
        out = cut_or_embed(host, self.phi, R, self.psi_cmg,
                           seed=self.seed * 1_000_003 + self._embed_counter,
                           max_vertices=self.max_check_vertices)
        if isinstance(out, Witness):
            if out.bundle.psi < self.schedule.psi[L]:
                raise DecompositionError("cut-or-embed certified a weaker expansion than the top level needs")
            for l in range(L + 1):
                b = out.bundle.copy()
                b.psi = self.schedule.psi[l]
                X.levels[l] = b
            X.gamma = VertexVector((v, host.degree(v)) for v in X.members)
            return None
        return self._cut(X, out, L, "embed", VertexVector(), None, None, m)

    def _prune(self, X: ClusterState, l: int, m: StageMetrics):
        m.prune_calls[l] += 1
        mX = X.edge_count
        upper = X.levels[l + 1]
        if threshold_check(upper.r.norm, mX, l + 1, self.schedule):
            raise DecompositionError("level above is out of bounds when pruning")
        low = Bound(self.schedule.psi[l] / 32, mX, l, self.lmax)
        high = self.schedule.slack_bound(l + 1, mX)
        psi_up = self.schedule.psi[l + 1]
        host = self.host(X)
        out = prune_or_repair_both(host, upper.r, upper, self.phi, psi_up, low, high)
        stats = [out.forward.stats, out.backward.stats] if isinstance(out, RepairedPair) else [out.stats]
        for s in stats:
            if s is not None and s.visited:
                m.flow_visited += sum(s.visited)
                m.flow_visited_max = max(m.flow_visited_max, max(s.visited))
        if isinstance(out, RepairedPair):
            b = union_witnesses(out.forward.bundle, out.backward.bundle)
            b.psi = self.schedule.psi[l]
            X.levels[l] = b
            return None
        return self._cut(X, out, l, "prune", upper.r, low, high * (8 / psi_up), m)

    def _cut(self, X: ClusterState, cut: Cut, level: int, source: str, r: VertexVector,
             low, high, m: StageMetrics):
        S = set(cut.side)
        if not S or not S < X.members:
            raise DecompositionError("cut side must be a nonempty proper subset of its cluster")
        out, inc = self.work.boundary(S)
        batch = sorted(out) if len(out) <= len(inc) else sorted(inc)
        event = CutEvent(self.stage, level, source, X.cid, -1, frozenset(S),
                         tuple(sorted(out | inc)), tuple(batch), self.work.volume(S),
                         r.total(S), self.schedule.psi[level], low, high)
        if not event.batch_ok(self.phi):
            raise DecompositionError(f"cut batch of {len(batch)} edges is not sparse")
        for e in batch:
            self._record(e)
        for e in event.crossing:
            self.apply_update(DeleteEdge(e), internal=True)
        child = self._split_cluster(X, S)
        event.child = child.cid
        self.cut_log.append(event)
        m.cuts += 1
        return event

    def _split_cluster(self, X: ClusterState, S: set) -> ClusterState:
        rest = X.members - S
        levels_S = [b.restrict(S) for b in X.levels]
        X.levels = [b.restrict(rest) for b in X.levels]
        gamma_S = X.gamma.restrict(S)
        X.gamma = X.gamma.restrict(rest)
        X.members = rest
        X.edge_count = self.work.volume(rest) // 2
        self._dirty.add(X.cid)
        return self._add_cluster(S, gamma_S, levels_S, self.work.volume(S) // 2)

    def _split_isolated(self) -> None:
        """Vertices without edges leave multi-vertex clusters as singletons."""
        for cid in sorted(self.clusters):
            X = self.clusters[cid]
            if len(X.members) < 2:
                continue
            lonely = sorted(v for v in X.members if self.work.degree(v) == 0)
            if len(lonely) == len(X.members):
                lonely = lonely[1:]
            for v in lonely:
                child = self._split_cluster(X, {v})
                self.cut_log.append(CutEvent(self.stage, -1, "isolated", X.cid, child.cid,
                                             frozenset({v}), (), (), 0, 0, Fraction(0)))

    # -- queries ------------------------------------------------------------

    def query_cluster(self, v: int) -> int:
        if v not in self.cluster_of:
            raise GraphError(f"unknown vertex {v}")
        return self.cluster_of[v]

    def members(self, cid: int) -> list[int]:
        return sorted(self.clusters[cid].members)

    def query_partition(self) -> list[list[int]]:
        return sorted(sorted(X.members) for X in self.clusters.values())

    def query_R(self) -> list[RRecord]:
        return list(self.R)

    def check_cluster(self, cid: int, *, max_vertices: int | None = None) -> list:
        """Witness reports for every level against the slack bound of that level."""
        X = self.clusters[cid]
        host = self.host(X)
        mX = X.edge_count
        reports = []
        for l, b in enumerate(X.levels):
            within = lambda n, l=l: not threshold_check(n, mX, l, self.schedule)
            reports.append(check_witness(b, host, X.gamma, within, "both",
                                         max_vertices=max_vertices or self.max_check_vertices))
        return reports

    def digest(self) -> str:
        h = hashlib.sha256()
        state = {
            "partition": self.query_partition(),
            "R": [[r.edge, r.tail, r.head, r.stage] for r in self.R],
            "clusters": [],
        }
        for cid in sorted(self.clusters):
            X = self.clusters[cid]
            levels = []
            for b in X.levels:
                edges = [[w, *b.W.endpoints(w), list(b.embedding.forward[w])] for w in sorted(b.W.edges())]
                levels.append({"edges": edges, "r": sorted(b.r.items())})
            state["clusters"].append({"members": sorted(X.members), "gamma": sorted(X.gamma.items()),
                                      "levels": levels})
        h.update(json.dumps(state, sort_keys=True).encode())
        return h.hexdigest()


def initialize(g: DynGraph, phi, lmax: int = 1, psi_cmg=None, seed: int = 0, **kw) -> DecompositionState:
    return DecompositionState(g, phi, lmax, psi_cmg, seed, **kw)


def apply_update(s: DecompositionState, u) -> None:
    s.apply_update(u)


def update(s: DecompositionState, events=()) -> StageMetrics:
    return s.update(events)
