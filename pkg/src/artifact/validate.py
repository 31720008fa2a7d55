"""Post-stage invariant checks for a DecompositionState.

``fast`` covers the structural invariants; ``full`` adds witness checks at
every level, an enumeration of each small cluster and the DAG condition.
The expansion and DAG checks go through the oracle module only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import oracle
from .graph import DynGraph


@dataclass
class Snapshot:
    stage: int
    partition: list
    records: tuple

    @classmethod
    def take(cls, s) -> "Snapshot":
        return cls(s.stage, s.query_partition(), tuple(s.R))


@dataclass
class Report:
    stage: int
    problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems


def origin(s, v: int, known) -> int | None:
    """Nearest ancestor of v (itself included) that is in ``known``."""
    while v not in known:
        if v not in s.split_parent:
            return None
        v = s.split_parent[v]
    return v


def induced(g, members) -> DynGraph:
    """Standalone copy of g[members] with the original vertex and edge ids."""
    members = set(members)
    h = DynGraph()
    for v in sorted(members):
        h.add_vertex(v)
    for e in sorted(g.edges()):
        t, hd = g.endpoints(e)
        if t in members and hd in members:
            h._link(e, t, hd)
    return h


def check_partition(s) -> list[str]:
    seen = {}
    out = []
    for cid, X in s.clusters.items():
        for v in X.members:
            if v in seen:
                out.append(f"vertex {v} is in clusters {seen[v]} and {cid}")
            seen[v] = cid
            if s.cluster_of.get(v) != cid:
                out.append(f"cluster map disagrees for vertex {v}")
    missing = set(s.graph.vertices()) - set(seen)
    if missing:
        out.append(f"vertices {sorted(missing)} are in no cluster")
    for e in s.work.edges():
        t, h = s.work.endpoints(e)
        if s.cluster_of[t] != s.cluster_of[h]:
            out.append(f"live edge {e} joins clusters")
    for e in s.graph.edges():
        t, h = s.graph.endpoints(e)
        if t != h and s.cluster_of[t] != s.cluster_of[h] and s.work.has_edge(e):
            out.append(f"inter-cluster edge {e} is still maintained")
    return out


def check_monotone(s, prev: Snapshot | None) -> list[str]:
    if prev is None:
        return []
    out = []
    if tuple(s.R[:len(prev.records)]) != prev.records:
        out.append("R is not an extension of the previous record list")
    # every current cluster must sit inside one earlier cluster, up to vertex splits
    where = {}
    for i, part in enumerate(prev.partition):
        for v in part:
            where[v] = i
    for part in s.query_partition():
        homes = {where.get(origin(s, v, where)) for v in part}
        if len(homes) != 1 or None in homes:
            out.append(f"cluster {part} does not refine the previous partition")
    return out


def check_accounting(s, since: int = 0) -> list[str]:
    out = []
    for ev in s.cut_log[since:]:
        if ev.source == "isolated":
            continue
        if not ev.batch_ok(s.phi):
            out.append(f"cut at stage {ev.stage} added {len(ev.batch)} edges, not below phi*(vol+r)")
        if ev.source == "prune" and not ev.window_ok():
            out.append(f"prune cut at stage {ev.stage} has vol+r={ev.volume + ev.r_mass} outside its window")
    return out


def check_witnesses(s, max_vertices: int = 16) -> list[str]:
    out = []
    for cid in sorted(s.clusters):
        if len(s.clusters[cid].members) > max_vertices:
            continue
        for l, rep in enumerate(s.check_cluster(cid, max_vertices=max_vertices)):
            if not rep.passed:
                out.append(f"cluster {cid} level {l}: {'; '.join(rep.details)}")
    return out


def check_expansion(s, max_vertices: int = 12) -> list[str]:
    """Each small cluster must have no cut sparser than psi_0^2 * phi in either direction."""
    out = []
    threshold = s.schedule.psi[0] ** 2 * Fraction(s.phi)
    for X in s.clusters.values():
        if len(X.members) < 2 or len(X.members) > max_vertices:
            continue
        cut = oracle.find_sparse_cut(induced(s.graph, X.members), threshold, max_vertices=max_vertices)
        if cut is not None:
            out.append(f"cluster {sorted(X.members)} has sparse cut {cut.side}")
    return out


def check_dag(s) -> list[str]:
    out = []
    part = s.query_partition()
    if not oracle.condensation_is_dag(s.graph, s.R_set, part):
        out.append("condensation of the graph minus R has a cycle")
    return out


def validate(s, level: str = "fast", prev: Snapshot | None = None, since_cut: int = 0) -> Report:
    if level not in ("none", "fast", "full"):
        raise ValueError(f"unknown verify level {level!r}")
    rep = Report(s.stage)
    if level == "none":
        return rep
    rep.problems += check_partition(s)
    rep.problems += check_monotone(s, prev)
    rep.problems += check_accounting(s, since_cut)
    if level == "full":
        rep.problems += check_witnesses(s)
        rep.problems += check_expansion(s)
        rep.problems += check_dag(s)
    return rep
