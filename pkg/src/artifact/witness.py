"""Witness graphs embedded into a host graph, and their certification.

A witness is a graph W on the host's vertex ids plus a slack vector r.  Each
W edge is embedded as a path of host edge ids.  The checker verifies the
four properties that make W certify expansion of the host: slack mass,
degree sandwich, cut expansion (by enumeration) and congestion.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .flow import VertexVector
from .graph import DynGraph, GraphError

MAX_CHECK_VERTICES = 16

PASS, FAIL, SKIPPED = "pass", "fail", "skipped"


class WitnessError(GraphError):
    pass


class Embedding:
    """Witness edge -> host path, with the transposed index kept exact."""

    def __init__(self):
        self.forward: dict[int, tuple] = {}
        self.inverse: dict[int, set[int]] = {}

    def add(self, wid: int, path: Iterable[int]) -> None:
        path = tuple(path)
        self.forward[wid] = path
        for e in path:
            self.inverse.setdefault(e, set()).add(wid)

    def remove(self, wid: int) -> tuple:
        path = self.forward.pop(wid)
        for e in path:
            users = self.inverse[e]
            users.discard(wid)
            if not users:
                del self.inverse[e]
        return path

    def users(self, host_edge: int) -> set[int]:
        return self.inverse.get(host_edge, set())

    def congestion(self, host_edge: int) -> int:
        return len(self.inverse.get(host_edge, ()))

    def max_congestion(self) -> int:
        return max((len(s) for s in self.inverse.values()), default=0)

    def rebuilt_inverse(self) -> dict[int, set[int]]:
        inv: dict[int, set[int]] = {}
        for wid, path in self.forward.items():
            for e in path:
                inv.setdefault(e, set()).add(wid)
        return inv

    def copy(self) -> "Embedding":
        out = Embedding()
        out.forward = dict(self.forward)
        out.inverse = {e: set(s) for e, s in self.inverse.items()}
        return out


@dataclass
class WitnessBundle:
    W: DynGraph
    embedding: Embedding
    r: VertexVector
    psi: Fraction
    phi: Fraction

    @classmethod
    def empty(cls, host, psi, phi, r: VertexVector | None = None) -> "WitnessBundle":
        W = DynGraph()
        for v in host.vertices():
            W.add_vertex(v)
        if r is None:
            r = VertexVector((v, host.degree(v)) for v in host.vertices())
        return cls(W, Embedding(), r, Fraction(psi), Fraction(phi))

    @classmethod
    def identity(cls, host, psi, phi) -> "WitnessBundle":
        """W is a copy of the host, each edge embedded as itself."""
        W = DynGraph()
        for v in host.vertices():
            W.add_vertex(v)
        emb = Embedding()
        for e in host.edges():
            wid = W.add_edge(host.tail(e), host.head(e))
            emb.add(wid, (e,))
        return cls(W, emb, VertexVector(), Fraction(psi), Fraction(phi))

    def add_edge(self, u: int, v: int, path: Iterable[int]) -> int:
        wid = self.W.add_edge(u, v)
        self.embedding.add(wid, path)
        return wid

    def remove_edge(self, wid: int) -> tuple[int, int]:
        self.embedding.remove(wid)
        return self.W.delete_edge(wid)

    def copy(self) -> "WitnessBundle":
        return WitnessBundle(self.W.copy(), self.embedding.copy(), self.r.copy(),
                             self.psi, self.phi)

    def reversed(self) -> "WitnessBundle":
        """The same witness for the reversed host: edges flipped, paths reversed."""
        W = DynGraph()
        for v in self.W.vertices():
            W.add_vertex(v)
        emb = Embedding()
        for wid in sorted(self.W.edges()):
            t, h = self.W.endpoints(wid)
            W._link(wid, h, t)
            emb.add(wid, reversed(self.embedding.forward[wid]))
        W._next_edge = self.W._next_edge
        W._next_vertex = self.W._next_vertex
        return WitnessBundle(W, emb, self.r.copy(), self.psi, self.phi)

    def restrict(self, members) -> "WitnessBundle":
        """Induced bundle on ``members``; no kept edge may leave the set."""
        members = set(members)
        W = DynGraph()
        for v in sorted(members):
            W.add_vertex(v)
        emb = Embedding()
        for wid in self.W.edges():
            t, h = self.W.endpoints(wid)
            if t in members and h in members:
                W._link(wid, t, h)
                emb.add(wid, self.embedding.forward[wid])
            elif t in members or h in members:
                raise WitnessError(f"witness edge {wid} crosses the restriction")
        W._next_edge = self.W._next_edge
        return WitnessBundle(W, emb, self.r.restrict(members), self.psi, self.phi)


# -- checking -----------------------------------------------------------------

@dataclass
class WitnessReport:
    norm: str
    degree: str
    expansion: str
    congestion: str
    details: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(s == PASS for s in (self.norm, self.degree, self.expansion, self.congestion))

    def as_dict(self) -> dict:
        return {"norm": self.norm, "degree": self.degree, "expansion": self.expansion,
                "congestion": self.congestion, "details": list(self.details)}


class CutTable:
    """Out/in crossing counts and volumes of every nonempty proper subset."""

    def __init__(self, g, verts):
        self.verts = verts
        n = len(verts)
        idx = {v: i for i, v in enumerate(verts)}
        self.masks = np.arange(1, (1 << n) - 1, dtype=np.int64) if n >= 2 else np.zeros(0, dtype=np.int64)
        self.bits = [((self.masks >> i) & 1) for i in range(n)]
        self.out = np.zeros_like(self.masks)
        self.inc = np.zeros_like(self.masks)
        self.vol = np.zeros_like(self.masks)
        deg = [0] * n
        pairs: dict = {}
        for e in g.edges():
            a, b = idx[g.tail(e)], idx[g.head(e)]
            deg[a] += 1
            deg[b] += 1
            if a != b:
                pairs[(a, b)] = pairs.get((a, b), 0) + 1
        for (a, b), c in pairs.items():
            crossing = c * (self.bits[a] & (1 - self.bits[b]))
            self.out += crossing
            self.inc += c * (self.bits[b] & (1 - self.bits[a]))
        for i, d in enumerate(deg):
            if d:
                self.vol += d * self.bits[i]
        self.total_vol = sum(deg)

    def weigh(self, vec) -> np.ndarray:
        acc = np.zeros_like(self.masks)
        for i, v in enumerate(self.verts):
            x = vec[v]
            if x:
                acc += x * self.bits[i]
        return acc

    def side(self, k: int) -> tuple:
        m = int(self.masks[k])
        return tuple(v for i, v in enumerate(self.verts) if m >> i & 1)


def scaled_lt(p: int, a: np.ndarray, q: int, b: np.ndarray) -> np.ndarray:
    """Elementwise p*a < q*b without int64 overflow."""
    top = max(int(a.max(initial=0)), int(b.max(initial=0)), 1)
    if max(p, q) * top < (1 << 62):
        return p * a < q * b
    return np.array([p * int(x) < q * int(y) for x, y in zip(a, b)], dtype=bool)


def violating_cut(W, r, gamma, psi: Fraction, verts, *, reverse=False):
    """Every S with gamma(S) <= gamma(complement) must have
    cross(S) + r(S) >= psi * (vol_W(S) + r(S)).  Returns a violating side or None."""
    if len(verts) < 2:
        return None
    T = CutTable(W, verts)
    cross = T.inc if reverse else T.out
    rs = T.weigh(r)
    gs = T.weigh(gamma)
    g_total = sum(gamma[v] for v in verts)
    p, q = psi.numerator, psi.denominator
    bad = (2 * gs <= g_total) & scaled_lt(q, cross + rs, p, T.vol + rs)
    if bad.any():
        return T.side(int(np.nonzero(bad)[0][0]))
    return None


def check_witness(b: WitnessBundle, host, gamma: VertexVector, R, direction: str = "out",
                  *, max_vertices: int = MAX_CHECK_VERTICES) -> WitnessReport:
    """Check the four witness properties.

    ``R`` is either a number (``‖r‖₁ <= R``) or a predicate on the norm.
    Cut expansion is checked by enumeration and reported as skipped above
    ``max_vertices``.
    """
    if direction not in ("out", "both"):
        raise ValueError(f"unknown direction {direction!r}")
    details = []
    verts = sorted(host.vertices())
    if sorted(b.W.vertices()) != verts:
        raise WitnessError("witness and host vertex sets differ")
    psi, phi = Fraction(b.psi), Fraction(b.phi)

    norm = b.r.norm
    ok = R(norm) if callable(R) else norm <= R
    norm_s = PASS if ok else FAIL
    if not ok:
        details.append(f"norm {norm} exceeds bound")

    p, q = psi.numerator, psi.denominator
    degree_s = PASS
    for v in verts:
        d = host.degree(v)
        x = b.W.degree(v) + b.r[v]
        if x < d or p * x > q * d:
            degree_s = FAIL
            details.append(f"degree sandwich fails at {v}: {x} vs host {d}")
            break

    # vertices with no witness degree, slack or weight cannot change any cut
    live = [v for v in verts if b.W.degree(v) or b.r[v] or gamma[v]]
    if len(live) > max_vertices:
        exp_s = SKIPPED
    else:
        exp_s = PASS
        for rev in ((False, True) if direction == "both" else (False,)):
            side = violating_cut(b.W, b.r, gamma, psi, live, reverse=rev)
            if side is not None:
                exp_s = FAIL
                details.append(f"{'in' if rev else 'out'}-cut {side} is too sparse")
                break

    cong = b.embedding.max_congestion()
    cong_s = PASS if cong * psi * phi <= 1 else FAIL
    if cong_s == FAIL:
        details.append(f"congestion {cong} exceeds 1/(psi*phi)")
    else:
        ends = b.W.endpoints
        for wid, path in b.embedding.forward.items():
            if not _is_path(host, path, *ends(wid)):
                cong_s = FAIL
                details.append(f"witness edge {wid} is not embedded as a path between its ends")
                break
    return WitnessReport(norm_s, degree_s, exp_s, cong_s, details)


def _is_path(host, path, u, v) -> bool:
    at = u
    ends = host.endpoints
    for e in path:
        try:
            t, at2 = ends(e)
        except GraphError:
            return False
        if t != at:
            return False
        at = at2
    return at == v


def implied_expansion(b: WitnessBundle) -> Fraction:
    if b.r.norm:
        raise WitnessError("expansion is only implied by a witness with r = 0")
    return Fraction(b.psi) ** 2 * Fraction(b.phi)


# -- cascades -----------------------------------------------------------------

def delete_host_edge_cascade(b: WitnessBundle, e_host: int) -> list[tuple[int, int]]:
    """Drop every witness edge routed through ``e_host``, charging its ends."""
    removed = []
    for wid in sorted(b.embedding.users(e_host)):
        a, c = b.remove_edge(wid)
        b.r.add(a, 1)
        b.r.add(c, 1)
        removed.append((a, c))
    return removed


def split_host_vertex_cascade(b: WitnessBundle, host, v: int, v_new: int) -> list[tuple[int, int]]:
    """React to ``v_new`` having been split off ``v`` in the host.

    Witness edges whose path touches a moved host edge are first re-ended at
    their path's current endpoints, the new vertex's witness degree is moved
    into r, and then those edges are removed.
    """
    if not host.has_vertex(v_new):
        raise WitnessError(f"unknown vertex {v_new}")
    if not b.W.has_vertex(v_new):
        b.W.add_vertex(v_new)
    touched = set()
    for e in list(host.out_edges(v_new)) + list(host.in_edges(v_new)):
        touched |= b.embedding.users(e)
    touched = sorted(touched)
    for wid in touched:
        path = b.embedding.forward[wid]
        b.W.reattach(wid, host.tail(path[0]), host.head(path[-1]))
    moved_deg = b.W.degree(v_new)
    b.r.add(v, moved_deg)
    b.r[v_new] = moved_deg
    removed = []
    for wid in touched:
        a, c = b.remove_edge(wid)
        b.r.add(a, 1)
        b.r.add(c, 1)
        removed.append((a, c))
    return removed


def cap_degree_overflow(b: WitnessBundle, host, candidates=None) -> set[int]:
    """Isolate every vertex whose witness degree plus slack exceeds deg/psi."""
    p, q = b.psi.numerator, b.psi.denominator
    work = sorted(b.W.vertices() if candidates is None else set(candidates))
    pending = set(work)
    isolated = set()
    while work:
        v = work.pop()
        pending.discard(v)
        if not b.W.has_vertex(v):
            continue
        d = host.degree(v)
        if p * (b.W.degree(v) + b.r[v]) <= q * d:
            continue
        for wid in list(b.W.out_edges(v)) + list(b.W.in_edges(v)):
            if not b.W.has_edge(wid):
                continue
            t, h = b.remove_edge(wid)
            other = h if t == v else t
            if other != v:
                b.r.add(other, 1)
                if other not in pending:
                    pending.add(other)
                    work.append(other)
        b.r[v] = (q * d) // p
        isolated.add(v)
    return isolated


def union_witnesses(b1: WitnessBundle, b2_reversed: WitnessBundle) -> WitnessBundle:
    """Multigraph union of an out-witness and a re-reversed in-witness."""
    if sorted(b1.W.vertices()) != sorted(b2_reversed.W.vertices()):
        raise WitnessError("witness vertex sets differ")
    out = b1.copy()
    for wid in sorted(b2_reversed.W.edges()):
        t, h = b2_reversed.W.endpoints(wid)
        out.add_edge(h, t, reversed(b2_reversed.embedding.forward[wid]))
    out.r = b1.r + b2_reversed.r
    return out


def dump_text(b: WitnessBundle) -> str:
    lines = []
    for wid in sorted(b.W.edges()):
        t, h = b.W.endpoints(wid)
        path = " ".join(map(str, b.embedding.forward[wid]))
        lines.append(f"{wid} {t} {h} : {path}")
    return "\n".join(lines) + ("\n" if lines else "")
