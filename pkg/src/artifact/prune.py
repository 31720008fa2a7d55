"""One-shot pruning: repair a damaged out-witness with a local flow, or find
a large sparse cut where the flow gets stuck."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .exact import as_bound, ceil_frac, floor_log2
from .flow import FlowProblem, VertexVector, bounded_blocking_flow, path_decomposition, residual_neighbors
from .witness import WitnessBundle


class PruneError(RuntimeError):
    pass


@dataclass
class FlowStats:
    rounds: int = 0
    visited: list = field(default_factory=list)
    capacity: int = 0
    height: int = 0


@dataclass
class Cut:
    side: frozenset
    crossing: int
    volume: int
    r_mass: int
    reversed: bool = False
    stats: FlowStats | None = None


@dataclass
class Repaired:
    bundle: WitnessBundle
    stats: FlowStats | None = None


@dataclass
class RepairedPair:
    forward: Repaired
    backward: Repaired


def flow_parameters(m: int, phi, psi) -> tuple[int, int, int]:
    """(capacity, source multiplier, round count) for a host with m edges."""
    psi, phi = Fraction(psi), Fraction(phi)
    c = ceil_frac(16 / (psi * phi))
    mult = ceil_frac(8 / psi)
    h = ceil_frac(16 * floor_log2(max(m, 2)) / (psi * phi))
    return c, mult, h


def prune_or_repair(host, r: VertexVector, W: WitnessBundle, phi, psi, R_prime, R=None,
                    *, strict: bool = True):
    """Return ``Cut`` or ``Repaired``.

    ``R`` bounds the incoming slack mass and defaults to ``‖r‖₁``; with
    ``strict`` a violation of ``R' <= R <= psi*m/8`` raises.
    """
    phi, psi = Fraction(phi), Fraction(psi)
    R_prime = as_bound(R_prime)
    R = as_bound(r.norm if R is None else R)
    m = host.num_edges
    if R < r.norm:
        raise PruneError(f"slack mass {r.norm} exceeds the stated bound {R!r}")
    if strict and not (R_prime <= R and R <= psi * m / 8):
        raise PruneError(f"need R' <= R <= psi*m/8, got R'={R_prime!r}, R={R!r}, m={m}")

    c, mult, h = flow_parameters(m, phi, psi)
    stats = FlowStats(capacity=c, height=h)
    source = r.scaled(mult)
    sink = VertexVector((v, host.degree(v) + r[v]) for v in host.vertices())
    f = bounded_blocking_flow(FlowProblem(host, c, source, sink), h)
    stats.rounds = f.rounds
    stats.visited = f.visited

    if f.excess_norm <= R_prime:
        out = W.copy()
        out.r = r.copy()
        out.psi = psi * psi / 6
        out.phi = phi
        for path in path_decomposition(f):
            out.add_edge(path.start, path.end, path.edges)
            if out.r[path.start]:
                out.r.add(path.start, -1)
        return Repaired(out, stats)

    S = {v for v in f.excess.keys()}
    vol = host.volume(S)
    rS = r.total(S)
    out_count = len(host.boundary(S)[0])
    n = host.num_vertices
    for _ in range(h + 1):
        if out_count < phi * (vol + rS):
            return Cut(frozenset(S), out_count, vol, rS, stats=stats)
        grow = residual_neighbors(f, S)
        if not grow or len(S) + len(grow) >= n:
            piece = _sparse_piece(host, r, S | grow, phi, R_prime)
            if piece is not None:
                return Cut(*piece, stats=stats)
            break
        for w in sorted(grow):
            S.add(w)
            vol += host.degree(w)
            rS += r[w]
            for e in host.out_edges(w):
                if host.head(e) not in S:
                    out_count += 1
            for e in host.in_edges(w):
                t = host.tail(e)
                if t in S and t != w:
                    out_count -= 1
    raise PruneError("cut growth did not reach a sparse cut; the witness precondition is broken")


def _sparse_piece(host, r, S, phi, R_prime):
    """When excess sits in several parts of a disconnected region, growth can
    merge them into a dense whole.  Test each weakly connected piece alone."""
    seen: set[int] = set()
    n = host.num_vertices
    for root in sorted(S):
        if root in seen:
            continue
        comp, stack = {root}, [root]
        while stack:
            u = stack.pop()
            for e in host.out_edges(u):
                w = host.head(e)
                if w in S and w not in comp:
                    comp.add(w)
                    stack.append(w)
            for e in host.in_edges(u):
                w = host.tail(e)
                if w in S and w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        if len(comp) >= n:
            continue
        vol, rS = host.volume(comp), r.total(comp)
        out = len(host.boundary(comp)[0])
        if R_prime <= vol + rS and out < phi * (vol + rS):
            return frozenset(comp), out, vol, rS
    return None


def prune_or_repair_both(host, r, W, phi, psi, R_prime, R=None, *, strict: bool = True):
    """Forward pass, then the same on the reversed host; the first cut wins."""
    first = prune_or_repair(host, r, W, phi, psi, R_prime, R, strict=strict)
    if isinstance(first, Cut):
        return first
    second = prune_or_repair(host.reversed_view(), r, W.reversed(), phi, psi, R_prime, R, strict=strict)
    if isinstance(second, Cut):
        second.reversed = True
        return second
    return RepairedPair(first, second)
