"""Cut-or-embed: either a large sparse cut or a fresh witness for a cluster.

The randomized mode plays a cut-matching game: each round splits the degree
mass along a random projection and routes it across the split in both
directions with bounded blocking flow.  Routed paths become witness edges.
Every outcome is validated before it is returned; small clusters fall back
to exhaustive enumeration.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, log2

import numpy as np

from .exact import ceil_frac, floor_log2
from .flow import FlowProblem, VertexVector, bounded_blocking_flow, path_decomposition, residual_neighbors
from .prune import Cut
from .witness import (MAX_CHECK_VERTICES, PASS, SKIPPED, CutTable, WitnessBundle, scaled_lt, check_witness,
                      violating_cut)


# balls grown by the fallback sweep when the game certifies nothing
SWEEP_SEEDS = 32


class ValidationError(RuntimeError):
    pass


@dataclass
class Witness:
    bundle: WitnessBundle
    mode: str = "game"


def default_psi_cmg(m: int) -> Fraction:
    return Fraction(1, 4 * max(1, ceil(log2(max(m, 2)))) ** 2)


def _degrees(host) -> VertexVector:
    return VertexVector((v, host.degree(v)) for v in host.vertices())


def _live(host) -> list:
    return [v for v in sorted(host.vertices()) if host.degree(v)]


def witness_is_valid(b: WitnessBundle, host, R, *, max_vertices=MAX_CHECK_VERTICES) -> bool:
    rep = check_witness(b, host, _degrees(host), R, "both", max_vertices=max_vertices)
    big = len(_live(host)) > max_vertices
    return (rep.norm == rep.degree == rep.congestion == PASS
            and (rep.expansion == PASS or (big and rep.expansion == SKIPPED)))


def cut_is_valid(host, S, phi, R) -> bool:
    S = set(S)
    if not S or len(S) >= host.num_vertices:
        return False
    vol = host.volume(S)
    if 2 * vol > host.volume(host.vertices()):
        return False
    out, inc = host.boundary(S)
    return vol >= R and min(len(out), len(inc)) < Fraction(phi) * vol


def _make_cut(host, S) -> Cut:
    out, inc = host.boundary(S)
    return Cut(frozenset(S), min(len(out), len(inc)), host.volume(S), 0)


def game_rounds(m: int, phi, psi) -> int:
    """Rounds that keep congestion and witness degree within 1/psi."""
    c = ceil_frac(2 / Fraction(phi))
    cap = int(1 / (2 * Fraction(psi) * Fraction(phi) * c))
    return max(1, min(max(1, ceil(log2(max(m, 2)))) ** 2, cap))


def _grow_cut(host, f, phi, h):
    S = set(f.excess.keys())
    n = host.num_vertices
    total = host.volume(host.vertices())
    for _ in range(h + 1):
        out = len(host.boundary(S)[0])
        if S and out < phi * host.volume(S):
            # the level cut may be the large side; its complement is in-sparse then
            if 2 * host.volume(S) > total:
                return set(host.vertices()) - S
            return S
        grow = residual_neighbors(f, S)
        if not grow or len(S) + len(grow) >= n:
            return None
        S |= grow
    return None


def _play(host, phi, R, psi, rng):
    verts = sorted(host.vertices())
    deg = {v: host.degree(v) for v in verts}
    m = host.num_edges
    b = WitnessBundle.empty(host, psi, phi, r=VertexVector())
    live = [v for v in verts if deg[v]]
    if len(live) < 2:
        for v in live:
            b.r[v] = deg[v]
        return Witness(b)
    c = ceil_frac(2 / phi)
    h = ceil_frac(8 * floor_log2(max(m, 2)) / phi)
    total = sum(deg[v] for v in live)
    for _ in range(game_rounds(m, phi, psi)):
        x = rng.standard_normal(len(live))
        order = [live[i] for i in np.argsort(x, kind="stable")]
        A, acc = [], 0
        for v in order:
            if A and 2 * (acc + deg[v]) > total:
                break
            A.append(v)
            acc += deg[v]
        Aset = set(A)
        B = [v for v in live if v not in Aset]
        for src, dst in ((A, B), (B, A)):
            # sinks follow the mass ratio with a quarter of headroom, so every target
            # receives a share; twice the degree is the cap
            s_src, s_dst = sum(deg[v] for v in src), sum(deg[v] for v in dst)
            p = FlowProblem(host, c, VertexVector((v, deg[v]) for v in src),
                            VertexVector((v, min(2 * deg[v], -(-5 * deg[v] * s_src // (4 * s_dst)))) for v in dst))
            f = bounded_blocking_flow(p, h)
            for path in path_decomposition(f):
                b.add_edge(path.start, path.end, path.edges)
            # slack is the worst single-flow shortfall, not the sum over flows
            for v, ex in f.excess.items():
                if ex > b.r[v]:
                    b.r[v] = ex
            if b.r.norm > R:
                S = _grow_cut(host, f, phi, h)
                if S is not None and cut_is_valid(host, S, phi, R):
                    # the level cut is only a witness of sparsity; a sweep seeded there may do better
                    return _sparser(_make_cut(host, S), _sweep_cut(host, phi, R, sorted(S)))
                return _sweep_cut(host, phi, R, list(f.excess.keys()) + _heaviest(b.r))
    for v in live:
        short = deg[v] - b.W.degree(v) - b.r[v]
        if short > 0:
            b.r.add(v, short)
    _patch_thin(host, b, phi, psi, live)
    p, q = psi.numerator, psi.denominator
    for v in live:
        # a vertex the game barely reaches in one direction gets slack for its singleton cut
        loops = sum(1 for e in b.W.out_edges(v) if b.W.is_loop(e))
        thin = min(len(b.W.in_edges(v)), len(b.W.out_edges(v))) - loops
        need = -(-(p * b.W.degree(v) - q * thin) // (q - p))
        if need > b.r[v]:
            b.r[v] = need
    return Witness(b) if b.r.norm <= R else _sweep_cut(host, phi, R, _heaviest(b.r))


def _patch_thin(host, b, phi, psi, live) -> None:
    """Give vertices the game barely reaches in one direction extra witness
    edges copied from their own host edges in that direction."""
    p, q = psi.numerator, psi.denominator
    cap = int(1 / (psi * phi))
    W, emb = b.W, b.embedding

    def room(v):
        return q * host.degree(v) - p * (W.degree(v) + b.r[v]) >= p

    for v in live:
        for incoming in (True, False):
            loops = sum(1 for e in W.out_edges(v) if W.is_loop(e))
            thin = len(W.in_edges(v) if incoming else W.out_edges(v)) - loops
            need = -(-(p * W.degree(v) - q * thin) // (q - p))
            edges = [e for e in (host.in_edges(v) if incoming else host.out_edges(v)) if not host.is_loop(e)]
            while need > 0 and edges:
                progressed = False
                for e in edges:
                    x = host.tail(e) if incoming else host.head(e)
                    if need <= 0 or emb.congestion(e) >= cap or not (room(v) and room(x)):
                        continue
                    b.add_edge(x, v, [e]) if incoming else b.add_edge(v, x, [e])
                    need -= 1
                    progressed = True
                if not progressed:
                    break


def _sparser(a: Cut, b: Cut | None) -> Cut:
    if b is None or a.crossing * b.volume <= b.crossing * a.volume:
        return a
    return b


def _heaviest(r, k: int = SWEEP_SEEDS) -> list:
    return [v for v, _ in sorted(r.items(), key=lambda vx: (-vx[1], vx[0]))[:k]]


def _thin_order(host, incoming: bool) -> list:
    """Vertices by the share of their degree that points the given way."""
    def key(v):
        loops = sum(1 for e in host.out_edges(v) if host.is_loop(e))
        k = len(host.in_edges(v) if incoming else host.out_edges(v)) - loops
        return Fraction(k, host.degree(v)), v
    return sorted((v for v in host.vertices() if host.degree(v)), key=key)


def _bfs_order(host, seed) -> list:
    order, seen, i = [seed], {seed}, 0
    while i < len(order):
        w = order[i]
        i += 1
        for e in list(host.out_edges(w)) + list(host.in_edges(w)):
            for x in host.endpoints(e):
                if x not in seen:
                    seen.add(x)
                    order.append(x)
    return order


def _prefix_cut(host, order, phi, R, total):
    """Sparsest prefix of ``order`` that is a valid cut, as (ratio, length), with
    boundary counts kept incrementally."""
    S, vol, out, inc = set(), 0, 0, 0
    best = None
    n = host.num_vertices
    for w in order:
        for e in host.out_edges(w):
            x = host.head(e)
            if x != w:
                if x in S:
                    inc -= 1
                else:
                    out += 1
        for e in host.in_edges(w):
            x = host.tail(e)
            if x != w:
                if x in S:
                    out -= 1
                else:
                    inc += 1
        S.add(w)
        vol += host.degree(w)
        if 2 * vol > total or len(S) >= n:
            break
        if vol >= R and min(out, inc) < phi * vol:
            ratio = Fraction(min(out, inc), vol)
            if best is None or ratio < best[0]:
                best = (ratio, len(S))
    return best


def _sweep_cut(host, phi, R, seeds):
    """Prefix sweeps for the sparsest valid cut the game missed.

    The first two orders collect vertices that are thin in one direction,
    which finds unions of small one-sided pieces.  Then breadth-first balls
    grow from the seeds: vertices the game left with slack sit next to the
    sparse cuts it failed to expose.
    """
    total = host.volume(host.vertices())
    thin_in, thin_out = _thin_order(host, True), _thin_order(host, False)
    orders = [thin_in, thin_out]
    seeds = list(dict.fromkeys(thin_in[:SWEEP_SEEDS // 2] + thin_out[:SWEEP_SEEDS // 2] + list(seeds)[:SWEEP_SEEDS]))
    best = None
    for order in orders + [None] * len(seeds):
        if order is None:
            order = _bfs_order(host, seeds.pop(0))
        found = _prefix_cut(host, order, phi, R, total)
        if found is not None and (best is None or found[0] < best[0]):
            best = (found[0], order[:found[1]])
    return None if best is None else _make_cut(host, set(best[1]))


def cut_or_embed(host, phi, R, psi_cmg=None, seed: int = 0, *, attempts: int = 3,
                 fallback: bool = True, max_vertices: int = MAX_CHECK_VERTICES):
    """Return a validated ``Cut`` (sparse in one direction, vol >= R unless no such cut exists) or ``Witness``."""
    phi = Fraction(phi)
    if not 0 < phi < 1:
        raise ValueError("phi must lie in (0, 1)")
    if host.num_vertices == 0:
        raise ValueError("empty host")
    psi = default_psi_cmg(host.num_edges) if psi_cmg is None else Fraction(psi_cmg)
    if not 0 < psi <= 1:
        raise ValueError("psi_cmg must lie in (0, 1]")
    if host.num_vertices == 1:
        return Witness(WitnessBundle.identity(host, psi, phi), "trivial")
    for attempt in range(attempts):
        out = _play(host, phi, R, psi, np.random.default_rng([seed, attempt]))
        if isinstance(out, Cut) and cut_is_valid(host, out.side, phi, R):
            return out
        if isinstance(out, Witness) and witness_is_valid(out.bundle, host, R, max_vertices=max_vertices):
            return out
    if fallback and len(_live(host)) <= max_vertices:
        return cut_or_embed_exhaustive(host, phi, R, max_vertices=max_vertices)
    # dead-end vertices can force slack above R with no large sparse side; a
    # small sparse side still refines the cluster and pays for its own batch
    cut = _sweep_cut(host, phi, 1, [])
    if cut is not None and cut_is_valid(host, cut.side, phi, 1):
        return cut
    raise ValidationError("cut-matching game produced no certified outcome")


def cut_or_embed_exhaustive(host, phi, R, *, max_vertices: int = MAX_CHECK_VERTICES):
    """Sparsest qualifying cut by enumeration, else the identity witness with psi = phi."""
    phi = Fraction(phi)
    # isolated vertices have no volume and never change a cut
    verts = _live(host)
    if len(verts) > max_vertices:
        raise ValidationError(f"{len(verts)} vertices exceed the enumeration gate of {max_vertices}")
    relaxed = None
    if len(verts) >= 2:
        T = CutTable(host, verts)
        cross = np.minimum(T.out, T.inc)
        p, q = phi.numerator, phi.denominator
        floor = max(1, ceil_frac(R))
        sparse = (2 * T.vol <= T.total_vol) & (T.vol >= 1) & scaled_lt(q, cross, p, T.vol)
        ok = sparse & (T.vol >= floor)
        if sparse.any():
            k = min(np.nonzero(sparse)[0], key=lambda k: (Fraction(int(cross[k]), int(T.vol[k])), T.side(int(k))))
            relaxed = _make_cut(host, T.side(int(k)))
        if ok.any():
            best = min(np.nonzero(ok)[0],
                       key=lambda k: (Fraction(int(cross[k]), int(T.vol[k])), T.side(int(k))))
            return _make_cut(host, T.side(int(best)))
    b = WitnessBundle.identity(host, phi, phi)
    # sparse cuts below the volume floor are absorbed into slack
    gamma = _degrees(host)
    for _ in range(len(verts) + 1):
        rep = check_witness(b, host, gamma, R, "both", max_vertices=max_vertices)
        if rep.passed:
            return Witness(b, "exhaustive")
        if rep.expansion != "fail":
            break
        bad = _first_bad_side(b, host, gamma)
        if bad is None:
            break
        # the least slack that makes every subset of the bad side pass: r >= psi/(1-psi) * deg
        p, q = phi.numerator, phi.denominator
        for v in bad:
            b.r[v] = max(b.r[v] + 1, -(-host.degree(v) * p // (q - p)))
    if relaxed is not None:
        # neither outcome exists at this floor; a sparse side below it still refines
        return relaxed
    raise ValidationError("no qualifying cut and the identity witness does not certify")


def _first_bad_side(b, host, gamma):
    verts = _live(host)
    for rev in (False, True):
        side = violating_cut(b.W, b.r, gamma, b.psi, verts, reverse=rev)
        if side is not None:
            return side
    return None
