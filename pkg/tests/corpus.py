"""Seeded random instances and update schedules shared by the property and
acceptance tests."""
import random
from fractions import Fraction

from artifact.graph import DeleteEdge, DynGraph, InsertSelfLoop, SplitVertex

PHIS = (Fraction(1, 16), Fraction(1, 8), Fraction(1, 4))
# splits stop once this many vertices exist so every cluster stays enumerable
VERTEX_CAP = 16


def random_instance(seed: int, max_n: int = 12, max_m: int = 60):
    """(graph, phi, schedule length) with n <= max_n, m <= max_m and up to 3m updates."""
    rng = random.Random(seed)
    n = rng.randint(2, max_n)
    m = rng.randint(n, min(max_m, n * (n - 1)))
    kind = rng.choice(["gnm", "clusters", "cycle"])
    edges = []
    if kind == "cycle":
        edges = [(i, (i + 1) % n) for i in range(n)]
    while len(edges) < m:
        if kind == "clusters" and n >= 4 and rng.random() < 0.9:
            half = n // 2
            a = rng.randrange(n)
            b = rng.randrange(0, half) if a < half else rng.randrange(half, n)
        else:
            a, b = rng.randrange(n), rng.randrange(n)
        edges.append((a, b))
    g = DynGraph.from_edges(n, edges)
    phi = rng.choice(PHIS)
    return g, phi, rng.randint(1, 3 * m), rng


def random_event(rng: random.Random, g):
    """A deletion, loop insertion or degree-respecting split on the live graph."""
    k = rng.random()
    es = g.edges()
    if k < 0.6 and es:
        return DeleteEdge(rng.choice(es))
    if k < 0.8 or g.num_vertices >= VERTEX_CAP:
        return InsertSelfLoop(rng.choice(g.vertices()))
    v = rng.choice(g.vertices())
    inc = list(dict.fromkeys(list(g.out_edges(v)) + list(g.in_edges(v))))
    rng.shuffle(inc)
    chosen, d = [], 0
    for e in inc:
        c = 2 if g.is_loop(e) else 1
        if 2 * (d + c) <= g.degree(v):
            chosen.append(e)
            d += c
    return SplitVertex(v, frozenset(chosen))
