import pytest
from hypothesis import given, strategies as st

from artifact.graph import ClusterView, DynGraph, GraphError


def test_add_edge_degrees():
    g = DynGraph(2)
    g.add_edge(0, 1)
    assert (g.degree(0), g.degree(1), g.num_edges) == (1, 1, 1)


def test_self_loop_counts_two():
    g = DynGraph(1)
    g.add_edge(0, 0)
    assert g.degree(0) == 2


def test_parallel_edges_are_distinct():
    g = DynGraph(2)
    a, b = g.add_edge(0, 1), g.add_edge(0, 1)
    assert a != b and g.degree(0) == 2


def test_add_edge_unknown_vertex():
    with pytest.raises(GraphError):
        DynGraph(1).add_edge(0, 5)


def test_delete_only_edge():
    g = DynGraph(2)
    e = g.add_edge(0, 1)
    assert g.delete_edge(e) == (0, 1)
    assert g.degree(0) == g.degree(1) == 0


def test_delete_one_parallel_edge():
    g = DynGraph(2)
    e = g.add_edge(0, 1)
    g.add_edge(0, 1)
    g.delete_edge(e)
    assert g.degree(0) == 1 and g.num_edges == 1


def test_delete_loop_drops_two():
    g = DynGraph(1)
    g.add_edge(0, 0)
    e = g.insert_self_loop(0)
    g.delete_edge(e)
    assert g.degree(0) == 2


def test_retired_ids_are_not_reused():
    g = DynGraph(2)
    e = g.add_edge(0, 1)
    g.delete_edge(e)
    with pytest.raises(GraphError):
        g.delete_edge(e)
    assert g.add_edge(0, 1) != e


def test_split_isolated_vertex():
    g = DynGraph(1)
    w = g.split_vertex(0, [])
    assert g.degree(0) == g.degree(w) == 0


def test_split_moves_edge_and_keeps_id():
    g = DynGraph(3)
    ea, eb = g.add_edge(0, 1), g.add_edge(0, 2)
    w = g.split_vertex(0, {eb})
    assert g.endpoints(ea) == (0, 1)
    assert g.endpoints(eb) == (w, 2)


def test_split_star_conserves_degree():
    g = DynGraph(5)
    spokes = [g.add_edge(0, i) for i in range(1, 5)]
    w = g.split_vertex(0, spokes[:2])
    # recomputed from the edge table, not from the counters
    recount = {v: 0 for v in g.vertices()}
    for e in g.edges():
        t, h = g.endpoints(e)
        recount[t] += 1
        recount[h] += 1
    assert recount[0] == 2 and recount[w] == 2


def test_split_rejects_foreign_edge_and_heavy_side():
    g = DynGraph(3)
    e01, e12 = g.add_edge(0, 1), g.add_edge(1, 2)
    with pytest.raises(GraphError):
        g.split_vertex(0, {e12})
    e02 = g.add_edge(0, 2)
    with pytest.raises(GraphError):
        g.split_vertex(0, {e01, e02})


def test_split_moves_loop_as_loop():
    g = DynGraph(2)
    g.add_edge(0, 1)
    g.add_edge(0, 1)
    loop = g.insert_self_loop(0)
    w = g.split_vertex(0, {loop})
    assert g.endpoints(loop) == (w, w) and g.degree(w) == 2


def test_loop_examples():
    g = DynGraph(1)
    g.insert_self_loop(0)
    assert g.degree(0) == 2
    e = g.insert_self_loop(0)
    assert g.degree(0) == 4
    g.delete_edge(e)
    g.delete_edge(g.edges()[0])
    assert g.degree(0) == 0
    with pytest.raises(GraphError):
        g.insert_self_loop(9)


def test_volume_examples():
    tri = DynGraph.from_edges(3, [(0, 1), (1, 2), (2, 0)])
    assert tri.volume([]) == 0
    assert tri.volume(tri.vertices()) == 6
    g = DynGraph.from_edges(2, [(0, 0), (0, 1)])
    assert g.volume([0]) == 3


def test_boundary_examples():
    g = DynGraph.from_edges(2, [(0, 1)])
    assert g.boundary({0, 1}) == (set(), set())
    assert g.boundary({0}) == ({0}, set())
    pair = DynGraph.from_edges(2, [(0, 1), (1, 0), (0, 0)])
    assert pair.boundary({0}) == ({0}, {1})


def test_reversed_view():
    g = DynGraph.from_edges(3, [(0, 1), (1, 2), (1, 1)])
    rv = g.reversed_view()
    assert rv.endpoints(0) == (1, 0)
    assert rv.boundary({1}) == (g.boundary({1})[1], g.boundary({1})[0])
    back = rv.reversed_view()
    assert all(back.endpoints(e) == g.endpoints(e) for e in g.edges())
    assert all(rv.degree(v) == g.degree(v) for v in g.vertices())
    # writes through the view land in the base graph
    e = rv.add_edge(0, 2)
    assert g.endpoints(e) == (2, 0)


def test_cluster_view_counts_only_members():
    g = DynGraph.from_edges(4, [(0, 1), (1, 0), (2, 3), (2, 2)])
    c = ClusterView(g, {2, 3})
    assert c.vertices() == [2, 3]
    assert c.num_edges == 2
    assert sorted(c.edges()) == [2, 3]


ops = st.lists(st.tuples(st.sampled_from("adls"), st.integers(0, 10 ** 6), st.integers(0, 10 ** 6)),
               max_size=60)


@given(st.integers(1, 6), ops)
def test_counters_match_edge_table(n, script):
    g = DynGraph(n)
    for kind, a, b in script:
        vs = g.vertices()
        if kind == "a":
            g.add_edge(vs[a % len(vs)], vs[b % len(vs)])
        elif kind == "l":
            g.insert_self_loop(vs[a % len(vs)])
        elif kind == "d" and g.num_edges:
            g.delete_edge(g.edges()[a % g.num_edges])
        elif kind == "s":
            v = vs[a % len(vs)]
            inc = list(dict.fromkeys(list(g.out_edges(v)) + list(g.in_edges(v))))
            moved, d = [], 0
            for i, e in enumerate(inc):
                c = 2 if g.is_loop(e) else 1
                if (b >> i) & 1 and 2 * (d + c) <= g.degree(v):
                    moved.append(e)
                    d += c
            before = g.degree(v)
            ends = {e: g.endpoints(e) for e in g.edges()}
            w = g.split_vertex(v, moved)
            assert g.degree(v) + g.degree(w) == before
            assert g.degree(w) <= g.degree(v)
            assert set(g.edges()) == set(ends)
        recount = {v: 0 for v in g.vertices()}
        for e in g.edges():
            t, h = g.endpoints(e)
            recount[t] += 1
            recount[h] += 1
            assert e in dict.fromkeys(g.out_edges(t)) and e in dict.fromkeys(g.in_edges(h))
        assert recount == {v: g.degree(v) for v in g.vertices()}
        assert sum(recount.values()) == 2 * g.num_edges
        S = g.vertices()[::2]
        rest = [v for v in g.vertices() if v not in S]
        assert g.volume(S) + g.volume(rest) == 2 * g.num_edges
