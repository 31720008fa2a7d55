"""Acceptance criteria C1-C10, each at its stated tolerance.

Every test appends one PASS/FAIL line to ``conftest.ACCEPTANCE_LINES``; the
lines are printed in the terminal summary.  The directed corpus is run once
per session and shared by C1-C5 and C7.
"""
import json
import os
import random
import subprocess
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import log2

import pytest

import conftest
import prune_fixtures
from corpus import random_event, random_instance

from artifact import cutmatch, oracle, prune
from artifact import trace as tr
from artifact.apps import HierarchyState, SccView
from artifact.decomp import DecompositionState
from artifact.graph import DeleteEdge, DynGraph
from artifact.prune import Cut, PruneError, Repaired, RepairedPair, prune_or_repair, prune_or_repair_both
from artifact.validate import (Snapshot, check_accounting, check_dag, check_expansion, check_monotone,
                               check_partition, check_witnesses)
from artifact.witness import check_witness

CORPUS_SEEDS = range(200)
# frozen from the first fully validated corpus run (observed maximum 0.2132)
R_RATIO_BOUND = 0.25


def report(name, ok, detail=""):
    conftest.ACCEPTANCE_LINES.append(f"{name}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip())


@dataclass
class CorpusResult:
    runs: int = 0
    stages: int = 0
    problems: dict = field(default_factory=lambda: {k: [] for k in ("C1", "C2", "C3", "C4", "C5", "C7")})
    ratios: list = field(default_factory=list)
    flow_calls: int = 0
    digests: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)


def run_instance(seed, on_stage=None):
    """One corpus run; returns the final state."""
    g, phi, length, rng = random_instance(seed)
    s = DecompositionState(g, phi, seed=seed)
    if on_stage:
        on_stage(s, None, 0)
    for _ in range(length):
        prev, since = Snapshot.take(s), len(s.cut_log)
        s.update(random_event(rng, s.graph))
        if on_stage:
            on_stage(s, prev, since)
    return s


def metrics_bytes(s) -> bytes:
    return "".join(json.dumps(m.as_dict(), sort_keys=True) + "\n" for m in s.metrics).encode()


def _checked_flow(real, result):
    """Wrap bounded_blocking_flow so every call is checked against the residual oracle."""
    def wrapped(p, h):
        f = real(p, h)
        result.flow_calls += 1
        src, snk = dict(p.source.items()), dict(p.sink.items())
        if oracle.residual_path_within(p.graph, p.capacity, f.flow, src, snk, h):
            result.problems["C5"].append(f"residual path within {h} hops after a flow call")
        return f
    return wrapped


@pytest.fixture(scope="module")
def corpus():
    res = CorpusResult()

    def on_stage(s, prev, since):
        res.stages += 1
        tag = f"seed {s.seed} stage {s.stage}"
        for key, found in (("C1", check_witnesses(s)),
                           ("C2", check_expansion(s, max_vertices=16)),
                           ("C3", check_partition(s) + check_monotone(s, prev)),
                           ("C4", check_accounting(s, since)),
                           ("C7", check_dag(s) + ([] if SccView(s).matches_tarjan() else ["scc_all differs"]))):
            res.problems[key] += [f"{tag}: {p}" for p in found]

    with pytest.MonkeyPatch.context() as mp:
        for mod in (prune, cutmatch):
            mp.setattr(mod, "bounded_blocking_flow", _checked_flow(mod.bounded_blocking_flow, res))
        for seed in CORPUS_SEEDS:
            try:
                s = run_instance(seed, on_stage)
            except Exception as exc:  # a crash fails every structural criterion
                res.problems["C1"].append(f"seed {seed}: {type(exc).__name__}: {exc}")
                continue
            res.runs += 1
            m0 = random_instance(seed)[0].num_edges
            res.ratios.append(len(s.R) / (float(s.phi) * m0 * log2(m0)))
            res.digests[seed] = s.digest()
            res.metrics[seed] = metrics_bytes(s)
    return res


def _corpus_line(corpus, key, name):
    found = corpus.problems[key]
    report(key, not found, f"{name}; {corpus.runs} runs, {corpus.stages} stages, {len(found)} violations")
    assert not found, found[:5]


def test_c1_witness_soundness(corpus):
    assert corpus.runs + len(corpus.problems["C1"]) >= 200
    _corpus_line(corpus, "C1", "every level of every cluster passes the witness check")


def test_c2_certified_expansion(corpus):
    _corpus_line(corpus, "C2", "no cluster has a cut sparser than psi_0^2 * phi")


def test_c3_structural_monotonicity(corpus):
    _corpus_line(corpus, "C3", "partition refines and R only grows")


def test_c4_record_accounting(corpus):
    worst = max(corpus.ratios)
    over = [r for r in corpus.ratios if r >= R_RATIO_BOUND]
    ok = not corpus.problems["C4"] and not over
    report("C4", ok, f"batch and window checks, {len(corpus.problems['C4'])} violations; "
                     f"max |R|/(phi m0 log2 m0) = {worst:.4f} < {R_RATIO_BOUND}")
    assert not corpus.problems["C4"], corpus.problems["C4"][:5]
    assert not over


def _long_horizon_instances():
    rng = random.Random(2024)
    for size in (10, 40, 150, 400, 1000):
        n = max(4, size // 4)
        g = DynGraph.from_edges(n, [(rng.randrange(n), rng.randrange(n)) for _ in range(size)])
        src = {v: rng.randint(0, 4) for v in range(n) if rng.random() < 0.4}
        snk = {v: rng.randint(0, 4) for v in range(n) if v not in src}
        yield g, rng.randint(1, 3), src, snk


def test_c5_flow_fact(corpus):
    from artifact.flow import FlowProblem, VertexVector, bounded_blocking_flow
    mismatches = []
    checked = 0
    for g, c, src, snk in _long_horizon_instances():
        f = bounded_blocking_flow(FlowProblem(g, c, VertexVector(src), VertexVector(snk)), g.num_vertices)
        value, _ = oracle.max_flow_exact(g, c, src, snk)
        checked += 1
        if f.excess.norm != sum(src.values()) - value:
            mismatches.append((g.num_edges, f.excess.norm, sum(src.values()) - value))
        if oracle.residual_path_within(g, c, f.flow, src, snk, g.num_vertices):
            mismatches.append((g.num_edges, "residual path"))
    found = corpus.problems["C5"]
    ok = not found and not mismatches and corpus.flow_calls > 0
    report("C5", ok, f"{corpus.flow_calls} corpus flow calls searched, {len(found)} residual paths; "
                     f"{checked} long-horizon instances, {len(mismatches)} mismatches with exact max flow")
    assert corpus.flow_calls > 0
    assert not found, found[:5]
    assert not mismatches


def test_c6_prune_dichotomy():
    fixtures = prune_fixtures.build()
    decided = [f for f in fixtures if f.in_regime and f.expected]
    wrong, bad_witness = [], []
    for fx in decided:
        run = prune_or_repair_both if fx.both else prune_or_repair
        out = run(fx.host, fx.bundle.r, fx.bundle, fx.phi, fx.psi, fx.r_prime, strict=False)
        got = "cut" if isinstance(out, Cut) else "repaired"
        if got != fx.expected:
            wrong.append(fx.name)
        if isinstance(out, Repaired):
            pieces = [(out.bundle, fx.host)]
        elif isinstance(out, RepairedPair):
            pieces = [(out.forward.bundle, fx.host), (out.backward.bundle, fx.host.reversed_view())]
        else:
            pieces = []
        for b, host in pieces:
            if b.psi != fx.psi ** 2 / 6 or not check_witness(b, host, fx.gamma, fx.r_prime, "out").passed:
                bad_witness.append(fx.name)
    undecided = sum(1 for f in fixtures if not (f.in_regime and f.expected))
    # outside the regime the flow may be asked to place more mass than the host holds; info only
    loose = [f for f in fixtures if not f.in_regime and f.expected]
    agree = raised = 0
    for fx in loose:
        run = prune_or_repair_both if fx.both else prune_or_repair
        try:
            out = run(fx.host, fx.bundle.r, fx.bundle, fx.phi, fx.psi, fx.r_prime, strict=False)
        except PruneError:
            raised += 1
            continue
        agree += ("cut" if isinstance(out, Cut) else "repaired") == fx.expected
    ok = len(decided) >= 30 and not wrong and not bad_witness
    report("C6", ok, f"{len(decided)} decided fixtures, {len(wrong)} branch disagreements, "
                     f"{len(bad_witness)} repaired outputs failing the out-witness check "
                     f"({undecided} fixtures skipped; out of regime {agree}/{len(loose)} agree and {raised} refuse, info only)")
    assert len(decided) >= 30
    assert not wrong, wrong
    assert not bad_witness, bad_witness


def test_c7_dag_and_scc(corpus):
    _corpus_line(corpus, "C7", "condensation of the graph minus R is a DAG and scc_all matches Tarjan")


def _hierarchy_run(seed):
    rng = random.Random(seed)
    n = rng.randint(4, 14)
    pairs = [(u, v) for u, v in ((rng.randrange(n), rng.randrange(n)) for _ in range(rng.randint(n, 2 * n)))
             if u != v]
    h = HierarchyState(n, pairs, Fraction(1, 32), seed=seed)
    m0 = max(1, len(pairs))
    bad, windows = [], []
    for step in range(50):
        k = rng.random()
        live = [e for e in sorted(h.ends) if e <= h.partner[e] and h.ends[e][0] != h.ends[e][1]]
        if k < 0.45 and live:
            h.delete(rng.choice(live))
        elif k < 0.7:
            u, v = rng.sample(h.vertices(), 2)
            h.insert(u, v)
        elif k < 0.85:
            h.insert_loop(rng.choice(h.vertices()))
        else:
            v = rng.choice(h.vertices())
            inc = [e for e in sorted(h.ends) if h.ends[e][0] == v and h.ends[e][1] != v]
            rng.shuffle(inc)
            h.split(v, inc[: len(inc) // 2])
        vs = h.vertices()
        diff = [(u, v) for u in vs for v in vs if h.connected(u, v) != h.bfs_connected(u, v)]
        if h.pending_crossings() == 0:
            if diff:
                bad.append((seed, step, diff[:3]))
        elif diff:
            windows.append((seed, step, len(diff)))
    over_budget = h.loops_inserted() > 2 * m0 * 2
    return bad, windows, over_budget


def test_c8_connectivity_exactness():
    bad, windows, over = [], [], []
    runs = 60
    for seed in range(runs):
        b, w, o = _hierarchy_run(seed)
        bad += b
        windows += w
        if o:
            over.append(seed)
    ok = not bad and not over
    report("C8", ok, f"{runs} runs; {len(bad)} mismatches at settled stages; "
                     f"{len(windows)} logged discrepancy windows with pending insertions; "
                     f"{len(over)} runs over the loop budget")
    assert not bad, bad[:5]
    assert not over, over


def test_c9_determinism(corpus, tmp_path):
    seeds = list(CORPUS_SEEDS)[:25]
    differ = [seed for seed in seeds if seed in corpus.digests and (
        (s := run_instance(seed)).digest() != corpus.digests[seed] or metrics_bytes(s) != corpus.metrics[seed])]
    path = tmp_path / "t.trace"
    path.write_text(tr.mixed(tr.random_gnm(10, 40, seed=9), 30, seed=9).text())
    outs = []
    for i, hashseed in enumerate(("1", "987")):
        out = tmp_path / f"m{i}.jsonl"
        env = {**os.environ, "PYTHONHASHSEED": hashseed}
        subprocess.run([sys.executable, "-m", "artifact.cli", "run", "--trace", str(path), "--phi", "1/8",
                        "--seed", "7", "--metrics", str(out)], check=True, env=env, capture_output=True)
        outs.append(out.read_bytes())
    ok = not differ and outs[0] == outs[1]
    report("C9", ok, f"{len(seeds)} corpus reruns, {len(differ)} differing; "
                     f"CLI metrics {'identical' if outs[0] == outs[1] else 'differ'} across hash seeds")
    assert not differ, differ
    assert outs[0] == outs[1]


class Deadline(Exception):
    pass


def _scaling_run(m, deadline):
    rng = random.Random(0)
    n = max(4, m // 4)
    g = DynGraph.from_edges(n, [tuple(rng.sample(range(n), 2)) for _ in range(m)])
    t0 = time.perf_counter()
    s = DecompositionState(g, Fraction(1, 32), lmax=1)
    order = list(range(m))
    rng.shuffle(order)
    for e in order:
        if time.perf_counter() - t0 > deadline:
            raise Deadline(f"m={m} passed {deadline:.0f}s after {s.stage} stages")
        s.update(DeleteEdge(e))
    worst = max(x.flow_visited_max for x in s.metrics)
    return time.perf_counter() - t0, worst


def test_c10_scaling_smoke():
    """The ratio test caps each larger size at 8x the previous one's time, so
    that cap doubles as the deadline for the larger run."""
    sizes = (10 ** 3, 10 ** 4, 10 ** 5)
    times, notes, ok = {}, [], True
    budget = float(os.environ.get("ARTIFACT_SCALING_BUDGET", "600"))
    prev = None
    for m in sizes:
        deadline = budget if prev is None else 8 * prev
        try:
            t, worst = _scaling_run(m, deadline)
        except Deadline as exc:
            notes.append(str(exc))
            ok = False
            break
        times[m] = t
        if worst > m:
            notes.append(f"m={m}: a flow round visited {worst} edges")
            ok = False
        if prev is not None and t >= 8 * prev:
            ok = False
        prev = t
    shown = ", ".join(f"m={m}: {t:.1f}s" for m, t in times.items())
    report("C10", ok, f"{shown}; {'; '.join(notes)}")
    assert ok, notes
