"""Command-line runner: ``expdecomp run``, ``expdecomp verify`` and ``expdecomp generate``.

Exit codes: 2 for a malformed trace, 3 for a violated invariant, 4 for bad
parameters or a run that leaves the supported parameter regime.
"""
from __future__ import annotations

import json
import re
import sys
from fractions import Fraction

import click

from . import oracle
from .apps import HierarchyState, SccView, UndirectedAdapter, undirected_graph
from .decomp import DecompositionError, DecompositionState, ParameterRegimeError
from .graph import DeleteEdge, DynGraph, GraphError, InsertSelfLoop, SplitVertex
from .trace import INSTANCES, SCHEDULES, Trace, TraceError, instance, parse_trace, schedule
from .validate import Snapshot, validate

EXIT_PARSE, EXIT_INVARIANT, EXIT_PARAM = 2, 3, 4
RUN_MODES = ("directed", "undirected", "hierarchy", "scc", "connectivity")
HEADER_OF = {"directed": "directed", "scc": "directed", "undirected": "undirected",
             "hierarchy": "undirected", "connectivity": "undirected"}
# exhaustive pair checks are size-gated
MAX_PAIR_CHECK = 64


class InvariantViolation(Exception):
    def __init__(self, stage: int, problems: list, line: int = 0):
        super().__init__("; ".join(problems))
        self.stage, self.problems, self.line = stage, problems, line


def parse_rational(text: str, name: str) -> Fraction:
    if not re.fullmatch(r"\d+/\d+", text or ""):
        _die(EXIT_PARAM, {"error": "parameter", "message": f"{name} must be written num/den, got {text!r}"})
    num, den = map(int, text.split("/"))
    if den == 0:
        _die(EXIT_PARAM, {"error": "parameter", "message": f"{name} has a zero denominator"})
    return Fraction(num, den)


def _die(code: int, payload: dict) -> None:
    click.echo(json.dumps(payload, sort_keys=True), err=True)
    sys.exit(code)


# -- runners -----------------------------------------------------------------------

class DirectedRunner:
    """Drives a DecompositionState; in scc mode the SCC view is checked too."""

    def __init__(self, trace: Trace, phi, lmax, psi_cmg, seed, scc: bool = False):
        g = DynGraph.from_edges(trace.n, trace.edges)
        self.scc = scc
        self.state = DecompositionState(g, phi, lmax, psi_cmg, seed)
        self.prev = None
        self.cuts_seen = 0

    def step(self, op) -> None:
        if op.kind == "del":
            ev = DeleteEdge(op.args[0])
        elif op.kind == "loop":
            ev = InsertSelfLoop(op.args[0])
        else:
            ev = SplitVertex(op.args[0], frozenset(op.args[1:]))
        self.state.update(ev)

    def record(self, timing: bool) -> dict:
        d = self.state.metrics[-1].as_dict(timing)
        d["loops"] = 0
        return d

    def check(self, level: str) -> list[str]:
        s = self.state
        rep = validate(s, level, self.prev, self.cuts_seen)
        problems = list(rep.problems)
        if self.scc and level != "none":
            if not SccView(s).matches_tarjan():
                problems.append("clusters differ from the SCCs of the graph minus R")
            if level == "fast" and not oracle.condensation_is_dag(s.graph, s.R_set, s.query_partition()):
                problems.append("condensation of the graph minus R has a cycle")
        self.prev = Snapshot.take(s)
        self.cuts_seen = len(s.cut_log)
        return problems

    def summary(self) -> dict:
        s = self.state
        out = {"stages": s.stage, "R": len(s.R), "clusters": len(s.clusters), "digest": s.digest()}
        if self.scc:
            out["sccs"] = s.query_partition()
        else:
            out["partition"] = s.query_partition()
        return out


class UndirectedRunner(DirectedRunner):
    def __init__(self, trace: Trace, phi, lmax, psi_cmg, seed):
        g, partner = undirected_graph(trace.n, trace.edges)
        self.scc = False
        self.adapter = UndirectedAdapter(g, partner, phi, lmax, psi_cmg, seed)
        self.state = self.adapter.state
        self.prev = None
        self.cuts_seen = 0

    def step(self, op) -> None:
        a = self.adapter
        if op.kind == "del":
            a.undirected_delete(op.args[0])
        elif op.kind == "loop":
            a.undirected_loop(op.args[0])
        else:
            a.undirected_split(op.args[0], op.args[1:])

    def check(self, level: str) -> list[str]:
        problems = super().check(level)
        if level != "none" and not self.adapter.closure_ok():
            problems.append("R is not closed under edge pairing")
        return problems


class HierarchyRunner:
    def __init__(self, trace: Trace, phi, lmax, psi_cmg, seed, connectivity: bool = False):
        self.h = HierarchyState(trace.n, trace.edges, phi, lmax, psi_cmg, seed)
        self.connectivity = connectivity
        self.discrepancies: list[dict] = []

    def step(self, op) -> None:
        h = self.h
        if op.kind == "del":
            h.delete(op.args[0])
        elif op.kind == "loop":
            h.insert_loop(op.args[0])
        elif op.kind == "ins":
            h.insert(*op.args)
        else:
            h.split(op.args[0], op.args[1:])

    def record(self, timing: bool) -> dict:
        h = self.h
        per_level = [lv.bl.state.metrics[-1] for lv in h.levels]
        d = {"stage": h.stage, "levels": len(h.levels),
             "R": [len(lv.bl.state.R) for lv in h.levels],
             "clusters": [len(lv.bl.state.clusters) for lv in h.levels],
             "embed_calls": sum(m.embed_calls for m in per_level),
             "prune_calls": [sum(x) for x in zip(*(m.prune_calls for m in per_level))],
             "cuts": sum(m.cuts for m in per_level),
             "flow_visited": sum(m.flow_visited for m in per_level),
             "flow_visited_max": max((m.flow_visited_max for m in per_level), default=0),
             "loops": h.loops_inserted(), "rebuilds": h.rebuilds,
             "pending_insertions": h.pending_crossings()}
        if timing:
            d["wall_ns"] = sum(m.wall_ns for m in per_level)
        return d

    def wrong_pairs(self) -> list:
        h = self.h
        vs = h.vertices()
        if len(vs) > MAX_PAIR_CHECK:
            return []
        comp = {}
        for c in oracle.undirected_components(vs, h.ends.values()):
            for v in c:
                comp[v] = c[0]
        return [(u, v) for i, u in enumerate(vs) for v in vs[i + 1:]
                if h.connected(u, v) != (comp[u] == comp[v])]

    def check(self, level: str) -> list[str]:
        if level == "none":
            return []
        h = self.h
        problems = []
        for i, lv in enumerate(h.levels):
            problems += [f"level {i}: {p}" for p in validate(lv.bl.state, level).problems]
            if not lv.bl.closure_ok():
                problems.append(f"level {i}: R is not closed under edge pairing")
        if not h.edge_decay_ok():
            problems.append("a contracted level has more edges than the cut set below it")
        wrong = self.wrong_pairs()
        if wrong:
            if h.pending_crossings():
                self.discrepancies.append({"stage": h.stage, "pairs": wrong[:10]})
            else:
                problems.append(f"connectivity differs from BFS on pairs {wrong[:5]}")
        return problems

    def summary(self) -> dict:
        h = self.h
        out = {"stages": h.stage, "levels": len(h.levels), "rebuilds": h.rebuilds,
               "loops": h.loops_inserted(), "digest": h.digest(),
               "discrepancy_windows": self.discrepancies}
        if self.connectivity:
            groups: dict[int, list] = {}
            for v in h.vertices():
                groups.setdefault(h.top_cluster(v), []).append(v)
            out["components"] = sorted(groups.values())
        return out


def make_runner(trace: Trace, mode: str, phi, lmax, psi_cmg, seed):
    if mode in ("directed", "scc"):
        return DirectedRunner(trace, phi, lmax, psi_cmg, seed, scc=mode == "scc")
    if mode == "undirected":
        return UndirectedRunner(trace, phi, lmax, psi_cmg, seed)
    return HierarchyRunner(trace, phi, lmax, psi_cmg, seed, connectivity=mode == "connectivity")


def execute(trace: Trace, mode: str, phi, lmax: int = 1, psi_cmg=None, seed: int = 0,
            verify: str = "fast", metrics=None, timing: bool = False):
    """Run a parsed trace; returns (runner, metric records).  Raises
    InvariantViolation on the first failed check."""
    if "ins" in {op.kind for op in trace.ops} and mode not in ("hierarchy", "connectivity"):
        raise TraceError(next(op.line for op in trace.ops if op.kind == "ins"),
                         f"ins is only supported in hierarchy and connectivity modes, not {mode}")
    runner = make_runner(trace, mode, phi, lmax, psi_cmg, seed)
    records = []

    def emit():
        rec = runner.record(timing)
        records.append(rec)
        if metrics is not None:
            metrics.write(json.dumps(rec, sort_keys=True) + "\n")

    emit()
    problems = runner.check(verify)
    if problems:
        raise InvariantViolation(0, problems)
    for op in trace.ops:
        runner.step(op)
        emit()
        problems = runner.check(verify)
        if problems:
            raise InvariantViolation(records[-1]["stage"], problems, op.line)
    return runner, records


# -- commands -----------------------------------------------------------------------

@click.group()
@click.version_option(package_name="artifact")
def main():
    """Maintain expander decompositions over update traces."""


def _run(trace_path, phi, lmax, psi_cmg, seed, verify, mode, metrics_path, timing):
    phi_q = parse_rational(phi, "--phi")
    psi_q = parse_rational(psi_cmg, "--psi-cmg") if psi_cmg else None
    try:
        with open(trace_path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        _die(EXIT_PARSE, {"error": "parse", "message": str(exc)})
    try:
        trace = parse_trace(text)
    except TraceError as exc:
        _die(EXIT_PARSE, {"error": "parse", "line": exc.line, "message": exc.msg})
    mode = mode or trace.mode
    if HEADER_OF[mode] != trace.mode:
        _die(EXIT_PARAM, {"error": "parameter",
                          "message": f"mode {mode} needs a {HEADER_OF[mode]} trace, got {trace.mode}"})
    if not 0 < phi_q < 1 or lmax < 1 or (psi_q is not None and not 0 < psi_q <= 1):
        _die(EXIT_PARAM, {"error": "parameter", "message": "need 0 < phi < 1, lmax >= 1, 0 < psi-cmg <= 1"})
    out = open(metrics_path, "w", encoding="utf-8") if metrics_path else None
    try:
        runner, _ = execute(trace, mode, phi_q, lmax, psi_q, seed, verify, out, timing)
    except TraceError as exc:
        _die(EXIT_PARSE, {"error": "parse", "line": exc.line, "message": exc.msg})
    except InvariantViolation as exc:
        _die(EXIT_INVARIANT, {"error": "invariant", "stage": exc.stage, "line": exc.line,
                              "problems": exc.problems})
    except ParameterRegimeError as exc:
        _die(EXIT_PARAM, {"error": "parameter", "message": str(exc)})
    except (DecompositionError, GraphError) as exc:
        _die(EXIT_INVARIANT, {"error": "invariant", "problems": [str(exc)]})
    finally:
        if out is not None:
            out.close()
    click.echo(json.dumps({"mode": mode, **runner.summary()}, sort_keys=True))


_run_options = [
    click.option("--trace", "trace_path", required=True, type=click.Path(dir_okay=False)),
    click.option("--phi", default="1/8", show_default=True, help="Target expansion as num/den."),
    click.option("--lmax", default=1, show_default=True, type=int),
    click.option("--psi-cmg", default=None, help="Witness quality as num/den (default min(1/8, 2 phi))."),
    click.option("--seed", default=0, show_default=True, type=int),
    click.option("--mode", type=click.Choice(RUN_MODES), default=None,
                 help="Defaults to the trace header mode."),
    click.option("--metrics", "metrics_path", default=None, type=click.Path(dir_okay=False),
                 help="Write one JSON record per stage."),
    click.option("--timing", is_flag=True, help="Add wall_ns to metric records (not byte-stable)."),
]


def _with(options):
    def deco(f):
        for opt in reversed(options):
            f = opt(f)
        return f
    return deco


@main.command()
@_with(_run_options)
@click.option("--verify", type=click.Choice(["none", "fast", "full"]), default="fast", show_default=True)
def run(trace_path, phi, lmax, psi_cmg, seed, mode, metrics_path, timing, verify):
    """Execute a trace and print a JSON summary."""
    _run(trace_path, phi, lmax, psi_cmg, seed, verify, mode, metrics_path, timing)


@main.command()
@_with(_run_options)
def verify(trace_path, phi, lmax, psi_cmg, seed, mode, metrics_path, timing):
    """Same as ``run --verify full``."""
    _run(trace_path, phi, lmax, psi_cmg, seed, "full", mode, metrics_path, timing)


@main.command()
@click.argument("kind", type=click.Choice(INSTANCES))
@click.option("--n", "n", required=True, type=int)
@click.option("--m", "m", default=0, type=int, help="Edge count for random-gnm.")
@click.option("--d", "d", default=3, type=int, help="Cycle count for expanderish.")
@click.option("--seed", default=0, type=int)
@click.option("--mode", type=click.Choice(["directed", "undirected"]), default="directed")
@click.option("--schedule", "sched", type=click.Choice(SCHEDULES), default="none")
@click.option("--steps", default=0, type=int)
@click.option("-o", "--output", default=None, type=click.Path(dir_okay=False))
def generate(kind, n, m, d, seed, mode, sched, steps, output):
    """Write an instance trace, optionally followed by an update schedule."""
    try:
        t = schedule(instance(kind, n=n, m=m, d=d, seed=seed, mode=mode), sched, steps, seed)
    except ValueError as exc:
        _die(EXIT_PARAM, {"error": "parameter", "message": str(exc)})
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(t.text())
    else:
        click.echo(t.text(), nl=False)


if __name__ == "__main__":
    main()
