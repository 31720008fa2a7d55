"""Line-oriented trace files and the instance/schedule generators that write them.

A trace has a header (``mode``, ``n``, ``e u v`` lines), a ``---`` separator
and a body of updates::

    mode undirected
    n 4
    e 0 1
    e 1 2
    ---
    del 0
    loop 3
    split 1 2
    ins 0 3

Edge ids are public and sequential: directed ``e`` lines get 0..m-1 in file
order, undirected ones the pair (2i, 2i+1).  Each ``loop`` takes the next
id and each ``ins`` the next two.  A vertex split creates vertex ``n``,
then ``n + 1`` and so on.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

MODES = ("directed", "undirected")
KINDS = ("del", "loop", "split", "ins")


class TraceError(ValueError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line
        self.msg = msg


@dataclass(frozen=True)
class Op:
    kind: str
    args: tuple
    line: int = 0

    def text(self) -> str:
        return " ".join([self.kind, *map(str, self.args)])


@dataclass
class Trace:
    mode: str
    n: int
    edges: list = field(default_factory=list)
    ops: list = field(default_factory=list)

    def text(self) -> str:
        lines = [f"mode {self.mode}", f"n {self.n}"]
        lines += [f"e {u} {v}" for u, v in self.edges]
        lines.append("---")
        lines += [op.text() for op in self.ops]
        return "\n".join(lines) + "\n"

    def simulator(self) -> "Simulator":
        return Simulator(self.mode, self.n, self.edges)


class Simulator:
    """Tracks public ids and endpoints so traces can be checked before running."""

    def __init__(self, mode: str, n: int, edges):
        self.mode = mode
        self.n = n
        self.ends: dict[int, tuple[int, int]] = {}
        self.partner: dict[int, int] = {}
        self.next_id = 0
        for u, v in edges:
            self._add(u, v)

    def _add(self, u: int, v: int) -> tuple:
        a = self.next_id
        if self.mode == "directed":
            self.next_id += 1
            self.ends[a] = (u, v)
            self.partner[a] = a
            return (a,)
        self.next_id += 2
        self.ends[a], self.ends[a + 1] = (u, v), (v, u)
        self.partner[a], self.partner[a + 1] = a + 1, a
        return a, a + 1

    def degree(self, v: int) -> int:
        return sum((t == v) + (h == v) for t, h in self.ends.values())

    def incident(self, v: int) -> list[int]:
        return [e for e, (t, h) in self.ends.items() if v in (t, h)]

    def primary(self) -> list[int]:
        """One id per undirected pair, or every id in directed mode."""
        return [e for e in sorted(self.ends) if self.mode == "directed" or e <= self.partner[e]]

    def _vertex(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise ValueError(f"unknown vertex {v}")

    def _live(self, e: int) -> None:
        if e not in self.ends:
            state = "retired" if 0 <= e < self.next_id else "unknown"
            raise ValueError(f"{state} edge {e}")

    def apply(self, op: Op):
        if op.kind == "del":
            (e,) = op.args
            self._live(e)
            for x in {e, self.partner[e]}:
                del self.ends[x]
            return None
        if op.kind == "loop":
            (v,) = op.args
            self._vertex(v)
            a = self.next_id
            self.next_id += 1
            self.ends[a] = (v, v)
            self.partner[a] = a
            return a
        if op.kind == "ins":
            u, v = op.args
            if self.mode != "undirected":
                raise ValueError("ins needs an undirected trace")
            self._vertex(u)
            self._vertex(v)
            if u == v:
                raise ValueError("ins joins two distinct vertices; use loop")
            return self._add(u, v)
        if op.kind == "split":
            v, *moved = op.args
            self._vertex(v)
            closed = set()
            for e in moved:
                self._live(e)
                if v not in self.ends[e]:
                    raise ValueError(f"edge {e} is not incident to vertex {v}")
                closed |= {e, self.partner[e]}
            moved_deg = sum((self.ends[e][0] == v) + (self.ends[e][1] == v) for e in closed)
            if 2 * moved_deg > self.degree(v):
                raise ValueError(f"split of {v} would give the new vertex the larger degree")
            w = self.n
            self.n += 1
            for e in closed:
                t, h = self.ends[e]
                self.ends[e] = (w if t == v else t, w if h == v else h)
            return w
        raise ValueError(f"unknown update {op.kind!r}")


def _ints(tokens, line: int) -> list[int]:
    try:
        out = [int(t, 10) for t in tokens]
    except ValueError:
        raise TraceError(line, f"expected integers, got {' '.join(tokens)!r}") from None
    if any(x < 0 for x in out):
        raise TraceError(line, "negative id")
    return out


def parse_trace(text: str) -> Trace:
    """Parse and statically validate a trace; raises TraceError with a line number."""
    mode = n = None
    edges = []
    ops = []
    in_body = False
    sim = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if not in_body:
            if tok == ["---"]:
                if mode is None or n is None:
                    raise TraceError(no, "header needs mode and n before ---")
                in_body = True
                sim = Simulator(mode, n, edges)
            elif tok[0] == "mode" and len(tok) == 2:
                if tok[1] not in MODES:
                    raise TraceError(no, f"mode must be one of {', '.join(MODES)}")
                mode = tok[1]
            elif tok[0] == "n" and len(tok) == 2:
                (n,) = _ints(tok[1:], no)
                if n < 1:
                    raise TraceError(no, "n must be positive")
            elif tok[0] == "e" and len(tok) == 3:
                if n is None:
                    raise TraceError(no, "e before n")
                u, v = _ints(tok[1:], no)
                if u >= n or v >= n:
                    raise TraceError(no, f"vertex out of range 0..{n - 1}")
                edges.append((u, v))
            else:
                raise TraceError(no, f"bad header line {line!r}")
            continue
        kind, args = tok[0], _ints(tok[1:], no)
        arity = {"del": 1, "loop": 1, "ins": 2}
        if kind not in KINDS:
            raise TraceError(no, f"unknown update {kind!r}")
        if kind in arity and len(args) != arity[kind]:
            raise TraceError(no, f"{kind} takes {arity[kind]} argument(s)")
        if kind == "split" and not args:
            raise TraceError(no, "split needs a vertex")
        op = Op(kind, tuple(args), no)
        try:
            sim.apply(op)
        except ValueError as exc:
            raise TraceError(no, str(exc)) from None
        ops.append(op)
    if not in_body:
        raise TraceError(0, "missing --- separator")
    return Trace(mode, n, edges, ops)


# -- instances --------------------------------------------------------------------

def _pairs_to_trace(mode: str, n: int, pairs) -> Trace:
    """Undirected pairs become one ``e`` line each, or both directions in directed mode."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    edges = []
    for u, v in pairs:
        edges.append((u, v))
        if mode == "directed":
            edges.append((v, u))
    return Trace(mode, n, edges)


def clique(n: int, mode: str = "directed") -> Trace:
    if n < 1:
        raise ValueError("clique needs n >= 1")
    return _pairs_to_trace(mode, n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def barbell(n: int, mode: str = "directed") -> Trace:
    """Two n-cliques joined by one bridge between vertex n-1 and vertex n."""
    if n < 2:
        raise ValueError("barbell needs n >= 2")
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    pairs += [(u + n, v + n) for u, v in pairs]
    pairs.append((n - 1, n))
    return _pairs_to_trace(mode, 2 * n, pairs)


def random_gnm(n: int, m: int, seed: int = 0, mode: str = "directed") -> Trace:
    """m edges with independent uniform endpoints u != v; parallel edges allowed."""
    if n < 2 or m < 0:
        raise ValueError("random-gnm needs n >= 2 and m >= 0")
    rng = random.Random(seed)
    edges = []
    for _ in range(m):
        u, v = rng.sample(range(n), 2)
        edges.append((u, v))
    return Trace(mode, n, edges)


def expanderish(n: int, d: int = 3, seed: int = 0, mode: str = "directed") -> Trace:
    """Union of d random Hamiltonian cycles, a standard cheap expander."""
    if n < 3 or d < 1:
        raise ValueError("expanderish needs n >= 3 and d >= 1")
    rng = random.Random(seed)
    pairs = []
    for _ in range(d):
        perm = list(range(n))
        rng.shuffle(perm)
        pairs += [(perm[i], perm[(i + 1) % n]) for i in range(n)]
    return _pairs_to_trace(mode, n, pairs)


INSTANCES = ("clique", "barbell", "random-gnm", "expanderish")


def instance(kind: str, *, n: int, m: int = 0, d: int = 3, seed: int = 0, mode: str = "directed") -> Trace:
    if kind == "clique":
        return clique(n, mode)
    if kind == "barbell":
        return barbell(n, mode)
    if kind == "random-gnm":
        return random_gnm(n, m, seed, mode)
    if kind == "expanderish":
        return expanderish(n, d, seed, mode)
    raise ValueError(f"unknown instance kind {kind!r}")


# -- schedules ----------------------------------------------------------------------

def _push(trace: Trace, sim: Simulator, op: Op) -> None:
    sim.apply(op)
    trace.ops.append(op)


def random_deletions(trace: Trace, steps: int, seed: int = 0) -> Trace:
    rng = random.Random(seed)
    sim = _replay(trace)
    for _ in range(steps):
        ids = sim.primary()
        if not ids:
            break
        _push(trace, sim, Op("del", (rng.choice(ids),)))
    return trace


def _bridges(sim: Simulator) -> list[tuple[int, int]]:
    """Vertex pairs joined by exactly one connection whose removal disconnects them.

    An anti-parallel pair (or an undirected edge) is one connection.
    """
    count: dict[tuple[int, int], list[int]] = {}
    for t, h in sim.ends.values():
        if t != h:
            key = (min(t, h), max(t, h))
            c = count.setdefault(key, [0, 0])
            c[t > h] += 1
    mult = {k: max(c) for k, c in count.items()}
    adj: dict[int, list[int]] = {}
    for a, b in sorted(mult):
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    out = []
    for root in sorted(adj):
        if root in disc:
            continue
        disc[root] = low[root] = len(disc)
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            v, parent, it = stack[-1]
            w = next(it, None)
            if w is None:
                stack.pop()
                if parent >= 0:
                    low[parent] = min(low[parent], low[v])
                    key = (min(parent, v), max(parent, v))
                    if low[v] > disc[parent] and mult[key] == 1:
                        out.append(key)
            elif w == parent:
                continue
            elif w in disc:
                low[v] = min(low[v], disc[w])
            else:
                disc[w] = low[w] = len(disc)
                stack.append((w, v, iter(adj[w])))
    return sorted(out)


def bridge_deletions(trace: Trace, steps: int) -> Trace:
    """Delete bridges first; without one, carve edges off the lowest-degree vertex."""
    sim = _replay(trace)
    for _ in range(steps):
        if not sim.ends:
            break
        br = _bridges(sim)
        if br:
            a, b = br[0]
            victims = [e for e in sim.primary() if set(sim.ends[e]) == {a, b}]
        else:
            live = [v for v in range(sim.n) if sim.degree(v)]
            v = min(live, key=lambda x: (sim.degree(x), x))
            victims = [e for e in sim.primary() if v in sim.ends[e]][:1]
        for e in victims:
            if e in sim.ends:
                _push(trace, sim, Op("del", (e,)))
    return trace


def split_storm(trace: Trace, steps: int) -> Trace:
    """Repeatedly split the highest-degree vertex, moving half its non-loop edges."""
    sim = _replay(trace)
    for _ in range(steps):
        order = sorted(range(sim.n), key=lambda x: (-sim.degree(x), x))
        for v in order:
            inc = [e for e in sim.primary() if v in sim.ends[e] and sim.ends[e][0] != sim.ends[e][1]]
            k = len(inc) // 2
            if k:
                _push(trace, sim, Op("split", (v, *inc[:k])))
                break
        else:
            break
    return trace


def mixed(trace: Trace, steps: int, seed: int = 0) -> Trace:
    """Deletions, insertions (undirected only), loops and splits in random order."""
    rng = random.Random(seed)
    sim = _replay(trace)
    for _ in range(steps):
        x = rng.random()
        ids = sim.primary()
        if x < 0.45 and ids:
            _push(trace, sim, Op("del", (rng.choice(ids),)))
        elif x < 0.65 and sim.mode == "undirected" and sim.n >= 2:
            u, v = rng.sample(range(sim.n), 2)
            _push(trace, sim, Op("ins", (u, v)))
        elif x < 0.8:
            _push(trace, sim, Op("loop", (rng.randrange(sim.n),)))
        else:
            v = rng.randrange(sim.n)
            inc = [e for e in sim.primary() if v in sim.ends[e] and sim.ends[e][0] != sim.ends[e][1]]
            rng.shuffle(inc)
            _push(trace, sim, Op("split", (v, *sorted(inc[: len(inc) // 2]))))
    return trace


SCHEDULES = ("none", "random-deletions", "bridge-deletions", "split-storm", "mixed")


def schedule(trace: Trace, kind: str, steps: int, seed: int = 0) -> Trace:
    if kind == "none":
        return trace
    if kind == "random-deletions":
        return random_deletions(trace, steps, seed)
    if kind == "bridge-deletions":
        return bridge_deletions(trace, steps)
    if kind == "split-storm":
        return split_storm(trace, steps)
    if kind == "mixed":
        return mixed(trace, steps, seed)
    raise ValueError(f"unknown schedule {kind!r}")


def _replay(trace: Trace) -> Simulator:
    sim = trace.simulator()
    for op in trace.ops:
        sim.apply(op)
    return sim
