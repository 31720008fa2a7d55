import os

from hypothesis import HealthCheck, settings

from artifact.graph import DynGraph

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=400,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# filled by the acceptance suite, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def directed_clique(n: int) -> DynGraph:
    return DynGraph.from_edges(n, [(u, v) for u in range(n) for v in range(n) if u != v])


def barbell(k: int) -> DynGraph:
    """Two directed k-cliques joined by the anti-parallel pair (k-1, k)."""
    edges = [(u, v) for u in range(k) for v in range(k) if u != v]
    edges += [(u + k, v + k) for u, v in edges]
    edges += [(k - 1, k), (k, k - 1)]
    return DynGraph.from_edges(2 * k, edges)
