import numpy as np
import pytest

from confidyn.graphs import GraphSnapshot

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def chain():
    """Chain 2 -> 1 -> 0 with truth 0."""
    return GraphSnapshot.from_edges(3, [(1, 0), (2, 1)])


def random_snapshot(rng, n, truth=0, p=0.4, allow_empty=True):
    sets = []
    for i in range(n):
        if i == truth:
            sets.append(frozenset())
            continue
        nb = {j for j in range(n) if rng.random() < p}
        if not nb and not allow_empty:
            nb = {int(rng.integers(n))}
        sets.append(frozenset(nb))
    return GraphSnapshot(n, tuple(sets))


def random_reachable_graph(rng, n, truth=0, extra=0.3):
    """Every learner gets a path to the truth through a random in-tree."""
    order = [i for i in range(n) if i != truth]
    rng.shuffle(order)
    placed = [truth]
    sets = {i: set() for i in range(n)}
    for i in order:
        sets[i].add(int(rng.choice(placed)))
        placed.append(i)
    for i in order:
        for j in range(n):
            if j != truth and rng.random() < extra:
                sets[i].add(j)
    return GraphSnapshot(n, tuple(frozenset(sets[i]) for i in range(n)))
