"""Interaction graphs, graph sequences and the standard constructions.

Agents are 0-based; in single-truth analyses the truth is agent 0. Graphs are
kept as adjacency sets and only turned into arrays by :func:`pack_snapshots`
(for the kernels) or by the matrix builders in :mod:`confidyn.dynamics`.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from confidyn import kernels
from confidyn.errors import (
    GraphParseError,
    InvalidParameterError,
    InvalidTruthError,
    OutOfRangeError,
    ShapeError,
    UnsupportedSequenceError,
)


@dataclass(frozen=True)
class GraphSnapshot:
    """Directed graph for a single time step.

    ``neighbors[i]`` is the set of agents that ``i`` listens to. Self-loops
    are allowed; a static agent has an empty set.
    """

    n: int
    neighbors: tuple[frozenset[int], ...]

    def __post_init__(self):
        if self.n < 0:
            raise InvalidParameterError(f"agent count must be nonnegative, got {self.n}")
        nb = tuple(frozenset(int(j) for j in s) for s in self.neighbors)
        if len(nb) != self.n:
            raise ShapeError(f"expected {self.n} neighbor sets, got {len(nb)}")
        for i, s in enumerate(nb):
            for j in s:
                if not 0 <= j < self.n:
                    raise InvalidParameterError(f"agent {i} has out-of-range neighbor {j}")
        object.__setattr__(self, "neighbors", nb)

    @classmethod
    def empty(cls, n: int) -> GraphSnapshot:
        return cls(n, tuple(frozenset() for _ in range(n)))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> GraphSnapshot:
        sets: list[set[int]] = [set() for _ in range(n)]
        for src, dst in edges:
            if not 0 <= src < n:
                raise InvalidParameterError(f"edge source {src} out of range for n={n}")
            sets[src].add(dst)
        return cls(n, tuple(frozenset(s) for s in sets))

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i, s in enumerate(self.neighbors) for j in sorted(s)]

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i, j in self.edges():
            a[i, j] = 1.0
        return a


def out_degrees(snapshot: GraphSnapshot) -> np.ndarray:
    return np.array([len(s) for s in snapshot.neighbors], dtype=np.int64)


def learner_indices(n: int, truth: int) -> np.ndarray:
    return np.array([i for i in range(n) if i != truth], dtype=np.int64)


def truth_reachability(snapshot: GraphSnapshot, truth: int = 0) -> np.ndarray:
    """For each learner (agents other than ``truth``, in index order), whether
    a directed path leads to the truth."""
    n = snapshot.n
    if not 0 <= truth < n:
        raise InvalidTruthError(f"truth index {truth} out of range")
    if snapshot.neighbors[truth]:
        raise InvalidTruthError(f"truth {truth} has out-neighbors {sorted(snapshot.neighbors[truth])}")
    incoming: list[list[int]] = [[] for _ in range(n)]
    for i, j in snapshot.edges():
        incoming[j].append(i)
    seen = np.zeros(n, dtype=bool)
    seen[truth] = True
    queue = deque([truth])
    while queue:
        j = queue.popleft()
        for i in incoming[j]:
            if not seen[i]:
                seen[i] = True
                queue.append(i)
    return seen[learner_indices(n, truth)]


def build_circulant(learners: int, degree: int) -> GraphSnapshot:
    """Tight fixed-graph construction with truth 0 and ``learners`` learners.

    Learner ``i`` (1-based among learners) points to the truth and to the
    ``degree - 1`` learners ``i, i+1, ..., i+degree-2`` taken cyclically, so
    the learner block is circulant and every learner has outdegree ``degree``.
    """
    if learners < 1:
        raise InvalidParameterError(f"need at least one learner, got {learners}")
    if not 1 <= degree <= learners:
        raise InvalidParameterError(f"degree must lie in [1, {learners}], got {degree}")
    sets = [frozenset()]
    for i in range(learners):
        sets.append(frozenset({0} | {1 + (i + off) % learners for off in range(degree - 1)}))
    return GraphSnapshot(learners + 1, tuple(sets))


# -- sequences ---------------------------------------------------------------


@dataclass(frozen=True)
class RandomModel:
    """Each learner picks ``degrees[i]`` distinct agents uniformly at random
    (itself and the truths included) at every step; truths pick nobody."""

    n: int
    truth_set: frozenset[int]
    degrees: tuple[int, ...]

    def __post_init__(self):
        truths = frozenset(int(i) for i in self.truth_set)
        object.__setattr__(self, "truth_set", truths)
        if self.n < 1:
            raise InvalidParameterError(f"agent count must be positive, got {self.n}")
        if any(not 0 <= i < self.n for i in truths):
            raise InvalidParameterError("truth index out of range")
        degs = tuple(int(d) for d in self.degrees)
        if len(degs) != self.n:
            raise ShapeError(f"expected {self.n} degrees, got {len(degs)}")
        degs = tuple(0 if i in truths else d for i, d in enumerate(degs))
        for i, d in enumerate(degs):
            if i not in truths and not 1 <= d <= self.n:
                raise InvalidParameterError(f"learner {i} degree {d} outside [1, {self.n}]")
        object.__setattr__(self, "degrees", degs)

    @classmethod
    def uniform(cls, n: int, m: int, truth_set: Iterable[int] = (0,)) -> RandomModel:
        return cls(n, frozenset(truth_set), (m,) * n)

    def degree_array(self) -> np.ndarray:
        return np.array(self.degrees, dtype=np.int64)


def sample_random_snapshot(model: RandomModel, t: int, seed: int) -> GraphSnapshot:
    """The snapshot of a random sequence at time ``t``; a pure function of
    ``(model, seed, t)``."""
    padded = kernels.sample_neighbors(int(seed), int(t), model.n, model.degree_array())
    sets = tuple(frozenset(int(j) for j in row[:d]) for row, d in zip(padded, model.degrees))
    return GraphSnapshot(model.n, sets)


class GraphSequence:
    """Rule giving the snapshot that governs the step from ``t`` to ``t+1``."""

    n: int

    def snapshot_at(self, t: int) -> GraphSnapshot:
        raise NotImplementedError


@dataclass(frozen=True)
class FixedSequence(GraphSequence):
    snapshot: GraphSnapshot

    @property
    def n(self) -> int:
        return self.snapshot.n

    def snapshot_at(self, t: int) -> GraphSnapshot:
        _check_time(t)
        return self.snapshot


@dataclass(frozen=True)
class PeriodicSequence(GraphSequence):
    snapshots: tuple[GraphSnapshot, ...]

    def __post_init__(self):
        snaps = tuple(self.snapshots)
        if not snaps:
            raise InvalidParameterError("periodic sequence needs at least one snapshot")
        if len({s.n for s in snaps}) != 1:
            raise ShapeError("snapshots disagree on agent count")
        object.__setattr__(self, "snapshots", snaps)

    @property
    def n(self) -> int:
        return self.snapshots[0].n

    @property
    def period(self) -> int:
        return len(self.snapshots)

    def snapshot_at(self, t: int) -> GraphSnapshot:
        _check_time(t)
        return self.snapshots[t % self.period]


@dataclass(frozen=True)
class RandomSequence(GraphSequence):
    model: RandomModel
    seed: int = 0

    @property
    def n(self) -> int:
        return self.model.n

    def snapshot_at(self, t: int) -> GraphSnapshot:
        _check_time(t)
        return sample_random_snapshot(self.model, t, self.seed)


@dataclass(frozen=True)
class ExplicitSequence(GraphSequence):
    snapshots: tuple[GraphSnapshot, ...]
    default: GraphSnapshot | None = field(default=None)

    def __post_init__(self):
        snaps = tuple(self.snapshots)
        sizes = {s.n for s in snaps} | ({self.default.n} if self.default is not None else set())
        if not sizes:
            raise InvalidParameterError("explicit sequence needs a snapshot or a default")
        if len(sizes) != 1:
            raise ShapeError("snapshots disagree on agent count")
        object.__setattr__(self, "snapshots", snaps)

    @property
    def n(self) -> int:
        return self.snapshots[0].n if self.snapshots else self.default.n

    def snapshot_at(self, t: int) -> GraphSnapshot:
        _check_time(t)
        if t < len(self.snapshots):
            return self.snapshots[t]
        if self.default is None:
            raise OutOfRangeError(f"explicit sequence has {len(self.snapshots)} snapshots, asked for t={t}")
        return self.default


def _check_time(t: int) -> None:
    if t < 0:
        raise InvalidParameterError(f"time must be nonnegative, got {t}")


def snapshot_at(sequence: GraphSequence, t: int) -> GraphSnapshot:
    return sequence.snapshot_at(t)


def build_periodic_tight(learners: int, degree: int, period: int) -> PeriodicSequence:
    """Circulant graph at multiples of ``period``, empty graphs in between."""
    if period < 1:
        raise InvalidParameterError(f"period must be >= 1, got {period}")
    g = build_circulant(learners, degree)
    blank = GraphSnapshot.empty(g.n)
    return PeriodicSequence((g,) + (blank,) * (period - 1))


def period_degrees(sequence: GraphSequence) -> tuple[np.ndarray, int]:
    """Per-agent total outdegree over one period, and its maximum over learners.

    Learners are the agents with a positive total; the first array is indexed
    by agent.
    """
    if isinstance(sequence, FixedSequence):
        snaps: Sequence[GraphSnapshot] = (sequence.snapshot,)
    elif isinstance(sequence, PeriodicSequence):
        snaps = sequence.snapshots
    else:
        raise UnsupportedSequenceError(
            f"period degrees need a fixed or periodic sequence, got {type(sequence).__name__}"
        )
    total = sum(out_degrees(s) for s in snaps)
    return total, int(total.max()) if total.size else 0


# -- packing for the kernels -------------------------------------------------


def pack_snapshots(snapshots: Sequence[GraphSnapshot]) -> tuple[np.ndarray, np.ndarray]:
    """Padded neighbour arrays ``(nbr, deg)`` of shapes ``(T, n, dmax)`` and ``(T, n)``.

    Neighbours are listed in increasing order; padding is -1.
    """
    n = snapshots[0].n
    period = len(snapshots)
    deg = np.zeros((period, n), dtype=np.int64)
    for p, s in enumerate(snapshots):
        deg[p] = out_degrees(s)
    dmax = max(1, int(deg.max()) if deg.size else 1)
    nbr = np.full((period, n, dmax), -1, dtype=np.int64)
    for p, s in enumerate(snapshots):
        for i, nb in enumerate(s.neighbors):
            if nb:
                nbr[p, i, : len(nb)] = sorted(nb)
    return nbr, deg


# -- file format -------------------------------------------------------------


def format_graph(snapshot: GraphSnapshot) -> str:
    lines = [f"n {snapshot.n}"]
    lines += [f"{i} {j}" for i, j in snapshot.edges()]
    return "\n".join(lines) + "\n"


def parse_graph(text: str, path=None) -> GraphSnapshot:
    """Parse ``n <count>`` followed by one ``src dst`` edge per line.

    Blank lines and ``#`` comments are ignored.
    """
    n = None
    sets: list[set[int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if n is None:
            if len(tokens) != 2 or tokens[0] != "n":
                raise GraphParseError('expected header "n <count>"', lineno, path)
            try:
                n = int(tokens[1])
            except ValueError:
                raise GraphParseError(f"bad agent count {tokens[1]!r}", lineno, path) from None
            if n < 1:
                raise GraphParseError(f"agent count must be positive, got {n}", lineno, path)
            sets = [set() for _ in range(n)]
            continue
        if len(tokens) != 2:
            raise GraphParseError(f'expected "src dst", got {line!r}', lineno, path)
        try:
            src, dst = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise GraphParseError(f"non-integer agent id in {line!r}", lineno, path) from None
        if not (0 <= src < n and 0 <= dst < n):
            raise GraphParseError(f"agent id out of range [0, {n}) in {line!r}", lineno, path)
        if dst in sets[src]:
            raise GraphParseError(f"duplicate edge {src} {dst}", lineno, path)
        sets[src].add(dst)
    if n is None:
        raise GraphParseError('missing header "n <count>"', None, path)
    return GraphSnapshot(n, tuple(frozenset(s) for s in sets))


def read_graph(path) -> GraphSnapshot:
    path = Path(path)
    return parse_graph(path.read_text(), path=path)


def write_graph(snapshot: GraphSnapshot, path) -> None:
    Path(path).write_text(format_graph(snapshot))


def write_periodic(sequence: PeriodicSequence, directory) -> Path:
    """One graph file per snapshot plus ``manifest.json`` listing them in order."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for r, snap in enumerate(sequence.snapshots):
        name = f"snapshot_{r:03d}.txt"
        write_graph(snap, directory / name)
        names.append(name)
    manifest = directory / "manifest.json"
    manifest.write_text(json.dumps({"kind": "periodic", "period": len(names), "snapshots": names}, indent=2) + "\n")
    return manifest


def read_sequence(path) -> GraphSequence:
    """A graph file gives a fixed sequence; a manifest gives a periodic one."""
    path = Path(path)
    if path.suffix == ".json":
        try:
            data = json.loads(path.read_text())
            names = data["snapshots"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise GraphParseError(f"bad manifest: {exc}", None, path) from None
        return PeriodicSequence(tuple(read_graph(path.parent / name) for name in names))
    return FixedSequence(read_graph(path))
