"""The increasing self-confidence dynamics.

Each learner replaces its opinion by the weighted mean of its own opinion
(weight ``w_i``) and its neighbours' opinions (weight 1 each), then adds its
outdegree to ``w_i``. Opinions are ``(n, k)`` arrays; scalar opinions are
stored with ``k = 1``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from confidyn import kernels
from confidyn.errors import (
    InvalidParameterError,
    InvalidStateError,
    InvalidTruthError,
    ShapeError,
    SingularDegreeError,
)
from confidyn.graphs import (
    ExplicitSequence,
    FixedSequence,
    GraphSequence,
    GraphSnapshot,
    PeriodicSequence,
    RandomSequence,
    out_degrees,
    pack_snapshots,
)


@dataclass
class SystemState:
    x: np.ndarray
    w: np.ndarray
    t: int = 0

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2:
            raise ShapeError(f"opinions must be (n,) or (n, k), got shape {x.shape}")
        w = np.array(self.w, dtype=np.float64).reshape(-1)
        if w.shape[0] != x.shape[0]:
            raise ShapeError(f"{x.shape[0]} opinions but {w.shape[0]} confidences")
        if np.any(w < 0) or np.any(np.isnan(w)):
            raise InvalidStateError("self-confidences must be nonnegative")
        self.x = x
        self.w = w

    @classmethod
    def initial(cls, x0, w0=None) -> SystemState:
        """State at t=0; confidences default to zero."""
        x = np.asarray(x0, dtype=np.float64)
        w = np.zeros(x.shape[0]) if w0 is None else w0
        return cls(x, w, 0)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def copy(self) -> SystemState:
        return SystemState(self.x.copy(), self.w.copy(), self.t)


def _check(state: SystemState, snapshot: GraphSnapshot) -> None:
    if snapshot.n != state.n:
        raise ShapeError(f"snapshot has {snapshot.n} agents, state has {state.n}")
    if np.any(state.w < 0):
        raise InvalidStateError("self-confidences must be nonnegative")


def step_agentwise(state: SystemState, snapshot: GraphSnapshot) -> SystemState:
    """One synchronous step, evaluated agent by agent."""
    _check(state, snapshot)
    x, w = state.x, state.w
    new_x = x.copy()
    new_w = w.copy()
    for i, nb in enumerate(snapshot.neighbors):
        if not nb:
            continue
        total = w[i] * x[i]
        for j in sorted(nb):
            total = total + x[j]
        new_x[i] = total / (w[i] + len(nb))
        new_w[i] = w[i] + len(nb)
    return SystemState(new_x, new_w, state.t + 1)


def update_matrix(snapshot: GraphSnapshot, w) -> np.ndarray:
    """Row-stochastic ``(W + D)^{-1} (W + A)``; agents with ``w_i + |N_i| = 0``
    get the identity row."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (snapshot.n,):
        raise ShapeError(f"expected {snapshot.n} confidences, got shape {w.shape}")
    if np.any(w < 0):
        raise InvalidStateError("self-confidences must be nonnegative")
    a = snapshot.adjacency()
    denom = w + out_degrees(snapshot)
    m = np.diag(w) + a
    live = denom > 0
    m[live] /= denom[live, None]
    m[~live] = np.eye(snapshot.n)[~live]
    return m


def step_matrix(state: SystemState, snapshot: GraphSnapshot) -> SystemState:
    """One step as ``x' = M x``."""
    _check(state, snapshot)
    m = update_matrix(snapshot, state.w)
    return SystemState(m @ state.x, state.w + out_degrees(snapshot), state.t + 1)


# -- trajectories ------------------------------------------------------------


def record_times(horizon: int, stride: int = 1, ratio: float | None = None) -> np.ndarray:
    """Clock values to record: every ``stride`` steps, or geometrically with
    the given ``ratio``. Always includes 0 and ``horizon``."""
    if horizon < 0:
        raise InvalidParameterError(f"horizon must be >= 0, got {horizon}")
    if ratio is not None:
        if ratio <= 1.0:
            raise InvalidParameterError(f"geometric ratio must exceed 1, got {ratio}")
        times = [0]
        t = 1
        while t < horizon:
            times.append(t)
            t = max(t + 1, int(np.ceil(t * ratio)))
    else:
        if stride < 1:
            raise InvalidParameterError(f"stride must be >= 1, got {stride}")
        times = list(range(0, horizon, stride)) or [0]
    if times[-1] != horizon:
        times.append(horizon)
    return np.array(times, dtype=np.int64)


@dataclass
class Trajectory:
    times: np.ndarray
    sup_norm: np.ndarray
    states: dict[int, np.ndarray] = field(default_factory=dict)
    final: SystemState | None = None

    def to_csv(self, path) -> None:
        write_series_csv(path, self.times, self.sup_norm)

    def states_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["t", "agent", "coord", "value"])
            for t in sorted(self.states):
                x = self.states[t]
                for i in range(x.shape[0]):
                    for c in range(x.shape[1]):
                        out.writerow([t, i, c, repr(float(x[i, c]))])


def write_series_csv(path, times, values) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["t", "sup_norm"])
        for t, v in zip(times, values):
            out.writerow([int(t), repr(float(v))])


def read_series_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0].astype(np.int64), data[:, 1]


def run(
    sequence: GraphSequence,
    init: SystemState,
    horizon: int,
    stride: int = 1,
    ratio: float | None = None,
    truth: int = 0,
    state_stride: int | None = None,
) -> Trajectory:
    """Drive ``init`` through ``horizon`` steps of ``sequence``.

    Records the sup distance to ``truth`` at the clock values chosen by
    :func:`record_times` (offset by ``init.t``) and, when ``state_stride`` is
    given, full opinion arrays every ``state_stride`` steps.
    """
    if horizon < 0:
        raise InvalidParameterError(f"horizon must be >= 0, got {horizon}")
    if sequence.n != init.n:
        raise ShapeError(f"sequence has {sequence.n} agents, state has {init.n}")
    if not 0 <= truth < init.n:
        raise InvalidTruthError(f"truth index {truth} out of range")
    t0 = init.t
    rec = record_times(horizon, stride, ratio) + t0
    x = np.ascontiguousarray(init.x, dtype=np.float64).copy()
    w = init.w.copy()

    cuts = [t0 + horizon]
    if state_stride is not None:
        if state_stride < 1:
            raise InvalidParameterError(f"state stride must be >= 1, got {state_stride}")
        cuts = sorted(set(range(t0, t0 + horizon, state_stride)) | {t0 + horizon})
    states: dict[int, np.ndarray] = {}
    sup = np.full(rec.shape[0], np.nan)

    if isinstance(sequence, RandomSequence):
        seeds = np.array([sequence.seed], dtype=np.uint64)
        degrees = sequence.model.degree_array()
        xb = x[None].copy()

        def advance(t, steps, times):
            nonlocal w
            out = kernels.run_random(xb, w, degrees, seeds, t, steps, times, truth)[0]
            w = w + steps * degrees
            return out

        def current():
            return xb[0]
    else:
        if isinstance(sequence, FixedSequence):
            packed = pack_snapshots([sequence.snapshot])
        elif isinstance(sequence, PeriodicSequence):
            packed = pack_snapshots(sequence.snapshots)
        else:
            packed = None

        def advance(t, steps, times):
            if packed is not None:
                return kernels.run_schedule(x, w, packed[0], packed[1], t, steps, times, truth)
            return _run_explicit(sequence, x, w, t, steps, times, truth)

        def current():
            return x

    t = t0
    for cut in cuts:
        if state_stride is not None:
            states[t] = current().copy()
        lo = np.searchsorted(rec, t, side="left")
        hi = np.searchsorted(rec, cut, side="right")
        if cut > t or hi > lo:
            part = advance(t, cut - t, rec[lo:hi])
            sup[lo:hi] = part
        t = cut
    if state_stride is not None:
        states[t] = current().copy()
    final = SystemState(current().copy(), w.copy(), t0 + horizon)
    return Trajectory(rec, sup, states, final)


def _run_explicit(sequence, x, w, t0, steps, times, truth):
    out = np.full(len(times), np.nan)
    ri = 0
    for step in range(steps + 1):
        t = t0 + step
        while ri < len(times) and times[ri] == t:
            out[ri] = kernels.sup_distance(x, truth)
            ri += 1
        if step == steps:
            break
        nbr, deg = pack_snapshots([sequence.snapshot_at(t)])
        kernels.step_padded(x, w, nbr[0], deg[0])
    return out


def fixed_closed_form(snapshot: GraphSnapshot, x0, t: int, truth: int = 0) -> np.ndarray:
    """Opinions after ``t`` steps on a fixed graph from zero confidence.

    Uses the running sum ``S(t) = x(0) + ... + x(t)``, which obeys
    ``S(t+1) = (I + Q/(t+1)) S(t)`` with ``Q = D^{-1} A``; then
    ``x(t) = Q S(t-1) / t``. The truth row of ``Q`` is the identity row.
    """
    if t < 1:
        raise InvalidParameterError(f"closed form needs t >= 1, got {t}")
    n = snapshot.n
    if snapshot.neighbors[truth]:
        raise InvalidTruthError(f"truth {truth} has out-neighbors")
    deg = out_degrees(snapshot)
    lonely = [i for i in range(n) if i != truth and deg[i] == 0]
    if lonely:
        raise SingularDegreeError(f"learners {lonely} have zero outdegree")
    q = snapshot.adjacency()
    q[truth, truth] = 1.0
    deg[truth] = 1
    q /= deg[:, None]
    x0 = np.asarray(x0, dtype=np.float64)
    s = x0.copy()
    for step in range(1, t):
        s = s + q @ s / step
    return q @ s / t
