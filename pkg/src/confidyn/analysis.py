"""Spectral gap, influence indicators and convergence-rate fits.

All operations here assume a single truth. The learner block of a matrix is
the matrix with the truth's row and column deleted; its rows are the
learners in increasing index order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from confidyn.dynamics import SystemState, Trajectory, update_matrix
from confidyn.errors import (
    InvalidParameterError,
    InvalidTruthError,
    SingularDegreeError,
    UnfittableError,
    UnsupportedAnalysisError,
)
from confidyn.graphs import (
    GraphSequence,
    GraphSnapshot,
    learner_indices,
    out_degrees,
    truth_reachability,
)


def _single_truth(truth) -> int:
    if isinstance(truth, Iterable):
        truths = list(truth)
        if len(truths) != 1:
            raise UnsupportedAnalysisError(
                f"analysis supports exactly one truth, got {len(truths)}"
            )
        truth = truths[0]
    return int(truth)


def _check_truth(snapshot: GraphSnapshot, truth: int) -> None:
    if not 0 <= truth < snapshot.n:
        raise InvalidTruthError(f"truth index {truth} out of range")
    if snapshot.neighbors[truth]:
        raise InvalidTruthError(f"truth {truth} has out-neighbors")


def learner_block(snapshot: GraphSnapshot, w, truth=0) -> np.ndarray:
    """Sub-stochastic learner block of the update matrix at confidences ``w``."""
    truth = _single_truth(truth)
    _check_truth(snapshot, truth)
    keep = learner_indices(snapshot.n, truth)
    return update_matrix(snapshot, w)[np.ix_(keep, keep)]


def influence_step(snapshot: GraphSnapshot, w, truth=0) -> np.ndarray:
    """One-step influence received from the truth: ``1 - rowsum(P)``."""
    p = learner_block(snapshot, w, truth)
    return 1.0 - p.sum(axis=1)


# -- spectral ----------------------------------------------------------------


@dataclass
class SpectralReport:
    eigen_moduli: np.ndarray
    nu: float
    reachable: bool

    @property
    def max_modulus(self) -> float:
        return float(self.eigen_moduli[0]) if self.eigen_moduli.size else 0.0

    def to_dict(self) -> dict:
        return {
            "nu": float(self.nu),
            "max_modulus": self.max_modulus,
            "reachable": bool(self.reachable),
            "eigen_moduli": [float(v) for v in self.eigen_moduli],
        }


def degree_normalized_block(snapshot: GraphSnapshot, truth=0) -> np.ndarray:
    """Learner block of ``D^{-1} A`` (confidence plays no role here)."""
    truth = _single_truth(truth)
    _check_truth(snapshot, truth)
    keep = learner_indices(snapshot.n, truth)
    deg = out_degrees(snapshot)[keep]
    if np.any(deg == 0):
        raise SingularDegreeError(f"learners {keep[deg == 0].tolist()} have zero outdegree")
    a = snapshot.adjacency()[np.ix_(keep, keep)]
    return a / deg[:, None]


def spectral_gap(snapshot: GraphSnapshot, truth=0) -> SpectralReport:
    """One minus the largest eigenvalue modulus of the learner block of ``D^{-1}A``."""
    truth = _single_truth(truth)
    block = degree_normalized_block(snapshot, truth)
    reachable = bool(np.all(truth_reachability(snapshot, truth)))
    if block.size == 0:
        return SpectralReport(np.zeros(0), 1.0, reachable)
    moduli = np.sort(np.abs(np.linalg.eigvals(block)))[::-1]
    nu = min(1.0, max(0.0, 1.0 - float(moduli[0])))
    return SpectralReport(moduli, nu, reachable)


def circulant_eigenvalues(learners: int, degree: int) -> np.ndarray:
    """Eigenvalues ``(1 + w + ... + w^{d-2}) / d`` over the ``learners``-th roots of unity."""
    if not 1 <= degree <= learners:
        raise InvalidParameterError(f"degree must lie in [1, {learners}], got {degree}")
    omega = np.exp(2j * np.pi * np.arange(learners) / learners)
    powers = omega[:, None] ** np.arange(degree - 1)[None, :]
    return powers.sum(axis=1) / degree


# -- influence indicators over windows --------------------------------------


def weights_at(sequence: GraphSequence, init_w, t: int) -> np.ndarray:
    w = np.array(init_w, dtype=np.float64)
    for r in range(t):
        w = w + out_degrees(sequence.snapshot_at(r))
    return w


@dataclass
class WindowBlocks:
    """Learner blocks ``P(r)`` for ``s <= r < t`` and the confidences they used.

    ``weights[r - s]`` is the full confidence vector at time ``r`` (so the
    list has ``t - s + 1`` entries).
    """

    s: int
    t: int
    truth: int
    blocks: list[np.ndarray]
    weights: list[np.ndarray]

    def product(self, hi: int, lo: int) -> np.ndarray:
        """``P(hi:lo) = P(hi-1) ... P(lo)``; the identity when ``hi == lo``."""
        if not self.s <= lo <= hi <= self.t:
            raise InvalidParameterError(f"window [{lo}, {hi}) outside [{self.s}, {self.t}]")
        size = self.blocks[0].shape[0] if self.blocks else self.weights[0].shape[0] - 1
        out = np.eye(size)
        for r in range(lo, hi):
            out = self.blocks[r - self.s] @ out
        return out

    def step_indicator(self, r: int) -> np.ndarray:
        return 1.0 - self.blocks[r - self.s].sum(axis=1)


def window_blocks(sequence: GraphSequence, init_w, s: int, t: int, truth=0) -> WindowBlocks:
    truth = _single_truth(truth)
    if not 0 <= s < t:
        raise InvalidParameterError(f"need 0 <= s < t, got s={s}, t={t}")
    w = weights_at(sequence, init_w, s)
    blocks, weights = [], [w]
    for r in range(s, t):
        snap = sequence.snapshot_at(r)
        blocks.append(learner_block(snap, w, truth))
        w = w + out_degrees(snap)
        weights.append(w)
    return WindowBlocks(s, t, truth, blocks, weights)


def influence_window(sequence: GraphSequence, init_w, s: int, t: int, truth=0) -> np.ndarray:
    """Influence from the truth accumulated over ``[s, t)``: ``1 - rowsum(P(t:s))``."""
    wb = window_blocks(sequence, init_w, s, t, truth)
    return 1.0 - wb.product(t, s).sum(axis=1)


def lemma1_bound(sequence: GraphSequence, s: int, t: int, truth=0, init_w=None) -> np.ndarray:
    """Elementwise lower bound ``w(s)/w(t) * sum_k alpha(k)`` on the window indicator.

    Entries with ``w_i(t) = 0`` are 0.
    """
    truth = _single_truth(truth)
    if init_w is None:
        init_w = np.zeros(sequence.n)
    wb = window_blocks(sequence, init_w, s, t, truth)
    return _bound_from_blocks(wb)


def _bound_from_blocks(wb: WindowBlocks) -> np.ndarray:
    keep = learner_indices(wb.weights[0].shape[0], wb.truth)
    ws, wt = wb.weights[0][keep], wb.weights[-1][keep]
    total = sum(wb.step_indicator(r) for r in range(wb.s, wb.t))
    ratio = np.divide(ws, wt, out=np.zeros_like(ws), where=wt > 0)
    return ratio * total


# -- rates -------------------------------------------------------------------


def sup_norm(state, truth: int = 0) -> float:
    """Largest infinity-norm distance from a learner to the truth."""
    x = state.x if isinstance(state, SystemState) else np.asarray(state, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] <= 1:
        return 0.0
    diff = np.abs(x - x[truth])
    diff[truth] = 0.0
    return float(diff.max())


@dataclass
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    window: tuple[int, int]

    def to_dict(self) -> dict:
        return {
            "slope": float(self.slope),
            "intercept": float(self.intercept),
            "r2": float(self.r_squared),
            "window": [int(self.window[0]), int(self.window[1])],
        }


def default_window(times) -> tuple[int, int]:
    """The last two decades of recorded time."""
    hi = int(np.max(times))
    return max(1, hi // 100), hi


def fit_polynomial_rate(trajectory, window: tuple[int, int] | None = None) -> RateFit:
    """Least-squares line through ``(log t, log sup_norm)`` inside ``window``.

    Accepts a :class:`Trajectory` or a ``(times, values)`` pair. Samples with
    ``t <= 0`` or a zero value are skipped.
    """
    if isinstance(trajectory, Trajectory):
        times, values = trajectory.times, trajectory.sup_norm
    else:
        times, values = trajectory
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if times.size == 0:
        raise UnfittableError("empty trajectory")
    lo, hi = window if window is not None else default_window(times)
    if lo > hi:
        raise UnfittableError(f"empty window [{lo}, {hi}]")
    sel = (times >= lo) & (times <= hi) & (times > 0) & (values > 0) & np.isfinite(values)
    if sel.sum() < 2:
        raise UnfittableError(f"fewer than two positive samples in window [{lo}, {hi}]")
    lx, ly = np.log(times[sel]), np.log(values[sel])
    mx, my = lx.mean(), ly.mean()
    sxx = np.sum((lx - mx) ** 2)
    if sxx == 0:
        raise UnfittableError("all samples share one time value")
    slope = float(np.sum((lx - mx) * (ly - my)) / sxx)
    intercept = float(my - slope * mx)
    ss_tot = float(np.sum((ly - my) ** 2))
    ss_res = float(np.sum((ly - intercept - slope * lx) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return RateFit(slope, intercept, r2, (int(lo), int(hi)))
