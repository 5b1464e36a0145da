"""Gaussian social learning and sequential Bayes estimation.

Two stochastic models whose *expected* behaviour is the increasing
self-confidence dynamics:

* Bayesian-without-recall learning, where a learner fuses noisy signals
  sampled from its neighbours' Gaussian beliefs with its own belief, weighting
  by precision;
* per-arm Bayes estimators of a multi-armed bandit, each arm acting as a
  truth and its estimator as a learner listening only to it.

Randomness comes from NumPy generators; Monte Carlo helpers give replicate
``r`` its own stream spawned from ``(seed, r)`` so results do not depend on
how replicates are batched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from confidyn.dynamics import SystemState, step_agentwise
from confidyn.errors import (
    InvalidParameterError,
    InvalidStateError,
    MappingUndefinedError,
    ShapeError,
)
from confidyn.graphs import GraphSequence, GraphSnapshot, pack_snapshots


@dataclass(frozen=True)
class GaussianBelief:
    mu: np.ndarray
    tau: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mu", np.atleast_1d(np.asarray(self.mu, dtype=np.float64)))
        if not self.tau >= 0:
            raise InvalidParameterError(f"precision must be nonnegative, got {self.tau}")


def bayes_update(estimator: GaussianBelief, datum, signal_tau: float) -> GaussianBelief:
    """Conjugate update of a Gaussian estimator with one observation of
    precision ``signal_tau``; an infinite precision adopts the datum."""
    if not signal_tau > 0:
        raise InvalidParameterError(f"signal precision must be positive, got {signal_tau}")
    datum = np.atleast_1d(np.asarray(datum, dtype=np.float64))
    if np.isinf(signal_tau):
        return GaussianBelief(datum.copy(), np.inf)
    tau = estimator.tau
    mu = (tau * estimator.mu + signal_tau * datum) / (tau + signal_tau)
    return GaussianBelief(mu, tau + signal_tau)


# -- Bayesian without recall -------------------------------------------------


@dataclass
class BWRSystem:
    """Beliefs of ``n`` agents. Truths have infinite precision (zero variance)
    and never update."""

    mu: np.ndarray
    tau: np.ndarray
    signal_tau: float
    truth_set: frozenset[int] = field(default_factory=lambda: frozenset({0}))

    def __post_init__(self):
        mu = np.array(self.mu, dtype=np.float64)
        if mu.ndim == 1:
            mu = mu[:, None]
        tau = np.array(self.tau, dtype=np.float64).reshape(-1)
        if tau.shape[0] != mu.shape[0]:
            raise ShapeError(f"{mu.shape[0]} means but {tau.shape[0]} precisions")
        if self.signal_tau < 0 or np.isnan(self.signal_tau):
            raise InvalidParameterError(f"signal precision must be nonnegative, got {self.signal_tau}")
        truths = frozenset(int(i) for i in self.truth_set)
        tau[list(truths)] = np.inf
        learners = [i for i in range(mu.shape[0]) if i not in truths]
        if np.any(tau[learners] < 0) or not np.all(np.isfinite(tau[learners])):
            raise InvalidStateError("learner precisions must be finite and nonnegative")
        self.mu, self.tau, self.truth_set = mu, tau, truths

    @property
    def n(self) -> int:
        return self.mu.shape[0]

    @property
    def beliefs(self) -> list[GaussianBelief]:
        return [GaussianBelief(self.mu[i], self.tau[i]) for i in range(self.n)]

    def learner_mask(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[list(self.truth_set)] = False
        return mask


def _bwr_shapes(system: BWRSystem, snapshot: GraphSnapshot):
    if snapshot.n != system.n:
        raise ShapeError(f"snapshot has {snapshot.n} agents, system has {system.n}")
    nbr, deg = pack_snapshots([snapshot])
    nbr, deg = nbr[0], deg[0].copy()
    deg[~system.learner_mask()] = 0
    return nbr, deg, (system.n, nbr.shape[1], 2, system.mu.shape[1])


def _bwr_update(mu, tau, nbr, deg, signal_tau, z):
    """Batched belief update. ``mu`` is ``(R, n, k)``, ``z`` is ``(R, n, dmax, 2, k)``.

    Signal from ``j`` = ``mu_j + z0 / sqrt(tau_j) + z1 / sqrt(signal_tau)``.
    """
    new_mu = mu.copy()
    active = np.flatnonzero(deg)
    if signal_tau == 0 or active.size == 0:
        return new_mu, tau.copy()
    used = np.unique(np.concatenate([nbr[i, : deg[i]] for i in active]))
    if np.any(tau[used] == 0):
        raise InvalidStateError("an agent with zero precision cannot emit a signal")
    belief_sd = np.where(np.isinf(tau), 0.0, 1.0 / np.sqrt(np.where(tau > 0, tau, 1.0)))
    noise_sd = 1.0 / np.sqrt(signal_tau)
    new_tau = tau.copy()
    for i in active:
        total = np.zeros_like(mu[:, i])
        for slot in range(deg[i]):
            j = nbr[i, slot]
            total = total + (mu[:, j] + belief_sd[j] * z[:, i, slot, 0] + noise_sd * z[:, i, slot, 1])
        new_mu[:, i] = (tau[i] * mu[:, i] + signal_tau * total) / (tau[i] + signal_tau * deg[i])
        new_tau[i] = tau[i] + signal_tau * deg[i]
    return new_mu, new_tau


def bwr_step(system: BWRSystem, snapshot: GraphSnapshot, rng: np.random.Generator) -> BWRSystem:
    """One synchronous round; every signal is drawn from pre-update beliefs."""
    nbr, deg, shape = _bwr_shapes(system, snapshot)
    z = rng.standard_normal(shape)[None]
    mu, tau = _bwr_update(system.mu[None], system.tau, nbr, deg, system.signal_tau, z)
    return BWRSystem(mu[0], tau, system.signal_tau, system.truth_set)


def bwr_expected_system(system: BWRSystem) -> SystemState:
    """Engine state whose deterministic trajectory is the mean BWR trajectory.

    Confidences are precisions in units of the signal precision; truths get 0
    (they never move).
    """
    if system.signal_tau == 0:
        raise MappingUndefinedError("signal precision 0 has no confidence equivalent")
    w = system.tau / system.signal_tau
    w[~system.learner_mask()] = 0.0
    return SystemState(system.mu.copy(), w, 0)


def _strip_truths(snapshot: GraphSnapshot, truths) -> GraphSnapshot:
    sets = tuple(frozenset() if i in truths else s for i, s in enumerate(snapshot.neighbors))
    return GraphSnapshot(snapshot.n, sets)


def replicate_rngs(seed: int, replicates: range) -> list[np.random.Generator]:
    return [np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r,))) for r in replicates]


def bwr_replicates(system: BWRSystem, sequence: GraphSequence, steps: int, seed: int, replicates: range) -> np.ndarray:
    """Means of each replicate at every step, shape ``(R, steps + 1, n, k)``."""
    rngs = replicate_rngs(seed, replicates)
    r = len(rngs)
    mu = np.broadcast_to(system.mu, (r,) + system.mu.shape).copy()
    tau = system.tau.copy()
    out = np.empty((r, steps + 1) + system.mu.shape)
    out[:, 0] = mu
    for t in range(steps):
        nbr, deg, shape = _bwr_shapes(system, sequence.snapshot_at(t))
        z = np.stack([g.standard_normal(shape) for g in rngs]) if r else np.zeros((0,) + shape)
        mu, tau = _bwr_update(mu, tau, nbr, deg, system.signal_tau, z)
        out[:, t + 1] = mu
    return out


def bwr_engine_prediction(system: BWRSystem, sequence: GraphSequence, steps: int) -> np.ndarray:
    """Deterministic engine opinions for ``steps`` steps, shape ``(steps + 1, n, k)``."""
    state = bwr_expected_system(system)
    out = [state.x.copy()]
    for t in range(steps):
        state = step_agentwise(state, _strip_truths(sequence.snapshot_at(t), system.truth_set))
        out.append(state.x.copy())
    return np.array(out)


@dataclass
class MonteCarloComparison:
    """Replicate means against a deterministic prediction.

    ``z[t, i, c]`` is ``|mean - prediction| / standard_error`` (0 where both
    the deviation and the standard error vanish).
    """

    mean: np.ndarray
    stderr: np.ndarray
    prediction: np.ndarray
    replicates: int

    @property
    def z(self) -> np.ndarray:
        dev = np.abs(self.mean - self.prediction)
        safe = np.where(self.stderr > 0, self.stderr, 1.0)
        return np.where(self.stderr > 0, dev / safe, np.where(dev <= 1e-12, 0.0, np.inf))

    @property
    def max_z(self) -> float:
        return float(self.z.max()) if self.z.size else 0.0

    def within(self, k: float = 3.0) -> bool:
        return self.max_z <= k

    def to_dict(self) -> dict:
        return {
            "replicates": self.replicates,
            "mean": self.mean.tolist(),
            "stderr": self.stderr.tolist(),
            "prediction": self.prediction.tolist(),
            "max_deviation": float(np.max(np.abs(self.mean - self.prediction))) if self.mean.size else 0.0,
            "max_z": self.max_z,
            "within_3se": self.within(3.0),
        }


def summarize(samples: np.ndarray, prediction: np.ndarray) -> MonteCarloComparison:
    r = samples.shape[0]
    mean = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / np.sqrt(r) if r > 1 else np.zeros_like(mean)
    return MonteCarloComparison(mean, stderr, prediction, r)


# -- bandits -----------------------------------------------------------------


@dataclass
class BanditInstance:
    theta: np.ndarray
    noise_sigma: float
    prior_mu: float = 0.0
    prior_tau: float = 0.0

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64).reshape(-1)
        if self.theta.size < 1:
            raise InvalidParameterError("need at least one arm")
        if not self.noise_sigma >= 0:
            raise InvalidParameterError(f"noise sigma must be nonnegative, got {self.noise_sigma}")
        if not self.prior_tau >= 0:
            raise InvalidParameterError(f"prior precision must be nonnegative, got {self.prior_tau}")

    @property
    def arms(self) -> int:
        return self.theta.size

    @property
    def signal_tau(self) -> float:
        return np.inf if self.noise_sigma == 0 else self.noise_sigma ** -2


@dataclass
class BanditTrace:
    """``estimates[t, k]`` is arm ``k``'s estimator mean after ``t`` pulls in total."""

    estimates: np.ndarray
    precisions: np.ndarray
    pulls: np.ndarray
    theta: np.ndarray

    @property
    def abs_error(self) -> np.ndarray:
        return np.abs(self.estimates - self.theta)


def _bandit_batch(instance: BanditInstance, horizon: int, z: np.ndarray):
    """Round-robin pulls for a batch; ``z`` is ``(R, horizon)`` standard normals."""
    k = instance.arms
    r = z.shape[0]
    mu = np.full((r, k), float(instance.prior_mu))
    tau = np.full(k, float(instance.prior_tau))
    est = np.empty((r, horizon + 1, k))
    prec = np.empty((horizon + 1, k))
    pulls = np.zeros(k, dtype=np.int64)
    est[:, 0], prec[0] = mu, tau
    stau = instance.signal_tau
    for t in range(horizon):
        arm = t % k
        datum = instance.theta[arm] + instance.noise_sigma * z[:, t]
        if np.isinf(stau):
            mu[:, arm] = datum
            tau[arm] = np.inf
        else:
            mu[:, arm] = (tau[arm] * mu[:, arm] + stau * datum) / (tau[arm] + stau)
            tau[arm] = tau[arm] + stau
        pulls[arm] += 1
        est[:, t + 1], prec[t + 1] = mu, tau
    return est, prec, pulls


def bandit_run(instance: BanditInstance, horizon: int, rng: np.random.Generator) -> BanditTrace:
    """Pull arms round-robin (arm ``t mod K`` at step ``t``) and update each
    arm's estimator by the conjugate Gaussian rule."""
    if horizon < instance.arms:
        raise InvalidParameterError(f"horizon {horizon} shorter than arm count {instance.arms}")
    z = rng.standard_normal(horizon)[None]
    est, prec, pulls = _bandit_batch(instance, horizon, z)
    return BanditTrace(est[0], prec, pulls, instance.theta)


def bandit_replicates(instance: BanditInstance, horizon: int, seed: int, replicates: range) -> np.ndarray:
    """Estimator means for each replicate, shape ``(R, horizon + 1, K)``."""
    if horizon < instance.arms:
        raise InvalidParameterError(f"horizon {horizon} shorter than arm count {instance.arms}")
    rngs = replicate_rngs(seed, replicates)
    z = np.stack([g.standard_normal(horizon) for g in rngs]) if rngs else np.zeros((0, horizon))
    return _bandit_batch(instance, horizon, z)[0]


def bandit_engine_prediction(instance: BanditInstance, horizon: int) -> np.ndarray:
    """Expected estimator means from the engine, shape ``(horizon + 1, K)``.

    Arm ``k`` and its estimator form a truth-learner pair; the learner listens
    to the truth exactly at the steps where arm ``k`` is pulled.
    """
    k = instance.arms
    stau = instance.signal_tau
    w0 = 0.0 if np.isinf(stau) else instance.prior_tau / stau
    listen = GraphSnapshot(2, (frozenset(), frozenset({0})))
    idle = GraphSnapshot.empty(2)
    states = [SystemState(np.array([th, instance.prior_mu]), np.array([0.0, w0])) for th in instance.theta]
    out = np.empty((horizon + 1, k))
    out[0] = instance.prior_mu
    for t in range(horizon):
        pulled = t % k
        states = [step_agentwise(s, listen if a == pulled else idle) for a, s in enumerate(states)]
        out[t + 1] = [s.x[1, 0] for s in states]
    return out
