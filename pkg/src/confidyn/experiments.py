"""Batch Monte Carlo runs behind the command-line tools.

Replicates are split into contiguous chunks and handed to a thread pool (the
compiled kernels release the GIL). Every replicate draws from its own
counter-keyed stream, and results are reassembled in replicate order, so the
output does not depend on the pool size.
"""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from confidyn import _rng, kernels
from confidyn.analysis import RateFit, SpectralReport, fit_polynomial_rate, spectral_gap
from confidyn.config import BanditConfig, BWRConfig, ExperimentConfig, parse_init
from confidyn.dynamics import SystemState, record_times, run, write_series_csv
from confidyn.errors import InvalidParameterError
from confidyn.graphs import (
    FixedSequence,
    GraphSequence,
    GraphSnapshot,
    RandomModel,
    build_circulant,
    build_periodic_tight,
    read_graph,
    read_sequence,
)
from confidyn.learning import (
    BanditInstance,
    BWRSystem,
    bandit_engine_prediction,
    bandit_replicates,
    bwr_engine_prediction,
    bwr_replicates,
    summarize,
)

log = logging.getLogger(__name__)

WORKERS_ENV = "CONFIDYN_WORKERS"
R2_FLAG = 0.95


def worker_count(override: int | None = None) -> int:
    if override is not None:
        return max(1, override)
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise InvalidParameterError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def _chunks(total: int, parts: int) -> list[range]:
    parts = max(1, min(parts, total))
    bounds = np.linspace(0, total, parts + 1).astype(int)
    return [range(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]


def _map_chunks(fn, total: int, workers: int) -> list:
    chunks = _chunks(total, workers)
    if len(chunks) == 1:
        return [fn(chunks[0])]
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        return list(pool.map(fn, chunks))


def initial_opinions(init: str, n: int, truth: int, truth_position: float, seed: int, replicate: int) -> np.ndarray:
    """Scalar opinions for one replicate; the truth sits at ``truth_position``."""
    kind, value = parse_init(init)
    learners = n - 1
    if kind == "uniform":
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replicate, 1)))
        vals = rng.uniform(0.0, 1.0, size=learners)
    elif kind == "constant":
        vals = np.full(learners, value)
    else:
        if len(value) != learners:
            raise InvalidParameterError(f"init lists {len(value)} values for {learners} learners")
        vals = np.asarray(value, dtype=np.float64)
    x = np.empty(n)
    x[truth] = truth_position
    x[np.arange(n) != truth] = vals
    return x


def build_topology(cfg: ExperimentConfig) -> tuple[GraphSequence | RandomModel, int]:
    if cfg.topology == "circulant":
        return FixedSequence(build_circulant(cfg.learners, cfg.degree)), 0
    if cfg.topology == "periodic-tight":
        return build_periodic_tight(cfg.learners, cfg.degree, cfg.period), 0
    if cfg.topology == "random":
        return RandomModel.uniform(cfg.n, cfg.m, truth_set=(0,)), 0
    return read_sequence(cfg.graph), cfg.truth


@dataclass
class RunSummary:
    times: np.ndarray
    per_replicate: np.ndarray
    fit: RateFit | None
    spectral: SpectralReport | None
    seed: int
    wall_clock: float

    @property
    def mean(self) -> np.ndarray:
        return self.per_replicate.mean(axis=0)

    def to_dict(self, extra: dict | None = None) -> dict:
        out = dict(extra or {})
        out.update(
            {
                "seed": self.seed,
                "replicates": int(self.per_replicate.shape[0]),
                "times": [int(t) for t in self.times],
                "mean_sup_norm": [float(v) for v in self.mean],
                "fit": _fit_dict(self.fit),
                "spectral": self.spectral.to_dict() if self.spectral is not None else None,
            }
        )
        return out


def _fit_dict(fit: RateFit | None) -> dict | None:
    if fit is None:
        return None
    d = fit.to_dict()
    d["flagged"] = bool(fit.r_squared < R2_FLAG)
    return d


def _safe_fit(times, values, window) -> RateFit | None:
    try:
        return fit_polynomial_rate((times, values), window)
    except ValueError as exc:
        log.warning("rate fit skipped: %s", exc)
        return None


def simulate(cfg: ExperimentConfig, workers: int | None = None) -> RunSummary:
    """Run all replicates of an experiment and fit the averaged curve."""
    start = time.perf_counter()
    topo, truth = build_topology(cfg)
    n = topo.n
    rec = record_times(cfg.horizon, ratio=cfg.ratio)
    nw = worker_count(workers)

    if isinstance(topo, RandomModel):
        degrees = topo.degree_array()

        def job(chunk: range) -> np.ndarray:
            x = np.stack([initial_opinions(cfg.init, n, truth, cfg.truth_position, cfg.seed, r) for r in chunk])
            seeds = np.array([_rng.replicate_seed(cfg.seed, r) for r in chunk], dtype=np.uint64)
            return kernels.run_random(x[:, :, None].copy(), np.zeros(n), degrees, seeds, 0, cfg.horizon, rec, truth)

    else:

        def job(chunk: range) -> np.ndarray:
            rows = []
            for r in chunk:
                x0 = initial_opinions(cfg.init, n, truth, cfg.truth_position, cfg.seed, r)
                rows.append(run(topo, SystemState.initial(x0), cfg.horizon, ratio=cfg.ratio, truth=truth).sup_norm)
            return np.array(rows)

    per_rep = np.concatenate(_map_chunks(job, cfg.replicates, nw), axis=0)
    fit = _safe_fit(rec, per_rep.mean(axis=0), cfg.fit_window())
    spectral = None
    if isinstance(topo, FixedSequence):
        try:
            spectral = spectral_gap(topo.snapshot, truth)
        except ValueError as exc:
            log.warning("spectral report skipped: %s", exc)
    return RunSummary(rec, per_rep, fit, spectral, cfg.seed, time.perf_counter() - start)


def write_run(summary: RunSummary, out_dir, config: dict | None = None) -> dict:
    """Write ``trajectory.csv``, ``replicates.csv``, ``summary.json`` and ``timing.json``.

    Everything except ``timing.json`` is a deterministic function of the
    configuration.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_series_csv(out / "trajectory.csv", summary.times, summary.mean)
    with open(out / "replicates.csv", "w") as fh:
        fh.write("t,replicate,sup_norm\n")
        for r, row in enumerate(summary.per_replicate):
            for t, v in zip(summary.times, row):
                fh.write(f"{int(t)},{r},{float(v)!r}\n")
    payload = summary.to_dict({"config": config} if config is not None else None)
    _write_json(out / "summary.json", payload)
    _write_json(out / "timing.json", {"wall_clock_seconds": summary.wall_clock, "backend": kernels.BACKEND})
    return payload


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# -- Fig. 1 style sweep ------------------------------------------------------


def fig1_cell_seed(seed: int, n: int, m: int) -> int:
    return _rng.derive(_rng.derive(seed, n), m)


def reproduce_fig1(
    ns=(20, 50, 100),
    ms=(1, 5, 10),
    replicates: int = 100,
    horizon: int = 100_000,
    seed: int = 0,
    ratio: float = 1.25,
    window: tuple[int, int] | None = None,
    out_dir=None,
    workers: int | None = None,
) -> dict:
    """Random-neighbour sweep over ``(n, m)``: truth at 0, learners uniform on
    [0, 1], averaged sup distance over replicates, tail slope per cell."""
    table = []
    series = {}
    for n in ns:
        for m in ms:
            cfg = ExperimentConfig(
                topology="random", n=n, m=m, horizon=horizon, replicates=replicates,
                seed=fig1_cell_seed(seed, n, m), init="uniform", ratio=ratio,
                fit_lo=window[0] if window else None, fit_hi=window[1] if window else None,
            )
            summary = simulate(cfg, workers)
            fit = summary.fit
            series[(n, m)] = summary
            row = {"n": n, "m": m, "reference_slope": -1.0 / n}
            row.update(_fit_dict(fit) or {"slope": None})
            table.append(row)
            log.info("n=%d m=%d slope=%s (%.1fs)", n, m, row.get("slope"), summary.wall_clock)
            if out_dir is not None:
                Path(out_dir).mkdir(parents=True, exist_ok=True)
                write_series_csv(Path(out_dir) / f"fig1_n{n}_m{m}.csv", summary.times, summary.mean)
    result = {
        "horizon": horizon,
        "replicates": replicates,
        "seed": seed,
        "ratio": ratio,
        "slopes": table,
    }
    if out_dir is not None:
        _write_json(Path(out_dir) / "slopes.json", result)
    result["series"] = series
    return result


# -- learning bridges --------------------------------------------------------


def star_graph() -> GraphSnapshot:
    """Three agents: truth 0, hub learner 1 listening to 0 and 2, leaf 2 listening to 1."""
    return GraphSnapshot(3, (frozenset(), frozenset({0, 2}), frozenset({1})))


def run_bwr(cfg: BWRConfig, workers: int | None = None) -> dict:
    snap = star_graph() if cfg.graph == "star" else read_graph(cfg.graph)
    n = snap.n
    if len(cfg.init) != n - 1:
        raise InvalidParameterError(f"init lists {len(cfg.init)} means for {n - 1} learners")
    mu = np.array([cfg.truth_value] + list(cfg.init))
    tau = np.full(n, cfg.prior_tau)
    system = BWRSystem(mu, tau, cfg.signal_tau, frozenset({0}))
    seq = FixedSequence(snap)

    def job(chunk: range) -> np.ndarray:
        return bwr_replicates(system, seq, cfg.steps, cfg.seed, chunk)

    samples = np.concatenate(_map_chunks(job, cfg.replicates, worker_count(workers)), axis=0)
    prediction = bwr_engine_prediction(system, seq, cfg.steps)
    comp = summarize(samples, prediction)
    abs_err = np.abs(samples - cfg.truth_value).max(axis=-1).mean(axis=0)
    return {"comparison": comp, "abs_error": abs_err, "config": cfg}


def run_bandit(cfg: BanditConfig, workers: int | None = None) -> dict:
    inst = BanditInstance(np.array(cfg.theta), cfg.sigma)

    def job(chunk: range) -> np.ndarray:
        return bandit_replicates(inst, cfg.horizon, cfg.seed, chunk)

    samples = np.concatenate(_map_chunks(job, cfg.replicates, worker_count(workers)), axis=0)
    prediction = bandit_engine_prediction(inst, cfg.horizon)
    comp = summarize(samples, prediction)
    abs_err = np.abs(samples - inst.theta).mean(axis=0)
    return {"comparison": comp, "abs_error": abs_err, "config": cfg}


def write_traces(result: dict, out_dir, label: str) -> dict:
    """``traces.csv`` with replicate-mean absolute error and ``summary.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    err = result["abs_error"]
    with open(out / "traces.csv", "w") as fh:
        fh.write("t,agent_or_arm,abs_error\n")
        for t in range(err.shape[0]):
            for a in range(err.shape[1]):
                fh.write(f"{t},{a},{float(err[t, a])!r}\n")
    comp = result["comparison"]
    payload = {"kind": label, "config": _plain(result["config"]), **comp.to_dict()}
    _write_json(out / "summary.json", payload)
    return payload


def _plain(cfg) -> dict:
    return {k: getattr(cfg, k) for k in cfg.__dataclass_fields__ if k != "out"}
