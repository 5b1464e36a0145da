"""Acceptance gate: one PASS/FAIL line per criterion, printed in the pytest summary.

Set CONFIDYN_SLOW=1 to include the optional n=100 sweep.
"""

import json
import os
import time

import numpy as np
import pytest

from confidyn import _rng
from confidyn.analysis import (
    fit_polynomial_rate,
    influence_window,
    lemma1_bound,
    spectral_gap,
    window_blocks,
)
from confidyn.cli import main
from confidyn.config import BWRConfig, ExperimentConfig
from confidyn.dynamics import (
    SystemState,
    fixed_closed_form,
    record_times,
    run,
    step_agentwise,
    step_matrix,
    update_matrix,
)
from confidyn.experiments import fig1_cell_seed, reproduce_fig1, run_bwr, simulate
from confidyn.graphs import (
    ExplicitSequence,
    FixedSequence,
    GraphSnapshot,
    RandomModel,
    build_circulant,
    build_periodic_tight,
    out_degrees,
    sample_random_snapshot,
)

from conftest import ACCEPTANCE_LINES, random_reachable_graph, random_snapshot

SLOPE_BAND = (-0.27, -0.23)
FIG1_BAND = (-0.09, -0.025)
FIG1_BAND_N100 = (-0.02, -0.005)


def report(number, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def in_band(v, band):
    return band[0] <= v <= band[1]


# -- shared simulations ------------------------------------------------------


@pytest.fixture(scope="session")
def circulant_run():
    cfg = ExperimentConfig(topology="circulant", learners=8, degree=4, horizon=100_000, init="constant:1")
    start = time.perf_counter()
    summary = simulate(cfg, workers=1)
    elapsed = time.perf_counter() - start
    dense = run(FixedSequence(build_circulant(8, 4)), SystemState.initial([0.0] + [1.0] * 8), 100_000)
    return summary, elapsed, dense


@pytest.fixture(scope="session")
def periodic_run():
    cfg = ExperimentConfig(topology="periodic-tight", learners=8, degree=4, period=3, horizon=300_000, init="constant:1")
    summary = simulate(cfg, workers=1)
    dense = run(build_periodic_tight(8, 4, 3), SystemState.initial([0.0] + [1.0] * 8), 300_000)
    return summary, dense


@pytest.fixture(scope="session")
def fig1_run():
    start = time.perf_counter()
    result = reproduce_fig1(ns=(20,), ms=(1, 5, 10), replicates=100, horizon=100_000, seed=0)
    return result, time.perf_counter() - start


# -- criteria ----------------------------------------------------------------


def test_01_stepper_equivalence():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 11))
        g = random_snapshot(rng, n, p=rng.uniform(0, 1))
        k = int(rng.integers(1, 4))
        w = rng.uniform(0, 20, size=n) * (rng.random(n) < 0.8)
        s = SystemState(rng.normal(size=(n, k)), w)
        a, b = step_agentwise(s, g), step_matrix(s, g)
        worst = max(worst, float(np.abs(a.x - b.x).max()))
        assert np.array_equal(a.w, b.w)
    elapsed = time.perf_counter() - start
    report(1, "stepper equivalence", worst <= 1e-12 and elapsed < 5, f"max |diff| {worst:.2e} over 1000 instances in {elapsed:.2f}s")


def test_02_closed_form_oracle():
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 11))
        g = random_reachable_graph(rng, n)
        x0 = rng.normal(size=n)
        cf = fixed_closed_form(g, x0, 100)
        got = run(FixedSequence(g), SystemState.initial(x0), 100).final.x[:, 0]
        worst = max(worst, float(np.abs(cf - got).max() / np.abs(got).max()))
    report(2, "closed form vs run at t=100", worst <= 1e-9, f"max relative error {worst:.2e} over 50 graphs")


def test_03_circulant_tightness(circulant_run):
    summary, elapsed, _ = circulant_run
    fit = summary.fit
    ok = in_band(fit.slope, SLOPE_BAND) and fit.r_squared >= 0.999 and elapsed < 10
    report(3, "circulant(8,4) slope", ok, f"slope {fit.slope:.5f} r2 {fit.r_squared:.6f} window {fit.window} in {elapsed:.2f}s")


def test_04_spectral_oracle():
    worst_mod, worst_nu = 0.0, 0.0
    for learners, d in [(4, 2), (6, 3), (8, 4), (12, 6)]:
        rep = spectral_gap(build_circulant(learners, d))
        omega = np.exp(2j * np.pi * np.arange(learners) / learners)
        lam = np.array([sum(w**p for p in range(d - 1)) / d for w in omega])
        ref = np.sort(np.abs(lam))[::-1]
        worst_mod = max(worst_mod, float(np.abs(rep.eigen_moduli - ref).max()))
        worst_nu = max(worst_nu, abs(rep.nu - 1 / d))
    ok = worst_mod <= 1e-9 and worst_nu <= 1e-9
    report(4, "circulant eigen-moduli and nu = 1/d", ok, f"max modulus error {worst_mod:.2e}, max nu error {worst_nu:.2e}")


def _closed_component_graph(rng, n_reach, n_closed):
    g = random_reachable_graph(rng, n_reach)
    sets = list(g.neighbors)
    closed = range(n_reach, n_reach + n_closed)
    for i in closed:
        nb = {j for j in closed if rng.random() < 0.5} or {i}
        sets.append(frozenset(nb))
    return GraphSnapshot(n_reach + n_closed, tuple(sets)), list(closed)


def test_05_reachability():
    rng = np.random.default_rng(105)
    min_nu = np.inf
    for _ in range(200):
        g = random_reachable_graph(rng, int(rng.integers(2, 11)))
        min_nu = min(min_nu, spectral_gap(g).nu)
    min_ratio = np.inf
    for _ in range(50):
        g, closed = _closed_component_graph(rng, int(rng.integers(2, 7)), int(rng.integers(1, 4)))
        x0 = np.zeros(g.n)
        x0[1:] = rng.uniform(0.5, 1.5, size=g.n - 1)
        traj = run(FixedSequence(g), SystemState.initial(x0), 10_000, state_stride=10_000)
        first = np.abs(traj.states[0][closed]).max()
        last = np.abs(traj.states[10_000][closed]).max()
        min_ratio = min(min_ratio, last / first)
    ok = min_nu > 0 and min_ratio >= 0.1
    report(5, "reachability and closed components", ok, f"min nu {min_nu:.4f} on 200 reachable graphs; closed component keeps >= {min_ratio:.3f} of its initial distance on 50 graphs")


def test_06_periodic_tightness(periodic_run):
    fit = periodic_run[0].fit
    report(6, "periodic-tight(8,4,3) slope", in_band(fit.slope, SLOPE_BAND), f"slope {fit.slope:.5f} r2 {fit.r_squared:.6f} window {fit.window}")


def test_07_indicator_properties():
    rng = np.random.default_rng(107)
    worst_lemma, worst_norm, worst_diag = 0.0, 0.0, 0.0
    for _ in range(500):
        n = int(rng.integers(2, 9))
        t = int(rng.integers(1, 31))
        s = int(rng.integers(0, t))
        p = rng.uniform(0.05, 0.9)
        seq = ExplicitSequence(tuple(random_snapshot(rng, n, p=p) for _ in range(t)))
        w0 = rng.integers(0, 4, size=n).astype(float) * (rng.random() < 0.5)
        wb = window_blocks(seq, w0, s, t)
        alpha = 1 - wb.product(t, s).sum(axis=1)
        bound = lemma1_bound(seq, s, t, init_w=w0)
        worst_lemma = max(worst_lemma, float(np.max(bound - alpha)))
        norm = np.abs(wb.product(t, s)).sum(axis=1).max()
        worst_norm = max(worst_norm, abs(norm - (1 - alpha.min())))
        ws, wt = wb.weights[0][1:], wb.weights[-1][1:]
        ratio = np.divide(ws, wt, out=np.zeros_like(ws), where=wt > 0)
        for k in range(s, t):
            diag = np.diag(wb.product(t, k))
            worst_diag = max(worst_diag, float(np.max(ratio - diag)))
        assert np.allclose(influence_window(seq, w0, s, t), alpha, atol=1e-15)
    ok = worst_lemma <= 1e-12 and worst_norm <= 1e-12 and worst_diag <= 1e-12
    report(7, "window indicator bounds", ok, f"max bound excess {worst_lemma:.1e}, norm identity error {worst_norm:.1e}, diagonal excess {worst_diag:.1e} over 500 sequences")


def test_08_fig1(fig1_run):
    result, elapsed = fig1_run
    slopes = {row["m"]: row["slope"] for row in result["slopes"]}
    spread = max(slopes.values()) - min(slopes.values())
    ok = all(in_band(v, FIG1_BAND) for v in slopes.values()) and spread <= 0.02 and elapsed < 300
    detail = ", ".join(f"m={m}: {v:.4f}" for m, v in slopes.items())
    report(8, "random-neighbour sweep n=20", ok, f"{detail}; spread {spread:.4f}; {elapsed:.1f}s")


@pytest.mark.slow
@pytest.mark.skipif(os.environ.get("CONFIDYN_SLOW") != "1", reason="optional n=100 sweep; set CONFIDYN_SLOW=1")
def test_08b_fig1_n100():
    result = reproduce_fig1(ns=(100,), ms=(1, 5, 10), replicates=100, horizon=100_000, seed=0)
    slopes = {row["m"]: row["slope"] for row in result["slopes"]}
    ok = all(in_band(v, FIG1_BAND_N100) for v in slopes.values())
    report("8b", "random-neighbour sweep n=100 (optional)", ok, ", ".join(f"m={m}: {v:.4f}" for m, v in slopes.items()))


def _rows_ok(m):
    return float(np.abs(m.sum(axis=1) - 1).max())


def test_09_contraction_invariants(circulant_run, periodic_run, fig1_run):
    worst_rise, worst_row = 0.0, 0.0
    series = [circulant_run[2].sup_norm, periodic_run[1].sup_norm, circulant_run[0].per_replicate[0], periodic_run[0].per_replicate[0]]
    for summary in fig1_run[0]["series"].values():
        series.extend(summary.per_replicate)
    for sup in series:
        worst_rise = max(worst_rise, float(np.max(np.diff(sup), initial=0.0)))
    probe = record_times(100_000, ratio=1.25)
    for seq in (FixedSequence(build_circulant(8, 4)), build_periodic_tight(8, 4, 3)):
        w = np.zeros(seq.n)
        last = 0
        for t in probe:
            for r in range(last, t):
                w = w + out_degrees(seq.snapshot_at(r))
            last = t
            worst_row = max(worst_row, _rows_ok(update_matrix(seq.snapshot_at(t), w)))
    for (n, m), summary in fig1_run[0]["series"].items():
        model = RandomModel.uniform(n, m)
        rep_seed = _rng.replicate_seed(fig1_cell_seed(0, n, m), 0)
        for t in probe:
            worst_row = max(worst_row, _rows_ok(update_matrix(sample_random_snapshot(model, int(t), rep_seed), t * model.degree_array())))
    ok = worst_rise <= 1e-12 and worst_row <= 1e-12
    report(9, "contraction invariants", ok, f"largest sup-norm increase {worst_rise:.1e} over {len(series)} series; max row-sum error {worst_row:.1e}")


def test_10_bwr_expectation():
    result = run_bwr(BWRConfig(steps=10, replicates=10_000, signal_tau=1.0, seed=0), workers=1)
    comp = result["comparison"]
    report(10, "BWR star mean vs engine", comp.within(3.0), f"max z {comp.max_z:.2f} over 10 steps, 10^4 replicates")


def test_11_determinism(tmp_path):
    cfg = tmp_path / "rand.ini"
    cfg.write_text("[topology]\nkind = random\nn = 20\nm = 5\n\n[run]\nhorizon = 5000\nreplicates = 9\nseed = 11\n")
    outs = []
    for workers in (1, 4):
        out = tmp_path / f"w{workers}"
        assert main(["simulate", "--config", str(cfg), "--out", str(out), "--workers", str(workers)]) == 0
        outs.append(out)
    names = ("trajectory.csv", "replicates.csv", "summary.json")
    same = all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in names)
    json.loads((outs[0] / "summary.json").read_text())
    report(11, "simulate byte-identical across worker counts", same, f"{', '.join(names)} compared at 1 and 4 workers")
