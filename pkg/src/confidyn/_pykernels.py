"""NumPy implementation of the hot loops.

Used when the compiled extension is unavailable. Every function here has a
twin in ``_ckernels.pyx`` with the same signature and, by construction, the
same floating-point operation order, so both backends agree bit for bit.

Neighbour lists use the padded layout produced by
:func:`confidyn.graphs.pack_snapshots`: ``nbr[p, i, :deg[p, i]]`` holds the
out-neighbours of agent ``i`` in snapshot ``p``.
"""

import numpy as np

from confidyn._rng import derive_np, unit_float_np

BACKEND = "python"


def sup_distance(x, truth):
    """Largest coordinate distance between any non-truth agent and ``truth``."""
    n = x.shape[0]
    if n <= 1:
        return 0.0
    diff = np.abs(x - x[truth])
    diff[truth] = 0.0
    return float(diff.max())


def _prepare(nbr_p, deg_p):
    active = np.flatnonzero(deg_p)
    dg = deg_p[active]
    cols = []
    for k in range(int(dg.max()) if active.size else 0):
        mk = dg > k
        cols.append((mk[:, None], np.where(mk, nbr_p[active, k], 0)))
    return active, dg.astype(np.float64), cols


def _step_prepared(x, w, prepared):
    active, dg, cols = prepared
    if active.size == 0:
        return
    wa = w[active]
    s = wa[:, None] * x[active]
    for mk, idx in cols:
        s += np.where(mk, x[idx], 0.0)
    x[active] = s / (wa + dg)[:, None]
    w[active] = wa + dg


def step_padded(x, w, nbr_p, deg_p):
    """One synchronous step in place; agents without neighbours keep ``x``."""
    _step_prepared(x, w, _prepare(nbr_p, deg_p))


def run_schedule(x, w, nbr, deg, t0, steps, record_times, truth):
    """Advance ``(x, w)`` in place for ``steps`` steps starting at clock ``t0``.

    Snapshot ``t % T`` governs the step from ``t`` to ``t + 1``. Returns the
    sup distance to ``truth`` at each clock value listed in ``record_times``.
    """
    period = nbr.shape[0]
    prepared = [_prepare(nbr[p], deg[p]) for p in range(period)]
    record_times = np.asarray(record_times, dtype=np.int64)
    out = np.full(record_times.shape[0], np.nan)
    ri = 0
    nrec = record_times.shape[0]
    while ri < nrec and record_times[ri] < t0:
        ri += 1
    for step in range(steps + 1):
        t = t0 + step
        while ri < nrec and record_times[ri] == t:
            out[ri] = sup_distance(x, truth)
            ri += 1
        if step == steps:
            break
        _step_prepared(x, w, prepared[t % period])
    return out


def _sample_pools(keys_t, learners, dl, n):
    """Partial Fisher-Yates draws for every (replicate, learner).

    ``keys_t`` holds one per-step key per replicate. Returns the permuted
    pools, shape ``(R, L, n)``; the first ``dl[l]`` entries of row ``l`` are
    that learner's neighbours.
    """
    r = keys_t.shape[0]
    nl = learners.shape[0]
    ki = derive_np(keys_t[:, None], learners[None, :].astype(np.uint64))
    pool = np.broadcast_to(np.arange(n, dtype=np.int64), (r, nl, n)).copy()
    dmax = int(dl.max()) if nl else 0
    for k in range(dmax):
        mk = (dl > k)[None, :]
        u = unit_float_np(derive_np(ki, np.uint64(k)))
        j = k + (u * (n - k)).astype(np.int64)
        a = pool[:, :, k].copy()
        b = np.take_along_axis(pool, j[:, :, None], axis=2)[:, :, 0]
        pool[:, :, k] = np.where(mk, b, a)
        np.put_along_axis(pool, j[:, :, None], np.where(mk, a, b)[:, :, None], axis=2)
    return pool


def sample_neighbors(seed, t, n, degrees):
    """Neighbour draws of one random snapshot, padded with -1."""
    degrees = np.asarray(degrees, dtype=np.int64)
    learners = np.flatnonzero(degrees).astype(np.int64)
    dmax = max(1, int(degrees.max()) if n else 1)
    out = np.full((n, dmax), -1, dtype=np.int64)
    if learners.size == 0:
        return out
    keys = derive_np(np.array([seed], dtype=np.uint64), np.uint64(t))
    pool = _sample_pools(keys, learners, degrees[learners], n)[0]
    for li, i in enumerate(learners):
        out[i, : degrees[i]] = pool[li, : degrees[i]]
    return out


def run_random(x, w0, degrees, rep_seeds, t0, steps, record_times, truth):
    """Random-neighbour dynamics for a batch of replicates, in place.

    ``x`` has shape ``(R, n, k)``; replicate ``r`` samples its graphs from
    ``rep_seeds[r]``. All replicates share the initial weights ``w0``, which
    then evolve deterministically because outdegrees are fixed. Returns an
    ``(R, len(record_times))`` array of sup distances to ``truth``.
    """
    degrees = np.asarray(degrees, dtype=np.int64)
    rep_seeds = np.asarray(rep_seeds, dtype=np.uint64)
    record_times = np.asarray(record_times, dtype=np.int64)
    r, n, kd = x.shape
    learners = np.flatnonzero(degrees).astype(np.int64)
    dl = degrees[learners]
    dlf = dl.astype(np.float64)
    w = np.array(w0, dtype=np.float64)
    out = np.full((r, record_times.shape[0]), np.nan)
    ri = 0
    nrec = record_times.shape[0]
    while ri < nrec and record_times[ri] < t0:
        ri += 1
    masks = [(dl > k)[None, :, None] for k in range(int(dl.max()) if dl.size else 0)]
    for step in range(steps + 1):
        t = t0 + step
        while ri < nrec and record_times[ri] == t:
            for rep in range(r):
                out[rep, ri] = sup_distance(x[rep], truth)
            ri += 1
        if step == steps or learners.size == 0:
            if step == steps:
                break
            continue
        keys = derive_np(rep_seeds, np.uint64(t))
        pool = _sample_pools(keys, learners, dl, n)
        wl = w[learners]
        s = wl[None, :, None] * x[:, learners, :]
        for k, mk in enumerate(masks):
            idx = np.broadcast_to(pool[:, :, k][:, :, None], (r, learners.size, kd))
            s += np.where(mk, np.take_along_axis(x, idx, axis=1), 0.0)
        x[:, learners, :] = s / (wl + dlf)[None, :, None]
        w[learners] = wl + dlf
    return out
