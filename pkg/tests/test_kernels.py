"""Counter hash and backend equivalence."""

import numpy as np
import pytest

from confidyn import _pykernels, _rng, kernels
from confidyn.graphs import RandomModel, build_circulant, build_periodic_tight, pack_snapshots
from oracles import fisher_yates_sample

try:
    from confidyn import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None

BACKENDS = [_pykernels] + ([_ckernels] if _ckernels is not None else [])
needs_c = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def test_mix64_matches_splitmix64_reference():
    # first outputs of the reference splitmix64 generator seeded with 0
    assert _rng.mix64(0) == 0xE220A8397B1DCDAF
    assert _rng.mix64(_rng.GOLDEN) == 0x6E789E6AA1B965F4


def test_numpy_hash_matches_python_ints():
    rng = np.random.default_rng(3)
    keys = rng.integers(0, 2**63, size=50, dtype=np.uint64) * np.uint64(2) + np.uint64(1)
    vals = rng.integers(0, 10**6, size=50)
    got = _rng.derive_np(keys, vals)
    for k, v, g in zip(keys, vals, got):
        assert int(g) == _rng.derive(int(k), int(v))


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND)
def test_sampler_matches_plain_python_fisher_yates(backend):
    degrees = [0, 2, 3, 6, 1, 1]
    for seed, t in [(0, 0), (5, 7), (2**63 + 11, 123456)]:
        got = backend.sample_neighbors(seed, t, 6, np.array(degrees))
        want = fisher_yates_sample(_rng.derive, _rng.unit_float, seed, t, 6, degrees)
        for i, d in enumerate(degrees):
            assert list(got[i, :d]) == want[i]
            assert np.all(got[i, d:] == -1)


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND)
def test_sup_distance(backend):
    x = np.array([[0.0, 0.0], [0.1, -0.3], [0.2, 0.05]])
    assert backend.sup_distance(x, 0) == pytest.approx(0.3)
    assert backend.sup_distance(np.zeros((1, 1)), 0) == 0.0


@needs_c
def test_schedule_backends_bitwise_equal():
    seq = build_periodic_tight(8, 4, 3)
    nbr, deg = pack_snapshots(seq.snapshots)
    rng = np.random.default_rng(0)
    x0 = rng.uniform(size=(9, 2))
    x0[0] = 0
    rec = np.array([0, 1, 5, 50, 300])
    xa, xb = x0.copy(), x0.copy()
    wa, wb = np.zeros(9), np.zeros(9)
    oa = _pykernels.run_schedule(xa, wa, nbr, deg, 0, 300, rec, 0)
    ob = _ckernels.run_schedule(xb, wb, nbr, deg, 0, 300, rec, 0)
    assert np.array_equal(oa, ob)
    assert np.array_equal(xa, xb)
    assert np.array_equal(wa, wb)


@needs_c
def test_random_backends_bitwise_equal():
    model = RandomModel.uniform(12, 4)
    rng = np.random.default_rng(1)
    x0 = rng.uniform(size=(3, 12, 2))
    x0[:, 0] = 0
    seeds = np.array([_rng.replicate_seed(9, r) for r in range(3)], dtype=np.uint64)
    rec = np.array([0, 3, 40, 200])
    xa, xb = x0.copy(), x0.copy()
    oa = _pykernels.run_random(xa, np.zeros(12), model.degree_array(), seeds, 0, 200, rec, 0)
    ob = _ckernels.run_random(xb, np.zeros(12), model.degree_array(), seeds, 0, 200, rec, 0)
    assert np.array_equal(oa, ob)
    assert np.array_equal(xa, xb)


@needs_c
def test_random_run_resumes_from_offset():
    """Running [0, 50) then [50, 120) equals one run of 120 steps."""
    model = RandomModel.uniform(7, 2)
    seeds = np.array([42], dtype=np.uint64)
    x0 = np.linspace(0, 1, 7)[None, :, None].copy()
    full = x0.copy()
    kernels.run_random(full, np.zeros(7), model.degree_array(), seeds, 0, 120, np.array([120]), 0)
    part = x0.copy()
    kernels.run_random(part, np.zeros(7), model.degree_array(), seeds, 0, 50, np.array([50]), 0)
    w50 = 50.0 * model.degree_array()
    kernels.run_random(part, w50, model.degree_array(), seeds, 50, 70, np.array([120]), 0)
    assert np.array_equal(full, part)


def test_selected_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")
