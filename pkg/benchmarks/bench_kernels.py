"""Time the compiled kernels against the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--steps 10000] [--replicates 10]

Both backends are also checked for bitwise-equal results.
"""

import argparse
import time

import numpy as np

from confidyn import _pykernels, _rng
from confidyn.dynamics import record_times
from confidyn.graphs import build_circulant, pack_snapshots

try:
    from confidyn import _ckernels
except ImportError:
    _ckernels = None


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def bench_schedule(mod, steps, repeat):
    nbr, deg = pack_snapshots([build_circulant(8, 4)])
    rec = record_times(steps, ratio=1.25)

    def go():
        x = np.zeros((9, 1))
        x[1:] = 1.0
        return mod.run_schedule(x, np.zeros(9), nbr, deg, 0, steps, rec, 0)

    return _best(go, repeat)


def bench_random(mod, n, m, replicates, steps, repeat):
    degrees = np.full(n, m, dtype=np.int64)
    degrees[0] = 0
    seeds = np.array([_rng.replicate_seed(0, r) for r in range(replicates)], dtype=np.uint64)
    rec = record_times(steps, ratio=1.25)
    x0 = np.random.default_rng(0).uniform(size=(replicates, n, 1))
    x0[:, 0] = 0.0

    def go():
        return mod.run_random(x0.copy(), np.zeros(n), degrees, seeds, 0, steps, rec, 0)

    return _best(go, repeat)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=10_000)
    ap.add_argument("--replicates", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    cases = [
        ("circulant(8,4) schedule", lambda mod: bench_schedule(mod, args.steps, args.repeat)),
        ("random n=20 m=5", lambda mod: bench_random(mod, 20, 5, args.replicates, args.steps, args.repeat)),
        ("random n=100 m=10", lambda mod: bench_random(mod, 100, 10, args.replicates, args.steps // 4, args.repeat)),
    ]
    print(f"{'case':<26}{'numpy [s]':>12}{'cython [s]':>12}{'speedup':>10}  equal")
    for name, fn in cases:
        t_py, out_py = fn(_pykernels)
        if _ckernels is None:
            print(f"{name:<26}{t_py:>12.3f}{'n/a':>12}{'':>10}")
            continue
        t_c, out_c = fn(_ckernels)
        print(f"{name:<26}{t_py:>12.3f}{t_c:>12.3f}{t_py / t_c:>9.1f}x  {np.array_equal(out_py, out_c)}")


if __name__ == "__main__":
    main()
