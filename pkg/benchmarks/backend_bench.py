"""Throughput comparison of the compiled and plain-array kernel backends.

Runs the main simulation kernels through both implementations on
identical inputs, checks that the outputs agree, and prints steps (or
draws, or events) per second for each side.  Invoke from the repository
root:

    python3 benchmarks/backend_bench.py            # full sizes
    python3 benchmarks/backend_bench.py --quick    # ~10x smaller

The compiled side is skipped with a notice when the extension cannot be
loaded, so the script stays usable on a plain-array-only installation.
"""

import argparse
import time

import numpy as np

from heavytail._rng import derive_key, role_key
from heavytail.boltzmann import inverse_tables
from heavytail.kernels import numpy_impl

BASE = np.uint64(derive_key(role_key(271828, "bench")))


def _timer(fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return out, best


def _flatten(result):
    parts = result if isinstance(result, tuple) else (result,)
    return [np.asarray(p).ravel() for p in parts]


def _agreement(a, b):
    worst = 0.0
    for x, y in zip(_flatten(a), _flatten(b)):
        if x.dtype.kind in "iu":
            if not np.array_equal(x, y):
                return float("inf")
            continue
        scale = np.maximum(np.abs(x), 1.0)
        worst = max(worst, float(np.max(np.abs(x - y) / scale)))
    return worst


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true",
                    help="use ~10x smaller problem sizes")
    args = ap.parse_args()
    scale = 10 if args.quick else 1

    t0, t1 = inverse_tables()
    horizons = np.asarray([25.0, 50.0, 100.0])
    cases = [
        ("uniform_chunk", 2_000_000 // scale, "draws",
         lambda impl, m: impl.uniform_chunk(BASE, 0, 64, m // 64)),
        ("boltz_discrete_sums", 1_000_000 // scale, "steps",
         lambda impl, m: impl.boltz_discrete_sums(BASE, 0, max(m // 1000, 2),
                                                  1000, t0, t1)),
        ("boltz_blocks", 400_000 // scale, "blocks",
         lambda impl, m: impl.boltz_blocks(BASE, 0, 64, m // 64, t0, t1)),
        ("boltz_time_integrals", 1_000_000 // scale, "events",
         lambda impl, m: impl.boltz_time_integrals(BASE, 0, max(m // 1000, 2),
                                                   1000.0, 1.0, t0, t1)),
        ("boltz_kinetic", 400_000 // scale, "events",
         lambda impl, m: impl.boltz_kinetic(BASE, 0, max(m // 100, 2), 0.125,
                                            horizons, t0, t1)),
        ("pareto_sums", 4_000_000 // scale, "draws",
         lambda impl, m: impl.pareto_sums(BASE, 0, max(m // 1000, 2), 1000,
                                          1.5, 1.0, 0)),
    ]

    try:
        from heavytail.kernels import numba_impl
        print("warming up the compiled kernels ...")
        for name, _size, _unit, run in cases:
            run(numba_impl, 2000)
    except ImportError as exc:
        numba_impl = None
        print(f"compiled backend unavailable ({exc}); timing plain arrays only")

    header = f"{'kernel':<22}{'size':>10}  {'numpy':>12}  {'numba':>12}  {'ratio':>7}  {'max rel diff':>13}"
    print(header)
    print("-" * len(header))
    for name, size, unit, run in cases:
        out_np, t_np = _timer(run, numpy_impl, size)
        rate_np = size / t_np
        if numba_impl is not None:
            out_nb, t_nb = _timer(run, numba_impl, size)
            rate_nb = size / t_nb
            diff = _agreement(out_np, out_nb)
            print(f"{name:<22}{size:>10}  {rate_np:>10.3g}/s  {rate_nb:>10.3g}/s"
                  f"  {rate_nb / rate_np:>6.1f}x  {diff:>13.2e}")
        else:
            print(f"{name:<22}{size:>10}  {rate_np:>10.3g}/s  {'-':>12}  {'-':>7}  {'-':>13}")
    print(f"\nrates are {', '.join(sorted(set(u for _, _, u, _ in cases)))} per second; "
          "ratio is compiled over plain")


if __name__ == "__main__":
    main()
