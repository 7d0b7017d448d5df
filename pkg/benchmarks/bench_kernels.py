"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--quick]

Each kernel is run once to warm the JIT, then timed as the best of a few
repeats. The maximum difference between the two outputs is printed as well.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from permcycles import kernels
from permcycles.exact import compute_h
from permcycles.sampler import first_cycle_table, stream
from permcycles.weights import algebraic, log_theta


def best_of(fn, repeats):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def max_diff(a, b):
    if isinstance(a, tuple):
        return max(max_diff(x, y) for x, y in zip(a, b))
    a, b = np.asarray(a, float), np.asarray(b, float)
    fin = np.isfinite(a) & np.isfinite(b)
    return float(np.max(np.abs(a[fin] - b[fin]), initial=0.0))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="smaller sizes")
    args = ap.parse_args()
    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba unavailable (or PERMCYCLES_NO_NUMBA set); nothing to compare")

    N = 2000 if args.quick else 10_000
    n_rows, k_rows = (400, 60) if args.quick else (1600, 120)
    n_draw, S = (200, 20_000) if args.quick else (400, 100_000)
    repeats = 3

    model = algebraic(1.0, 1.0)
    lt = np.ascontiguousarray(log_theta(model, N))
    lh = compute_h(model, N).log_h
    fct = first_cycle_table(model, n_draw)
    u = stream(1, 0).random((S, n_draw))

    cases = [
        (f"h recurrence N={N}",
         lambda: kernels.log_power_recurrence_numba(lt, 0.0, N),
         lambda: kernels.log_power_recurrence_numpy(lt, 0.0, N)),
        (f"cycle rows n={n_rows} k<={k_rows}",
         lambda: kernels.log_cycle_rows_numba(lt, n_rows, k_rows),
         lambda: kernels.log_cycle_rows_numpy(lt, n_rows, k_rows)),
        (f"moment sequence N={N}",
         lambda: kernels.first_cycle_moments_numba(lt, lh, N),
         lambda: kernels.first_cycle_moments_numpy(lt, lh, N)),
        (f"draw {S} cycle types n={n_draw}",
         lambda: kernels.draw_cycles_numba(fct.cdf, fct.offsets, n_draw, u),
         lambda: kernels.draw_cycles_numpy(fct.cdf, fct.offsets, n_draw, u)),
    ]
    print(f"{'kernel':<34}{'numba [s]':>11}{'numpy [s]':>11}{'speedup':>9}{'max diff':>11}")
    for name, fast, slow in cases:
        fast()  # compile
        t_fast, a = best_of(fast, repeats)
        t_slow, b = best_of(slow, 1 if not args.quick else repeats)
        print(f"{name:<34}{t_fast:>11.4f}{t_slow:>11.4f}{t_slow / t_fast:>9.1f}{max_diff(a, b):>11.2e}")


if __name__ == "__main__":
    main()
