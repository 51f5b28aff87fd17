"""Benchmark: numba kernels vs the pure-numpy fallback.

Times the two elementwise hot kernels (GUE assembly and the eigensystem
phase reconstruction) in isolation, then a full end-to-end unitary-motion
stepping run in each lane (the lane is fixed per process via LIBLAB_NUMBA,
so the end-to-end comparison re-executes this script in subprocesses).

Usage:
    python benchmarks/bench_ubm.py            # full report
    python benchmarks/bench_ubm.py --e2e-lane 0|1   # internal (subprocess)
"""

import argparse
import os
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np


def best_of(fn, repeats=5):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_kernels():
    from liblab import _kernels

    if not _kernels.USE_NUMBA:
        print("numba lane unavailable (or disabled); nothing to compare")
        return

    rng = np.random.default_rng(0)
    print("%-28s %10s %10s %8s" % ("kernel (P, N)", "numpy", "numba", "speedup"))
    for P, N in ((50, 32), (50, 64), (200, 64), (50, 128)):
        A = rng.standard_normal((P, N, N))
        B = rng.standard_normal((P, N, N))
        _kernels.assemble_gue(A, B)  # JIT warmup
        t_np = best_of(lambda: _kernels.assemble_gue_numpy(A, B))
        t_nb = best_of(lambda: _kernels.assemble_gue(A, B))
        print("%-28s %9.2fms %9.2fms %7.2fx" % ("assemble_gue (%d, %d)" % (P, N), 1e3 * t_np, 1e3 * t_nb, t_np / t_nb))

        H = _kernels.assemble_gue_numpy(A, B)
        w, V = np.linalg.eigh(H)
        _kernels.phase_scale(V, w, 0.1)  # JIT warmup
        t_np = best_of(lambda: _kernels.phase_scale_numpy(V, w, 0.1))
        t_nb = best_of(lambda: _kernels.phase_scale(V, w, 0.1))
        print("%-28s %9.2fms %9.2fms %7.2fx" % ("phase_scale (%d, %d)" % (P, N), 1e3 * t_np, 1e3 * t_nb, t_np / t_nb))


def e2e_once():
    from liblab import _kernels, rmt

    N, paths, steps = 64, 50, 25
    eng = rmt.BatchedUBM(N, 1, Fraction(1, steps), paths=paths, base_seed=7)
    eng.step()  # warmup (JIT compile in the numba lane)
    t0 = time.perf_counter()
    eng.run_until(Fraction(1))
    dt = time.perf_counter() - t0
    lane = "numba" if _kernels.USE_NUMBA else "numpy"
    tr = complex(np.mean(eng.traces(1)))
    print("lane=%s  %d steps of (%d paths, N=%d): %.2fs   E[tr U(1)]=%.4f" % (lane, steps, paths, N, dt, tr.real))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--e2e-lane", default=None)
    args = ap.parse_args()
    if args.e2e_lane is not None:
        e2e_once()
        return
    bench_kernels()
    print()
    print("end-to-end stepping (eigendecompositions stay in LAPACK either way):")
    for lane in ("0", "1"):
        env = dict(os.environ, LIBLAB_NUMBA=lane)
        subprocess.run([sys.executable, __file__, "--e2e-lane", lane], env=env, check=True)


if __name__ == "__main__":
    main()
