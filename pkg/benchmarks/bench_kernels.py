"""Benchmark the hot kernels under the numba and numpy backends.

Runs the same workload in two subprocesses, one per backend, and prints a
comparison table.  Invoke from the repository root:

    python benchmarks/bench_kernels.py [--repeat N]

The backend of a process is fixed at import time via NUMINDEX_BACKEND, so
the comparison has to spawn fresh interpreters.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def workload(repeat: int) -> dict:
    from numindex import _kernels as K

    timings = {}
    rng = np.random.default_rng(0)

    # flat norm, dimension 64
    starts = np.array([0, 64], dtype=np.int64)
    leaf_q = np.array([1.7])
    comb_p = np.zeros(0)
    xs = rng.standard_normal((2000, 64))
    K.tower_norm(xs[0], starts, leaf_q, comb_p)  # compile
    t0 = time.perf_counter()
    for _ in range(repeat):
        for i in range(xs.shape[0]):
            K.tower_norm(xs[i], starts, leaf_q, comb_p)
    timings["tower_norm dim64 x%d" % (repeat * xs.shape[0])] = \
        time.perf_counter() - t0

    # mixed tower norming functional, dimension 8
    tstarts = np.array([0, 2, 4, 6, 8], dtype=np.int64)
    tleaf_q = np.array([2.0, 2.0, 2.5, 1.5])
    tcomb_p = np.array([2.0, 2.5, 1.5])
    ys = rng.standard_normal((2000, 8))
    f = np.empty(8)
    K.norming_coeffs(ys[0], tstarts, tleaf_q, tcomb_p, f)
    t0 = time.perf_counter()
    for _ in range(repeat):
        for i in range(ys.shape[0]):
            K.norming_coeffs(ys[i], tstarts, tleaf_q, tcomb_p, f)
    timings["norming_coeffs dim8 x%d" % (repeat * ys.shape[0])] = \
        time.perf_counter() - t0

    # radius ascent, dimension 5 tower
    sstarts = np.array([0, 1, 2, 3, 4, 5], dtype=np.int64)
    sleaf_q = np.full(5, 1.5)
    scomb_p = np.full(4, 1.5)
    t = rng.standard_normal((5, 5))
    pts = np.vstack([np.eye(5), rng.standard_normal((16, 5))])
    pert = np.zeros((1, 5))
    K.radius_ascent(t, sstarts, sleaf_q, scomb_p, 0, pts, pert, 200, 0.25, 1e-4)
    t0 = time.perf_counter()
    for _ in range(max(1, repeat // 2)):
        K.radius_ascent(t, sstarts, sleaf_q, scomb_p, 0, pts, pert,
                        4000, 0.25, 1e-7)
    timings["radius_ascent dim5 x%d" % max(1, repeat // 2)] = \
        time.perf_counter() - t0

    # operator-norm ascent on the same tower
    K.norm_ascent(t, sstarts, sleaf_q, scomb_p, 0, pts, pert, 200, 0.25, 1e-4)
    t0 = time.perf_counter()
    for _ in range(max(1, repeat // 2)):
        K.norm_ascent(t, sstarts, sleaf_q, scomb_p, 0, pts, pert,
                      4000, 0.25, 1e-7)
    timings["norm_ascent dim5 x%d" % max(1, repeat // 2)] = \
        time.perf_counter() - t0
    return timings


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=10)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.child:
        json.dump(workload(args.repeat), sys.stdout)
        return

    results = {}
    for backend in ("numba", "numpy"):
        env = dict(os.environ, NUMINDEX_BACKEND=backend)
        res = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--child",
             "--repeat", str(args.repeat)],
            env=env, capture_output=True, text=True)
        if res.returncode != 0:
            sys.stderr.write(res.stderr)
            if backend == "numba":
                print("numba backend unavailable, skipping comparison")
                continue
            raise SystemExit(1)
        results[backend] = json.loads(res.stdout)

    if "numba" not in results:
        for name, sec in results["numpy"].items():
            print("%-34s numpy %8.3fs" % (name, sec))
        return
    print("%-34s %10s %10s %8s" % ("kernel", "numba", "numpy", "speedup"))
    for name, sec in results["numba"].items():
        ref = results["numpy"][name]
        print("%-34s %9.3fs %9.3fs %7.1fx" % (name, sec, ref, ref / sec))


if __name__ == "__main__":
    main()
