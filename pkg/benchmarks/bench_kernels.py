"""Compiled kernel against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--points 2000] [--steps 200000]

Reports iteration throughput for a long single orbit and for batch
classification on a grid, and checks that both backends agree exactly.
"""
import argparse
import time

import numpy as np

from tangentmap import kernels
from tangentmap.orbit import OrbitParams, classify_many, trajectory
from tangentmap.parser import builtin
from tangentmap.render import Window


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=2000, help="grid points for batch classification")
    ap.add_argument("--steps", type=int, default=200_000, help="length of the single orbit")
    ap.add_argument("--max-iter", type=int, default=2000)
    args = ap.parse_args()

    try:
        kernels.get_backend("cython")
    except ImportError as exc:
        raise SystemExit(str(exc)) from None

    f = builtin("f")
    side = max(1, int(round(args.points ** 0.5)))
    z, w = Window(0.4, 0.4, 2.4, 2.4, side, side).points()
    params = OrbitParams(max_iter=args.max_iter)
    start = (0.1 + 0.05j, 0.08 - 0.02j)

    rows = []
    results = {}
    for name in ("cython", "python"):
        tr, t_orbit = timed(trajectory, f, start, args.steps, backend=name)
        res, t_batch = timed(classify_many, f, z, w, params, backend=name)
        results[name] = (tr, res)
        steps = int(res.iterations.sum())
        rows.append((name, args.steps / t_orbit, t_batch, steps / t_batch))

    print(f"{'backend':8} {'orbit Msteps/s':>15} {'batch s':>9} {'batch Msteps/s':>15}")
    for name, orbit_rate, t_batch, batch_rate in rows:
        print(f"{name:8} {orbit_rate / 1e6:15.3f} {t_batch:9.3f} {batch_rate / 1e6:15.3f}")
    print(f"speedup: orbit x{rows[0][1] / rows[1][1]:.0f}, batch x{rows[1][2] / rows[0][2]:.0f}")

    (tc, rc), (tp, rp) = results["cython"], results["python"]
    same = (np.array_equal(tc.z, tp.z) and np.array_equal(tc.w, tp.w)
            and np.array_equal(rc.cls, rp.cls) and np.array_equal(rc.iterations, rp.iterations))
    print("backends agree bit for bit:", same)


if __name__ == "__main__":
    main()
