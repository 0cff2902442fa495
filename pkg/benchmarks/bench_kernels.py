"""Compare the compiled and pure-Python geometry kernels.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``. Prints one
line per kernel with the per-call time of each backend, the speedup, and the
largest absolute disagreement between the two on the benchmark inputs.
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from mapplan.geometry import _backend


def _box(cx, cy, heading, length, width):
    c, s = math.cos(heading), math.sin(heading)
    dx = np.array([1, -1, -1, 1]) * length / 2
    dy = np.array([1, 1, -1, -1]) * width / 2
    return cx + c * dx - s * dy, cy + s * dx + c * dy


def make_cases(n, seed=0):
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(n):
        a = _box(*rng.uniform(-1, 1, 2), rng.uniform(-math.pi, math.pi), 4.0, 1.8)
        b = _box(*rng.uniform(-2, 2, 2), rng.uniform(-math.pi, math.pi), *rng.uniform(1, 5, 2))
        cases.append((a, b))
    return cases


def _time(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def kernel_suite(k, cases, points, grid_out):
    return {
        "intersection_area": lambda: [k.intersection_area(ax, ay, bx, by) for (ax, ay), (bx, by) in cases],
        "intersection_area_grad": lambda: [
            np.concatenate([np.ravel(g) for g in k.intersection_area_grad(ax, ay, bx, by)])
            for (ax, ay), (bx, by) in cases
        ],
        "signed_distance": lambda: [
            np.ravel(k.signed_distance(px, py, bx, by)) for (px, py), (_, (bx, by)) in zip(points, cases)
        ],
        "rasterize_convex": lambda: [
            _raster(k, bx, by, grid_out) for _, (bx, by) in cases[: max(1, len(cases) // 10)]
        ],
    }


def _raster(k, xs, ys, out):
    out[:] = 0
    k.rasterize_convex(xs, ys, -8.0, -8.0, 0.25, out)
    return out.copy()


def _max_diff(a, b):
    return max((float(np.max(np.abs(np.asarray(x, float) - np.asarray(y, float)))) for x, y in zip(a, b)),
               default=0.0)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cases", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    if _backend.compiled_kernels is None:
        print("compiled extension not built; only the pure-Python backend is available")
        return 1
    cases = make_cases(args.cases)
    points = [tuple(p) for p in np.random.default_rng(1).uniform(-4, 4, (args.cases, 2))]
    grid = np.zeros((64, 64), dtype=np.uint8)
    suites = {name: kernel_suite(k, cases, points, grid)
              for name, k in (("python", _backend.python_kernels), ("cython", _backend.compiled_kernels))}

    print(f"{'kernel':<24}{'python us':>12}{'cython us':>12}{'speedup':>10}{'max diff':>12}")
    for kernel in suites["python"]:
        n = len(cases) if kernel != "rasterize_convex" else max(1, len(cases) // 10)
        tp, outp = _time(suites["python"][kernel], args.repeat)
        tc, outc = _time(suites["cython"][kernel], args.repeat)
        print(f"{kernel:<24}{1e6 * tp / n:>12.2f}{1e6 * tc / n:>12.2f}{tp / tc:>10.1f}{_max_diff(outp, outc):>12.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
