"""Time the compiled and pure-Python grid kernels on the same workload.

    python benchmarks/compare_backends.py --points 1000000 --repeat 3
"""
import argparse
import time

import numpy as np

from spmdgrid import kernel
from spmdgrid.expr import PAPER_EXPRESSION, parse
from spmdgrid.grid import index_points
from spmdgrid.protocol import bitwise_equal


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.process_time()
        out = fn()
        best = min(best, time.process_time() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=1_000_000)
    ap.add_argument("--step", type=float, default=0.001)
    ap.add_argument("--expr", default=PAPER_EXPRESSION)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    tree = parse(args.expr)
    xs = index_points(0, args.points - 1, args.step)
    timings, outputs = {}, {}
    for backend in kernel.available_backends():
        t, (values, nan_count) = best_of(lambda: kernel.evaluate(tree, xs, backend), args.repeat)
        timings[backend], outputs[backend] = t, values
        print(f"{backend:>7}: {t:8.4f} s CPU  {args.points / t / 1e6:8.2f} Mpts/s  "
              f"nan_count={nan_count}")
    if len(timings) == 2:
        print(f"speedup cython/python: {timings['python'] / timings['cython']:.1f}x")
        print(f"bitwise identical: {bitwise_equal(outputs['cython'], outputs['python'])}")
    else:
        print("compiled kernel not built; only the fallback was timed")


if __name__ == "__main__":
    main()
