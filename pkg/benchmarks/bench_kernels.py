"""Compare the compiled and numpy backends on the hot loops.

    python benchmarks/bench_kernels.py [--points 2000] [--nodes 8000] [--repeat 3]
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from freeprob import kernels as K
from freeprob import measures as M
from freeprob import transforms as T


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(points: int, nodes: int):
    rng = np.random.default_rng(0)
    x = np.sort(rng.uniform(-2, 2, nodes))
    w = np.full(nodes, 1.0 / nodes)
    z = np.linspace(-2.2, 2.2, points) + 0.01j
    y = np.array([-1.0, 1.0])
    q = np.array([0.5, 0.5])
    semi = M.make_semicircle()
    sx, sw = semi.quadrature()
    return {
        "cauchy_sum": lambda be, th: be.cauchy(z, x, w, th),
        "subordinate": lambda be, th: be.subordinate(z, sx, sw, y, q, T.DEFAULT_TOL,
                                                     T.DEFAULT_MAX_ITER, False, th),
        "power_subordinate": lambda be, th: be.power_subordinate(z, sx, sw, 2.5, T.DEFAULT_TOL,
                                                                 T.DEFAULT_MAX_ITER, th),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=2000, help="number of z values")
    ap.add_argument("--nodes", type=int, default=8000, help="quadrature nodes for the Cauchy sum")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args(argv)

    rows = []
    for name, fn in cases(args.points, args.nodes).items():
        timings = {}
        for be_name in K.available_backends():
            be = K.get_backend(be_name)
            fn(be, args.threads)  # warm up
            timings[be_name] = best_of(lambda: fn(be, args.threads), args.repeat)
        row = {"case": name, **{f"{k}_s": v for k, v in timings.items()}}
        if "cython" in timings:
            row["speedup"] = timings["numpy"] / timings["cython"]
        rows.append(row)

    if args.json:
        print(json.dumps(rows, indent=2))
        return
    print(f"points={args.points} nodes={args.nodes} threads={args.threads} "
          f"backends={','.join(K.available_backends())}")
    for r in rows:
        cells = " ".join(f"{k}={v:.4f}" for k, v in r.items() if k != "case")
        print(f"{r['case']:<18} {cells}")


if __name__ == "__main__":
    main()
