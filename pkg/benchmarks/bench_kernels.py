"""Compiled vs numpy kernels on the planar rotated-median quadrature loop.

    python benchmarks/bench_kernels.py [--panels 20000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from facloc import _fallback, kernels
from facloc.geometry import substream
from facloc.instances import build
from facloc.quadrature import simpson_rule


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--panels", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not kernels.compiled_available():
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    from facloc import _kernels

    thetas, _ = simpson_rule(args.panels)
    cases = {
        "lb-2d M=20 (3 atoms)": build("paper-lb-2d", M=20),
        "gaussian n=201": build("random-gaussian", n=201, seed=1),
        "gaussian n=2001": build("random-gaussian", n=2001, seed=1),
    }
    print(f"{'instance':<24} {'kernel':<8} {'numpy s':>9} {'cython s':>9} {'speedup':>8}")
    for name, P in cases.items():
        px, py = np.ascontiguousarray(P.points[:, 0]), np.ascontiguousarray(P.points[:, 1])
        w = np.ascontiguousarray(P.weights)
        for label, fn in (("medians", lambda impl: impl.rotated_medians_2d(px, py, w, thetas)),
                          ("costs", lambda impl: impl.costs_2d(px, py, w, *hxy, 2.0))):
            hxy = _kernels.rotated_medians_2d(px, py, w, thetas)
            a = best_of(lambda: fn(_fallback), args.repeat)
            b = best_of(lambda: fn(_kernels), args.repeat)
            print(f"{name:<24} {label:<8} {a:9.4f} {b:9.4f} {a / b:7.1f}x")
    v = substream(2).standard_normal(100_001)
    ones = np.ones_like(v)
    a = best_of(lambda: _fallback.weighted_lower_median(v, ones), args.repeat)
    b = best_of(lambda: _kernels.weighted_lower_median(v, ones), args.repeat)
    print(f"{'1-D median n=100001':<24} {'median':<8} {a:9.4f} {b:9.4f} {a / b:7.1f}x")


if __name__ == "__main__":
    main()
