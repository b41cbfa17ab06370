"""Timing comparison of the numba kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--steps 2000]
"""

import argparse
import time

import numpy as np

from solitonflow import make_soliton
from solitonflow._kernels import get_impl
from solitonflow.geometry import circle_curve, cylinder_loop_curve


def time_call(fn, *args, repeat=5):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=2000)
    args = parser.parse_args()

    impls = {"numpy": get_impl("numpy")}
    try:
        impls["numba"] = get_impl("numba")
    except ImportError:
        print("numba unavailable; timing the numpy path only")

    cases = []
    g2 = make_soliton("gaussian", {"dim": 2})
    cyl = make_soliton("cylinder")
    for n in (64, 256, 1024):
        cases.append(("gaussian-circle", g2, circle_curve(n, 1.4),
                      g2.code, 0))
    cases.append(("cylinder-loop", cyl,
                  cylinder_loop_curve(256, x0=0.3, theta_wobble=0.2),
                  cyl.code, 1))

    print(f"{'case':<18} {'N':>5} {'backend':>8} {'geometry':>12} "
          f"{'advance x' + str(args.steps):>16} {'steps/s':>12}")
    for label, soliton, curve, code, kind in cases:
        chart = soliton.chart
        n = curve.n_vertices
        for name, impl in impls.items():
            # warm the jit cache before timing
            impl.curve_arrays(code, 1.0, 1.0, chart.periods, curve.vertices,
                              curve.param_spacing)
            impl.advance(code, chart.periods, chart.lo, chart.hi,
                         curve.vertices, curve.param_spacing, kind, 1.0,
                         0.0, 1e-6, 2, 0.4, 1e-12)
            t_geom = time_call(impl.curve_arrays, code, 1.0, 1.0,
                               chart.periods, curve.vertices,
                               curve.param_spacing)
            t_adv = time_call(impl.advance, code, chart.periods, chart.lo,
                              chart.hi, curve.vertices, curve.param_spacing,
                              kind, 1.0, 0.0, 1e-6, args.steps, 0.4, 1e-12,
                              repeat=3)
            print(f"{label:<18} {n:>5} {name:>8} {t_geom * 1e6:>10.1f}us "
                  f"{t_adv:>14.3f}s {args.steps / t_adv:>12.0f}")


if __name__ == "__main__":
    main()
