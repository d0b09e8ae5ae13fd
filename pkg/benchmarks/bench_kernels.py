"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from cmetas import _fallback

try:
    from cmetas import _kernels
except ImportError:  # extension not built
    _kernels = None


def cases():
    rng = np.random.default_rng(0)
    z = (rng.uniform(1, 200, 20_000) + 1j * rng.uniform(-2000, 2000, 20_000)).astype(complex)
    t = np.linspace(0.0, 10.0, 4001)
    g = 0.19 - 0.05 * (1 - (1 + t) ** -0.5)
    kern = 0.5 * (1 + t) ** -1.5
    h = t[1] - t[0]
    return {
        "gamma_cf_scaled (20k points)": lambda m: m.gamma_cf_scaled(-0.5, z),
        "volterra_trapezoid (4001 steps)": lambda m: m.volterra_trapezoid(g, kern, 0.03, h),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = [("python", _fallback)] + ([("cython", _kernels)] if _kernels is not None else [])
    print(f"{'kernel':34s}" + "".join(f"{name:>12s}" for name, _ in backends) + "     speedup")
    for label, fn in cases().items():
        times = [min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)) for _, mod in backends]
        row = f"{label:34s}" + "".join(f"{t * 1e3:10.1f}ms" for t in times)
        if len(times) == 2:
            row += f"  {times[0] / times[1]:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
