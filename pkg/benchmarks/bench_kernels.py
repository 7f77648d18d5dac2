"""Compare the compiled kernels with the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--rows N] [--repeat R]

Prints per-kernel timings for both backends, the largest disagreement
between them, and an end-to-end ``max_section`` timing with each backend
(the fallback is forced in a subprocess via HYPSLICE_PURE_PYTHON=1).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from hypslice import _backend
from hypslice import _kernels_py as K
from hypslice.geometry import gauss_legendre01, mc_directions

END_TO_END = """
import time
from hypslice import BACKEND, builtin_density, make_lp_ball, max_section, OptConfig
b = make_lp_ball(4, 1.5)
d = builtin_density("bump", 4, radius=1.2)
t = time.perf_counter()
max_section(b, d, opt_cfg=OptConfig(starts=8))
print(BACKEND, time.perf_counter() - t)
"""


def bench(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    if _backend.compiled_kernels is None:
        print("compiled kernels not built; only the fallback is available")
        return 1
    backends = {"compiled": _backend.compiled_kernels, "python": _backend.python_kernels}
    y = mc_directions(6, args.rows, 1) * 1.7
    inv_w = 1.0 / np.linspace(0.5, 2.0, 6)
    rho = 0.5 + np.abs(y[:, 0])
    snorm = np.ones(args.rows)
    t, w = gauss_legendre01(32)

    cases = {
        "lp_gauge p=1.5": lambda k: k.lp_gauge(y, 1.5, inv_w),
        "lp_gauge p=inf": lambda k: k.lp_gauge(y, np.inf, inv_w),
        "radial_moments gaussian": lambda k: k.radial_moments(rho, snorm, 5, K.GAUSSIAN, 1.0, 0.5, t, w),
        "radial_moments bump": lambda k: k.radial_moments(rho, snorm, 5, K.BUMP, 1.2, 0.0, t, w),
    }
    print(f"{'kernel':28s} {'compiled [ms]':>14s} {'python [ms]':>12s} {'speedup':>8s} {'max rel diff':>13s}")
    for name, call in cases.items():
        times = {b: bench(lambda k=k: call(k), args.repeat) for b, k in backends.items()}
        a, b = call(backends["compiled"]), call(backends["python"])
        diff = float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))
        print(f"{name:28s} {1e3 * times['compiled']:14.2f} {1e3 * times['python']:12.2f} "
              f"{times['python'] / times['compiled']:8.1f} {diff:13.2e}")

    print("\nend-to-end max_section (B_1.5^4, bump density):")
    for pure in ("0", "1"):
        env = dict(os.environ, HYPSLICE_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True,
                             text=True, check=True)
        backend, secs = out.stdout.split()
        print(f"  {backend:9s} {float(secs):8.2f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
