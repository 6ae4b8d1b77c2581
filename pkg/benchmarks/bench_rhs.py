"""Benchmark the numba and pure-numpy RHS kernels against each other.

Usage: python benchmarks/bench_rhs.py [--sizes 64,128,256] [--repeats 20]

Reports per-call times for both backends, the speedup, and the worst
elementwise disagreement (the backends must agree to ~1e-13).
"""

import argparse
import time

import numpy as np

from vfvlab import kernels
from vfvlab.eos import GasParams
from vfvlab.grid import Mesh
from vfvlab.initdata import KhSpec, kh_initial_field


def time_call(fn, *args, repeats):
    fn(*args)  # warm-up (JIT compile / cache load)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="64,128,256")
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    gas = GasParams(1.4)
    if not kernels.NUMBA_ENABLED:
        print("numba backend is disabled (VFVLAB_NUMBA=0?); nothing to compare")
        return

    print(f"{'n':>6} {'numba [ms]':>12} {'numpy [ms]':>12} {'speedup':>8} {'max |diff|':>12}")
    for n in sizes:
        fld = kh_initial_field(KhSpec(seed=42), Mesh(n), gas)
        common = (fld.mesh.h, 1.0, 2.0, gas.gamma, False, True)
        t_nb = time_call(kernels.rhs_numba, fld.data, *common, repeats=args.repeats)
        t_np = time_call(kernels.rhs_numpy, fld.data, *common, repeats=args.repeats)
        diff = float(np.abs(kernels.rhs_numba(fld.data, *common)
                            - kernels.rhs_numpy(fld.data, *common)).max())
        print(f"{n:>6} {t_nb * 1e3:>12.3f} {t_np * 1e3:>12.3f} "
              f"{t_np / t_nb:>8.1f} {diff:>12.3e}")


if __name__ == "__main__":
    main()
