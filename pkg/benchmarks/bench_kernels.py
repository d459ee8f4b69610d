"""Compare the numba and numpy paths of the factored-operator kernel.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Applies every four-site damping Kraus operator to the codeword matrix of the
[4,1]_d code and reports the best-of-N wall time per backend.
"""
import argparse
import time

import numpy as np

from qudit_aqec._kernels import HAS_NUMBA, apply_factored_numba, apply_factored_numpy
from qudit_aqec.channel import amplitude_damping
from qudit_aqec.codes import four_qudit_code


def time_backend(fn, factors, psi, repeat):
    fn(factors[0], psi)  # warm-up (includes JIT compilation for numba)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for f in factors:
            fn(f, psi)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--d", type=int, nargs="+", default=[2, 3, 4, 5, 6])
    args = ap.parse_args(argv)
    print(f"{'d':>3} {'ops':>6} {'numpy_s':>10} {'numba_s':>10} {'speedup':>8} {'max_diff':>10}")
    for d in args.d:
        code = four_qudit_code(d)
        ks = amplitude_damping(d, 0.05)
        factors = [np.ascontiguousarray(op.factors) for op in ks]
        psi = np.ascontiguousarray(code.codewords)
        t_np = time_backend(apply_factored_numpy, factors, psi, args.repeat)
        if HAS_NUMBA:
            t_nb = time_backend(apply_factored_numba, factors, psi, args.repeat)
            diff = max(
                float(np.abs(apply_factored_numpy(f, psi) - apply_factored_numba(f, psi)).max())
                for f in factors
            )
            print(f"{d:>3} {len(factors):>6} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>8.2f} {diff:>10.1e}")
        else:
            print(f"{d:>3} {len(factors):>6} {t_np:>10.4f} {'n/a':>10} {'n/a':>8} {'n/a':>10}")


if __name__ == "__main__":
    main()
