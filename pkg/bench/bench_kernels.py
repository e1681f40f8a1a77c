"""Compare the compiled polynomial kernels with the pure-Python fallback.

Usage: python3 bench/bench_kernels.py [--sizes 64 256 1024] [--repeat 5]
Also times one end-to-end computation per backend by re-running this
script in a subprocess with NTHCOEFF_PURE_PYTHON set.
"""
import argparse
import os
import random
import subprocess
import sys
import timeit

from nthcoeff import _kernels_py, kernels


def bench_mul(sizes, repeat, modulus):
    rng = random.Random(1)
    rows = []
    for n in sizes:
        a = [rng.randrange(modulus) for _ in range(n)]
        b = [rng.randrange(modulus) for _ in range(n)]
        py = min(timeit.repeat(lambda: _kernels_py.poly_mul_mod(a, b, modulus), number=1, repeat=repeat))
        if kernels.COMPILED:
            from nthcoeff import _kernels

            assert _kernels.poly_mul_mod(a, b, modulus) == _kernels_py.poly_mul_mod(a, b, modulus)
            cy = min(timeit.repeat(lambda: _kernels.poly_mul_mod(a, b, modulus), number=1, repeat=repeat))
        else:
            cy = float("nan")
        rows.append((n, py, cy))
    return rows


def end_to_end():
    """Wall time of f_N on the bundled example for the backend selected at import."""
    import time

    from nthcoeff.cli import bundled_instance
    from nthcoeff.hermite_pade import nth_coeff_hp

    inst = bundled_instance()
    t0 = time.perf_counter()
    value = nth_coeff_hp(inst, 5**40 + 70)
    return kernels.BACKEND, time.perf_counter() - t0, value


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[16, 64, 256, 1024, 4096])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--modulus", type=int, default=5**9)
    ap.add_argument("--end-to-end-only", action="store_true")
    args = ap.parse_args()

    if args.end_to_end_only:
        backend, wall, value = end_to_end()
        print(f"{backend},{wall:.4f},{value}")
        return

    print(f"backend at import: {kernels.BACKEND}")
    print(f"{'n':>6} {'python (s)':>12} {'cython (s)':>12} {'speedup':>8}")
    for n, py, cy in bench_mul(args.sizes, args.repeat, args.modulus):
        print(f"{n:>6} {py:>12.6f} {cy:>12.6f} {py / cy if cy == cy else float('nan'):>8.1f}")

    print("\nend to end (Hermite-Pade engine, bundled F_5 example, N = 5^40 + 70):")
    for pure in ("0", "1"):
        env = dict(os.environ, NTHCOEFF_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, __file__, "--end-to-end-only"], env=env,
                             capture_output=True, text=True, check=True).stdout.strip()
        print("  " + out)


if __name__ == "__main__":
    main()
