#!/usr/bin/env python3
"""Compare the jitted affine warp kernel against the pure-numpy fallback.

Both paths compute identical values; this measures throughput only.  Run
with SSMARK_DISABLE_NUMBA=1 to confirm the package still works without a
JIT (the selection happens at import time, not here).
"""

import argparse
import math
import time

import numpy as np

from ssmark import _kernels


def bench(fn, src, m, out_h, out_w, repeats):
    # warmup covers one-time JIT compilation
    fn(src, m, out_h, out_w)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(src, m, out_h, out_w)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=1024)
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()

    n = args.size
    rng = np.random.default_rng(1)
    src = rng.uniform(0, 255, (n, n))
    t = math.radians(5.0)
    m = np.array([math.cos(t), -math.sin(t), 3.0,
                  math.sin(t), math.cos(t), -2.0])

    t_np = bench(_kernels.affine_sample_numpy, src, m, n, n, args.repeats)
    print(f"affine_sample {n}x{n}, best of {args.repeats}:")
    print(f"  numpy  {t_np * 1e3:8.2f} ms")
    if _kernels.HAS_NUMBA:
        t_nb = bench(_kernels.affine_sample_numba, src, m, n, n, args.repeats)
        print(f"  numba  {t_nb * 1e3:8.2f} ms  ({t_np / t_nb:.1f}x)")
        out_a, mask_a = _kernels.affine_sample_numba(src, m, n, n)
        out_b, mask_b = _kernels.affine_sample_numpy(src, m, n, n)
        same = np.array_equal(out_a, out_b) and np.array_equal(mask_a, mask_b)
        print(f"  outputs identical: {same}")
    else:
        print("  numba  unavailable")


if __name__ == "__main__":
    main()
