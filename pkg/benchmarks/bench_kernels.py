"""Compare the compiled and pure-numpy resampling backends.

    python benchmarks/bench_kernels.py [--n 512] [--repeats 5]

Times the two kernels (bicubic/bilinear ``warp_affine`` and
``correlate_axis``) and one end-to-end SE(2) pooling call per backend, and
checks that both backends return bitwise-identical arrays.
"""

import argparse
import math
import statistics
import time

import numpy as np

from orbitpool import kernels
from orbitpool.haar import PoolingRegion
from orbitpool.images import ImageSpec, synthesize
from orbitpool.pooling import QuadratureSpec, pool


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times), out


def with_backend(name, fn):
    saved = kernels._impl
    kernels._impl = kernels.get_backend(name)
    try:
        return fn()
    finally:
        kernels._impl = saved


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=512, help="grid resolution")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args(argv)

    try:
        kernels.get_backend("cython")
    except ImportError:
        raise SystemExit("compiled extension not built; run `pip install -e .` first")

    rng = np.random.default_rng(0)
    src = rng.standard_normal((args.n, args.n))
    c, s = math.cos(0.3), math.sin(0.3)
    coeffs = (c, s, -20.5, -s, c, 40.25)
    offsets = np.arange(-8, 9)
    weights = rng.random(offsets.size)
    f = synthesize(ImageSpec(sigma=0.6, center=(-0.5, -0.5), margin=0.2), n=args.n)
    region = PoolingRegion.se2_box(0.3, 1.0)
    q = QuadratureSpec(5, 5, 5)

    cases = [
        ("warp_affine bicubic", lambda b: lambda: b.warp_affine(src, coeffs, 3)),
        ("warp_affine bilinear", lambda b: lambda: b.warp_affine(src, coeffs, 1)),
        ("correlate_axis (17 taps)", lambda b: lambda: b.correlate_axis(src, offsets, weights, 1)),
    ]
    print(f"grid {args.n}x{args.n}, best of {args.repeats}")
    print(f"{'kernel':28s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}  identical")
    for label, make in cases:
        tp, _, outp = best_of(make(kernels.get_backend("python")), args.repeats)
        tc, _, outc = best_of(make(kernels.get_backend("cython")), args.repeats)
        print(f"{label:28s} {tp * 1e3:12.2f} {tc * 1e3:12.2f} {tp / tc:8.1f}x  {np.array_equal(outp, outc)}")

    reps = max(1, args.repeats // 2)
    tp, _, pp = with_backend("python", lambda: best_of(lambda: pool(f, region, q), reps))
    tc, _, pc = with_backend("cython", lambda: best_of(lambda: pool(f, region, q), reps))
    print(f"{'pool se2 5x5x5':28s} {tp * 1e3:12.2f} {tc * 1e3:12.2f} {tp / tc:8.1f}x  "
          f"{np.array_equal(pp.values, pc.values)}")


if __name__ == "__main__":
    main()
