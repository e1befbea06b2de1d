"""Time the hot kernels on the compiled and pure-Python backends.

    python benchmarks/bench_backends.py [--n 64] [--views 10] [--repeats 3]

Both backends get identical inputs; the table lists best-of-N wall clock
and the compiled speedup.  The pure-Python side is slow, so keep sizes modest.
"""

import argparse
import time

import numpy as np

from polarct._backend import available
from polarct.phantom import PhantomSpec, generate_phantom
from polarct.scan import fan_grid, standard_fan
from polarct.siddon import CartesianSpec
from polarct.tracer import precompute_first_view


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n, views):
    spec = fan_grid(n)
    geom = standard_fan(n_views=views)
    cache = precompute_first_view(geom, spec)
    field = generate_phantom(PhantomSpec("shepp-logan-2d"), spec).field + 0.1
    thetas = np.ascontiguousarray(geom.thetas)
    data = np.random.default_rng(0).uniform(1.0, 5.0, (geom.n_views, geom.n_lines))
    cs = CartesianSpec.matching(spec)
    S, Ds = geom.view_lines(0.0)
    S, Ds = np.ascontiguousarray(S), np.ascontiguousarray(Ds)
    args = (cache.phi, cache.code, cache.ptr)

    def trace(k):
        for t in thetas:
            k.trace_view(*args, t, spec.N, spec.heads, spec.counts, spec.n_grids, cache.capacity)

    def forward(k):
        for t in thetas:
            k.forward_view(field, *args, t, spec.N, spec.heads, spec.counts)

    def sweep(k):
        f = np.ones(spec.n_grids)
        touched = np.zeros(spec.n_grids, np.uint8)
        k.mart_sweep(f, *args, thetas, data, spec.N, spec.heads, spec.counts, 0.4, 1e-12,
                     1e-3, False, touched, True)

    def siddon(k):
        for _ in thetas:
            k.siddon_view(S, Ds, cs.cgrid())

    return {"trace_view": trace, "forward_view": forward, "mart_sweep": sweep,
            "siddon_view": siddon}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--views", type=int, default=10)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    kern = available()
    if "cython" not in kern:
        print("compiled kernels not built; only the Python backend is available")
    print(f"N={args.n}, {args.views} views, 101 detectors, best of {args.repeats}")
    print(f"{'kernel':<14}{'python s':>12}{'cython s':>12}{'speedup':>10}")
    for name, fn in cases(args.n, args.views).items():
        tp = best_of(lambda: fn(kern["python"]), args.repeats)
        if "cython" in kern:
            tc = best_of(lambda: fn(kern["cython"]), args.repeats)
            print(f"{name:<14}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}x")
        else:
            print(f"{name:<14}{tp:>12.4f}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
