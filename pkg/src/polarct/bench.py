"""Timing and storage comparison between the polar pipeline and the Cartesian baseline."""

from __future__ import annotations

import time

import numpy as np

from . import _backend
from .phantom import PhantomSpec, generate_phantom, generate_projections
from .scan import fan_grid, standard_fan
from .siddon import CartesianSpec, forward_project, precompute_system, reconstruct_cartesian
from .solver import SolverConfig, reconstruct
from .tracer import precompute_first_view

# speed-up factor quoted for the original implementation; reported next to ours
REFERENCE_SPEEDUP = 2.5


def memory_scaling(N: int, p_values, n_det: int = 101, kernels=None) -> list[dict]:
    """Stored tracing state of both pipelines for several view counts.

    The polar side keeps the first-view cache only; the Cartesian side keeps
    Siddon coefficients for every line of every view.
    """
    spec = fan_grid(N)
    cspec = CartesianSpec.matching(spec)
    rows = []
    for p in p_values:
        geom = standard_fan(n_views=p, n_det=n_det)
        cache = precompute_first_view(geom, spec, quarter_symmetry="auto")
        stored = precompute_system(geom, cspec, kernels)
        rows.append({
            "p": p,
            "uscg_bytes": cache.nbytes,
            "cartesian_bytes": stored.nbytes,
            "ratio": stored.nbytes / cache.nbytes,
        })
    return rows


def speed_compare(N: int, n_views: int = 50, sweeps: int = 10, n_det: int = 101,
                  kernels=None, repeats: int = 1) -> dict:
    """Wall-clock of a fixed number of sweeps on each pipeline, best of ``repeats``.

    Tracing set-up is included in every total: the polar first-view cache,
    the Cartesian coefficient store (stored variant) or nothing (on the fly).
    """
    k = kernels or _backend.kernels
    spec = fan_grid(N)
    cspec = CartesianSpec.matching(spec)
    geom = standard_fan(n_views=n_views, n_det=n_det)
    ph = generate_phantom(PhantomSpec("shepp-logan-2d"), spec)
    proj = generate_projections(ph.field, geom, spec, kernels=k)
    cproj = forward_project(cspec.from_image(ph.cartesian), geom, cspec, k)
    # a tolerance nobody reaches pins the sweep count on both sides
    cfg = SolverConfig(max_sweeps=sweeps, tol=1e-300)

    def best(fn):
        out = None
        for _ in range(repeats):
            t0 = time.perf_counter()
            rep = fn()
            total = time.perf_counter() - t0
            if out is None or total < out[0]:
                out = (total, rep)
        return out

    def uscg():
        return reconstruct(proj, spec, cfg, kernels=k)[1]

    def otf():
        return reconstruct_cartesian(cproj, cspec, cfg, on_the_fly=True, kernels=k)[1]

    def stored():
        t0 = time.perf_counter()
        system = precompute_system(geom, cspec, k)
        pre = time.perf_counter() - t0
        rep = reconstruct_cartesian(cproj, cspec, cfg, stored=system, kernels=k)[1]
        rep.precompute_s = pre
        return rep

    t_u, r_u = best(uscg)
    t_o, r_o = best(otf)
    t_s, r_s = best(stored)
    return {
        "N": N,
        "views": n_views,
        "detectors": n_det,
        "sweeps": sweeps,
        "backend": k.NAME,
        "uscg_total_s": t_u,
        "uscg_precompute_s": r_u.precompute_s,
        "cartesian_onthefly_total_s": t_o,
        "cartesian_stored_total_s": t_s,
        "cartesian_stored_precompute_s": r_s.precompute_s,
        "speedup_vs_onthefly": t_o / t_u,
        "speedup_vs_stored": t_s / t_u,
        "reference_speedup": REFERENCE_SPEEDUP,
    }


def bench_compare(sizes=(128, 256), p_values=(10, 50, 100), sweeps: int = 10,
                  n_views: int = 50, kernels=None, repeats: int = 1) -> dict:
    """Speed at each size and storage at each view count, as a flat report."""
    report: dict = {"backend": (kernels or _backend.kernels).NAME}
    for N in sizes:
        s = speed_compare(N, n_views=n_views, sweeps=sweeps, kernels=kernels, repeats=repeats)
        for key, val in s.items():
            if key not in ("N", "backend"):
                report[f"speed.N{N}.{key}"] = val
    mem = memory_scaling(max(sizes), p_values, kernels=kernels)
    for row in mem:
        for key in ("uscg_bytes", "cartesian_bytes", "ratio"):
            report[f"memory.N{max(sizes)}.p{row['p']}.{key}"] = row[key]
    ratios = np.array([row["ratio"] for row in mem])
    ps = np.array([row["p"] for row in mem], dtype=float)
    report["memory.ratio_per_view"] = float(np.mean(ratios / ps))
    return report
