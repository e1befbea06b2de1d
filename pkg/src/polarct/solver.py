"""Sp-MART row-action reconstruction with binary, on-the-fly coefficients."""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _backend
from .errors import InputError, NumericalError
from .grid import GridSpec
from .scan import ScanGeometry
from .tracer import FirstViewCache, precompute_first_view

log = logging.getLogger(__name__)

ZERO_SKIP = "skip"
ZERO_DAMP = "damp"


@dataclass(frozen=True)
class SolverConfig:
    """Sp-MART parameters.

    ``zero_lines`` picks what a line with zero measurement does: ``"skip"``
    leaves its cells alone, ``"damp"`` applies the ordinary update with a zero
    ratio, i.e. scales its cells by ``1 - beta`` (floored at ``factor_floor``).
    """

    beta: float = 0.4
    tol: float = 1e-4
    max_sweeps: int = 30
    f_init: float = 1.0
    p_floor: float | None = None
    factor_floor: float = 1e-3
    zero_lines: str = ZERO_DAMP

    def __post_init__(self):
        if not 0.0 < self.beta < 2.0:
            raise InputError(f"relaxation beta must lie in (0, 2), got {self.beta}")
        if not self.tol > 0.0:
            raise InputError(f"tolerance must be positive, got {self.tol}")
        if not self.f_init > 0.0:
            raise InputError(f"initial field value must be positive, got {self.f_init}")
        if self.max_sweeps < 1:
            raise InputError("max_sweeps must be >= 1")
        if not 0.0 < self.factor_floor < 1.0:
            raise InputError("factor_floor must lie in (0, 1)")
        if self.zero_lines not in (ZERO_SKIP, ZERO_DAMP):
            raise InputError(f"zero_lines must be 'skip' or 'damp', got {self.zero_lines!r}")


@dataclass
class ProjectionSet:
    """Line integrals ``data[view, line]`` for a scan geometry."""

    geometry: ScanGeometry
    data: np.ndarray

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float64)
        expected = (self.geometry.n_views, self.geometry.n_lines)
        if self.data.shape != expected:
            raise InputError(f"projection data shape {self.data.shape} != {expected}")


@dataclass
class ConvergenceReport:
    sweeps: int = 0
    converged: bool = False
    residuals: list = dc_field(default_factory=list)
    runtime_s: float = 0.0
    precompute_s: float = 0.0
    zero_lines: int = 0
    clamped: int = 0
    backend: str = ""
    warnings: list = dc_field(default_factory=list)

    def as_dict(self) -> dict:
        out = {
            "sweeps": self.sweeps,
            "converged": self.converged,
            "runtime_s": self.runtime_s,
            "precompute_s": self.precompute_s,
            "zero_lines": self.zero_lines,
            "clamped": self.clamped,
            "backend": self.backend,
        }
        for i, r in enumerate(self.residuals, 1):
            out[f"residual.{i}"] = r
        for i, w in enumerate(self.warnings, 1):
            out[f"warning.{i}"] = w
        return out


def default_p_floor(data: np.ndarray) -> float:
    nz = data[data != 0.0]
    return 1e-12 * float(np.mean(np.abs(nz))) if nz.size else 1e-12


def forward_project_line(field: np.ndarray, active) -> float:
    """Computed line integral under binary coefficients: the sum over active cells."""
    active = np.asarray(active, dtype=np.int64)
    if active.size == 0:
        return 0.0
    return float(np.sum(field[active]))


def mart_update_line(field: np.ndarray, active, p_meas: float, beta: float,
                     p_floor: float, factor_floor: float = 1e-3) -> float:
    """Scale the active cells of one line in place; returns the factor used.

    The factor is ``1 - beta (1 - P_meas / P_calc)``; values below
    ``factor_floor`` are clamped so the field stays positive.
    """
    active = np.asarray(active, dtype=np.int64)
    if active.size == 0:
        return 1.0
    pbar = forward_project_line(field, active)
    ratio = p_meas / max(pbar, p_floor)
    fac = 1.0 - beta * (1.0 - ratio)
    if fac < factor_floor:
        fac = factor_floor
    field[active] *= fac
    return fac


UPDATED = 1
ON_ZERO_LINE = 2


def relative_change(new: np.ndarray, old: np.ndarray, touched: np.ndarray) -> float:
    """Largest ``|new - old| / old`` over cells updated only by nonzero lines.

    ``touched`` holds the per-cell bits set by the sweep kernels.  Cells on a
    zero-measurement line are left out: under damping they decay towards zero
    at a fixed rate, so their relative change says nothing about convergence.
    """
    mask = touched == UPDATED
    if not mask.any():
        return 0.0
    o = old[mask]
    return float(np.max(np.abs(new[mask] - o) / o))


def reconstruct(proj: ProjectionSet, spec: GridSpec, cfg: SolverConfig | None = None,
                cache: FirstViewCache | None = None, kernels=None):
    """Run Sp-MART sweeps until the relative change drops to ``cfg.tol``.

    Views are visited in acquisition order and lines in detector order.  The
    stopping test takes the largest ``|f_new - f_old| / f_old`` over the cells
    updated during a sweep (see :func:`relative_change`).  Returns
    ``(field, report)``.
    """
    cfg = cfg or SolverConfig()
    k = kernels or _backend.kernels
    report = ConvergenceReport(backend=k.NAME)
    data = proj.data
    if not np.all(np.isfinite(data)):
        raise InputError("projection data contains non-finite values")
    field = np.full(spec.n_grids, cfg.f_init, dtype=np.float64)
    if not np.any(data):
        msg = "all measurements are zero; returning the initial field"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        report.warnings.append(msg)
        return field, report

    t0 = time.perf_counter()
    if cache is None:
        cache = precompute_first_view(proj.geometry, spec, quarter_symmetry="auto")
    report.precompute_s = time.perf_counter() - t0

    p_floor = cfg.p_floor if cfg.p_floor is not None else default_p_floor(data)
    thetas = np.ascontiguousarray(proj.geometry.thetas, dtype=np.float64)
    touched = np.zeros(spec.n_grids, dtype=np.uint8)
    for sweep in range(1, cfg.max_sweeps + 1):
        f_old = field.copy()
        n_zero, n_clamped = k.mart_sweep(
            field, cache.phi, cache.code, cache.ptr, thetas, data, spec.N,
            spec.heads, spec.counts, cfg.beta, p_floor, cfg.factor_floor,
            cfg.zero_lines == ZERO_SKIP, touched, sweep == 1)
        report.zero_lines += n_zero
        report.clamped += n_clamped
        if not np.all(np.isfinite(field)):
            raise NumericalError(f"field became non-finite in sweep {sweep}")
        change = relative_change(field, f_old, touched)
        report.residuals.append(change)
        report.sweeps = sweep
        log.debug("sweep %d: max relative change %.3e", sweep, change)
        if change <= cfg.tol:
            report.converged = True
            break
    report.runtime_s = time.perf_counter() - t0
    return field, report
