"""Cartesian pixel/voxel baseline: Siddon traversal and a length-weighted Sp-MART.

Flat voxel order is ``(k * ny + j) * nx + i`` with ``i`` along +x, ``j``
along +y and ``k`` along +z, all counted from ``origin``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import InputError, NumericalError
from .grid import GridSpec
from .scan import ScanGeometry
from .solver import (ConvergenceReport, ProjectionSet, SolverConfig, ZERO_SKIP,
                     default_p_floor, relative_change)


@dataclass(frozen=True)
class CartesianSpec:
    """``N`` voxels per axis of edge ``voxel``; ``origin`` is the minimum corner.

    ``depth`` is the voxel count along z (1 for a 2D image).
    """

    N: int
    voxel: float
    origin: tuple = None
    depth: int = 1
    voxel_z: float = None

    def __post_init__(self):
        if self.N < 1 or self.depth < 1:
            raise InputError("Cartesian grid needs at least one voxel per axis")
        if not self.voxel > 0.0:
            raise InputError(f"voxel size must be positive, got {self.voxel}")
        vz = self.voxel if self.voxel_z is None else float(self.voxel_z)
        if not vz > 0.0:
            raise InputError("voxel depth must be positive")
        object.__setattr__(self, "voxel_z", vz)
        if self.origin is None:
            half = self.N * self.voxel / 2.0
            object.__setattr__(self, "origin", (-half, -half, -self.depth * vz / 2.0))
        else:
            o = tuple(float(c) for c in self.origin) + (0.0,) * (3 - len(self.origin))
            object.__setattr__(self, "origin", o[:3])

    @classmethod
    def matching(cls, spec: GridSpec) -> "CartesianSpec":
        """Pixel grid with the same N and cell size as a polar grid, centred on the axis."""
        if spec.is_3d:
            return cls(spec.N, spec.r, depth=spec.N, voxel_z=spec.h)
        return cls(spec.N, spec.r)

    @property
    def is_3d(self) -> bool:
        return self.depth > 1

    @property
    def n_voxels(self) -> int:
        return self.N * self.N * self.depth

    @property
    def shape(self) -> tuple:
        return (self.depth, self.N, self.N) if self.is_3d else (self.N, self.N)

    def cgrid(self) -> tuple:
        x0, y0, z0 = self.origin
        return (self.N, self.N, self.depth, x0, y0, z0, self.voxel, self.voxel,
                self.voxel_z, self.is_3d)

    def to_image(self, field: np.ndarray) -> np.ndarray:
        """Reshape a flat field to an image whose rows run towards -y."""
        return np.flip(np.asarray(field).reshape(self.shape), axis=-2).copy()

    def from_image(self, image: np.ndarray) -> np.ndarray:
        img = np.asarray(image, dtype=np.float64)
        if img.shape != self.shape:
            raise InputError(f"image shape {img.shape} != {self.shape}")
        return np.ascontiguousarray(np.flip(img, axis=-2)).ravel()


def siddon_trace(S, D, cspec: CartesianSpec, kernels=None) -> tuple[np.ndarray, np.ndarray]:
    """Voxels crossed by segment SD and the chord length inside each.

    A segment that misses the grid gives two empty arrays.
    """
    k = kernels or _backend.kernels
    S = np.asarray(S, dtype=np.float64).reshape(3)
    D = np.asarray(D, dtype=np.float64).reshape(3)
    idx, lens = k.siddon_line(S, D, cspec.cgrid())
    return np.asarray(idx, dtype=np.int64), np.asarray(lens, dtype=np.float64)


@dataclass
class StoredSystem:
    """Precomputed coefficients of every line of every view, CSR by ``view * n_lines + line``."""

    ptr: np.ndarray
    idx: np.ndarray
    lens: np.ndarray

    @property
    def nbytes(self) -> int:
        return self.ptr.nbytes + self.idx.nbytes + self.lens.nbytes


def _view_endpoints(geom: ScanGeometry):
    srcs, dets = [], []
    for theta in geom.thetas:
        S, Ds = geom.view_lines(theta)
        srcs.append(S)
        dets.append(Ds)
    return np.ascontiguousarray(srcs), np.ascontiguousarray(dets)


def precompute_system(geom: ScanGeometry, cspec: CartesianSpec, kernels=None) -> StoredSystem:
    """Trace every line of every view with Siddon and keep the result."""
    k = kernels or _backend.kernels
    cg = cspec.cgrid()
    ptrs, idxs, lens = [np.zeros(1, dtype=np.int64)], [], []
    offset = 0
    for theta in geom.thetas:
        S, Ds = geom.view_lines(theta)
        p, i, w = k.siddon_view(np.ascontiguousarray(S), np.ascontiguousarray(Ds), cg)
        ptrs.append(p[1:] + offset)
        offset += int(p[-1])
        idxs.append(i)
        lens.append(w)
    return StoredSystem(np.concatenate(ptrs), np.concatenate(idxs).astype(np.int32),
                        np.concatenate(lens).astype(np.float32))


def forward_project(field: np.ndarray, geom: ScanGeometry, cspec: CartesianSpec,
                    kernels=None) -> ProjectionSet:
    """Length-weighted line integrals of a flat Cartesian field."""
    field = np.asarray(field, dtype=np.float64).ravel()
    if field.size != cspec.n_voxels:
        raise InputError(f"field has {field.size} values, grid expects {cspec.n_voxels}")
    k = kernels or _backend.kernels
    cg = cspec.cgrid()
    data = np.zeros((geom.n_views, geom.n_lines))
    for v, theta in enumerate(geom.thetas):
        S, Ds = geom.view_lines(theta)
        p, i, w = k.siddon_view(np.ascontiguousarray(S), np.ascontiguousarray(Ds), cg)
        contrib = field[i] * w.astype(np.float64)
        cs = np.concatenate([[0.0], np.cumsum(contrib)])
        data[v] = cs[p[1:]] - cs[p[:-1]]
    return ProjectionSet(geom, data)


def reconstruct_cartesian(proj: ProjectionSet, cspec: CartesianSpec,
                          cfg: SolverConfig | None = None, stored: StoredSystem | None = None,
                          on_the_fly: bool = False, kernels=None):
    """Sp-MART on the pixel grid with length weights ``w / max(w)`` per line.

    With ``on_the_fly`` every line is re-traced in every sweep; otherwise the
    full coefficient set is built once (or taken from ``stored``).
    """
    cfg = cfg or SolverConfig()
    k = kernels or _backend.kernels
    report = ConvergenceReport(backend=k.NAME)
    data = proj.data
    if not np.all(np.isfinite(data)):
        raise InputError("projection data contains non-finite values")
    field = np.full(cspec.n_voxels, cfg.f_init, dtype=np.float64)
    if not np.any(data):
        report.warnings.append("all measurements are zero; returning the initial field")
        return field, report

    t0 = time.perf_counter()
    if on_the_fly:
        srcs, dets = _view_endpoints(proj.geometry)
    elif stored is None:
        stored = precompute_system(proj.geometry, cspec, k)
    report.precompute_s = time.perf_counter() - t0

    p_floor = cfg.p_floor if cfg.p_floor is not None else default_p_floor(data)
    skip = cfg.zero_lines == ZERO_SKIP
    touched = np.zeros(cspec.n_voxels, dtype=np.uint8)
    for sweep in range(1, cfg.max_sweeps + 1):
        f_old = field.copy()
        if on_the_fly:
            nz, nc = k.cart_sweep_onthefly(field, srcs, dets, cspec.cgrid(), data, cfg.beta,
                                           p_floor, cfg.factor_floor, skip, touched,
                                           sweep == 1)
        else:
            nz, nc = k.cart_sweep_stored(field, stored.ptr, stored.idx, stored.lens, data,
                                         cfg.beta, p_floor, cfg.factor_floor, skip, touched,
                                         sweep == 1)
        report.zero_lines += nz
        report.clamped += nc
        if not np.all(np.isfinite(field)):
            raise NumericalError(f"field became non-finite in sweep {sweep}")
        change = relative_change(field, f_old, touched)
        report.residuals.append(change)
        report.sweeps = sweep
        if change <= cfg.tol:
            report.converged = True
            break
    report.runtime_s = time.perf_counter() - t0
    return field, report
