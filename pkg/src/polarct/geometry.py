"""Analytic line kernels: cylinder and axial-plane crossings, chord classification.

A line runs from source ``S`` to detector element ``D`` and is parametrised
as ``S + u (D - S)`` with ``u`` in ``[0, 1]``.  Cylinders are aligned with the
z axis, so crossing parameters are solved in the XY projection and applied to
the full 3D line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLineError
from .grid import GridSpec


@dataclass(frozen=True)
class SegmentRecord:
    """One chord of a first-view line: its slice, ring and endpoint azimuths (degrees)."""

    slice: int
    ring: int
    phi_k: float
    phi_k1: float


def _xy(p) -> tuple[float, float, float]:
    p = tuple(float(c) for c in p)
    return (p[0], p[1], p[2] if len(p) > 2 else 0.0)


def line_xy_distance(S, D) -> tuple[float, float]:
    """Distance ``d`` of the XY-projected line from the z axis and foot parameter ``t``.

    ``t`` locates the foot of the perpendicular as ``S + t (D' - S)``.
    Raises :class:`DegenerateLineError` for a line with no XY extent.
    """
    sx, sy, _ = _xy(S)
    dx, dy, _ = _xy(D)
    wx, wy = sx - dx, sy - dy
    w2 = wx * wx + wy * wy
    if w2 == 0.0:
        raise DegenerateLineError("line is parallel to the z axis")
    t = (sx * wx + sy * wy) / w2
    # cross product form; |S|^2 - t^2 w2 cancels badly near the axis
    return abs(sx * wy - sy * wx) / math.sqrt(w2), t


def _cylinder_params(S, D, radii: np.ndarray, eps: float) -> np.ndarray:
    """Line parameters of the crossings with every cylinder in ``radii``."""
    d, t = line_xy_distance(S, D)
    sx, sy, _ = _xy(S)
    dx, dy, _ = _xy(D)
    w2 = (sx - dx) ** 2 + (sy - dy) ** 2
    radii = np.asarray(radii, dtype=np.float64)
    hit = radii > d + eps
    k = np.sqrt((radii[hit] ** 2 - d * d) / w2)
    u = [t - k, t + k]
    if np.any(np.abs(radii - d) <= eps):
        u.append(np.array([t]))
    return np.concatenate(u)


def cylinder_intersections(S, D, R: float, eps: float = 0.0) -> list[np.ndarray]:
    """Points where the infinite line SD meets the cylinder of radius ``R``.

    Returns two points for a secant, one for a tangent (within ``eps``) and
    none for a miss.
    """
    S3 = np.array(_xy(S))
    D3 = np.array(_xy(D))
    u = np.sort(_cylinder_params(S, D, np.array([R]), eps))
    return [S3 + ui * (D3 - S3) for ui in u]


def axial_plane_intersections(S, D, spec: GridSpec) -> list[np.ndarray]:
    """Crossings of segment SD with the slice boundary planes inside the outer cylinder."""
    S3 = np.array(_xy(S))
    D3 = np.array(_xy(D))
    u = _plane_params(S3, D3, spec)
    return [S3 + ui * (D3 - S3) for ui in u]


def _plane_params(S3: np.ndarray, D3: np.ndarray, spec: GridSpec) -> np.ndarray:
    dz = D3[2] - S3[2]
    if not spec.is_3d or dz == 0.0:
        return np.empty(0)
    with np.errstate(over="ignore"):
        u = (spec.plane_z() - S3[2]) / dz
    u = u[(u >= 0.0) & (u <= 1.0)]
    x = S3[0] + u * (D3[0] - S3[0])
    y = S3[1] + u * (D3[1] - S3[1])
    R = spec.radius
    return u[x * x + y * y <= R * R * (1.0 + 2e-9)]


def sorted_intersection_params(S, D, spec: GridSpec) -> np.ndarray:
    """Sorted, de-duplicated line parameters of all grid boundary crossings."""
    S3 = np.array(_xy(S))
    D3 = np.array(_xy(D))
    length = float(np.sqrt(np.sum((D3 - S3) ** 2)))
    eps = spec.eps
    radii = np.arange(1, spec.n_rings + 1, dtype=np.float64) * spec.r
    try:
        u_cyl = _cylinder_params(S3, D3, radii, eps)
    except DegenerateLineError:
        return _axial_ray_params(S3, D3, spec)
    u_cyl = u_cyl[(u_cyl >= 0.0) & (u_cyl <= 1.0)]
    if spec.is_3d:
        z = S3[2] + u_cyl * (D3[2] - S3[2])
        u_cyl = u_cyl[np.abs(z) <= spec.z_offset + eps]
    u = np.concatenate([u_cyl, _plane_params(S3, D3, spec)])
    if u.size == 0:
        return u
    u = u[np.argsort(u, kind="stable")]
    if np.all(np.diff(u) * length > eps):
        return u
    keep = [0]
    for i in range(1, u.size):
        if (u[i] - u[keep[-1]]) * length > eps:
            keep.append(i)
    return u[keep]


def _axial_ray_params(S3, D3, spec: GridSpec) -> np.ndarray:
    # a ray along z stays inside one ring and only crosses slice planes
    if not spec.is_3d or S3[0] ** 2 + S3[1] ** 2 > spec.radius ** 2:
        return np.empty(0)
    return np.sort(_plane_params(S3, D3, spec))


def build_sorted_intersections(S, D, spec: GridSpec) -> np.ndarray:
    """Boundary crossing points of line SD ordered by distance to ``S``, shape ``(n, 3)``."""
    S3 = np.array(_xy(S))
    D3 = np.array(_xy(D))
    u = sorted_intersection_params(S3, D3, spec)
    return S3[None, :] + u[:, None] * (D3 - S3)[None, :]


def azimuth_deg(x, y):
    """Quadrant-aware azimuth in degrees, in ``[0, 360)``."""
    phi = np.degrees(np.arctan2(y, x)) + 0.0
    phi = np.where(phi < 0.0, phi + 360.0, phi)
    return np.where(phi >= 360.0, phi - 360.0, phi)


def classify_points(points: np.ndarray, spec: GridSpec):
    """Classify every consecutive chord of a sorted point list.

    Returns ``(slices, rings, phi, valid)``: per-chord slice and ring, per-point
    azimuth, and a per-chord flag that is False for grazing chords shorter
    than the geometric tolerance.
    """
    points = np.asarray(points, dtype=np.float64)
    phi = azimuth_deg(points[:, 0], points[:, 1])
    if len(points) < 2:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, phi, np.empty(0, dtype=bool)
    a, b = points[:-1], points[1:]
    mid = (a + b) / 2.0
    d_m = np.sqrt(mid[:, 0] ** 2 + mid[:, 1] ** 2)
    rings = np.clip(np.floor(d_m / spec.r).astype(np.int64) + 1, 1, spec.n_rings)
    if spec.is_3d:
        slices = np.floor((mid[:, 2] + spec.z_offset) / spec.h).astype(np.int64)
        slices = np.clip(slices, 0, spec.N - 1)
    else:
        slices = np.zeros(len(mid), dtype=np.int64)
    valid = np.sqrt(np.sum((b - a) ** 2, axis=1)) > spec.eps
    return slices, rings, phi, valid


def classify_chord(P_k, P_k1, spec: GridSpec) -> SegmentRecord | None:
    """Slice, ring and endpoint azimuths of chord ``P_k P_k1``.

    Returns None for a grazing contact shorter than the geometric tolerance.
    """
    pts = np.array([_xy(P_k), _xy(P_k1)])
    slices, rings, phi, valid = classify_points(pts, spec)
    if not valid[0]:
        return None
    return SegmentRecord(int(slices[0]), int(rings[0]), float(phi[0]), float(phi[1]))
