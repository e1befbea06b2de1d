"""First-view segment cache and on-the-fly tracing of every other view.

Only view 0 is intersected with the grid.  Rotating the acquisition about z
leaves each chord's slice and ring unchanged and adds the source angle to its
endpoint azimuths, so any view is traced from the cache with a handful of
floor operations per chord and binary (membership-only) coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import ConfigurationError
from .geometry import SegmentRecord, classify_points, sorted_intersection_params
from .grid import GridSpec, RingLayout, resolve_index, sector_of
from .scan import ScanGeometry

RING_MASK = 0xFFFF
SLICE_SHIFT = 16


@dataclass
class FirstViewCache:
    """Per-line chord metadata of view 0.

    For line ``j`` the points ``ptr[j]:ptr[j+1]`` hold endpoint azimuths in
    ``phi``; ``code[k]`` is the chord from point ``k`` to ``k+1`` packed as
    ``(slice << 16) | ring``, or 0 when there is no chord.  Shared endpoints
    are stored once.
    """

    spec: GridSpec
    n_lines: int
    ptr: np.ndarray
    phi: np.ndarray
    code: np.ndarray
    capacity: int = 0

    @property
    def nbytes(self) -> int:
        """Bytes of stored tracing state; independent of the number of views."""
        return self.ptr.nbytes + self.phi.nbytes + self.code.nbytes

    def records(self, j: int) -> list[SegmentRecord]:
        a, b = int(self.ptr[j]), int(self.ptr[j + 1])
        out = []
        for k in range(a, b - 1):
            c = int(self.code[k])
            if c:
                out.append(SegmentRecord(c >> SLICE_SHIFT, c & RING_MASK,
                                         float(self.phi[k]), float(self.phi[k + 1])))
        return out

    def segment_keys(self, j: int) -> list[tuple[int, int]]:
        """(slice, ring) of each chord of line ``j``, in source-to-detector order."""
        return [(r.slice, r.ring) for r in self.records(j)]


def _mirror_partner(geom: ScanGeometry, j: int) -> tuple[int, float, float]:
    iu, iv = divmod(j, geom.n_v)
    ru = min(iu, geom.n_u - 1 - iu)
    rv = min(iv, geom.n_v - 1 - iv)
    return ru * geom.n_v + rv, (-1.0 if ru != iu else 1.0), (-1.0 if rv != iv else 1.0)


def precompute_first_view(geom: ScanGeometry, spec: GridSpec,
                          quarter_symmetry: bool | str = False) -> FirstViewCache:
    """Intersect, sort and classify every line of view 0.

    With ``quarter_symmetry`` only one quadrant of the panel is intersected;
    the remaining lines reuse those points mirrored across y = 0 and z = 0.
    ``"auto"`` enables it whenever the panel is mirror symmetric.
    """
    symmetric = geom.is_mirror_symmetric()
    if quarter_symmetry == "auto":
        quarter_symmetry = symmetric
    elif quarter_symmetry and not symmetric:
        raise ConfigurationError("quarter symmetry needs source and panel centred on the X axis")

    S = np.asarray(geom.source, dtype=np.float64)
    Ds = geom.detector_positions()
    computed: dict[int, np.ndarray] = {}
    phis, codes, ptr = [], [], [0]
    capacity = 0
    for j in range(geom.n_lines):
        if quarter_symmetry:
            rep, sy, sz = _mirror_partner(geom, j)
            if rep not in computed:
                computed[rep] = _line_points(S, Ds[rep], spec)
            pts = computed[rep]
            if sy < 0.0 or sz < 0.0:
                pts = pts * np.array([1.0, sy, sz])
        else:
            pts = _line_points(S, Ds[j], spec)
        phi, code, bound = _encode_line(pts, spec)
        phis.append(phi)
        codes.append(code)
        ptr.append(ptr[-1] + len(phi))
        capacity += bound
    return FirstViewCache(
        spec, geom.n_lines,
        np.asarray(ptr, dtype=np.int64),
        np.concatenate(phis) if phis else np.empty(0),
        np.concatenate(codes).astype(np.uint32) if codes else np.empty(0, np.uint32),
        capacity,
    )


def _line_points(S, D, spec: GridSpec) -> np.ndarray:
    u = sorted_intersection_params(S, D, spec)
    return S[None, :] + u[:, None] * (D - S)[None, :]


def _encode_line(points: np.ndarray, spec: GridSpec):
    if len(points) < 2:
        return np.empty(0), np.empty(0, dtype=np.uint32), 0
    slices, rings, phi, valid = classify_points(points, spec)
    code = np.zeros(len(points), dtype=np.uint32)
    code[:-1] = np.where(valid, (slices << SLICE_SHIFT) | rings, 0)
    span = np.abs(phi[1:] - phi[:-1])
    span = np.where(span > 180.0, 360.0 - span, span)
    ng = spec.counts[rings]
    bound = int(np.sum(np.where(valid, np.floor(span * ng / 360.0) + 2, 0)))
    return phi, code, bound


def trace_chord(rec: SegmentRecord, theta_s: float, spec: GridSpec) -> list[int]:
    """Flat numbers of the cells crossed by one cached chord in the view at ``theta_s``."""
    layout = RingLayout.of(rec.ring)
    ng = layout.grid_count
    a = _rotate(rec.phi_k, theta_s)
    b = _rotate(rec.phi_k1, theta_s)
    ga = layout.head + sector_of(a, ng)
    gb = layout.head + sector_of(b, ng)
    if abs(a - b) <= 180.0:
        lh, lt = min(ga, gb), max(ga, gb)
        grids = list(range(lh, lt + 1))
    else:
        # the chord crosses the ring seam on the positive X axis
        lh, lt = max(ga, gb), min(ga, gb)
        start = (lh - layout.head) - ng
        stop = lt - layout.head
        grids = [layout.head + resolve_index(layout, i) for i in range(start, stop + 1)]
    base = rec.slice * spec.per_slice
    return [base + g for g in grids]


def _rotate(phi: float, theta_s: float) -> float:
    a = math.fmod(phi + theta_s, 360.0)
    if a < 0.0:
        a += 360.0
    if a >= 360.0:
        a -= 360.0
    return a


def trace_view(cache: FirstViewCache, theta_s: float, kernels=None):
    """Active cells of every line in one view as CSR arrays ``(ptr, indices)``."""
    k = kernels or _backend.kernels
    spec = cache.spec
    return k.trace_view(cache.phi, cache.code, cache.ptr, float(theta_s), spec.N,
                        spec.heads, spec.counts, spec.n_grids, cache.capacity)


def trace_line(cache: FirstViewCache, j: int, theta_s: float, kernels=None) -> np.ndarray:
    """De-duplicated active cells of line ``j`` in the view at ``theta_s``."""
    sub = FirstViewCache(cache.spec, 1, cache.ptr[j:j + 2] - cache.ptr[j],
                         cache.phi[cache.ptr[j]:cache.ptr[j + 1]],
                         cache.code[cache.ptr[j]:cache.ptr[j + 1]])
    _, idx = trace_view(sub, theta_s, kernels)
    return idx
