"""Test fields and synthetic projection data."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import _backend
from .errors import InputError
from .geometry import azimuth_deg, classify_points, sorted_intersection_params
from .grid import GridSpec
from .scan import ScanGeometry
from .solver import ProjectionSet
from .tracer import FirstViewCache, precompute_first_view

KINDS = ("shepp-logan-2d", "shepp-logan-3d", "raw-volume")
BINARY = "binary"
LENGTH_WEIGHTED = "length-weighted"


def parse_table(text: str, source: str = "table") -> np.ndarray:
    """CSV with ``#`` comments and one header row; 6 columns (2D) or 10 (3D)."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].lstrip().startswith("#")]
    try:
        table = np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64)
    except ValueError as exc:
        raise InputError(f"{source}: {exc}") from None
    if table.size == 0:
        return np.empty((0, 6))
    if table.ndim != 2 or table.shape[1] not in (6, 10):
        raise InputError(f"{source}: rows need 6 (2D) or 10 (3D) columns")
    return table


def load_table(name: str) -> np.ndarray:
    """Ellipse/ellipsoid parameter table shipped in ``polarct/data``."""
    text = resources.files("polarct").joinpath("data").joinpath(name).read_text()
    return parse_table(text, name)


def load_table_file(path) -> np.ndarray:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read table {path}: {exc.strerror or exc}") from None
    return parse_table(text, str(path))


def shepp_logan_2d() -> np.ndarray:
    """Rows ``(A, a, b, x0, y0, phi)``."""
    return load_table("shepp_logan_2d.csv")


def shepp_logan_3d() -> np.ndarray:
    """Rows ``(A, a, b, c, x0, y0, z0, phi, theta, psi)``."""
    return load_table("shepp_logan_3d.csv")


@dataclass
class PhantomSpec:
    kind: str
    table: np.ndarray | None = None
    volume: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown phantom kind {self.kind!r}; expected one of {KINDS}")
        if self.table is None and self.kind == "shepp-logan-2d":
            self.table = shepp_logan_2d()
        elif self.table is None and self.kind == "shepp-logan-3d":
            self.table = shepp_logan_3d()
        if self.kind == "raw-volume" and self.volume is None:
            raise InputError("raw-volume phantom needs a volume array")


@dataclass
class Phantom:
    field: np.ndarray
    cartesian: np.ndarray
    clipped: bool


def _euler_zxz(phi, theta, psi) -> np.ndarray:
    cf, sf = np.cos(np.deg2rad(phi)), np.sin(np.deg2rad(phi))
    ct, st = np.cos(np.deg2rad(theta)), np.sin(np.deg2rad(theta))
    cp, sp = np.cos(np.deg2rad(psi)), np.sin(np.deg2rad(psi))
    return np.array([
        [cp * cf - ct * sf * sp, cp * sf + ct * cf * sp, sp * st],
        [-sp * cf - ct * sf * cp, -sp * sf + ct * cf * cp, cp * st],
        [st * sf, -st * cf, ct],
    ])


def evaluate_table(table: np.ndarray, x, y, z=None) -> np.ndarray:
    """Sum of intensities of every ellipse (2D) or ellipsoid (3D) containing each point.

    Points are in normalised coordinates.  Boundaries count as inside.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    out = np.zeros(np.broadcast(x, y).shape)
    table = np.atleast_2d(np.asarray(table, dtype=np.float64)) if len(table) else np.empty((0, 6))
    for row in table:
        if row.size == 6:
            A, a, b, x0, y0, phi = row
            c, s = np.cos(np.deg2rad(phi)), np.sin(np.deg2rad(phi))
            dx, dy = x - x0, y - y0
            xr = c * dx + s * dy
            yr = -s * dx + c * dy
            inside = (xr / a) ** 2 + (yr / b) ** 2 <= 1.0
        else:
            if z is None:
                raise InputError("3D table needs z coordinates")
            A, a, b, cz, x0, y0, z0, phi, theta, psi = row
            R = _euler_zxz(phi, theta, psi)
            p = np.stack(np.broadcast_arrays(x - x0, y - y0, np.asarray(z) - z0), axis=-1)
            q = p @ R.T
            inside = (q[..., 0] / a) ** 2 + (q[..., 1] / b) ** 2 + (q[..., 2] / cz) ** 2 <= 1.0
        out = out + np.where(inside, A, 0.0)
    return out


def pixel_centres(spec: GridSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cartesian pixel centres ``(x, y, z)`` shaped (slice, row, col); rows run towards -y."""
    N, r = spec.N, spec.r
    col = (np.arange(N) + 0.5 - N / 2) * r
    row = (N / 2 - np.arange(N) - 0.5) * r
    if spec.is_3d:
        zs = (np.arange(N) + 0.5) * spec.h - spec.z_offset
    else:
        zs = np.zeros(1)
    z, y, x = np.meshgrid(zs, row, col, indexing="ij")
    return x, y, z


def generate_phantom(pspec: PhantomSpec, spec: GridSpec) -> Phantom:
    """Sample a phantom at the polar cell centroids, plus a Cartesian companion at pixel centres.

    Negative sums are clipped to zero and flagged.
    """
    if pspec.kind == "raw-volume":
        return _from_volume(np.asarray(pspec.volume, dtype=np.float64), spec)
    want_3d = pspec.kind == "shepp-logan-3d"
    if want_3d != spec.is_3d:
        raise InputError(f"{pspec.kind} needs a {'3d' if want_3d else '2d'} grid")
    scale = np.array([spec.radius, spec.radius, spec.z_offset if spec.is_3d else 1.0])
    cen = spec.centroids() / scale
    table = pspec.table
    if table is not None and len(table) and np.asarray(table).shape[-1] == 10 and not spec.is_3d:
        raise InputError("3D ellipsoid table on a 2D grid")
    field = evaluate_table(table, cen[:, 0], cen[:, 1], cen[:, 2])
    x, y, z = pixel_centres(spec)
    cart = evaluate_table(table, x / scale[0], y / scale[1], z / scale[2])
    if not spec.is_3d:
        cart = cart[0]
    clipped = bool(np.any(field < 0.0) or np.any(cart < 0.0))
    return Phantom(np.maximum(field, 0.0), np.maximum(cart, 0.0), clipped)


def _from_volume(volume: np.ndarray, spec: GridSpec) -> Phantom:
    expected = (spec.N,) * (3 if spec.is_3d else 2)
    if volume.shape != expected:
        raise InputError(f"volume shape {volume.shape} != {expected}")
    cen = spec.centroids()
    N = spec.N
    col = np.clip(np.floor(cen[:, 0] / spec.r + N / 2).astype(int), 0, N - 1)
    row = np.clip(np.floor(N / 2 - cen[:, 1] / spec.r).astype(int), 0, N - 1)
    if spec.is_3d:
        sl = np.clip(np.floor((cen[:, 2] + spec.z_offset) / spec.h).astype(int), 0, N - 1)
        field = volume[sl, row, col]
    else:
        field = volume[row, col]
    clipped = bool(np.any(field < 0.0))
    return Phantom(np.maximum(field, 0.0), volume.copy(), clipped)


def generate_projections(field: np.ndarray, geom: ScanGeometry, spec: GridSpec,
                         model: str = BINARY, cache: FirstViewCache | None = None,
                         kernels=None, threads: int = 1) -> ProjectionSet:
    """Simulate ``data[view, line]`` from a polar field.

    ``binary`` sums the active cells exactly as the reconstruction does;
    ``length-weighted`` weights each cell by the length of line inside it.
    """
    field = np.ascontiguousarray(field, dtype=np.float64)
    if field.size != spec.n_grids:
        raise InputError(f"field has {field.size} values, grid expects {spec.n_grids}")
    if model == BINARY:
        k = kernels or _backend.kernels
        if cache is None:
            cache = precompute_first_view(geom, spec, quarter_symmetry="auto")
        args = (cache.phi, cache.code, cache.ptr)

        def one(theta):
            return k.forward_view(field, *args, float(theta), spec.N, spec.heads, spec.counts)

        if threads > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(threads) as pool:
                rows = list(pool.map(one, geom.thetas))
        else:
            rows = [one(t) for t in geom.thetas]
        return ProjectionSet(geom, np.array(rows))
    if model == LENGTH_WEIGHTED:
        data = np.zeros((geom.n_views, geom.n_lines))
        for v, theta in enumerate(geom.thetas):
            S, Ds = geom.view_lines(theta)
            for j in range(geom.n_lines):
                cells, lengths = weighted_line(S, Ds[j], spec)
                data[v, j] = float(np.dot(lengths, field[cells])) if len(cells) else 0.0
        return ProjectionSet(geom, data)
    raise InputError(f"unknown projection model {model!r}")


def weighted_line(S, D, spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Cells crossed by segment SD and the length of the segment inside each."""
    S = np.asarray(S, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    u = sorted_intersection_params(S, D, spec)
    if u.size < 2:
        return np.empty(0, dtype=np.int64), np.empty(0)
    pts = S[None, :] + u[:, None] * (D - S)[None, :]
    slices, rings, _, valid = classify_points(pts, spec)
    cells, lengths = [], []
    for k in np.flatnonzero(valid):
        A, B = pts[k], pts[k + 1]
        ng = int(spec.counts[rings[k]])
        psi = np.deg2rad(np.arange(ng) * 360.0 / ng)
        c, s = np.cos(psi), np.sin(psi)
        d = B - A
        den = c * d[1] - s * d[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = -(c * A[1] - s * A[0]) / den
            px, py = A[0] + t * d[0], A[1] + t * d[1]
        # only the radial half-line, not its extension through the origin
        ok = (den != 0.0) & (t > 0.0) & (t < 1.0) & (c * px + s * py > 0.0)
        cuts = np.concatenate([[0.0], np.sort(t[ok]), [1.0]])
        seg = np.diff(cuts)
        mids = 0.5 * (cuts[:-1] + cuts[1:])
        mx, my = A[0] + mids * d[0], A[1] + mids * d[1]
        loc = np.minimum(np.floor(azimuth_deg(mx, my) * ng / 360.0).astype(np.int64), ng - 1)
        base = slices[k] * spec.per_slice + spec.heads[rings[k]]
        length = float(np.sqrt(np.sum(d * d)))
        keep = seg > 0.0
        cells.append(base + loc[keep])
        lengths.append(seg[keep] * length)
    if not cells:
        return np.empty(0, dtype=np.int64), np.empty(0)
    cells = np.concatenate(cells)
    lengths = np.concatenate(lengths)
    uniq, inv = np.unique(cells, return_inverse=True)
    return uniq, np.bincount(inv, weights=lengths)
