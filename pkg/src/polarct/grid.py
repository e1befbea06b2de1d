"""Uniformly sampled polar / cylindrical grid layout.

Ring ``n`` (1-based) of an ``N``-sized image holds ``4(2n - 1)`` equal-area
cells, so every cell covers ``pi r**2 / 4`` regardless of its radius.  Cells
are numbered counter-clockwise from the positive X axis, ring after ring,
and in 3D slice after slice::

    flat = slice * N**2 + head(ring) + local

The layout maps one-to-one onto an ``N x N`` Cartesian image: ring ``n``
goes to the perimeter of the centred ``2n x 2n`` pixel block.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import InputError

MODE_2D = "2d"
MODE_3D = "3d"


def ring_grid_count(n: int) -> int:
    """Number of cells in ring ``n`` (1-based)."""
    if n < 1:
        raise InputError(f"ring index must be >= 1, got {n}")
    return 4 * (2 * n - 1)


def ring_head(n: int) -> int:
    """Flat number of the first cell of ring ``n`` within a slice.

    Closed form of ``H_{n+1} = H_n + 4(2n - 1)`` with ``H_1 = 0``.
    """
    if n < 1:
        raise InputError(f"ring index must be >= 1, got {n}")
    return 4 * (n - 1) ** 2


def ring_step_angle(n: int) -> Fraction:
    """Angular width of one cell of ring ``n`` in degrees, exactly."""
    return Fraction(360, ring_grid_count(n))


def sector_of(phi: float, n_g: int) -> int:
    """Local cell of an azimuth ``phi`` (degrees, in [0, 360)) in a ring of ``n_g`` cells.

    Exact multiples of the step fall into the higher sector.
    """
    j = int(np.floor(phi * n_g / 360.0))
    return min(max(j, 0), n_g - 1)


@dataclass(frozen=True)
class RingLayout:
    ring_index: int
    grid_count: int
    head: int

    @classmethod
    def of(cls, n: int) -> "RingLayout":
        return cls(n, ring_grid_count(n), ring_head(n))

    @property
    def tail(self) -> int:
        return self.head + self.grid_count - 1

    @property
    def step_angle(self) -> float:
        return 360.0 / self.grid_count


def resolve_index(ring: RingLayout, i: int) -> int:
    """Local cell addressed by a signed circular index.

    Negative indices count backwards from the head, so ``-1`` is the tail.
    """
    return i % ring.grid_count


@dataclass(frozen=True)
class GridAddress:
    slice: int
    ring: int
    local: int
    flat: int


@dataclass(frozen=True)
class GridSpec:
    """Image space of ``N/2`` rings of spacing ``r``; in 3D also ``N`` slices of thickness ``h``.

    The volume is centred: slices span ``z`` in ``[-N h / 2, N h / 2]``.
    """

    N: int
    r: float
    h: float | None = None
    mode: str = MODE_2D

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 2 or self.N % 2:
            raise InputError(f"N must be an even integer >= 2, got {self.N!r}")
        if not self.r > 0:
            raise InputError(f"ring spacing r must be positive, got {self.r!r}")
        if self.mode not in (MODE_2D, MODE_3D):
            raise InputError(f"mode must be '2d' or '3d', got {self.mode!r}")
        if self.h is None:
            object.__setattr__(self, "h", float(self.r))
        if not self.h > 0:
            raise InputError(f"slice thickness h must be positive, got {self.h!r}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def is_3d(self) -> bool:
        return self.mode == MODE_3D

    @property
    def n_rings(self) -> int:
        return self.N // 2

    @property
    def n_slices(self) -> int:
        return self.N if self.is_3d else 1

    @property
    def per_slice(self) -> int:
        return self.N * self.N

    @property
    def n_grids(self) -> int:
        return self.n_slices * self.per_slice

    @property
    def radius(self) -> float:
        return self.n_rings * self.r

    @property
    def z_offset(self) -> float:
        return self.N * self.h / 2.0 if self.is_3d else 0.0

    @property
    def eps(self) -> float:
        """Geometric tolerance used for merging and tangency."""
        return 1e-9 * self.radius

    def plane_z(self) -> np.ndarray:
        """z of the ``N + 1`` axial boundary planes (3D only).

        ``(m - N/2) * h`` keeps the planes exactly mirror-symmetric about z = 0.
        """
        m = np.arange(self.N + 1, dtype=np.float64) - self.N // 2
        return m * self.h

    @cached_property
    def heads(self) -> np.ndarray:
        """``heads[n]`` for ``n = 0 .. N/2 + 1``; entry 0 is unused padding."""
        n = np.arange(self.n_rings + 2, dtype=np.int64)
        out = 4 * (n - 1) ** 2
        out[0] = 0
        return out

    @cached_property
    def counts(self) -> np.ndarray:
        """``counts[n]`` cells in ring ``n``; entry 0 is unused padding."""
        n = np.arange(self.n_rings + 2, dtype=np.int64)
        out = 4 * (2 * n - 1)
        out[0] = 0
        return out

    def ring(self, n: int) -> RingLayout:
        if not 1 <= n <= self.n_rings:
            raise InputError(f"ring {n} outside 1..{self.n_rings}")
        return RingLayout.of(n)

    def flat_index(self, slice_: int, ring: int, local: int) -> int:
        layout = self.ring(ring)
        if not 0 <= slice_ < self.n_slices:
            raise InputError(f"slice {slice_} outside 0..{self.n_slices - 1}")
        return slice_ * self.per_slice + layout.head + resolve_index(layout, local)

    def address(self, flat: int) -> GridAddress:
        if not 0 <= flat < self.n_grids:
            raise InputError(f"flat index {flat} outside grid of {self.n_grids}")
        s, within = divmod(int(flat), self.per_slice)
        n = int(np.sqrt(within / 4.0)) + 1
        # guard the float sqrt at ring boundaries
        while ring_head(n) > within:
            n -= 1
        while ring_head(n + 1) <= within:
            n += 1
        return GridAddress(s, n, within - ring_head(n), int(flat))

    def cell_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-cell ring number and local index for one slice, in flat order."""
        ring = np.repeat(np.arange(1, self.n_rings + 1), self.counts[1:-1])
        local = np.arange(self.per_slice) - self.heads[ring]
        return ring, local

    def centroids(self) -> np.ndarray:
        """Cell centres ``(x, y, z)`` at mid-radius, mid-angle and mid-height, shape ``(n_grids, 3)``."""
        ring, local = self.cell_arrays()
        rho = (ring - 0.5) * self.r
        ang = np.deg2rad((local + 0.5) * 360.0 / self.counts[ring])
        x = np.tile(rho * np.cos(ang), self.n_slices)
        y = np.tile(rho * np.sin(ang), self.n_slices)
        if self.is_3d:
            zs = (np.arange(self.N) + 0.5) * self.h - self.z_offset
        else:
            zs = np.zeros(1)
        z = np.repeat(zs, self.per_slice)
        return np.stack([x, y, z], axis=1)

    def describe(self) -> dict:
        return {"mode": self.mode, "N": self.N, "r": repr(self.r), "h": repr(self.h)}


def uspg_to_cg_map(N: int) -> np.ndarray:
    """Permutation from polar flat index to Cartesian pixel ``row * N + col``.

    Rows grow downwards (negative y).  The head of ring ``n`` lands on the
    right-most column just above the X axis and numbering runs
    counter-clockwise around the square ring, as it does on the circle.
    """
    if N < 2 or N % 2:
        raise InputError(f"N must be even and >= 2, got {N}")
    half = N // 2
    out = np.empty(N * N, dtype=np.int64)
    pos = 0
    for n in range(1, half + 1):
        lo, hi = half - n, half + n - 1
        rows = np.concatenate([
            np.arange(half - 1, lo - 1, -1),
            np.full(2 * n - 1, lo),
            np.arange(lo + 1, hi + 1),
            np.full(2 * n - 1, hi),
            np.arange(hi - 1, half - 1, -1),
        ])
        cols = np.concatenate([
            np.full(n, hi),
            np.arange(hi - 1, lo - 1, -1),
            np.full(2 * n - 1, lo),
            np.arange(lo + 1, hi + 1),
            np.full(n - 1, hi),
        ])
        out[pos:pos + rows.size] = rows * N + cols
        pos += rows.size
    return out


def to_cartesian(field: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Arrange a flat field as Cartesian image(s): ``(N, N)`` in 2D, ``(N, N, N)`` (slice, row, col) in 3D."""
    field = np.asarray(field)
    if field.size != spec.n_grids:
        raise InputError(f"field has {field.size} values, grid expects {spec.n_grids}")
    perm = uspg_to_cg_map(spec.N)
    slices = field.reshape(spec.n_slices, spec.per_slice)
    img = np.empty_like(slices)
    img[:, perm] = slices
    img = img.reshape(spec.n_slices, spec.N, spec.N)
    return img if spec.is_3d else img[0]


def from_cartesian(image: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Inverse of :func:`to_cartesian`."""
    image = np.asarray(image).reshape(spec.n_slices, spec.per_slice)
    perm = uspg_to_cg_map(spec.N)
    return image[:, perm].reshape(-1)
