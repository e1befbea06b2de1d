from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polarct.errors import InputError
from polarct.grid import (GridSpec, RingLayout, from_cartesian, resolve_index, ring_grid_count,
                          ring_head, ring_step_angle, sector_of, to_cartesian, uspg_to_cg_map)


@pytest.mark.parametrize("n,count", [(1, 4), (2, 12), (3, 20), (4, 28)])
def test_ring_counts_first_rings(n, count):
    assert ring_grid_count(n) == count


@pytest.mark.parametrize("n,head", [(1, 0), (2, 4), (3, 16), (4, 36)])
def test_ring_heads_first_rings(n, head):
    assert ring_head(n) == head


@pytest.mark.parametrize("fn", [ring_grid_count, ring_head])
def test_ring_index_below_one_rejected(fn):
    with pytest.raises(InputError):
        fn(0)


def test_sum_of_counts_at_256():
    assert sum(ring_grid_count(n) for n in range(1, 129)) == 65536


@given(st.integers(1, 2000))
def test_head_recurrence(n):
    assert ring_head(n + 1) - ring_head(n) == ring_grid_count(n)


@given(st.integers(1, 256))
def test_head_after_last_ring_is_cell_total(half):
    assert ring_head(half + 1) == (2 * half) ** 2


@given(st.integers(1, 500))
def test_step_angle_exact(n):
    assert ring_step_angle(n) * ring_grid_count(n) == 360
    assert isinstance(ring_step_angle(n), Fraction)


@given(st.integers(1, 300))
def test_equal_cell_area(n):
    # annulus area pi (2n-1) r^2 split over the ring's cells
    r = 0.37
    area = np.pi * (2 * n - 1) * r * r / ring_grid_count(n)
    assert area == pytest.approx(np.pi * r * r / 4, rel=1e-12)


@pytest.mark.parametrize("i,expect", [(-1, 11), (0, 0), (13, 1), (-12, 0), (11, 11)])
def test_resolve_index_ring2(i, expect):
    assert resolve_index(RingLayout.of(2), i) == expect


@given(st.integers(1, 100), st.integers(-10_000, 10_000))
def test_resolve_negative_direction(n, i):
    lay = RingLayout.of(n)
    assert resolve_index(lay, i) == resolve_index(lay, i - lay.grid_count)
    assert 0 <= resolve_index(lay, i) < lay.grid_count


def test_sector_tie_goes_up():
    assert sector_of(30.0, 12) == 1
    assert sector_of(29.999999, 12) == 0
    assert sector_of(359.9999999, 12) == 11
    assert sector_of(0.0, 4) == 0


def test_ring_layout_fields():
    lay = RingLayout.of(3)
    assert (lay.grid_count, lay.head, lay.tail) == (20, 16, 35)
    assert lay.step_angle == 18.0


class TestGridSpec:
    def test_validation(self):
        for bad in [dict(N=3, r=1.0), dict(N=0, r=1.0), dict(N=4, r=0.0), dict(N=4, r=1.0, h=-1.0),
                    dict(N=4, r=1.0, mode="4d")]:
            with pytest.raises(InputError):
                GridSpec(**bad)

    def test_extents(self):
        s = GridSpec(8, 0.5, 0.25, "3d")
        assert s.radius == 2.0
        assert s.n_grids == 512
        assert s.z_offset == pytest.approx(1.0)
        np.testing.assert_allclose(s.plane_z(), np.arange(9) * 0.25 - 1.0)

    def test_2d_defaults(self):
        s = GridSpec(16, 0.1)
        assert s.h == 0.1 and s.n_slices == 1 and s.n_grids == 256

    @given(st.integers(1, 32).map(lambda k: 2 * k), st.data())
    def test_flat_address_roundtrip(self, N, data):
        s = GridSpec(N, 1.0, mode="3d")
        v = data.draw(st.integers(0, s.n_grids - 1))
        a = s.address(v)
        assert a.flat == v
        assert s.flat_index(a.slice, a.ring, a.local) == v
        assert a.flat == a.slice * N * N + ring_head(a.ring) + a.local
        assert 0 <= a.local < ring_grid_count(a.ring)

    def test_flat_index_accepts_negative_local(self):
        s = GridSpec(8, 1.0)
        assert s.flat_index(0, 2, -1) == s.flat_index(0, 2, 11) == 15

    def test_heads_counts_arrays(self):
        s = GridSpec(10, 1.0)
        for n in range(1, 6):
            assert s.heads[n] == ring_head(n)
            assert s.counts[n] == ring_grid_count(n)

    def test_centroids_inside_their_cells(self):
        s = GridSpec(12, 0.3, 0.2, "3d")
        c = s.centroids()
        rho = np.hypot(c[:, 0], c[:, 1])
        ring, local = s.cell_arrays()
        ring = np.tile(ring, s.n_slices)
        local = np.tile(local, s.n_slices)
        assert np.array_equal(np.floor(rho / s.r).astype(int) + 1, ring)
        ang = np.degrees(np.arctan2(c[:, 1], c[:, 0])) % 360
        assert np.array_equal(np.floor(ang * s.counts[ring] / 360).astype(int), local)
        sl = np.repeat(np.arange(12), 144)
        assert np.array_equal(np.floor((c[:, 2] + s.z_offset) / s.h).astype(int), sl)


class TestCartesianMap:
    def test_n2_bijection(self):
        assert sorted(uspg_to_cg_map(2).tolist()) == [0, 1, 2, 3]

    def test_n4_rings(self):
        m = uspg_to_cg_map(4)
        inner = {5, 6, 9, 10}
        assert set(m[:4].tolist()) == inner
        assert set(m[4:].tolist()) == set(range(16)) - inner

    @pytest.mark.parametrize("N", [2, 4, 16, 64, 256])
    def test_permutation(self, N):
        m = uspg_to_cg_map(N)
        assert np.array_equal(np.sort(m), np.arange(N * N))

    @pytest.mark.parametrize("N", [6, 16, 40])
    def test_ring_goes_to_block_perimeter(self, N):
        m = uspg_to_cg_map(N)
        half = N // 2
        for n in range(1, half + 1):
            cells = m[ring_head(n):ring_head(n + 1)]
            rows, cols = np.divmod(cells, N)
            lo, hi = half - n, half + n - 1
            on_edge = (rows == lo) | (rows == hi) | (cols == lo) | (cols == hi)
            inside = (rows >= lo) & (rows <= hi) & (cols >= lo) & (cols <= hi)
            assert on_edge.all() and inside.all()

    def test_head_position_and_direction(self):
        N = 8
        m = uspg_to_cg_map(N)
        for n in range(1, 5):
            r0, c0 = divmod(int(m[ring_head(n)]), N)
            assert (r0, c0) == (N // 2 - 1, N // 2 + n - 1)
            # next cell is one row up (counter-clockwise, rows grow towards -y)
            r1, c1 = divmod(int(m[ring_head(n) + 1]), N)
            if n > 1:
                assert (r1, c1) == (r0 - 1, c0)

    def test_map_preserves_rough_angle(self):
        # cells keep their quadrant under the map
        N = 32
        s = GridSpec(N, 1.0)
        m = uspg_to_cg_map(N)
        c = s.centroids()
        rows, cols = np.divmod(m, N)
        px = cols + 0.5 - N / 2
        py = N / 2 - rows - 0.5
        assert np.all(np.sign(px) == np.sign(c[:, 0]) + (c[:, 0] == 0))
        assert np.all(np.sign(py) == np.sign(c[:, 1]) + (c[:, 1] == 0))

    def test_odd_rejected(self):
        with pytest.raises(InputError):
            uspg_to_cg_map(5)

    @pytest.mark.parametrize("mode", ["2d", "3d"])
    def test_to_from_cartesian(self, mode):
        s = GridSpec(8, 1.0, mode=mode)
        f = np.arange(s.n_grids, dtype=float)
        img = to_cartesian(f, s)
        assert img.shape == ((8, 8, 8) if mode == "3d" else (8, 8))
        assert np.array_equal(from_cartesian(img, s), f)
