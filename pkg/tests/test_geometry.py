import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from oracles import quadratic_roots
from polarct.errors import DegenerateLineError
from polarct.geometry import (axial_plane_intersections, azimuth_deg, build_sorted_intersections,
                              classify_chord, cylinder_intersections, line_xy_distance,
                              sorted_intersection_params)
from polarct.grid import GridSpec

coord = st.floats(-5, 5, allow_nan=False)


def test_distance_through_centre():
    d, t = line_xy_distance((-8, 0, 0), (8, 0, 0))
    assert d == 0.0 and t == 0.5


def test_distance_offset_line():
    d, _ = line_xy_distance((-8, 3, 0), (8, 3, 0))
    assert d == pytest.approx(3.0, abs=1e-12)


def test_axial_line_is_degenerate():
    with pytest.raises(DegenerateLineError):
        line_xy_distance((1, 2, 0), (1, 2, 5))


@given(coord, coord, coord, coord)
def test_distance_matches_dense_sampling(ax, ay, bx, by):
    assume(math.hypot(bx - ax, by - ay) > 1e-3)
    d, t = line_xy_distance((ax, ay), (bx, by))
    # the foot of the perpendicular attains d and is a minimum along the line
    fx, fy = ax + t * (bx - ax), ay + t * (by - ay)
    assert math.hypot(fx, fy) == pytest.approx(d, abs=1e-9)
    u = np.linspace(-50, 50, 20001)
    dist = np.hypot(ax + u * (bx - ax), ay + u * (by - ay))
    assert d <= dist.min() + 1e-9


@pytest.mark.parametrize("S,D,R,expect", [
    ((-8, 0, 0), (8, 0, 0), 4, [(-4, 0, 0), (4, 0, 0)]),
    ((-8, 3, 0), (8, 3, 0), 5, [(-4, 3, 0), (4, 3, 0)]),
    ((-8, 6, 0), (8, 6, 0), 5, []),
])
def test_cylinder_examples(S, D, R, expect):
    pts = cylinder_intersections(S, D, R)
    assert len(pts) == len(expect)
    for p, e in zip(pts, expect):
        np.testing.assert_allclose(p, e, atol=1e-12)


def test_cylinder_tangent_single_point():
    pts = cylinder_intersections((-8, 5, 0), (8, 5, 0), 5, eps=1e-9)
    assert len(pts) == 1
    np.testing.assert_allclose(pts[0], (0, 5, 0), atol=1e-12)


def test_cylinder_param_applies_to_3d_line():
    pts = cylinder_intersections((-8, 0, -1), (8, 0, 1), 4)
    np.testing.assert_allclose(pts[0], (-4, 0, -0.5), atol=1e-12)
    np.testing.assert_allclose(pts[1], (4, 0, 0.5), atol=1e-12)


@given(coord, coord, coord, coord, st.floats(0.1, 4))
def test_cylinder_matches_quadratic_formula(ax, ay, bx, by, R):
    assume(math.hypot(bx - ax, by - ay) > 1e-2)
    S, D = np.array([ax, ay, 0.0]), np.array([bx, by, 0.0])
    d, _ = line_xy_distance(S, D)
    assume(abs(d - R) > 1e-6)
    pts = cylinder_intersections(S, D, R)
    roots = quadratic_roots(S, D, R)
    assert len(pts) == len(roots)
    for p, u in zip(pts, roots):
        np.testing.assert_allclose(p, S + u * (D - S), rtol=1e-9, atol=1e-9 * R)
        assert math.hypot(p[0], p[1]) == pytest.approx(R, rel=1e-9)


class TestAxialPlanes:
    spec = GridSpec(8, 0.25, 0.25, "3d")

    def test_in_plane_ray(self):
        assert axial_plane_intersections((-3, 0, 0.125), (3, 0, 0.125), self.spec) == []

    def test_full_axial_sweep(self):
        pts = axial_plane_intersections((0.1, 0.1, -1.0), (0.1, 0.1, 1.0), self.spec)
        assert len(pts) == 9

    @settings(max_examples=200)
    @given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2), st.floats(-3, 3),
           st.floats(-3, 3), st.floats(-2, 2))
    def test_points_on_planes_and_segment(self, ax, ay, az, bx, by, bz):
        S, D = np.array([ax, ay, az]), np.array([bx, by, bz])
        for p in axial_plane_intersections(S, D, self.spec):
            k = (p[2] + self.spec.z_offset) / self.spec.h
            assert abs(k - round(k)) < 1e-9
            u = (p[2] - az) / (bz - az)
            assert -1e-12 <= u <= 1 + 1e-12
            np.testing.assert_allclose(p, S + u * (D - S), atol=1e-9)
            assert math.hypot(p[0], p[1]) <= self.spec.radius * (1 + 1e-9)


class TestSortedIntersections:
    def test_diameter_symmetric(self):
        spec = GridSpec(8, 1.0)
        pts = build_sorted_intersections((-8, 0, 0), (8, 0, 0), spec)
        assert len(pts) == 8
        np.testing.assert_allclose(pts[:, 0], [-4, -3, -2, -1, 1, 2, 3, 4], atol=1e-12)

    def test_tangent_ring_merged(self):
        spec = GridSpec(8, 1.0)
        pts = build_sorted_intersections((-8, 3, 0), (8, 3, 0), spec)
        assert len(pts) == 3
        np.testing.assert_allclose(pts[1], (0, 3, 0), atol=1e-9)

    def test_miss_gives_empty(self):
        spec = GridSpec(8, 1.0)
        assert len(build_sorted_intersections((-8, 5, 0), (8, 5, 0), spec)) == 0

    def test_axial_ray(self):
        spec = GridSpec(4, 1.0, 1.0, "3d")
        u = sorted_intersection_params((0.5, 0.5, -5), (0.5, 0.5, 5), spec)
        np.testing.assert_allclose(-5 + 10 * u, [-2, -1, 0, 1, 2], atol=1e-12)

    @settings(max_examples=300)
    @given(st.floats(0, 360), st.floats(-1, 1), st.floats(-1, 1), st.booleans())
    def test_strictly_increasing(self, ang, off, dz, is3d):
        spec = GridSpec(16, 0.125, 0.125, "3d" if is3d else "2d")
        a = math.radians(ang)
        S = np.array([-4 * math.cos(a) - off * math.sin(a), -4 * math.sin(a) + off * math.cos(a), 0])
        D = np.array([4 * math.cos(a) - off * math.sin(a), 4 * math.sin(a) + off * math.cos(a),
                      dz if is3d else 0])
        u = sorted_intersection_params(S, D, spec)
        assert np.all(np.diff(u) > 0)
        pts = S + u[:, None] * (D - S)
        rho = np.hypot(pts[:, 0], pts[:, 1])
        on_cyl = np.abs(rho / spec.r - np.round(rho / spec.r)) < 1e-9 * spec.N
        k = (pts[:, 2] + spec.z_offset) / spec.h
        on_plane = np.abs(k - np.round(k)) < 1e-9 * spec.N if is3d else np.zeros(len(u), bool)
        assert np.all(on_cyl | on_plane)


class TestClassify:
    def test_hand_example(self):
        spec = GridSpec(4, 1.0, 0.1, "3d")
        # the volume is centred, so shift z by the half height
        z = 0.2 - spec.z_offset
        rec = classify_chord((1, 0, z), (0, 1, z), spec)
        assert (rec.slice, rec.ring, rec.phi_k, rec.phi_k1) == (2, 1, 0.0, 90.0)

    def test_slice_boundary_floors_up(self):
        spec = GridSpec(8, 0.25, 0.25, "3d")
        z = 3 * spec.h - spec.z_offset
        rec = classify_chord((0.1, 0.0, z), (0.2, 0.0, z), spec)
        assert rec.slice == 3

    def test_grazing_chord_skipped(self):
        spec = GridSpec(8, 1.0)
        assert classify_chord((1, 1, 0), (1, 1 + 1e-12, 0), spec) is None

    def test_angles_normalised(self):
        phi = azimuth_deg(np.array([1.0, 0.0, -1.0, 0.0, 1.0]), np.array([0.0, 1.0, 0.0, -1.0, -1e-300]))
        assert np.all((phi >= 0) & (phi < 360))
        np.testing.assert_allclose(phi[:4], [0, 90, 180, 270])

    def test_midpoint_at_origin_is_ring_one(self):
        spec = GridSpec(8, 1.0)
        assert classify_chord((-0.5, 0, 0), (0.5, 0, 0), spec).ring == 1
