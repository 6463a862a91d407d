import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_convex_polygon
from layoutsynth.geometry import (
    TWO_PI,
    OrientedBox,
    Polygon,
    ang_diff,
    box_corners,
    box_overlap_mtv,
    boundary_violation,
    boundary_violations,
    closest_boundary_point,
    point_in_polygon,
    points_in_polygon,
    separation_vectors,
    signed_ang_diff,
    t_left,
    t_right,
    to_left,
    wrap_angle,
)

coord = st.floats(-100, 100, allow_nan=False)
point = st.tuples(coord, coord)
angle = st.floats(0, TWO_PI, allow_nan=False, exclude_max=True)


def ray_cast(q, verts) -> bool:
    """Even-odd crossing count along +x; independent of the winding-number code."""
    inside = False
    n = len(verts)
    for k in range(n):
        (x1, z1), (x2, z2) = verts[k], verts[(k + 1) % n]
        if (z1 > q[1]) != (z2 > q[1]):
            x_cross = x1 + (q[1] - z1) * (x2 - x1) / (z2 - z1)
            if q[0] < x_cross:
                inside = not inside
    return inside


class TestPredicates:
    def test_to_left_examples(self):
        assert to_left((0, 1), (0, 0), (1, 0)) == 1
        assert to_left((0, -1), (0, 0), (1, 0)) == -1
        assert to_left((0.5, 0), (0, 0), (1, 0)) == 0

    def test_truncations(self):
        assert t_right((0, 1), (0, 0), (1, 0)) == 0
        assert t_right((0, -1), (0, 0), (1, 0)) == 1
        assert t_left((0, 1), (0, 0), (1, 0)) == 1

    @given(point, point, point)
    def test_to_left_antisymmetric(self, q, a, b):
        assert to_left(q, a, b) == -to_left(q, b, a)

    @given(point, point, point)
    def test_at_most_one_side_positive(self, q, a, b):
        assert t_left(q, a, b) * t_right(q, a, b) == 0


class TestAngles:
    def test_ang_diff_examples(self):
        assert ang_diff(0.1, TWO_PI - 0.1) == pytest.approx(0.2)
        assert ang_diff(math.pi, 0.0) == pytest.approx(math.pi)
        assert ang_diff(1.0, 1.0) == 0.0

    @given(angle, angle)
    def test_symmetric_and_bounded(self, a, b):
        assert ang_diff(a, b) == ang_diff(b, a)
        assert 0.0 <= ang_diff(a, b) <= math.pi

    @given(angle, angle, angle)
    def test_triangle_inequality(self, a, b, c):
        assert ang_diff(a, c) <= ang_diff(a, b) + ang_diff(b, c) + 1e-12

    @given(st.floats(-1e3, 1e3, allow_nan=False))
    def test_wrap_range(self, t):
        w = wrap_angle(t)
        assert 0.0 <= w < TWO_PI
        assert ang_diff(w, t % TWO_PI) < 1e-9

    @given(angle, angle)
    def test_signed_diff_rotates_onto_target(self, target, current):
        d = signed_ang_diff(target, current)
        assert -math.pi <= d < math.pi
        assert ang_diff(wrap_angle(current + d), target) < 1e-9


class TestPolygon:
    def test_clockwise_input_is_reoriented(self):
        p = Polygon.from_points([[0, 0], [0, 1], [1, 1], [1, 0]])
        assert p.area() == pytest.approx(1.0)

    @pytest.mark.parametrize(
        "pts",
        [[[0, 0], [1, 0]], [[0, 0], [1, 0], [2, 0]], [[0, 0], [1, 1], [1, 0], [0, 1]], [[0, 0], [1, 0], [float("nan"), 1]]],
        ids=["too-few", "degenerate", "bowtie", "nan"],
    )
    def test_rejects_invalid(self, pts):
        with pytest.raises(ValueError):
            Polygon.from_points(pts)

    def test_vertices_are_read_only(self, unit_square):
        with pytest.raises(ValueError):
            unit_square.vertices[0, 0] = 5.0

    def test_convexity_flag(self, unit_square):
        assert unit_square.is_convex
        ell = Polygon.from_points([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]])
        assert not ell.is_convex


class TestBoxCorners:
    def test_axis_aligned(self):
        c = box_corners(OrientedBox((0, 0), (1, 1), 0.0))
        assert np.allclose(c, [[1, 1], [-1, 1], [-1, -1], [1, -1]])

    def test_quarter_turn_same_vertex_set(self):
        c = box_corners(OrientedBox((0, 0), (1, 1), math.pi / 2))
        assert {tuple(np.round(v, 12) + 0.0) for v in c} == {(1, 1), (-1, 1), (-1, -1), (1, -1)}

    def test_offset_rectangle(self):
        c = box_corners(OrientedBox((2, 0), (1, 0.5), 0.0))
        assert np.allclose(c, [[3, 0.5], [1, 0.5], [1, -0.5], [3, -0.5]])

    @given(angle)
    def test_corners_are_ccw(self, theta):
        c = box_corners(OrientedBox((0.3, -1.0), (0.7, 0.2), theta))
        assert Polygon.from_points(c).area() == pytest.approx(4 * 0.7 * 0.2)
        assert np.allclose(Polygon.from_points(c).vertices, c)


class TestContainment:
    def test_examples(self, unit_square):
        assert point_in_polygon((0.5, 0.5), unit_square)
        assert not point_in_polygon((2, 2), unit_square)
        assert point_in_polygon((1, 0.5), unit_square)
        assert point_in_polygon((1, 1), unit_square)

    def test_strict_interior_is_left_of_every_edge(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            poly = random_convex_polygon(rng)
            q = poly.vertices.mean(axis=0)
            a, b = poly.edges()
            assert all(t_left(q, a[r], b[r]) > 0 for r in range(len(poly)))

    def test_agrees_with_ray_casting(self):
        rng = np.random.default_rng(0)
        checked = 0
        for _ in range(1000):
            poly = random_convex_polygon(rng)
            q = rng.uniform(-1.2, 1.2, size=2)
            # skip points within rounding distance of the boundary
            p, _ = closest_boundary_point(q, poly)
            if np.hypot(*(p - q)) < 1e-9:
                continue
            assert point_in_polygon(q, poly) == ray_cast(q, poly.vertices)
            checked += 1
        assert checked > 990

    def test_concave_polygon_against_ray_casting(self):
        ell = Polygon.from_points([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]])
        rng = np.random.default_rng(1)
        q = rng.uniform(-0.5, 2.5, size=(2000, 2))
        expected = np.array([ray_cast(p, ell.vertices) for p in q])
        assert (points_in_polygon(q, ell) == expected).all()
        assert all(point_in_polygon(p, ell) == e for p, e in zip(q[:300], expected))

    def test_vectorized_matches_scalar_on_convex(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            poly = random_convex_polygon(rng)
            q = rng.uniform(-1.2, 1.2, size=(20, 2))
            assert list(points_in_polygon(q, poly)) == [point_in_polygon(p, poly) for p in q]


class TestBoundaryViolation:
    def test_examples(self, unit_square):
        assert np.array_equal(boundary_violation((0.5, 0.5), unit_square), [0, 0])
        assert np.allclose(boundary_violation((1.5, 0.5), unit_square), [-0.5, 0])
        assert np.allclose(boundary_violation((2, 2), unit_square), [-1, -1])

    @given(st.tuples(st.floats(-3, 3), st.floats(-3, 3)))
    def test_zero_iff_inside(self, q):
        poly = Polygon.from_points([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]])
        v = boundary_violation(q, poly)
        assert (not v.any()) == point_in_polygon(q, poly)

    def test_brute_force_nearest_point(self, unit_square):
        rng = np.random.default_rng(4)
        q = rng.uniform(-2, 3, size=(300, 2))
        dense = np.concatenate(
            [np.linspace(a, b, 2001) for a, b in zip(*unit_square.edges())]
        )
        for p, v in zip(q, boundary_violations(q, unit_square)):
            if point_in_polygon(p, unit_square):
                continue
            assert np.hypot(*v) == pytest.approx(np.hypot(*(dense - p).T).min(), abs=1e-3)

    def test_closest_point_tie_goes_to_lowest_edge(self, unit_square):
        _, k = closest_boundary_point((0.5, 0.5), unit_square)
        assert k == 0


def axis_depths(a: OrientedBox, b: OrientedBox):
    """Per-axis penetration depth, computed from scratch for the oracle."""
    ca, cb = box_corners(a), box_corners(b)
    out = []
    for t in (a.theta, b.theta):
        for axis in ([math.cos(t), math.sin(t)], [-math.sin(t), math.cos(t)]):
            pa, pb = ca @ axis, cb @ axis
            out.append(min(pa.max() - pb.min(), pb.max() - pa.min()))
    return out


box_st = st.builds(
    OrientedBox,
    st.tuples(st.floats(-2, 2), st.floats(-2, 2)),
    st.tuples(st.floats(0.1, 1.5), st.floats(0.1, 1.5)),
    angle,
)


class TestMTV:
    def test_disjoint(self):
        assert box_overlap_mtv(OrientedBox((0, 0), (1, 1)), OrientedBox((3, 0), (1, 1))) is None

    def test_side_overlap(self):
        m = box_overlap_mtv(OrientedBox((0, 0), (1, 1)), OrientedBox((1.5, 0), (1, 1)))
        assert np.allclose(m, [-0.5, 0])

    def test_identical_boxes(self):
        b = OrientedBox((0.2, 0.1), (1.0, 0.4), 0.7)
        assert np.hypot(*box_overlap_mtv(b, b)) == pytest.approx(0.8)

    def test_touching_is_disjoint(self):
        assert box_overlap_mtv(OrientedBox((0, 0), (1, 1)), OrientedBox((2, 0), (1, 1))) is None

    @given(box_st, box_st)
    def test_translation_separates_and_is_minimal(self, a, b):
        m = box_overlap_mtv(a, b)
        depths = axis_depths(a, b)
        if m is None:
            assert min(depths) <= 1e-12
            return
        assert np.hypot(*m) == pytest.approx(min(depths), rel=1e-9, abs=1e-12)
        # nudge a hair past contact to step over rounding
        moved = OrientedBox(tuple(np.asarray(a.center) + m * (1 + 1e-9) + 1e-12 * np.sign(m)), a.half_extents, a.theta)
        assert box_overlap_mtv(moved, b) is None

    @given(box_st, box_st)
    def test_candidates_sorted_and_all_separate(self, a, b):
        vecs = separation_vectors(a, b)
        sizes = [np.hypot(*v) for v in vecs]
        assert all(s2 >= s1 - 1e-12 for s1, s2 in zip(sizes, sizes[1:]))
        for v in vecs:
            moved = OrientedBox(tuple(np.asarray(a.center) + v * (1 + 1e-9) + 1e-12 * np.sign(v)), a.half_extents, a.theta)
            assert box_overlap_mtv(moved, b) is None
