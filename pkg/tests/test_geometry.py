"""Geometry primitives against brute-force and shapely oracles."""

import numpy as np
import pytest
from shapely.geometry import Point, Polygon

from roomwave.geometry import (
    convex_polygons_overlap,
    ensure_ccw,
    is_ccw,
    is_simple_polygon,
    mirror_point,
    point_in_polygon,
    point_polygon_distance,
    point_segment_distance,
    points_in_polygon,
    polygon_area,
    rect_footprint,
    segments_cross_params,
)

SQUARE = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]])


def test_polygon_area_square():
    assert polygon_area(SQUARE) == pytest.approx(4.0)
    assert polygon_area(SQUARE[::-1]) == pytest.approx(-4.0)


def test_polygon_area_triangle():
    tri = np.array([[0, 0], [3, 0], [0, 4]], dtype=float)
    assert polygon_area(tri) == pytest.approx(6.0)


def test_ensure_ccw_flips_clockwise_input():
    cw = SQUARE[::-1]
    out = ensure_ccw(cw)
    assert is_ccw(out)
    assert polygon_area(out) == pytest.approx(4.0)


def test_simple_polygon_accepts_convex_and_l_shape():
    assert is_simple_polygon(SQUARE)
    lshape = np.array([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]], dtype=float)
    assert is_simple_polygon(lshape)


def test_simple_polygon_rejects_bowtie_and_degenerate():
    bowtie = np.array([[0, 0], [2, 2], [2, 0], [0, 2]], dtype=float)
    assert not is_simple_polygon(bowtie)
    assert not is_simple_polygon(np.array([[0, 0], [1, 0]], dtype=float))
    collinear = np.array([[0, 0], [1, 0], [2, 0]], dtype=float)
    assert not is_simple_polygon(collinear)


def test_points_in_polygon_matches_shapely_on_random_polygons():
    rng = np.random.default_rng(7)
    for _ in range(20):
        # random convex-ish polygon from sorted angles (always simple)
        n = rng.integers(3, 9)
        ang = np.sort(rng.uniform(0, 2 * np.pi, n))
        rad = rng.uniform(0.5, 2.0, n)
        verts = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
        if not is_simple_polygon(verts):
            continue
        poly = Polygon(verts)
        pts = rng.uniform(-2.5, 2.5, size=(200, 2))
        got = points_in_polygon(pts, verts)
        want = np.array([poly.contains(Point(p)) for p in pts])
        # disagreement only allowed within a hair of the boundary
        disagree = got != want
        if disagree.any():
            dist = np.array([poly.exterior.distance(Point(p)) for p in pts[disagree]])
            assert dist.max() < 1e-9


def test_point_in_polygon_interior_and_exterior():
    assert point_in_polygon((1.0, 1.0), SQUARE)
    assert not point_in_polygon((3.0, 1.0), SQUARE)
    assert not point_in_polygon((-0.1, 1.0), SQUARE)


def test_point_segment_distance_cases():
    # perpendicular foot inside segment
    assert point_segment_distance((1, 1), (0, 0), (2, 0)) == pytest.approx(1.0)
    # nearest point is an endpoint
    assert point_segment_distance((3, 4), (0, 0), (1, 0)) == pytest.approx(np.hypot(2, 4))
    # degenerate zero-length segment
    assert point_segment_distance((1, 1), (0, 0), (0, 0)) == pytest.approx(np.sqrt(2))


def test_point_polygon_distance():
    assert point_polygon_distance((1.0, 1.0), SQUARE) == pytest.approx(1.0)
    assert point_polygon_distance((3.0, 1.0), SQUARE) == pytest.approx(1.0)
    assert point_polygon_distance((0.0, 0.0), SQUARE) == pytest.approx(0.0)


def test_convex_overlap_matches_shapely_intersection_area():
    rng = np.random.default_rng(11)
    for _ in range(200):
        a = rect_footprint(*rng.uniform(0, 4, 2), *rng.uniform(0.3, 2.0, 2),
                           angle=rng.uniform(0, np.pi))
        b = rect_footprint(*rng.uniform(0, 4, 2), *rng.uniform(0.3, 2.0, 2),
                           angle=rng.uniform(0, np.pi))
        area = Polygon(a).intersection(Polygon(b)).area
        got = convex_polygons_overlap(a, b)
        if area > 1e-7:
            assert got
        elif area == 0.0:
            assert not got
        # tiny sliver overlaps near tolerance may go either way


def test_convex_overlap_touching_edge_is_not_overlap():
    a = rect_footprint(0.0, 0.0, 2.0, 2.0)
    b = rect_footprint(2.0, 0.0, 2.0, 2.0)  # shares the x=1 edge
    assert not convex_polygons_overlap(a, b)


def test_rect_footprint_is_ccw_with_requested_dims():
    r = rect_footprint(1.0, 2.0, 3.0, 0.5, angle=0.3)
    assert is_ccw(r)
    edges = np.roll(r, -1, axis=0) - r
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    assert sorted(np.round(lengths, 9).tolist()) == pytest.approx([0.5, 0.5, 3.0, 3.0])


def test_mirror_point_across_vertical_line():
    # line x=1 with unit normal (1, 0)
    out = mirror_point(np.array([3.0, 5.0]), np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    assert out == pytest.approx([-1.0, 5.0])
    # mirroring twice is the identity
    back = mirror_point(out, np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    assert back == pytest.approx([3.0, 5.0])


def test_mirror_point_batch_matches_scalar():
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(10, 2))
    p0 = np.array([0.5, -0.2])
    n = np.array([np.cos(0.7), np.sin(0.7)])
    batch = mirror_point(pts, p0, n)
    for i in range(10):
        assert batch[i] == pytest.approx(mirror_point(pts[i], p0, n))


def test_segments_cross_params_known_intersection():
    # probe from (0,0) to (2,2) against segment (0,2)-(2,0): crossing at (1,1)
    q0 = np.array([[0.0, 2.0]])
    q1 = np.array([[2.0, 0.0]])
    t, s, valid = segments_cross_params(np.array([0.0, 0.0]), np.array([2.0, 2.0]), q0, q1)
    assert valid[0]
    assert t[0] == pytest.approx(0.5)
    assert s[0] == pytest.approx(0.5)


def test_segments_cross_params_parallel_marked_invalid():
    q0 = np.array([[0.0, 1.0]])
    q1 = np.array([[1.0, 2.0]])
    _, _, valid = segments_cross_params(np.array([0.0, 0.0]), np.array([1.0, 1.0]), q0, q1)
    assert not valid[0]
