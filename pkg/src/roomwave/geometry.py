"""2D polygon and segment primitives shared by scene validation, tracing and rasterization.

All polygons are simple, given as (n, 2) float arrays of vertices in meters.
Counter-clockwise orientation means the interior lies to the left of each
directed edge. Functions are vectorized over points or segments where the
callers are hot (tracing, rasterization); scalar paths exist for clarity in
validation code.
"""

from __future__ import annotations

import numpy as np

EPS = 1e-9


def polygon_area(verts: np.ndarray) -> float:
    """Signed shoelace area; positive for counter-clockwise vertices."""
    v = np.asarray(verts, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def ensure_ccw(verts: np.ndarray) -> np.ndarray:
    """Return the vertex array in counter-clockwise order (reversed if needed)."""
    v = np.asarray(verts, dtype=float)
    return v[::-1].copy() if polygon_area(v) < 0 else v.copy()


def is_ccw(verts) -> bool:
    return polygon_area(verts) > 0


def _cross2(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def _proper_intersect(p1, p2, q1, q2) -> bool:
    """True if open segments (p1,p2) and (q1,q2) cross at a single interior point."""
    d1 = _cross2(q2 - q1, p1 - q1)
    d2 = _cross2(q2 - q1, p2 - q1)
    d3 = _cross2(p2 - p1, q1 - p1)
    d4 = _cross2(p2 - p1, q2 - p1)
    return bool(((d1 > EPS) != (d2 > EPS)) and ((d3 > EPS) != (d4 > EPS))
                and abs(d1 - d2) > EPS and abs(d3 - d4) > EPS)


def is_simple_polygon(verts) -> bool:
    """Check that a polygon has >= 3 vertices, positive area and no self-crossings.

    Non-adjacent edge pairs must not properly intersect; O(n^2), fine for the
    small footprints used here.
    """
    v = np.asarray(verts, dtype=float)
    n = len(v)
    if n < 3 or abs(polygon_area(v)) < EPS:
        return False
    for i in range(n):
        a1, a2 = v[i], v[(i + 1) % n]
        if np.hypot(*(a2 - a1)) < EPS:
            return False  # degenerate edge
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # adjacent edges share a vertex
            if _proper_intersect(a1, a2, v[j], v[(j + 1) % n]):
                return False
    return True


def points_in_polygon(points: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Vectorized even-odd (crossing number) test.

    points: (m, 2), verts: (n, 2). Returns (m,) bool; points exactly on an
    edge may land on either side, callers that care use distance tests.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    v = np.asarray(verts, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    x1, y1 = v[:, 0], v[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    for i in range(len(v)):
        cond = (y1[i] > y) != (y2[i] > y)
        if not cond.any():
            continue
        xi = x1[i] + (y - y1[i]) / (y2[i] - y1[i] + 1e-300) * (x2[i] - x1[i])
        inside ^= cond & (x < xi)
    return inside


def point_in_polygon(point, verts) -> bool:
    return bool(points_in_polygon(np.asarray(point, dtype=float)[None, :], verts)[0])


def point_segment_distance(point, p1, p2) -> float:
    """Distance from a point to a segment."""
    p = np.asarray(point, dtype=float)
    a = np.asarray(p1, dtype=float)
    b = np.asarray(p2, dtype=float)
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom < EPS * EPS else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.hypot(*(a + t * ab - p)))


def point_polygon_distance(point, verts) -> float:
    """Distance from a point to the polygon boundary (0 if on it; interior points
    still return distance to the boundary — combine with point_in_polygon)."""
    v = np.asarray(verts, dtype=float)
    return min(point_segment_distance(point, v[i], v[(i + 1) % len(v)])
               for i in range(len(v)))


def convex_polygons_overlap(a: np.ndarray, b: np.ndarray, tol: float = EPS) -> bool:
    """Positive-area overlap test for two convex polygons via separating axes.

    Touching boundaries (shared edge or vertex) do not count as overlap.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    for poly in (a, b):
        edges = np.roll(poly, -1, axis=0) - poly
        normals = np.stack([-edges[:, 1], edges[:, 0]], axis=1)
        pa = a @ normals.T  # (na, n_axes)
        pb = b @ normals.T
        sep = (pa.max(axis=0) <= pb.min(axis=0) + tol) | (pb.max(axis=0) <= pa.min(axis=0) + tol)
        if sep.any():
            return False
    return True


def rect_footprint(cx: float, cy: float, width: float, depth: float,
                   angle: float = 0.0) -> np.ndarray:
    """Axis-aligned (w x d) rectangle centered at (cx, cy), rotated CCW by angle.

    Vertices come out counter-clockwise.
    """
    hw, hd = 0.5 * width, 0.5 * depth
    corners = np.array([[-hw, -hd], [hw, -hd], [hw, hd], [-hw, hd]], dtype=float)
    if angle != 0.0:
        c, s = np.cos(angle), np.sin(angle)
        corners = corners @ np.array([[c, s], [-s, c]])
    return corners + np.array([cx, cy])


def mirror_point(point: np.ndarray, line_p: np.ndarray, line_n: np.ndarray) -> np.ndarray:
    """Mirror a point (or (m,2) array) across the line through line_p with unit normal line_n."""
    p = np.asarray(point, dtype=float)
    d = (p - line_p) @ line_n
    return p - 2.0 * np.multiply.outer(d, line_n)


def segments_cross_params(p0, d, q0, q1):
    """Intersection parameters of one segment against many segments.

    p0: (2,) start, d: (2,) direction (p1 - p0) of the probe segment.
    q0, q1: (m, 2) endpoint arrays of target segments.

    Returns (t, s, valid): t is the parameter along the probe, s along each
    target; valid marks pairs with non-parallel supporting lines. Callers
    apply their own open/closed interval rules on t and s.
    """
    e = q1 - q0
    denom = d[0] * e[:, 1] - d[1] * e[:, 0]
    valid = np.abs(denom) > EPS
    denom_safe = np.where(valid, denom, 1.0)
    w = q0 - p0
    t = (w[:, 0] * e[:, 1] - w[:, 1] * e[:, 0]) / denom_safe
    s = (w[:, 0] * d[1] - w[:, 1] * d[0]) / denom_safe
    return t, s, valid
