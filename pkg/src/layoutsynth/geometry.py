"""2D geometry on the layout (x, z) plane.

Points are plain length-2 sequences or numpy arrays ``(x, z)``.  Angles are
radians.  Every function here is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Map an angle into [0, 2*pi)."""
    t = math.fmod(theta, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    # fmod of a tiny negative number can round up to exactly 2*pi
    if t >= TWO_PI:
        t = 0.0
    return t


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def ang_diff(theta: float, theta_p: float) -> float:
    """Circular distance between two angles, in [0, pi]."""
    d = abs(wrap_angle(theta) - wrap_angle(theta_p))
    return min(TWO_PI - d, d)


def signed_ang_diff(target: float, current: float) -> float:
    """Shortest signed rotation taking ``current`` onto ``target``, in [-pi, pi)."""
    d = wrap_angle(target - current)
    return d - TWO_PI if d >= math.pi else d


def to_left(q, a, b) -> float:
    """Signed area (b - a) x (q - a); positive when q lies left of a->b."""
    # evaluate from the lexicographically smaller endpoint so that swapping
    # a and b negates the result exactly
    if (a[0], a[1]) > (b[0], b[1]):
        return -((a[0] - b[0]) * (q[1] - b[1]) - (a[1] - b[1]) * (q[0] - b[0]))
    return (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0])


def t_left(q, a, b) -> float:
    return max(to_left(q, a, b), 0.0)


def t_right(q, a, b) -> float:
    return max(-to_left(q, a, b), 0.0)


def signed_area(vertices: np.ndarray) -> float:
    x, z = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(z, -1)) - np.dot(np.roll(x, -1), z))


def _segments_cross(p1, p2, p3, p4) -> bool:
    d1 = to_left(p3, p1, p2)
    d2 = to_left(p4, p1, p2)
    d3 = to_left(p1, p3, p4)
    d4 = to_left(p2, p3, p4)
    return d1 * d2 < 0 and d3 * d4 < 0


@dataclass(frozen=True, eq=False)
class Polygon:
    """Simple polygon, vertices stored counter-clockwise.

    Construct through :meth:`from_points`, which validates and normalizes the
    winding.  The closing edge from the last vertex to the first is implicit.
    """

    vertices: np.ndarray

    @classmethod
    def from_points(cls, points: Sequence[Sequence[float]]) -> "Polygon":
        v = np.array(points, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("polygon needs at least 3 (x, z) vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("polygon vertices must be finite")
        area = signed_area(v)
        if area == 0.0:
            raise ValueError("polygon is degenerate (zero area)")
        n = len(v)
        for i in range(n):
            for j in range(i + 1, n):
                # adjacent edges share a vertex; skip them
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                    raise ValueError("polygon is self-intersecting")
        if area < 0.0:
            v = v[::-1].copy()
        v.setflags(write=False)
        return cls(v)

    def __len__(self) -> int:
        return len(self.vertices)

    def __eq__(self, other) -> bool:
        return isinstance(other, Polygon) and np.array_equal(self.vertices, other.vertices)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Edge start and end points, shape (n, 2) each."""
        return self.vertices, self._edge_ends

    @cached_property
    def is_convex(self) -> bool:
        a, b = self.vertices, self._edge_ends
        e1, e2 = b - a, np.roll(b, -1, axis=0) - b
        return bool((e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] >= 0.0).all())

    @cached_property
    def _edge_ends(self) -> np.ndarray:
        b = np.roll(self.vertices, -1, axis=0)
        b.setflags(write=False)
        return b

    def area(self) -> float:
        return signed_area(self.vertices)

    def translated(self, offset) -> "Polygon":
        return Polygon.from_points(self.vertices + np.asarray(offset, dtype=float))

    def transformed(self, theta: float, offset) -> "Polygon":
        v = self.vertices @ rotation(theta).T + np.asarray(offset, dtype=float)
        return Polygon.from_points(v)

    def to_list(self) -> list[list[float]]:
        return [[float(x), float(z)] for x, z in self.vertices]


@dataclass(frozen=True)
class OrientedBox:
    center: tuple[float, float]
    half_extents: tuple[float, float]
    theta: float = 0.0

    def __post_init__(self):
        if self.half_extents[0] <= 0 or self.half_extents[1] <= 0:
            raise ValueError("half extents must be positive")

    @property
    def area(self) -> float:
        return 4.0 * self.half_extents[0] * self.half_extents[1]


def corners_array(center, half_extents, theta: float) -> np.ndarray:
    hx, hz = half_extents
    local = np.array([[hx, hz], [-hx, hz], [-hx, -hz], [hx, -hz]])
    return local @ rotation(theta).T + np.asarray(center, dtype=float)


def box_corners(b: OrientedBox) -> np.ndarray:
    """The 4 corners, counter-clockwise, starting from local (+hx, +hz)."""
    return corners_array(b.center, b.half_extents, b.theta)


def _on_segment(q, a, b, tol: float) -> bool:
    ab = (b[0] - a[0], b[1] - a[1])
    length = math.hypot(*ab)
    if abs(to_left(q, a, b)) > tol * max(length, 1.0):
        return False
    dot = (q[0] - a[0]) * ab[0] + (q[1] - a[1]) * ab[1]
    return -tol <= dot <= length * length + tol


def winding_number(q, poly: Polygon) -> int:
    wn = 0
    a_all, b_all = poly.edges()
    for a, b in zip(a_all, b_all):
        if a[1] <= q[1]:
            if b[1] > q[1] and to_left(q, a, b) > 0:
                wn += 1
        elif b[1] <= q[1] and to_left(q, a, b) < 0:
            wn -= 1
    return wn


def point_in_polygon(q, poly: Polygon, tol: float = 1e-12) -> bool:
    """Winding-number containment; points on the boundary count as inside."""
    a_all, b_all = poly.edges()
    for a, b in zip(a_all, b_all):
        if _on_segment(q, a, b, tol):
            return True
    return winding_number(q, poly) != 0


def closest_boundary_point(q, poly: Polygon) -> tuple[np.ndarray, int]:
    """Nearest point on the polygon boundary and the index of its edge.

    Ties go to the lowest edge index.
    """
    q = np.asarray(q, dtype=float)
    a, b = poly.edges()
    ab = b - a
    t = np.einsum("ij,ij->i", q - a, ab) / np.einsum("ij,ij->i", ab, ab)
    t = np.clip(t, 0.0, 1.0)
    proj = a + t[:, None] * ab
    d2 = np.einsum("ij,ij->i", proj - q, proj - q)
    k = int(np.argmin(d2))
    return proj[k], k


def boundary_violation(q, poly: Polygon) -> np.ndarray:
    """Zero if q is inside ``poly``, else the vector from q to the nearest boundary point."""
    if point_in_polygon(q, poly):
        return np.zeros(2)
    p, _ = closest_boundary_point(q, poly)
    return p - np.asarray(q, dtype=float)


def _box_axes(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def separation_vectors(a: OrientedBox, b: OrientedBox, tol: float = 1e-12) -> list[np.ndarray]:
    """Every translation of ``a`` along a box axis that clears ``b``, shallowest first.

    Empty when the boxes are disjoint (penetration at most ``tol`` on some
    axis).  The first entry is the minimum translation vector.
    """
    ca, cb = box_corners(a), box_corners(b)
    d = np.asarray(a.center, dtype=float) - np.asarray(b.center, dtype=float)
    out = []
    for k, axis in enumerate(np.vstack([_box_axes(a.theta), _box_axes(b.theta)])):
        pa, pb = ca @ axis, cb @ axis
        push_neg = pa.max() - pb.min()  # distance to move a along -axis
        push_pos = pb.max() - pa.min()  # distance to move a along +axis
        if min(push_neg, push_pos) <= tol:
            return []
        # on equal depth prefer the side a already leans toward
        pos_first = push_pos < push_neg or (push_pos == push_neg and float(d @ axis) >= 0.0)
        out.append((push_pos, 0 if pos_first else 1, k, axis * push_pos))
        out.append((push_neg, 1 if pos_first else 0, k, -axis * push_neg))
    out.sort(key=lambda t: (t[0], t[2], t[1]))
    return [v for *_, v in out]


def box_overlap_mtv(a: OrientedBox, b: OrientedBox, tol: float = 1e-12) -> Optional[np.ndarray]:
    """Minimum translation vector moving ``a`` out of ``b``, or None if disjoint.

    Separating-axis test over the two edge normals of each box.  Boxes whose
    penetration is at most ``tol`` (touching) count as disjoint.
    """
    vecs = separation_vectors(a, b, tol)
    return vecs[0] if vecs else None


def points_in_polygon(points: np.ndarray, poly: Polygon, tol: float = 1e-12) -> np.ndarray:
    """Vectorized :func:`point_in_polygon` over an (n, 2) array."""
    q = np.asarray(points, dtype=float).reshape(-1, 2)
    a, b = poly.edges()
    ab = b - a  # (e, 2)
    cross = ab[None, :, 0] * (q[:, None, 1] - a[None, :, 1]) - ab[None, :, 1] * (q[:, None, 0] - a[None, :, 0])
    length = np.hypot(ab[:, 0], ab[:, 1])
    slack = tol * np.maximum(length, 1.0)
    if poly.is_convex:
        # left of (or on) every edge line
        return (cross >= -slack).all(axis=1)
    rel = q[:, None, :] - a[None, :, :]  # (n, e, 2)
    dot = np.einsum("nek,ek->ne", rel, ab)
    on_edge = (np.abs(cross) <= slack) & (dot >= -tol) & (dot <= length**2 + tol)
    az, bz = a[:, 1][None, :], b[:, 1][None, :]
    qz = q[:, 1][:, None]
    up = (az <= qz) & (bz > qz) & (cross > 0)
    down = (az > qz) & (bz <= qz) & (cross < 0)
    wn = up.sum(axis=1) - down.sum(axis=1)
    return on_edge.any(axis=1) | (wn != 0)


def boundary_violations(points: np.ndarray, poly: Polygon) -> np.ndarray:
    """Vectorized :func:`boundary_violation`; returns an (n, 2) array."""
    q = np.asarray(points, dtype=float).reshape(-1, 2)
    out = np.zeros_like(q)
    outside = ~points_in_polygon(q, poly)
    if outside.any():
        out[outside] = [closest_boundary_point(p, poly)[0] - p for p in q[outside]]
    return out
