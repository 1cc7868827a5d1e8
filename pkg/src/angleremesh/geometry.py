"""Scalar geometric primitives and a static closest-point tree."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels


class DegenerateTriangleError(ValueError):
    pass


def triangle_angles(p0, p1, p2):
    """Interior angles (radians) at p0, p1, p2.

    Raises
    ------
    DegenerateTriangleError
        If any edge has zero length.
    """
    p0, p1, p2 = (np.asarray(p, dtype=float) for p in (p0, p1, p2))
    a = np.linalg.norm(p1 - p2)
    b = np.linalg.norm(p2 - p0)
    c = np.linalg.norm(p0 - p1)
    if min(a, b, c) == 0.0:
        raise DegenerateTriangleError("triangle has a zero-length edge")
    # atan2 of |cross| and dot is stable for needles, unlike the cosine law
    t0 = _corner(p1 - p0, p2 - p0)
    t1 = _corner(p2 - p1, p0 - p1)
    t2 = math.pi - t0 - t1
    if t2 <= 0.0:
        raise DegenerateTriangleError("triangle is degenerate")
    return t0, t1, t2


def _corner(u, v):
    return math.atan2(np.linalg.norm(np.cross(u, v)), float(np.dot(u, v)))


def corner_angles(tris):
    """Vectorised interior angles of (m, 3, 3) triangles -> (m, 3) radians."""
    tris = np.ascontiguousarray(tris, dtype=float).reshape(-1, 3, 3)
    return _kernels.corner_angles(tris)


def triangle_normals(tris):
    """Unnormalised normals (twice the area vector) of (m, 3, 3) triangles."""
    tris = np.ascontiguousarray(tris, dtype=float).reshape(-1, 3, 3)
    return _kernels.triangle_normals(tris)


def triangle_areas(tris):
    return 0.5 * np.linalg.norm(triangle_normals(tris), axis=1)


def dihedral_between(n0, n1):
    """Unsigned angle in [0, pi] between two facet normals; 0 means coplanar."""
    n0 = np.asarray(n0, dtype=float)
    n1 = np.asarray(n1, dtype=float)
    return math.atan2(np.linalg.norm(np.cross(n0, n1)), float(np.dot(n0, n1)))


def dihedral_angle(mesh, edge):
    """Unsigned dihedral angle at an interior edge (halfedge id or (u, v) pair).

    Raises ValueError on boundary edges; callers handle those separately.
    """
    h = mesh.find_halfedge(*edge) if isinstance(edge, tuple) else edge
    f0, f1 = mesh.he_face[h], mesh.he_face[h ^ 1]
    if f0 < 0 or f1 < 0:
        raise ValueError(f"edge {h >> 1} is a boundary edge")
    return dihedral_between(mesh.face_normal(f0), mesh.face_normal(f1))


def triangle_quality(p0, p1, p2):
    """Q_t = 2*sqrt(3)*area / (half-perimeter * longest edge).

    1 for equilateral triangles, tending to 0 for slivers; 0 when degenerate.
    """
    tri = np.array([p0, p1, p2], dtype=float)
    return float(triangle_qualities(tri[None])[0])


def triangle_qualities(tris):
    tris = np.asarray(tris, dtype=float)
    e = np.stack([np.linalg.norm(tris[:, (k + 1) % 3] - tris[:, k], axis=1) for k in range(3)], axis=1)
    area = triangle_areas(tris)
    half_perimeter = 0.5 * e.sum(axis=1)
    longest = e.max(axis=1)
    denom = half_perimeter * longest
    q = np.zeros(len(tris))
    ok = denom > 0
    q[ok] = 2.0 * math.sqrt(3.0) * area[ok] / denom[ok]
    return q


def closest_point_triangle(p, triangle):
    """Closest point of a closed triangle to p -> (point, squared distance)."""
    tri = np.asarray(triangle, dtype=float)
    qx, qy, qz, d2, *_ = _kernels.closest_on_triangle(np.asarray(p, dtype=float), tri[0], tri[1], tri[2])
    return np.array([qx, qy, qz]), d2


def bbox_diagonal(points):
    """Bounding-box diagonal of a point array or of a mesh's live vertices."""
    if hasattr(points, "live_points"):
        points = points.live_points()
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        return 0.0
    return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))


@dataclass(frozen=True)
class ClosestHit:
    face: np.ndarray
    point: np.ndarray
    distance: np.ndarray
    bary: np.ndarray


class AabbTree:
    """Axis-aligned bounding box hierarchy over a fixed set of triangles.

    Facet ids reported by queries are row indices into ``tris`` unless a
    ``face_ids`` mapping is supplied.
    """

    leaf_size = 4

    def __init__(self, tris, face_ids=None):
        tris = np.ascontiguousarray(tris, dtype=float).reshape(-1, 3, 3)
        if len(tris) == 0:
            raise ValueError("cannot build a tree over zero facets")
        self.tris = tris
        self.face_ids = None if face_ids is None else np.asarray(face_ids, dtype=np.int64)
        lo_t = tris.min(axis=1)
        hi_t = tris.max(axis=1)
        centers = 0.5 * (lo_t + hi_t)
        order = np.arange(len(tris), dtype=np.int64)
        lo, hi, left, right, start, count = [], [], [], [], [], []

        # iterative build, splitting at the median of the widest axis
        pending = [(0, len(tris), -1, False)]
        while pending:
            s, e, parent, is_right = pending.pop()
            idx = order[s:e]
            node = len(lo)
            lo.append(lo_t[idx].min(axis=0))
            hi.append(hi_t[idx].max(axis=0))
            left.append(-1)
            right.append(-1)
            start.append(s)
            count.append(e - s)
            if parent >= 0:
                (right if is_right else left)[parent] = node
            if e - s > self.leaf_size:
                c = centers[idx]
                axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
                mid = (e - s) // 2
                part = np.argsort(c[:, axis], kind="stable")
                order[s:e] = idx[part]
                pending.append((s + mid, e, node, True))
                pending.append((s, s + mid, node, False))
        self._lo = np.array(lo)
        self._hi = np.array(hi)
        self._left = np.array(left, dtype=np.int64)
        self._right = np.array(right, dtype=np.int64)
        self._start = np.array(start, dtype=np.int64)
        self._count = np.array(count, dtype=np.int64)
        self._order = order

    def __len__(self):
        return len(self.tris)

    def query(self, points) -> ClosestHit:
        pts = np.ascontiguousarray(points, dtype=float).reshape(-1, 3)
        face, foot, d2, bary = _kernels.tree_query(
            pts, self.tris, self._lo, self._hi, self._left, self._right,
            self._start, self._count, self._order)
        if self.face_ids is not None:
            face = self.face_ids[face]
        return ClosestHit(face, foot, np.sqrt(d2), bary)


def build_tree(tris, face_ids=None) -> AabbTree:
    return AabbTree(tris, face_ids)


def tree_closest(tree: AabbTree, p):
    """Single-point query -> (facet id, closest point, distance)."""
    hit = tree.query(np.asarray(p, dtype=float)[None])
    return int(hit.face[0]), hit.point[0], float(hit.distance[0])


def brute_force_closest(tris, points) -> ClosestHit:
    tris = np.ascontiguousarray(tris, dtype=float).reshape(-1, 3, 3)
    pts = np.ascontiguousarray(points, dtype=float).reshape(-1, 3)
    face, foot, d2, bary = _kernels.brute_closest(pts, tris)
    return ClosestHit(face, foot, np.sqrt(d2), bary)
