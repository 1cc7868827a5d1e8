"""Procedural triangle meshes used by the tests, scripts and benchmarks."""

from __future__ import annotations

import math

import numpy as np

from .mesh import HalfedgeMesh


def tetrahedron():
    p = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    f = [(0, 1, 2), (0, 2, 3), (0, 3, 1), (1, 3, 2)]
    return HalfedgeMesh(p, f)


def octahedron():
    p = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float)
    f = [(0, 2, 4), (2, 1, 4), (1, 3, 4), (3, 0, 4),
         (2, 0, 5), (1, 2, 5), (3, 1, 5), (0, 3, 5)]
    return HalfedgeMesh(p, f)


def icosahedron_arrays():
    t = (1.0 + math.sqrt(5.0)) / 2.0
    p = np.array([[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
                  [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
                  [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]], dtype=float)
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    f = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
         (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
         (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
         (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    return p, np.array(f, dtype=np.int64)


def icosahedron():
    """Regular icosahedron with unit circumradius."""
    return HalfedgeMesh(*icosahedron_arrays())


def subdivide_midpoint(points, faces, levels=1, project=None):
    """1-to-4 midpoint subdivision; ``project`` optionally maps new points."""
    points = [np.asarray(p, dtype=float) for p in points]
    faces = [tuple(f) for f in faces]
    for _ in range(levels):
        mid = {}
        new_faces = []

        def midpoint(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in mid:
                q = 0.5 * (points[i] + points[j])
                if project is not None:
                    q = project(q)
                mid[key] = len(points)
                points.append(q)
            return mid[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        faces = new_faces
    return np.array(points), np.array(faces, dtype=np.int64)


def icosphere(level=4, radius=1.0):
    """Subdivided icosahedron projected to a sphere (level 4: 2562 vertices)."""
    p, f = icosahedron_arrays()
    p, f = subdivide_midpoint(p, f, level, project=lambda q: q / np.linalg.norm(q))
    return HalfedgeMesh(radius * p, f)


def _dedup(points, faces, decimals=9):
    keys = {}
    remap = []
    out = []
    for p in points:
        k = tuple(np.round(p, decimals) + 0.0)
        if k not in keys:
            keys[k] = len(out)
            out.append(p)
        remap.append(keys[k])
    remap = np.array(remap)
    return np.array(out), remap[np.asarray(faces)]


def cube(n=22, size=1.0, alternate=False):
    """Axis-aligned cube centred at the origin, each side an n-by-n grid.

    n=22 gives 2906 vertices. With ``alternate`` the quad diagonals flip in
    a checkerboard pattern.
    """
    pts, faces = [], []
    half = 0.5 * size
    for axis in range(3):
        for sign in (1.0, -1.0):
            b, c = (axis + 1) % 3, (axis + 2) % 3
            e = np.eye(3)
            u, v = (e[b], e[c]) if sign > 0 else (e[c], e[b])
            origin = sign * half * e[axis] - half * u - half * v
            base = len(pts)
            for j in range(n + 1):
                for i in range(n + 1):
                    pts.append(origin + size * (i / n) * u + size * (j / n) * v)
            for j in range(n):
                for i in range(n):
                    q00 = base + j * (n + 1) + i
                    q10, q01, q11 = q00 + 1, q00 + n + 1, q00 + n + 2
                    if alternate and (i + j) % 2:
                        faces += [(q00, q10, q01), (q10, q11, q01)]
                    else:
                        faces += [(q00, q10, q11), (q00, q11, q01)]
    p, f = _dedup(np.array(pts), faces)
    return HalfedgeMesh(p, f)


def open_cylinder(n_around=64, n_rows=35, radius=0.5, height=1.5):
    """Cylinder side surface without caps; rows alternate by half a step so
    the triangles are close to equilateral. Two boundary loops."""
    pts = []
    for r in range(n_rows + 1):
        z = height * r / n_rows - 0.5 * height
        shift = 0.5 if r % 2 else 0.0
        for k in range(n_around):
            t = 2.0 * math.pi * (k + shift) / n_around
            pts.append((radius * math.cos(t), radius * math.sin(t), z))
    faces = []
    for r in range(n_rows):
        lo, hi = r * n_around, (r + 1) * n_around
        for k in range(n_around):
            k1 = (k + 1) % n_around
            if r % 2 == 0:
                faces += [(lo + k, lo + k1, hi + k), (lo + k1, hi + k1, hi + k)]
            else:
                faces += [(lo + k, lo + k1, hi + k1), (lo + k, hi + k1, hi + k)]
    return HalfedgeMesh(np.array(pts), faces)


def torus(n_major=48, n_minor=16, major=1.0, minor=0.35):
    pts = []
    for i in range(n_major):
        u = 2.0 * math.pi * i / n_major
        for j in range(n_minor):
            v = 2.0 * math.pi * j / n_minor
            r = major + minor * math.cos(v)
            pts.append((r * math.cos(u), r * math.sin(u), minor * math.sin(v)))
    faces = []
    for i in range(n_major):
        for j in range(n_minor):
            a = i * n_minor + j
            b = ((i + 1) % n_major) * n_minor + j
            c = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor
            d = i * n_minor + (j + 1) % n_minor
            faces += [(a, b, c), (a, c, d)]
    return HalfedgeMesh(np.array(pts), faces)


def square_grid(n=8, size=1.0, z=0.0):
    """Flat n-by-n grid of the square [0, size]^2, one diagonal per quad."""
    pts = [(size * i / n, size * j / n, z) for j in range(n + 1) for i in range(n + 1)]
    faces = []
    for j in range(n):
        for i in range(n):
            a = j * (n + 1) + i
            faces += [(a, a + 1, a + n + 2), (a, a + n + 2, a + n + 1)]
    return HalfedgeMesh(np.array(pts), faces)


def hex_grid(rings=3, spacing=1.0):
    """Regular triangular lattice clipped to a hexagon of the given ring count.

    Vertex 0 is the centre; every interior vertex has valence 6.
    """
    pts = []
    index = {}
    e1 = np.array([1.0, 0.0, 0.0])
    e2 = np.array([0.5, math.sqrt(3) / 2, 0.0])
    coords = [(0, 0)] + [(i, j) for i in range(-rings, rings + 1) for j in range(-rings, rings + 1)
                         if (i, j) != (0, 0) and max(abs(i), abs(j), abs(i + j)) <= rings]
    for i, j in coords:
        index[(i, j)] = len(pts)
        pts.append(spacing * (i * e1 + j * e2))
    faces = []
    for (i, j), a in index.items():
        b, c, d = index.get((i + 1, j)), index.get((i, j + 1)), index.get((i + 1, j - 1))
        if b is not None and c is not None:
            faces.append((a, b, c))
        if d is not None and b is not None:
            faces.append((a, d, b))
    return HalfedgeMesh(np.array(pts), faces)


def single_triangle():
    return HalfedgeMesh(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float), [(0, 1, 2)])


def triangle_strip():
    """Two triangles sharing edge (1, 2)."""
    p = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float)
    return HalfedgeMesh(p, [(0, 1, 2), (1, 3, 2)])
