"""Per-vertex feature intensity and feature/crease/smooth classification.

K is the angle defect, E the largest unsigned dihedral angle over the
edges around a vertex (boundary edges count as pi), and F combines the two
after a rescaling that saturates at pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import corner_angles, dihedral_between, triangle_normals

F_MAX = (math.pi + 1.0) ** 2 - 1.0
ROUNDOFF = 1e-12  # angle sums on flat patches miss 2*pi by a few ulps


def tau(x):
    return np.minimum(math.pi, 2.0 * np.asarray(x, dtype=float))


def combine_intensity(k, e):
    """F = (tau(|K|) + 1) * (tau(E) + 1) - 1, with round-off snapped to 0."""
    k = np.abs(np.asarray(k, dtype=float))
    e = np.asarray(e, dtype=float)
    k = np.where(k < ROUNDOFF, 0.0, k)
    e = np.where(e < ROUNDOFF, 0.0, e)
    return (tau(k) + 1.0) * (tau(e) + 1.0) - 1.0


def angle_sum(mesh, v):
    faces = mesh.vertex_faces(v)
    if not faces:
        return 0.0
    total = 0.0
    tris = mesh._pos[np.array([mesh.face_vertices(f) for f in faces])]
    ang = corner_angles(tris)
    for i, f in enumerate(faces):
        k = mesh.face_vertices(f).index(v)
        total += ang[i, k]
    return float(total)


def gaussian_curvature(mesh, v):
    """Angle defect: 2*pi - angle sum (interior), pi - angle sum (boundary)."""
    full = math.pi if mesh.is_boundary_vertex(v) else 2.0 * math.pi
    return full - angle_sum(mesh, v)


def edge_dihedral(mesh, h):
    """Unsigned dihedral angle of the edge of h; boundary edges read as pi."""
    f0, f1 = mesh.he_face[h], mesh.he_face[h ^ 1]
    if f0 < 0 or f1 < 0:
        return math.pi
    return dihedral_between(mesh.face_normal(f0), mesh.face_normal(f1))


def feature_edge_intensity(mesh, v):
    return max((edge_dihedral(mesh, h) for h in mesh.outgoing(v)), default=0.0)


def feature_intensity(mesh, v):
    return float(combine_intensity(gaussian_curvature(mesh, v), feature_edge_intensity(mesh, v)))


@dataclass
class FeatureField:
    """K, E and F per vertex id; entries of dead vertices are stale."""

    K: np.ndarray
    E: np.ndarray
    F: np.ndarray

    @classmethod
    def compute(cls, mesh):
        n = mesh.vertex_capacity
        fld = cls(np.zeros(n), np.zeros(n), np.zeros(n))
        fld.update(mesh, mesh.vertices())
        return fld

    def _grow(self, n):
        if n > len(self.F):
            pad = n - len(self.F)
            self.K = np.concatenate([self.K, np.zeros(pad)])
            self.E = np.concatenate([self.E, np.zeros(pad)])
            self.F = np.concatenate([self.F, np.zeros(pad)])

    def update(self, mesh, vertices):
        """Recompute K, E, F at the given vertices (batched over their stars)."""
        self._grow(mesh.vertex_capacity)
        verts = [v for v in vertices if mesh.v_alive[v] and mesh.v_he[v] >= 0]
        if not verts:
            return
        corner_v, corner_f, corner_k = [], [], []
        edge_v, edge_f0, edge_f1 = [], [], []
        for v in verts:
            for h in mesh.outgoing(v):
                f = mesh.he_face[h]
                g = mesh.he_face[h ^ 1]
                if f >= 0:
                    corner_v.append(v)
                    corner_f.append(f)
                    corner_k.append(mesh.face_halfedges(f).index(h))
                edge_v.append(v)
                edge_f0.append(f)
                edge_f1.append(g)
        faces = sorted((set(corner_f) | set(edge_f0) | set(edge_f1)) - {-1})
        row = {f: i for i, f in enumerate(faces)}
        tris = mesh._pos[mesh.face_array(faces)]
        ang = corner_angles(tris)
        nrm = triangle_normals(tris)

        vi = np.array(verts)
        pos = {v: i for i, v in enumerate(verts)}
        ksum = np.zeros(len(verts))
        if corner_v:
            np.add.at(ksum, [pos[v] for v in corner_v],
                      ang[[row[f] for f in corner_f], corner_k])
        full = np.array([math.pi if mesh.is_boundary_vertex(v) else 2.0 * math.pi for v in verts])
        k = full - ksum

        f0 = np.array(edge_f0)
        f1 = np.array(edge_f1)
        d = np.full(len(f0), math.pi)
        inner = (f0 >= 0) & (f1 >= 0)
        if inner.any():
            n0 = nrm[[row[f] for f in f0[inner]]]
            n1 = nrm[[row[f] for f in f1[inner]]]
            d[inner] = np.arctan2(np.linalg.norm(np.cross(n0, n1), axis=1), np.einsum("ij,ij->i", n0, n1))
        e = np.zeros(len(verts))
        np.maximum.at(e, [pos[v] for v in edge_v], d)
        self.K[vi] = k
        self.E[vi] = e
        self.F[vi] = combine_intensity(k, e)

    def copy(self):
        return FeatureField(self.K.copy(), self.E.copy(), self.F.copy())


class VertexKind(Enum):
    FEATURE = "feature"
    CREASE = "crease"
    SMOOTH = "smooth"


@dataclass(frozen=True)
class VertexClass:
    kind: VertexKind
    crease_neighbors: tuple = field(default=())


def classify_vertex(mesh, field_: FeatureField, v, zeta=0.5):
    """Feature / Crease / Smooth from the number of important neighbours.

    A neighbour counts when its intensity is at least ``zeta`` times ours
    and the connecting edge is important relative to our own E. Counts
    between 2 and the valence snap to the nearer of the two, ties to Crease.
    """
    if not 0.0 < zeta < 1.0:
        raise ValueError("zeta must lie in (0, 1)")
    fv = field_.F[v]
    ev = field_.E[v]
    scored = []
    similar = []
    for h in mesh.outgoing(v):
        u = mesh.he_to[h]
        d = edge_dihedral(mesh, h)
        ok = field_.F[u] >= zeta * fv and d + 1.0 >= zeta * (ev + 1.0)
        scored.append((not ok, -d, -field_.F[u], u))
        if ok:
            similar.append(u)
    k = len(similar)
    degree = len(scored)
    if k == 0:
        return VertexClass(VertexKind.FEATURE)
    if k != 2 and (k == degree or abs(k - 2) > abs(k - degree)):
        return VertexClass(VertexKind.SMOOTH)
    if degree < 2:
        return VertexClass(VertexKind.FEATURE)
    # the two most important neighbours, qualifying ones first
    scored.sort()
    return VertexClass(VertexKind.CREASE, (scored[0][3], scored[1][3]))
