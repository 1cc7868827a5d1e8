"""Halfedge data structure for 2-manifold triangle meshes.

Halfedges are allocated in pairs so that ``h ^ 1`` is the opposite of ``h``
and ``h >> 1`` is the edge id. A halfedge points *to* ``he_to[h]``; boundary
halfedges have ``he_face[h] == -1`` and are chained around their hole by
``he_next`` / ``he_prev``. Deleted elements are flagged rather than removed,
so ids stay stable across local operations; :meth:`HalfedgeMesh.to_arrays`
compacts them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import bbox_diagonal, triangle_normals


class MeshError(ValueError):
    pass


class NonManifoldError(MeshError):
    def __init__(self, message, *, vertex=None, edge=None):
        super().__init__(message)
        self.vertex = vertex
        self.edge = edge


class NonTriangularFacetError(MeshError):
    def __init__(self, index, size):
        super().__init__(f"non-triangular facet at index {index} ({size} vertices)")
        self.index = index


class CollapseRejected(MeshError):
    pass


class HalfedgeMesh:
    """Triangle mesh with halfedge connectivity.

    Parameters
    ----------
    points : array_like, shape (n, 3)
    faces : array_like, shape (m, 3)
        Consistently oriented vertex triples, 0-based.

    Raises
    ------
    NonManifoldError
        Naming the offending edge or vertex.
    """

    def __init__(self, points, faces):
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        faces = [tuple(int(i) for i in f) for f in faces]
        self._pos = np.array(points, dtype=float, copy=True)
        self._nv = len(points)
        self.v_he = [-1] * self._nv
        self.v_alive = [True] * self._nv
        self.he_to: list[int] = []
        self.he_next: list[int] = []
        self.he_prev: list[int] = []
        self.he_face: list[int] = []
        self.e_alive: list[bool] = []
        self.f_he: list[int] = []
        self.f_alive: list[bool] = []
        self._build(faces)
        self._n_faces = len(self.f_he)
        self._n_edges = len(self.e_alive)
        self._n_verts = sum(1 for h in self.v_he if h >= 0)
        diag = bbox_diagonal(points) if len(points) else 0.0
        self.eps_area = 1e-12 * diag * diag

    # -- construction ---------------------------------------------------------

    def _new_edge(self, u, v):
        h = len(self.he_to)
        self.he_to += [v, u]
        self.he_next += [-1, -1]
        self.he_prev += [-1, -1]
        self.he_face += [-1, -1]
        self.e_alive.append(True)
        if hasattr(self, "_n_edges"):
            self._n_edges += 1
        return h

    def _build(self, faces):
        directed = {}
        n = self._nv
        for fi, f in enumerate(faces):
            if len(f) != 3:
                raise NonTriangularFacetError(fi, len(f))
            if len(set(f)) != 3:
                raise MeshError(f"facet {fi} repeats a vertex: {f}")
            for v in f:
                if not 0 <= v < n:
                    raise MeshError(f"facet {fi} references missing vertex {v}")
            hs = []
            for u, v in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
                if (u, v) in directed:
                    raise NonManifoldError(
                        f"edge ({u}, {v}) is shared by more than two facets or "
                        f"inconsistently oriented", edge=(u, v))
                if (v, u) in directed:
                    h = directed[(v, u)] ^ 1
                else:
                    h = self._new_edge(u, v)
                directed[(u, v)] = h
                hs.append(h)
            fid = len(self.f_he)
            self.f_he.append(hs[0])
            self.f_alive.append(True)
            for k in range(3):
                h = hs[k]
                self.he_face[h] = fid
                self.he_next[h] = hs[(k + 1) % 3]
                self.he_prev[h] = hs[(k + 2) % 3]

        boundary_out = {}
        for h in range(len(self.he_to)):
            if self.he_face[h] < 0:
                u = self.he_to[h ^ 1]
                if u in boundary_out:
                    raise NonManifoldError(
                        f"vertex {u} joins more than one boundary fan", vertex=u)
                boundary_out[u] = h
        for h in range(len(self.he_to)):
            if self.he_face[h] < 0:
                nxt = boundary_out[self.he_to[h]]
                self.he_next[h] = nxt
                self.he_prev[nxt] = h

        out_count = [0] * n
        for h in range(len(self.he_to)):
            u = self.he_to[h ^ 1]
            out_count[u] += 1
            if self.v_he[u] < 0 or self.he_face[h] < 0:
                self.v_he[u] = h
        for v in range(n):
            if self.v_he[v] < 0:
                continue
            if sum(1 for _ in self.outgoing(v, limit=out_count[v] + 1)) != out_count[v]:
                raise NonManifoldError(
                    f"vertex {v} has a non-manifold star (several fans)", vertex=v)

    def copy(self) -> "HalfedgeMesh":
        other = object.__new__(HalfedgeMesh)
        other._pos = self._pos.copy()
        other._nv = self._nv
        for name in ("v_he", "v_alive", "he_to", "he_next", "he_prev", "he_face",
                     "e_alive", "f_he", "f_alive"):
            setattr(other, name, list(getattr(self, name)))
        other.eps_area = self.eps_area
        other._n_faces, other._n_edges, other._n_verts = self._n_faces, self._n_edges, self._n_verts
        return other

    # -- element access -------------------------------------------------------

    @property
    def n_vertices(self):
        """Live vertices that belong to at least one edge."""
        return self._n_verts

    @property
    def n_faces(self):
        return self._n_faces

    @property
    def n_edges(self):
        return self._n_edges

    @property
    def vertex_capacity(self):
        """One past the largest vertex id ever allocated."""
        return self._nv

    @property
    def positions(self):
        return self._pos[: self._nv]

    def point(self, v):
        return self._pos[v]

    def vertices(self):
        return [v for v in range(self._nv) if self.v_alive[v] and self.v_he[v] >= 0]

    def faces(self):
        return [f for f, ok in enumerate(self.f_alive) if ok]

    def edges(self):
        """One representative halfedge (the even one) per live edge."""
        return [2 * e for e, ok in enumerate(self.e_alive) if ok]

    def live_points(self):
        return self._pos[self.vertices()]

    def from_vertex(self, h):
        return self.he_to[h ^ 1]

    def face_halfedges(self, f):
        h = self.f_he[f]
        n = self.he_next[h]
        return h, n, self.he_next[n]

    def face_vertices(self, f):
        h = self.f_he[f]
        n = self.he_next[h]
        return self.he_to[h ^ 1], self.he_to[h], self.he_to[n]

    def face_points(self, f):
        return self._pos[list(self.face_vertices(f))]

    def face_normal(self, f):
        p = self.face_points(f)
        return np.cross(p[1] - p[0], p[2] - p[0])

    def face_array(self, faces=None):
        faces = self.faces() if faces is None else faces
        return np.array([self.face_vertices(f) for f in faces], dtype=np.int64).reshape(-1, 3)

    def outgoing(self, v, limit=None):
        """Outgoing halfedges of v, rotating via next(opposite)."""
        start = self.v_he[v]
        if start < 0:
            return
        h = start
        steps = 0
        while True:
            yield h
            h = self.he_next[h ^ 1]
            steps += 1
            if h == start or (limit is not None and steps >= limit):
                return

    def vertex_faces(self, v):
        return [self.he_face[h] for h in self.outgoing(v) if self.he_face[h] >= 0]

    def vertex_neighbors(self, v):
        return [self.he_to[h] for h in self.outgoing(v)]

    def valence(self, v):
        return sum(1 for _ in self.outgoing(v))

    def is_boundary_vertex(self, v):
        h = self.v_he[v]
        return h >= 0 and self.he_face[h] < 0

    def is_boundary_edge(self, h):
        return self.he_face[h] < 0 or self.he_face[h ^ 1] < 0

    def find_halfedge(self, u, v):
        for h in self.outgoing(u):
            if self.he_to[h] == v:
                return h
        return -1

    def n_boundary_edges(self):
        return sum(1 for h in self.edges() if self.is_boundary_edge(h))

    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    def edge_length(self, h):
        return float(np.linalg.norm(self._pos[self.he_to[h]] - self._pos[self.he_to[h ^ 1]]))

    # -- raw local operators --------------------------------------------------

    def relocate_vertex(self, v, position):
        self._pos[v] = position

    def _adjust_outgoing(self, v):
        for h in self.outgoing(v):
            if self.he_face[h] < 0:
                self.v_he[v] = h
                return

    def link_condition(self, h):
        """lk(a) ∩ lk(b) == lk(ab) for the edge a = from(h), b = to(h)."""
        a, b = self.from_vertex(h), self.he_to[h]
        link_verts_a, link_edges_a = self._vertex_link(a)
        link_verts_b, link_edges_b = self._vertex_link(b)
        edge_link = set()
        for g in (h, h ^ 1):
            f = self.he_face[g]
            if f >= 0:
                edge_link.add(self.he_to[self.he_next[g]])
        if (link_verts_a & link_verts_b) != edge_link:
            return False
        return not (link_edges_a & link_edges_b)

    def _vertex_link(self, v):
        verts = set()
        edges = set()
        for h in self.outgoing(v):
            verts.add(self.he_to[h])
            if self.he_face[h] >= 0:
                x, y = self.he_to[h], self.he_to[self.he_next[h]]
                edges.add((x, y) if x < y else (y, x))
        return verts, edges

    def collapse_is_legal(self, h):
        """Link condition plus manifold-preserving boundary rules."""
        a, b = self.from_vertex(h), self.he_to[h]
        if not self.link_condition(h):
            return False
        if (self.is_boundary_vertex(a) and self.is_boundary_vertex(b)
                and not self.is_boundary_edge(h)):
            return False
        for g in (h, h ^ 1):
            f = self.he_face[g]
            if f < 0:
                continue
            n = self.he_next[g]
            # triangle hanging on the boundary by two edges would become a dangling edge
            if self.he_face[n ^ 1] < 0 and self.he_face[self.he_next[n] ^ 1] < 0:
                return False
        removed = sum(1 for g in (h, h ^ 1) if self.he_face[g] >= 0)
        return self.n_faces - removed >= 1

    def collapse_edge(self, h, position):
        """Merge from(h) into to(h), placing the survivor at ``position``.

        Returns the surviving vertex id.

        Raises
        ------
        CollapseRejected
            If the collapse would change topology; the mesh is untouched.
        """
        if not self.collapse_is_legal(h):
            raise CollapseRejected(f"collapse of edge {h >> 1} violates the link condition")
        o = h ^ 1
        hn, hp = self.he_next[h], self.he_prev[h]
        on, op = self.he_next[o], self.he_prev[o]
        fh, fo = self.he_face[h], self.he_face[o]
        vh, vo = self.he_to[h], self.he_to[o]

        for g in list(self.outgoing(vo)):
            self.he_to[g ^ 1] = vh
        self.he_next[hp] = hn
        self.he_prev[hn] = hp
        self.he_next[op] = on
        self.he_prev[on] = op
        if fh >= 0:
            self.f_he[fh] = hn
        if fo >= 0:
            self.f_he[fo] = on
        if self.v_he[vh] == o:
            self.v_he[vh] = hn
        self._adjust_outgoing(vh)
        self.v_he[vo] = -1
        self.v_alive[vo] = False
        self.e_alive[h >> 1] = False
        self._n_verts -= 1
        self._n_edges -= 1

        if self.he_next[self.he_next[hn]] == hn:
            self._collapse_loop(hn)
        if self.he_next[self.he_next[on]] == on:
            self._collapse_loop(on)
        self._pos[vh] = position
        return vh

    def _collapse_loop(self, h0):
        h1 = self.he_next[h0]
        o0, o1 = h0 ^ 1, h1 ^ 1
        v0, v1 = self.he_to[h0], self.he_to[h1]
        fh, fo = self.he_face[h0], self.he_face[o0]
        self.he_next[h1] = self.he_next[o0]
        self.he_prev[self.he_next[o0]] = h1
        self.he_next[self.he_prev[o0]] = h1
        self.he_prev[h1] = self.he_prev[o0]
        self.he_face[h1] = fo
        self.v_he[v0] = h1
        self._adjust_outgoing(v0)
        self.v_he[v1] = o1
        self._adjust_outgoing(v1)
        if fo >= 0 and self.f_he[fo] == o0:
            self.f_he[fo] = h1
        if fh >= 0:
            self.f_alive[fh] = False
            self._n_faces -= 1
        self.e_alive[h0 >> 1] = False
        self._n_edges -= 1

    def _new_vertex(self, position):
        if self._nv == len(self._pos):
            grown = np.zeros((max(16, 2 * len(self._pos)), 3))
            grown[: self._nv] = self._pos[: self._nv]
            self._pos = grown
        v = self._nv
        self._pos[v] = position
        self._nv += 1
        self.v_he.append(-1)
        self.v_alive.append(True)
        return v

    def _new_face(self, h):
        self.f_he.append(h)
        self.f_alive.append(True)
        self._n_faces += 1
        return len(self.f_he) - 1

    def split_edge(self, h, position):
        """Insert a vertex on edge h and connect it to the opposite apexes.

        Returns the new vertex id.
        """
        o = h ^ 1
        a, b = self.he_to[o], self.he_to[h]
        f0, f1 = self.he_face[h], self.he_face[o]
        hn, hp = self.he_next[h], self.he_prev[h]
        on, op = self.he_next[o], self.he_prev[o]
        m = self._new_vertex(position)
        self._n_verts += 1

        # a->m (h), m->b (g) on the h side; b->m (go), m->a (o) on the o side
        g = self._new_edge(m, b)
        go = g ^ 1
        self.he_to[h] = m
        self.he_next[h] = g
        self.he_prev[g] = h
        self.he_next[g] = hn
        self.he_prev[hn] = g
        self.he_face[g] = f0
        self.he_next[op], self.he_prev[go] = go, op
        self.he_next[go], self.he_prev[o] = o, go
        self.he_face[go] = f1

        if f0 >= 0:
            c = self.he_to[hn]
            k = self._new_edge(m, c)
            ko = k ^ 1
            f2 = self._new_face(g)
            self._link_face((h, k, hp), f0)
            self._link_face((g, hn, ko), f2)
        if f1 >= 0:
            d = self.he_to[on]
            j = self._new_edge(m, d)
            jo = j ^ 1
            f3 = self._new_face(go)
            self._link_face((o, on, jo), f1)
            self._link_face((go, j, op), f3)

        self.v_he[m] = g
        self._adjust_outgoing(m)
        if self.v_he[b] == o:
            self.v_he[b] = go
        self._adjust_outgoing(b)
        self._adjust_outgoing(a)
        return m

    def _link_face(self, hs, f):
        for k in range(3):
            self.he_next[hs[k]] = hs[(k + 1) % 3]
            self.he_prev[hs[k]] = hs[(k + 2) % 3]
            self.he_face[hs[k]] = f
        self.f_he[f] = hs[0]

    # -- diagnostics ----------------------------------------------------------

    def check_invariants(self):
        """Raise AssertionError on any broken connectivity invariant."""
        for e, ok in enumerate(self.e_alive):
            if not ok:
                continue
            for h in (2 * e, 2 * e + 1):
                assert self.he_next[self.he_prev[h]] == h, f"prev/next mismatch at {h}"
                assert self.he_prev[self.he_next[h]] == h, f"next/prev mismatch at {h}"
                assert self.v_alive[self.he_to[h]], f"halfedge {h} points to dead vertex"
                assert self.he_to[h] != self.he_to[h ^ 1], f"loop edge {e}"
                assert self.he_to[h ^ 1] == self.he_to[self.he_prev[h]], f"chain broken at {h}"
                f = self.he_face[h]
                if f >= 0:
                    assert self.f_alive[f], f"halfedge {h} on dead face {f}"
                    assert self.he_next[self.he_next[self.he_next[h]]] == h, f"face {f} not a triangle"
                    assert self.he_face[self.he_next[h]] == f
        seen = set()
        for f in self.faces():
            hs = self.face_halfedges(f)
            assert all(self.e_alive[g >> 1] for g in hs), f"face {f} uses a dead edge"
            assert all(self.he_face[g] == f for g in hs), f"face {f} halfedge mismatch"
        for e, ok in enumerate(self.e_alive):
            if ok:
                key = tuple(sorted((self.he_to[2 * e], self.he_to[2 * e + 1])))
                assert key not in seen, f"duplicate edge {key}"
                seen.add(key)
        counts = {}
        for e, ok in enumerate(self.e_alive):
            if ok:
                for h in (2 * e, 2 * e + 1):
                    u = self.he_to[h ^ 1]
                    counts[u] = counts.get(u, 0) + 1
        for v in range(self._nv):
            if not self.v_alive[v] or self.v_he[v] < 0:
                assert counts.get(v, 0) == 0 or not self.v_alive[v], f"vertex {v} lost its halfedge"
                continue
            h = self.v_he[v]
            assert self.e_alive[h >> 1] and self.he_to[h ^ 1] == v, f"bad v_he at {v}"
            star = list(self.outgoing(v, limit=counts.get(v, 0) + 1))
            assert len(star) == counts.get(v, 0), f"vertex {v} star is not a single fan"
            has_boundary = any(self.he_face[g] < 0 for g in star)
            assert has_boundary == (self.he_face[h] < 0), f"vertex {v} boundary halfedge not first"

    # -- export ---------------------------------------------------------------

    def to_arrays(self):
        """Compact copy -> (points (n, 3), faces (m, 3), old vertex ids)."""
        verts = self.vertices()
        remap = {v: i for i, v in enumerate(verts)}
        faces = np.array([[remap[v] for v in self.face_vertices(f)] for f in self.faces()],
                         dtype=np.int64).reshape(-1, 3)
        return self._pos[verts].copy(), faces, np.array(verts, dtype=np.int64)

    def compacted(self) -> "HalfedgeMesh":
        pts, faces, _ = self.to_arrays()
        out = HalfedgeMesh(pts, faces)
        out.eps_area = self.eps_area
        return out


# -- module-level operator API -------------------------------------------------

def link_condition(mesh: HalfedgeMesh, h: int) -> bool:
    return mesh.link_condition(h)


def collapse_edge(mesh: HalfedgeMesh, h: int, new_position) -> int:
    return mesh.collapse_edge(h, np.asarray(new_position, dtype=float))


def split_edge(mesh: HalfedgeMesh, h: int, new_position) -> int:
    return mesh.split_edge(h, np.asarray(new_position, dtype=float))


def relocate_vertex(mesh: HalfedgeMesh, v: int, new_position) -> None:
    mesh.relocate_vertex(v, np.asarray(new_position, dtype=float))


@dataclass
class LocalPatch:
    """Inner facets L and the enlarged patch L+ (L plus one ring)."""

    inner: list[int]
    outer: list[int]

    @property
    def enlarged(self):
        return self.inner + self.outer


def local_patch(mesh: HalfedgeMesh, seed_vertices) -> LocalPatch:
    inner = _faces_around(mesh, seed_vertices)
    inner_set = set(inner)
    ring_vertices = {v for f in inner for v in mesh.face_vertices(f)}
    outer = [f for f in _faces_around(mesh, sorted(ring_vertices)) if f not in inner_set]
    return LocalPatch(inner, outer)


def _faces_around(mesh, vertices):
    seen = set()
    out = []
    for v in vertices:
        for f in mesh.vertex_faces(v):
            if f not in seen:
                seen.add(f)
                out.append(f)
    return out


# -- simulated operations ------------------------------------------------------

@dataclass
class LocalOp:
    """A planned collapse / relocate / split, described without mutating the mesh.

    ``faces`` are the post-operation inner facets as oriented vertex triples;
    ``moved`` is the vertex whose position ``position`` sets (for a split, the
    id the new vertex will receive). ``parents[i]`` is the pre-operation facet
    that post facet i replaces, used for fold-over tests.
    """

    kind: str
    handle: int
    moved: int
    faces: list[tuple[int, int, int]]
    parents: list[int]
    inner_before: list[int]
    outer: list[int]
    position: np.ndarray
    removed_vertex: int = -1
    endpoints: tuple[int, int] = (-1, -1)
    extra: dict = field(default_factory=dict)

    def face_array(self):
        return np.array(self.faces, dtype=np.int64).reshape(-1, 3)

    def coords(self, mesh: HalfedgeMesh, position=None, triples=None):
        """Post-operation coordinates of ``triples`` (default: the inner facets)."""
        pos = self.position if position is None else position
        tri = self.face_array() if triples is None else np.asarray(triples, dtype=np.int64).reshape(-1, 3)
        safe = np.minimum(tri, mesh.vertex_capacity - 1)
        out = mesh._pos[safe]
        out[tri == self.moved] = pos
        return out

    def outer_triples(self, mesh):
        return [mesh.face_vertices(f) for f in self.outer]


def _outer_ring(mesh, post_vertices, inner_before):
    inner = set(inner_before)
    return [f for f in _faces_around(mesh, post_vertices) if f not in inner]


def plan_relocate(mesh: HalfedgeMesh, v: int, position=None) -> LocalOp:
    inner = mesh.vertex_faces(v)
    triples = [mesh.face_vertices(f) for f in inner]
    verts = sorted({u for t in triples for u in t})
    pos = mesh.point(v).copy() if position is None else np.asarray(position, dtype=float)
    return LocalOp("relocate", v, v, triples, list(inner), list(inner),
                   _outer_ring(mesh, verts, inner), pos)


def plan_collapse(mesh: HalfedgeMesh, h: int, position=None) -> LocalOp:
    """Collapse from(h) into to(h)."""
    a, b = mesh.from_vertex(h), mesh.he_to[h]
    removed = {mesh.he_face[h], mesh.he_face[h ^ 1]} - {-1}
    inner = _faces_around(mesh, (a, b))
    triples, parents = [], []
    for f in inner:
        if f in removed:
            continue
        triples.append(tuple(b if u == a else u for u in mesh.face_vertices(f)))
        parents.append(f)
    verts = sorted({u for t in triples for u in t} | {b})
    pos = 0.5 * (mesh.point(a) + mesh.point(b)) if position is None else np.asarray(position, dtype=float)
    return LocalOp("collapse", h, b, triples, parents, inner,
                   _outer_ring(mesh, [u for u in verts if u != b] + [a, b], inner), pos,
                   removed_vertex=a, endpoints=(a, b))


def plan_split(mesh: HalfedgeMesh, h: int, position=None) -> LocalOp:
    a, b = mesh.from_vertex(h), mesh.he_to[h]
    m = mesh.vertex_capacity
    triples, parents, inner = [], [], []
    f0, f1 = mesh.he_face[h], mesh.he_face[h ^ 1]
    if f0 >= 0:
        c = mesh.he_to[mesh.he_next[h]]
        triples += [(a, m, c), (m, b, c)]
        parents += [f0, f0]
        inner.append(f0)
    if f1 >= 0:
        d = mesh.he_to[mesh.he_next[h ^ 1]]
        triples += [(m, a, d), (b, m, d)]
        parents += [f1, f1]
        inner.append(f1)
    verts = sorted({u for t in triples for u in t if u != m})
    pos = 0.5 * (mesh.point(a) + mesh.point(b)) if position is None else np.asarray(position, dtype=float)
    return LocalOp("split", h, m, triples, parents, inner,
                   _outer_ring(mesh, verts, inner), pos, endpoints=(a, b))


def creates_foldover(mesh: HalfedgeMesh, op: LocalOp, target_position=None) -> bool:
    """True if any post-operation facet flips its normal or degenerates."""
    after = triangle_normals(op.coords(mesh, target_position))
    before = triangle_normals(mesh._pos[mesh.face_array(op.parents)])
    area2 = np.linalg.norm(after, axis=1)
    if np.any(0.5 * area2 < mesh.eps_area):
        return True
    return bool(np.any(np.einsum("ij,ij->i", before, after) < 0.0))


def apply_op(mesh: HalfedgeMesh, op: LocalOp) -> int:
    """Execute a planned operation; returns the moved/surviving/new vertex id."""
    if op.kind == "relocate":
        mesh.relocate_vertex(op.moved, op.position)
        return op.moved
    if op.kind == "collapse":
        return mesh.collapse_edge(op.handle, op.position)
    if op.kind == "split":
        v = mesh.split_edge(op.handle, op.position)
        assert v == op.moved
        return v
    raise ValueError(f"unknown operation {op.kind!r}")
