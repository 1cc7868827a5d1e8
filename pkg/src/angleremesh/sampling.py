"""Stratified surface sampling: quasi-uniform facet samples (Lloyd relaxation
on the bounded Voronoi diagram of each triangle), edge samples whose count
follows the incident Voronoi cells, and one sample per vertex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import triangle_areas

VERTEX, EDGE, FACET = 0, 1, 2
LLOYD_ITERATIONS = 5
CLIP_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SamplePoint:
    position: np.ndarray
    kind: int
    host: int
    bary: np.ndarray
    voronoi_area: float


@dataclass
class SampleSet:
    """Struct-of-arrays sample set. ``face`` holds the host facet of every
    sample: a mesh facet id, or a row index into the sampled patch."""

    points: np.ndarray
    kind: np.ndarray
    face: np.ndarray
    bary: np.ndarray
    area: np.ndarray
    seed: int = 0

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i) -> SamplePoint:
        return SamplePoint(self.points[i], int(self.kind[i]), int(self.face[i]),
                           self.bary[i], float(self.area[i]))

    @classmethod
    def empty(cls, seed=0):
        return cls(np.zeros((0, 3)), np.zeros(0, np.int8), np.zeros(0, np.int64),
                   np.zeros((0, 3)), np.zeros(0), seed)


def facet_sample_count(area, neighbor_areas, n_f):
    """Density-smoothed sample count of one facet, at least 1."""
    neighbor_areas = np.asarray(neighbor_areas, dtype=float)
    if area <= 0.0:
        return 1
    n = n_f * (1 + len(neighbor_areas)) / (1.0 + float(np.sum(neighbor_areas)) / area)
    return max(1, int(np.floor(n + 0.5)))


def facet_keys(triples, seed):
    """RNG keys: global seed plus the sorted vertex ids of each facet, so a
    facet resampled later (same vertices) draws the same random sites."""
    t = np.sort(np.asarray(triples, dtype=np.int64).reshape(-1, 3), axis=1)
    keys = np.empty((len(t), 4), dtype=np.uint64)
    keys[:, 0] = np.uint64(seed & 0x7FFFFFFFFFFFFFFF)
    keys[:, 1:] = t.astype(np.uint64)
    return keys


def sample_facet(p0, p1, p2, n, seed=0, key=(0, 1, 2), iterations=LLOYD_ITERATIONS):
    """n Lloyd-relaxed samples on one triangle.

    Returns (points (n, 3), bary (n, 3), cell areas (n,), edge-touch lengths (n, 3)).
    """
    if n < 1:
        raise ValueError("need at least one sample")
    tri = np.array([p0, p1, p2], dtype=float)[None]
    owner, bary, area, touch = _kernels.sample_triangles(
        tri, np.array([n], dtype=np.int64), facet_keys([key], seed), iterations, CLIP_TOLERANCE)
    return bary @ tri[0], bary, area, touch


def _neighbor_area_sums(triples, areas, n_target):
    """For the first n_target facets: (#vertex-sharing neighbours, sum of their areas)."""
    by_vertex = {}
    for i, t in enumerate(triples):
        for v in t:
            by_vertex.setdefault(v, []).append(i)
    counts = np.zeros(n_target, dtype=np.int64)
    sums = np.zeros(n_target)
    for i in range(n_target):
        nb = set()
        for v in triples[i]:
            nb.update(by_vertex[v])
        nb.discard(i)
        counts[i] = len(nb)
        sums[i] = areas[list(nb)].sum() if nb else 0.0
    return counts, sums


def sample_counts(triples, tris, n_f, n_target=None, areas=None):
    """Per-facet sample counts for the first ``n_target`` facets; the rest
    only contribute neighbour areas."""
    n_target = len(triples) if n_target is None else n_target
    areas = triangle_areas(tris) if areas is None else areas
    counts, sums = _neighbor_area_sums(triples, areas, n_target)
    out = np.ones(n_target, dtype=np.int64)
    a = areas[:n_target]
    ok = a > 0
    raw = n_f * (1.0 + counts[ok]) / (1.0 + sums[ok] / a[ok])
    out[ok] = np.maximum(1, np.floor(raw + 0.5).astype(np.int64))
    return out


def _edge_key(u, v):
    return (u, v) if u < v else (v, u)


def sample_edges(triples, tris, owner, facet_area, touch, outside_touch=None, tol=None):
    """Edge samples from the Voronoi cells touching each edge.

    ``outside_touch`` maps an edge key to the number of cells contributed by
    a facet that is not part of this batch (patch border edges).

    Returns (points, host facet index, bary, area) and the per-facet,
    per-local-edge touching-cell counts.
    """
    m = len(triples)
    face_touch = np.zeros((m, 3), dtype=np.int64)
    cell_areas = [[[], [], []] for _ in range(m)]
    lengths = np.stack([np.linalg.norm(tris[:, (e + 1) % 3] - tris[:, e], axis=1) for e in range(3)], axis=1)
    for s in range(len(owner)):
        f = owner[s]
        for e in range(3):
            if touch[s, e] > CLIP_TOLERANCE * max(lengths[f, e], 1e-300):
                face_touch[f, e] += 1
                cell_areas[f][e].append(facet_area[s])
    per_edge = {}
    order = []
    for f in range(m):
        t = triples[f]
        for e in range(3):
            key = _edge_key(t[e], t[(e + 1) % 3])
            if key not in per_edge:
                per_edge[key] = [f, e, 0, []]
                order.append(key)
            rec = per_edge[key]
            rec[2] += face_touch[f, e]
            rec[3] += cell_areas[f][e]
    pts, host, bary, area = [], [], [], []
    for key in order:
        f, e, count, areas = per_edge[key]
        if outside_touch is not None:
            count += outside_touch.get(key, 0)
        if count <= 0:
            continue
        length = lengths[f, e]
        width = np.sqrt(np.mean(areas)) if areas else 0.0
        w = length / count * width
        for k in range(1, count + 1):
            s = k / (count + 1)
            b = np.zeros(3)
            b[e] = 1.0 - s
            b[(e + 1) % 3] = s
            pts.append(b @ tris[f])
            host.append(f)
            bary.append(b)
            area.append(w)
    if not pts:
        return (np.zeros((0, 3)), np.zeros(0, np.int64), np.zeros((0, 3)), np.zeros(0)), face_touch
    return (np.array(pts), np.array(host, dtype=np.int64), np.array(bary), np.array(area)), face_touch


def sample_patch(triples, tris, n_f, seed, n_target=None, context_touch=None,
                 iterations=LLOYD_ITERATIONS):
    """Stratified samples on the first ``n_target`` facets of a facet list.

    Facets past ``n_target`` are context only: they enter the density
    smoothing of the counts and, via ``context_touch`` ((n_context, 3)
    touching-cell counts per local edge), the edge-sample counts of the
    edges they share with sampled facets. Hosts are row indices into
    ``triples``.

    Returns (SampleSet, per-facet edge-touch counts of the sampled facets).
    """
    vids = np.ascontiguousarray(triples, dtype=np.int64).reshape(-1, 3)
    tris = np.ascontiguousarray(tris, dtype=float).reshape(-1, 3, 3)
    n_target = len(vids) if n_target is None else n_target
    if n_target == 0:
        return SampleSet.empty(seed), np.zeros((0, 3), dtype=np.int64)
    if context_touch is None:
        context_touch = np.zeros((len(vids) - n_target, 3), dtype=np.int64)
    pts, kind, host, bary, area, face_touch = _kernels.stratify_patch(
        tris, vids, n_target, float(n_f), seed & 0x7FFFFFFFFFFFFFFF,
        np.ascontiguousarray(context_touch, dtype=np.int64), iterations, CLIP_TOLERANCE)
    return SampleSet(pts, kind, host, bary, area, seed), face_touch


def sample_patch_reference(triples, tris, n_f, seed, n_target=None, outside_touch=None,
                           iterations=LLOYD_ITERATIONS, counts=None):
    """Pure-Python twin of :func:`sample_patch` (slow; used to cross-check
    the compiled path). ``outside_touch`` maps edge keys to cell counts."""
    triples = [tuple(int(x) for x in t) for t in triples]
    tris = np.ascontiguousarray(tris, dtype=float).reshape(-1, 3, 3)
    n_target = len(triples) if n_target is None else n_target
    if n_target == 0:
        return SampleSet.empty(seed), np.zeros((0, 3), dtype=np.int64)
    if counts is None:
        counts = sample_counts(triples, tris, n_f, n_target)
    target = np.ascontiguousarray(tris[:n_target])
    owner, fbary, farea, touch = _kernels.sample_triangles(
        target, counts, facet_keys(triples[:n_target], seed), iterations, CLIP_TOLERANCE)
    fpts = np.einsum("ij,ijk->ik", fbary, target[owner])

    (epts, ehost, ebary, earea), face_touch = sample_edges(
        triples[:n_target], target, owner, farea, touch, outside_touch)

    mean_cell = np.bincount(owner, weights=farea, minlength=n_target) / counts
    vpts, vhost, vbary, varea = [], [], [], []
    seen = set()
    for f in range(n_target):
        for k, v in enumerate(triples[f]):
            if v in seen:
                continue
            seen.add(v)
            b = np.zeros(3)
            b[k] = 1.0
            vpts.append(target[f, k])
            vhost.append(f)
            vbary.append(b)
            varea.append(mean_cell[f])

    nv, ne, nfa = len(vpts), len(epts), len(fpts)
    points = np.concatenate([np.array(vpts).reshape(-1, 3), epts, fpts])
    kind = np.concatenate([np.full(nv, VERTEX, np.int8), np.full(ne, EDGE, np.int8),
                           np.full(nfa, FACET, np.int8)])
    face = np.concatenate([np.array(vhost, dtype=np.int64), ehost, owner])
    bary = np.concatenate([np.array(vbary).reshape(-1, 3), ebary, fbary])
    area = np.concatenate([np.array(varea), earea, farea])
    return SampleSet(points, kind, face, bary, area, seed), face_touch


def stratified_sample(mesh, n_f=10, seed=0, iterations=LLOYD_ITERATIONS):
    """Stratified samples over a whole mesh; hosts are mesh facet ids."""
    faces = mesh.faces()
    triples = [mesh.face_vertices(f) for f in faces]
    tris = mesh.positions[np.array(triples, dtype=np.int64).reshape(-1, 3)]
    samples, _ = sample_patch(triples, tris, n_f, seed, iterations=iterations)
    samples.face = np.asarray(faces, dtype=np.int64)[samples.face]
    return samples
