"""Feature-aware vertex placement.

A vertex position is first initialised from its feature class (snap to
features, slide along creases, centre in smooth regions), then refined by
a few reweighted least-squares steps on frozen closest-point pairs that
approximate minimising the local two-sided Hausdorff distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeatureField, VertexKind, classify_vertex
from .fidelity import FidelityState, relink_patch, sample_post_patch
from .geometry import triangle_areas
from .mesh import HalfedgeMesh, LocalOp

EPS_WEIGHT = 1e-3


class UnconstrainedVertexError(ValueError):
    """No pair constrains the vertex (all barycentric coefficients vanish)."""


def init_collapse_position(mesh: HalfedgeMesh, field: FeatureField, vi, vj, omega=0.15):
    """Midpoint for endpoints of similar intensity, else the stronger endpoint."""
    fi, fj = field.F[vi], field.F[vj]
    if abs(fi - fj) < omega * max(fi, fj) or fi == fj:
        return 0.5 * (mesh.point(vi) + mesh.point(vj))
    return mesh.point(vi if fi > fj else vj).copy()


def init_split_position(mesh: HalfedgeMesh, h):
    return 0.5 * (mesh.point(mesh.from_vertex(h)) + mesh.point(mesh.he_to[h]))


def one_ring_centroid(mesh: HalfedgeMesh, v):
    faces = mesh.vertex_faces(v)
    tris = mesh._pos[mesh.face_array(faces)]
    a = triangle_areas(tris)
    c = tris.mean(axis=1)
    if a.sum() <= 0.0:
        return c.mean(axis=0)
    return (a[:, None] * c).sum(axis=0) / a.sum()


def init_relocation_position(mesh: HalfedgeMesh, field: FeatureField, v, zeta=0.5):
    cls = classify_vertex(mesh, field, v, zeta)
    if cls.kind is VertexKind.FEATURE:
        return mesh.point(v).copy()
    if cls.kind is VertexKind.CREASE:
        a, b = cls.crease_neighbors
        return 0.5 * (mesh.point(a) + mesh.point(b))
    return one_ring_centroid(mesh, v)


@dataclass
class ClosestPointPairs:
    """Frozen pairs: residual of pair i is alpha[i] * v - p[i]."""

    alpha: np.ndarray
    p: np.ndarray
    dist: np.ndarray
    area: np.ndarray
    intensity: np.ndarray
    outward: np.ndarray

    def __len__(self):
        return len(self.alpha)

    @classmethod
    def concat(cls, parts):
        return cls(*(np.concatenate([getattr(q, k) for q in parts]) for k in
                     ("alpha", "p", "dist", "area", "intensity", "outward")))


def optimal_position(pairs: ClosestPointPairs, weights=None):
    """Closed-form minimiser of sum w_i |alpha_i v - p_i|^2."""
    w = np.ones(len(pairs)) if weights is None else np.asarray(weights, dtype=float)
    den = float(np.sum(w * pairs.alpha ** 2))
    if not den > 1e-14 * max(float(np.sum(w)), 1e-300):
        raise UnconstrainedVertexError("vertex is not constrained by any pair")
    return (w * pairs.alpha) @ pairs.p / den


def lawson_update(pairs: ClosestPointPairs, weights=None, use_features=True, eps=EPS_WEIGHT):
    """One multiplicative reweighting step.

    Plain Lawson scales by the pair distance; the feature variant also
    scales by the (mean-normalised) cell area and the interpolated feature
    intensity plus ``eps``. Weights are rescaled to a maximum of 1. When
    every factor vanishes (all pairs exact) the previous weights are kept.
    """
    w = np.ones(len(pairs)) if weights is None else np.asarray(weights, dtype=float)
    factor = pairs.dist.copy()
    if use_features:
        mean_area = pairs.area.mean() if len(pairs) else 1.0
        area = pairs.area / mean_area if mean_area > 0 else np.ones(len(pairs))
        factor *= area * (pairs.intensity + eps)
    new = w * factor
    top = new.max() if len(new) else 0.0
    if not top > 0.0 or not np.isfinite(top):
        return w.copy()
    return new / top


def interpolate_intensity(bary, vertex_values):
    """Linear interpolation of per-vertex values (rows: facet corners)."""
    return np.einsum("ij,ij->i", np.asarray(bary, dtype=float), np.asarray(vertex_values, dtype=float))


@dataclass
class RelocationContext:
    state: FidelityState
    mesh: HalfedgeMesh
    field: FeatureField
    input_intensity: np.ndarray  # feature intensity at each input sample


def moved_intensity(field: FeatureField, op: LocalOp):
    if op.kind == "collapse":
        a, b = op.endpoints
        return max(field.F[a], field.F[b])
    if op.kind == "split":
        a, b = op.endpoints
        return 0.5 * (field.F[a] + field.F[b])
    return field.F[op.moved]


def _corner_index(triples, moved):
    hit = triples == moved
    k = np.argmax(hit, axis=1)
    return k, hit.any(axis=1)


def build_pairs(ctx: RelocationContext, op: LocalOp, position):
    """Closest-point pairs of the moving vertex at ``position``."""
    patch = sample_post_patch(ctx.state, ctx.mesh, op, position)
    n_in = patch.n_inner
    triples = patch.triples
    tris = patch.tris
    k, has = _corner_index(triples, op.moved)

    s = patch.samples
    host = s.face
    alpha = s.bary[np.arange(len(s)), k[host]] * has[host]
    rest = np.einsum("ij,ijk->ik", s.bary, tris[host]) - alpha[:, None] * tris[host, k[host]]
    fv = ctx.field.F[np.minimum(triples[:n_in], len(ctx.field.F) - 1)].astype(float)
    fv[triples[:n_in] == op.moved] = moved_intensity(ctx.field, op)
    out = ClosestPointPairs(alpha, patch.foot - rest, patch.dist, s.area,
                            interpolate_intensity(s.bary, fv[host]), np.ones(len(s), bool))

    rl = relink_patch(ctx.state, op, tris)
    keep = rl.face < n_in
    rows = rl.face[keep]
    ids = rl.ids[keep]
    bary = rl.bary[keep]
    a_in = bary[np.arange(len(rows)), k[rows]] * has[rows]
    rest_in = rl.point[keep] - a_in[:, None] * tris[rows, k[rows]]
    b = ctx.state.input_samples.points[ids]
    inward = ClosestPointPairs(a_in, b - rest_in, rl.dist[keep], ctx.state.input_samples.area[ids],
                               ctx.input_intensity[ids], np.zeros(len(ids), bool))
    return ClosestPointPairs.concat([out, inward])


def minimize_vertex(ctx: RelocationContext, op: LocalOp, iterations=2, lam=0.9,
                    weighting="feature", position=None):
    """Damped reweighted least-squares refinement of the moving vertex.

    Each iteration refreshes the closest-point pairs at the current
    position, applies one reweighting step from unit weights, solves for
    the optimum and moves by ``lam`` of the way there. Returns the final
    position; the mesh is not modified.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not 0.0 < lam <= 1.0:
        raise ValueError("lam must lie in (0, 1]")
    x = np.array(op.position if position is None else position, dtype=float)
    for _ in range(iterations):
        pairs = build_pairs(ctx, op, x)
        if weighting == "uniform":
            w = np.ones(len(pairs))
        else:
            w = lawson_update(pairs, use_features=(weighting == "feature"))
        try:
            target = optimal_position(pairs, w)
        except UnconstrainedVertexError:
            break
        x = x + lam * (target - x)
    return x
