"""Two-sided Hausdorff bookkeeping between the input mesh and the working mesh.

Input-mesh samples keep a link (closest facet, point, distance) into the
working mesh; working-mesh samples are stored per facet with their distance
to the input mesh. A local operation resamples its inner patch (checked
against a static tree over the input) and re-links only the input samples
that pointed into the enlarged patch, so stored in-direction distances can
only over-estimate the true ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import AabbTree, brute_force_closest
from .mesh import HalfedgeMesh, LocalOp, apply_op
from .sampling import SampleSet, sample_patch, stratified_sample


@dataclass
class FaceSamples:
    """Working-mesh samples hosted by one facet, as sampled."""

    triple: tuple
    points: np.ndarray
    dist: np.ndarray
    touch: np.ndarray  # cells touching each local edge of ``triple``

    @property
    def max_dist(self):
        return float(self.dist.max()) if len(self.dist) else 0.0


@dataclass
class FidelityState:
    input_tris: np.ndarray
    input_tree: AabbTree
    input_samples: SampleSet
    link_face: np.ndarray
    link_point: np.ndarray
    link_dist: np.ndarray
    link_bary: np.ndarray
    face_links: dict
    working: dict
    delta_abs: float
    n_f: float
    seed: int
    stats: dict = field(default_factory=lambda: {"simulations": 0, "commits": 0})

    def linked_into(self, faces):
        ids = set()
        for f in faces:
            s = self.face_links.get(f)
            if s:
                ids |= s
        return np.array(sorted(ids), dtype=np.int64)

    def context_touch(self, faces, triples):
        """Touching-cell counts on each local edge of ``triples`` (current
        vertex order) from the stored samples of ``faces``."""
        out = np.zeros((len(faces), 3), dtype=np.int64)
        for j, (f, t) in enumerate(zip(faces, triples)):
            rec = self.working.get(f)
            if rec is None:
                continue
            st = rec.triple
            for e in range(3):
                for k in range(3):
                    if st[k] == t[e] and st[(k + 1) % 3] == t[(e + 1) % 3]:
                        out[j, e] = rec.touch[k]
        return out


def _group_by_host(samples: SampleSet, dist, face_touch, triples, face_ids):
    order = np.argsort(samples.face, kind="stable")
    hosts = samples.face[order]
    bounds = np.searchsorted(hosts, np.arange(len(triples) + 1))
    out = {}
    for i, f in enumerate(face_ids):
        idx = order[bounds[i]:bounds[i + 1]]
        out[f] = FaceSamples(tuple(int(x) for x in triples[i]), samples.points[idx],
                             dist[idx], face_touch[i].copy())
    return out


def init_fidelity(mesh_in: HalfedgeMesh, mesh_r: HalfedgeMesh, n_f=10, seed=0,
                  delta_abs=math.inf) -> FidelityState:
    """Sample both meshes and link every sample exactly against the other mesh."""
    in_faces = mesh_in.faces()
    if not in_faces or not mesh_r.faces():
        raise ValueError("fidelity needs non-empty meshes on both sides")
    input_tris = mesh_in._pos[mesh_in.face_array(in_faces)]
    tree_in = AabbTree(input_tris, in_faces)
    s_in = stratified_sample(mesh_in, n_f, seed)
    if len(s_in) == 0:
        raise ValueError("empty input sample set")

    r_faces = mesh_r.faces()
    r_triples = mesh_r.face_array(r_faces)
    r_tris = mesh_r._pos[r_triples]
    hit = AabbTree(r_tris, r_faces).query(s_in.points)
    face_links = {}
    for i, f in enumerate(hit.face.tolist()):
        face_links.setdefault(f, set()).add(i)

    s_r, touch = sample_patch(r_triples, r_tris, n_f, seed)
    d_r = tree_in.query(s_r.points).distance
    working = _group_by_host(s_r, d_r, touch, r_triples, r_faces)
    return FidelityState(input_tris, tree_in, s_in, hit.face.copy(), hit.point.copy(),
                         hit.distance.copy(), hit.bary.copy(), face_links, working,
                         float(delta_abs), n_f, seed)


def approx_hausdorff(state: FidelityState) -> float:
    """Max of the two directional sample maxima."""
    d_in = float(state.link_dist.max()) if len(state.link_dist) else 0.0
    d_out = max((rec.max_dist for rec in state.working.values()), default=0.0)
    return max(d_in, d_out)


def directional_maxima(state: FidelityState):
    d_in = float(state.link_dist.max()) if len(state.link_dist) else 0.0
    d_out = max((rec.max_dist for rec in state.working.values()), default=0.0)
    return d_out, d_in


@dataclass
class PatchSamples:
    """Samples of a post-operation inner patch and their closest points on the input."""

    triples: np.ndarray
    tris: np.ndarray
    n_inner: int
    samples: SampleSet
    face_touch: np.ndarray
    foot: np.ndarray
    dist: np.ndarray


@dataclass
class Relinked:
    """Input samples that pointed into the enlarged patch, re-linked to it."""

    ids: np.ndarray
    face: np.ndarray  # row into the post-operation triples
    point: np.ndarray
    dist: np.ndarray
    bary: np.ndarray


@dataclass
class SimulationResult:
    ok: bool
    position: np.ndarray
    out_max: float
    in_max: float
    patch: PatchSamples | None = None
    relinked: Relinked | None = None
    violation: dict | None = None


def post_patch(state: FidelityState, mesh: HalfedgeMesh, op: LocalOp, position=None):
    """Post-operation triples and coordinates of L followed by the outer ring."""
    outer_triples = op.outer_triples(mesh)
    triples = np.array(list(op.faces) + outer_triples, dtype=np.int64).reshape(-1, 3)
    tris = op.coords(mesh, position, triples)
    return triples, tris, outer_triples


def sample_post_patch(state: FidelityState, mesh: HalfedgeMesh, op: LocalOp, position=None):
    triples, tris, outer_triples = post_patch(state, mesh, op, position)
    ctx = state.context_touch(op.outer, outer_triples)
    n_inner = len(op.faces)
    samples, touch = sample_patch(triples, tris, state.n_f, state.seed, n_target=n_inner,
                                  context_touch=ctx)
    hit = state.input_tree.query(samples.points)
    return PatchSamples(triples, tris, n_inner, samples, touch, hit.point, hit.distance)


def relink_patch(state: FidelityState, op: LocalOp, tris) -> Relinked:
    ids = state.linked_into(list(op.inner_before) + list(op.outer))
    if len(ids) == 0:
        return Relinked(ids, np.zeros(0, np.int64), np.zeros((0, 3)), np.zeros(0), np.zeros((0, 3)))
    hit = brute_force_closest(tris, state.input_samples.points[ids])
    return Relinked(ids, hit.face, hit.point, hit.distance, hit.bary)


def simulate_operation_fidelity(state: FidelityState, mesh: HalfedgeMesh, op: LocalOp,
                                position=None, early_exit=True) -> SimulationResult:
    """Check a planned operation against the error bound without mutating anything.

    The out direction resamples the post-operation inner patch and queries
    the input tree; the in direction re-links the input samples that pointed
    into the enlarged patch against its post-operation facets.
    """
    state.stats["simulations"] += 1
    pos = op.position if position is None else np.asarray(position, dtype=float)
    patch = sample_post_patch(state, mesh, op, pos)
    out_max = float(patch.dist.max()) if len(patch.dist) else 0.0
    if out_max > state.delta_abs:
        i = int(np.argmax(patch.dist))
        violation = {"direction": "out", "sample": i, "distance": out_max,
                     "excess": out_max - state.delta_abs}
        if early_exit:
            return SimulationResult(False, pos, out_max, math.nan, patch, None, violation)
    relinked = relink_patch(state, op, patch.tris)
    in_max = float(relinked.dist.max()) if len(relinked.dist) else 0.0
    ok = out_max <= state.delta_abs and in_max <= state.delta_abs
    violation = None
    if out_max > state.delta_abs:
        i = int(np.argmax(patch.dist))
        violation = {"direction": "out", "sample": i, "distance": out_max,
                     "excess": out_max - state.delta_abs}
    elif in_max > state.delta_abs:
        i = int(np.argmax(relinked.dist))
        violation = {"direction": "in", "sample": int(relinked.ids[i]), "distance": in_max,
                     "excess": in_max - state.delta_abs}
    return SimulationResult(ok, pos, out_max, in_max, patch, relinked, violation)


def _post_face_ids(mesh: HalfedgeMesh, v: int, op: LocalOp):
    by_key = {tuple(sorted(mesh.face_vertices(f))): f for f in mesh.vertex_faces(v)}
    ids = []
    for t in op.faces:
        f = by_key.get(tuple(sorted(t)))
        if f is None:
            raise RuntimeError("post-operation facet not found after commit")
        ids.append(f)
    return ids


def commit_operation(state: FidelityState, mesh: HalfedgeMesh, op: LocalOp,
                     result: SimulationResult) -> int:
    """Apply the operation and splice the simulated samples and links in."""
    if result.relinked is None:
        raise ValueError("cannot commit an incomplete simulation")
    op.position = result.position
    v = apply_op(mesh, op)
    inner_ids = _post_face_ids(mesh, v, op)
    all_ids = np.array(inner_ids + list(op.outer), dtype=np.int64)

    for f in op.inner_before:
        state.working.pop(f, None)
    patch = result.patch
    state.working.update(_group_by_host(patch.samples, patch.dist, patch.face_touch,
                                        patch.triples[:patch.n_inner], inner_ids))

    for f in list(op.inner_before) + list(op.outer):
        state.face_links.pop(f, None)
    rl = result.relinked
    if len(rl.ids):
        new_face = all_ids[rl.face]
        state.link_face[rl.ids] = new_face
        state.link_point[rl.ids] = rl.point
        state.link_dist[rl.ids] = rl.dist
        state.link_bary[rl.ids] = rl.bary
        for i, f in zip(rl.ids.tolist(), new_face.tolist()):
            state.face_links.setdefault(f, set()).add(i)
    state.stats["commits"] += 1
    return v


def global_relink(state: FidelityState, mesh: HalfedgeMesh):
    """Exact closest facets of all input samples on the current working mesh."""
    faces = mesh.faces()
    tris = mesh._pos[mesh.face_array(faces)]
    return AabbTree(tris, faces).query(state.input_samples.points)


# -- brute-force dense oracle -------------------------------------------------

@dataclass(frozen=True)
class OracleResult:
    hausdorff: float
    rms: float
    forward: float  # max over samples of A to B
    backward: float  # max over samples of B to A
    rms_forward: float
    rms_backward: float

    def __iter__(self):
        return iter((self.hausdorff, self.rms))


def dense_samples(tris, density, rng):
    """Uniform random facet samples plus vertices and evenly spaced edge points."""
    tris = np.asarray(tris, dtype=float).reshape(-1, 3, 3)
    m = len(tris)
    r1 = rng.random((m, density))
    r2 = rng.random((m, density))
    s = np.sqrt(r1)
    u, v, w = 1.0 - s, s * (1.0 - r2), s * r2
    face_pts = (u[..., None] * tris[:, None, 0] + v[..., None] * tris[:, None, 1]
                + w[..., None] * tris[:, None, 2]).reshape(-1, 3)
    k = max(1, int(math.ceil(math.sqrt(density))))
    t = (np.arange(1, k + 1) / (k + 1))[None, :, None]
    edge_pts = [((1.0 - t) * tris[:, e, None] + t * tris[:, (e + 1) % 3, None]).reshape(-1, 3)
                for e in range(3)]
    vert_pts = tris.reshape(-1, 3)
    return np.concatenate([vert_pts] + edge_pts + [face_pts])


def _as_tris(m):
    if isinstance(m, HalfedgeMesh):
        return m._pos[m.face_array()]
    return np.asarray(m, dtype=float).reshape(-1, 3, 3)


def oracle_hausdorff(a, b, density=100, seed=12345) -> OracleResult:
    """Metro-style two-sided distance from dense sampling and exact queries.

    ``a`` and ``b`` are meshes or (m, 3, 3) triangle arrays. Returns the
    Hausdorff estimate, the RMS pooled over both directions and the
    one-sided maxima and RMS values.
    """
    rng = np.random.default_rng(seed)
    ta, tb = _as_tris(a), _as_tris(b)
    sa = dense_samples(ta, density, rng)
    sb = dense_samples(tb, density, rng)
    da = AabbTree(tb).query(sa).distance
    db = AabbTree(ta).query(sb).distance
    pooled = np.concatenate([da, db])
    return OracleResult(float(max(da.max(), db.max())), float(np.sqrt(np.mean(pooled ** 2))),
                        float(da.max()), float(db.max()),
                        float(np.sqrt(np.mean(da ** 2))), float(np.sqrt(np.mean(db ** 2))))
