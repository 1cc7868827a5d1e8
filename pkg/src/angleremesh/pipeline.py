"""Three-phase remeshing driver.

1. Simplify: collapse cheap edges (short, or opposite small angles) while
   the error bound holds and no angle drops below the local reference.
2. Greedy: pop the smallest angle below the target and try a collapse of
   its opposite edge, a relocation of one of its three vertices, or a split
   of the terminal edge of the longest-side path, in that order.
3. Relocate: sweep all vertices through a FIFO queue and keep moves that
   raise the local minimal angle by at least a fixed increment.
"""

from __future__ import annotations

import heapq
import logging
import math
import time
from collections import deque
from dataclasses import asdict, dataclass, field

from .features import FeatureField
from .fidelity import (FidelityState, SimulationResult, commit_operation, init_fidelity,
                       simulate_operation_fidelity)
from .geometry import bbox_diagonal, corner_angles
from .mesh import HalfedgeMesh, LocalOp, creates_foldover, plan_collapse, plan_relocate, plan_split
from .relocate import (RelocationContext, init_collapse_position, init_relocation_position,
                       init_split_position, interpolate_intensity, minimize_vertex)

log = logging.getLogger(__name__)

THETA_LIMIT = 60.0
STALL_TOLERANCE = 1e-6  # radians


class UnsupportedThetaError(ValueError):
    pass


@dataclass
class RemeshConfig:
    """User bounds and algorithm constants.

    ``delta`` is a fraction of the input's bounding-box diagonal (0.002 is
    0.2 %bb); ``theta`` and ``delta_theta`` are in degrees.
    """

    delta: float = 0.002
    theta: float = 30.0
    max_vertices: int | None = None
    n_f: float = 10.0
    omega: float = 0.15
    zeta: float = 0.5
    lam: float = 0.9
    delta_theta: float = 0.1
    inner_iterations: int = 2
    seed: int = 0
    enable_initial_simplification: bool = True
    max_stall_operations: int = 100
    max_relocations_per_vertex: int = 1000
    weighting: str = "feature"

    def validate(self):
        if not self.delta > 0.0:
            raise ValueError("delta must be positive")
        if not 0.0 <= self.theta:
            raise ValueError("theta must be non-negative")
        if self.theta >= THETA_LIMIT:
            raise UnsupportedThetaError(
                f"theta={self.theta:g} is unsupported: for targets of {THETA_LIMIT:g} degrees and "
                "above the greedy phase can loop forever or degenerate edges")
        if self.max_vertices is not None and self.max_vertices <= 0:
            raise ValueError("max_vertices must be positive")
        if not self.n_f > 0:
            raise ValueError("n_f must be positive")
        if not 0.0 < self.zeta < 1.0:
            raise ValueError("zeta must lie in (0, 1)")
        if not 0.0 <= self.omega:
            raise ValueError("omega must be non-negative")
        if not 0.0 < self.lam <= 1.0:
            raise ValueError("lambda must lie in (0, 1]")
        if not self.delta_theta > 0.0:
            raise ValueError("delta_theta must be positive")
        if self.inner_iterations < 1:
            raise ValueError("inner_iterations must be >= 1")
        if self.weighting not in ("feature", "lawson", "uniform"):
            raise ValueError(f"unknown weighting {self.weighting!r}")
        return self

    @property
    def vertex_budget(self):
        return math.inf if self.max_vertices is None else self.max_vertices


@dataclass
class RunStats:
    collapses: dict = field(default_factory=lambda: {"simplify": 0, "greedy": 0})
    relocations: dict = field(default_factory=lambda: {"greedy": 0, "final": 0})
    splits: int = 0
    rejected: dict = field(default_factory=dict)
    stalled_angles: int = 0
    timings: dict = field(default_factory=dict)
    termination: str = ""
    vertices_after_simplification: int = 0

    def reject(self, reason):
        self.rejected[reason] = self.rejected.get(reason, 0) + 1

    def as_dict(self):
        return asdict(self)


def local_min_angle(mesh: HalfedgeMesh, faces):
    if not faces:
        return math.pi
    return float(corner_angles(mesh._pos[mesh.face_array(faces)]).min())


class Remesher:
    """Holds the working mesh, the fidelity state and the feature field."""

    def __init__(self, mesh_in: HalfedgeMesh, cfg: RemeshConfig):
        self.cfg = cfg.validate()
        self.mesh_in = mesh_in
        self.diag = bbox_diagonal(mesh_in)
        if not self.diag > 0.0:
            raise ValueError("input mesh has a degenerate bounding box")
        self.delta_abs = cfg.delta * self.diag
        self.mesh = mesh_in.copy()
        self.state: FidelityState = init_fidelity(mesh_in, self.mesh, cfg.n_f, cfg.seed, self.delta_abs)
        self.field = FeatureField.compute(self.mesh)
        in_field = FeatureField.compute(mesh_in)
        s = self.state.input_samples
        host_vertices = mesh_in.face_array(mesh_in.faces())
        # input facet ids are dense here: faces() of a fresh mesh is 0..m-1
        self.input_intensity = interpolate_intensity(s.bary, in_field.F[host_vertices[s.face]])
        self.ctx = RelocationContext(self.state, self.mesh, self.field, self.input_intensity)
        self.stats = RunStats()
        self.theta = math.radians(cfg.theta)
        self.last_vertex = -1
        self.last_removed = -1
        self.last_endpoints = ()

    # -- the mesh improvement test ----------------------------------------------

    def improvement_test(self, op: LocalOp, theta_ref=None):
        """Topology, angle, fold-over and fidelity checks of a planned op.

        ``theta_ref``: every post-operation angle of L must exceed it.
        Returns the simulation result on success, else None.
        """
        mesh = self.mesh
        if op.kind == "collapse" and not mesh.collapse_is_legal(op.handle):
            self.stats.reject("topology")
            return None
        if theta_ref is not None:
            post = corner_angles(op.coords(mesh)).min() if op.faces else math.pi
            if not post > theta_ref:
                self.stats.reject("angle")
                return None
        if creates_foldover(mesh, op):
            self.stats.reject("foldover")
            return None
        result = simulate_operation_fidelity(self.state, mesh, op)
        if not result.ok:
            self.stats.reject("fidelity")
            return None
        return result

    def commit(self, op: LocalOp, result: SimulationResult):
        v = commit_operation(self.state, self.mesh, op, result)
        self.last_vertex = v
        self.last_removed = op.removed_vertex
        self.last_endpoints = tuple(op.endpoints or ())
        ring = {u for f in self.mesh.vertex_faces(v) for u in self.mesh.face_vertices(f)}
        self.field.update(self.mesh, sorted(ring))
        return v

    def _optimized(self, op: LocalOp):
        cfg = self.cfg
        op.position = minimize_vertex(self.ctx, op, cfg.inner_iterations, cfg.lam, cfg.weighting)
        return op

    def try_collapse(self, h, theta_ref):
        mesh = self.mesh
        if not mesh.collapse_is_legal(h):
            self.stats.reject("topology")
            return None
        a, b = mesh.from_vertex(h), mesh.he_to[h]
        pos = init_collapse_position(mesh, self.field, a, b, self.cfg.omega)
        op = self._optimized(plan_collapse(mesh, h, pos))
        result = self.improvement_test(op, theta_ref)
        if result is None and theta_ref is not None and self._angle_fails(op, theta_ref):
            # on flat or regular patches the optimiser has nothing to pull
            # on; a plain halfedge collapse can keep the shapes intact
            for end in (b, a):
                alt = plan_collapse(mesh, h, mesh.point(end).copy())
                if self._angle_fails(alt, theta_ref):
                    continue
                result = self.improvement_test(alt, theta_ref)
                if result is not None:
                    op = alt
                    break
        if result is None:
            return None
        return self.commit(op, result)

    def _angle_fails(self, op: LocalOp, theta_ref):
        return bool(op.faces) and not corner_angles(op.coords(self.mesh)).min() > theta_ref

    def try_relocate(self, v, theta_ref):
        mesh = self.mesh
        pos = init_relocation_position(mesh, self.field, v, self.cfg.zeta)
        op = self._optimized(plan_relocate(mesh, v, pos))
        result = self.improvement_test(op, theta_ref)
        if result is None:
            return None
        return self.commit(op, result)

    def try_split(self, h):
        mesh = self.mesh
        op = self._optimized(plan_split(mesh, h, init_split_position(mesh, h)))
        result = self.improvement_test(op, None)
        if result is None:
            return None
        return self.commit(op, result)

    # -- phase 1 --------------------------------------------------------------

    def edge_priority(self, h):
        mesh = self.mesh
        angles = []
        for g in (h, h ^ 1):
            f = mesh.he_face[g]
            if f >= 0:
                p = mesh._pos[list(mesh.face_vertices(f))]
                k = mesh.face_halfedges(f).index(g)
                # the corner opposite halfedge k sits at vertex (k + 2) % 3
                angles.append(corner_angles(p[None])[0, (k + 2) % 3])
        return mesh.edge_length(h) * (sum(angles) / len(angles))

    def initial_simplification(self):
        mesh = self.mesh
        stamp = {}
        heap = []

        def push(h):
            e = h >> 1
            stamp[e] = stamp.get(e, 0) + 1
            heapq.heappush(heap, (self.edge_priority(h), e, stamp[e]))

        for h in mesh.edges():
            push(h)
        while heap:
            _, e, s = heapq.heappop(heap)
            if stamp.get(e) != s or not mesh.e_alive[e]:
                continue
            h = 2 * e
            a, b = mesh.from_vertex(h), mesh.he_to[h]
            theta_ref = min(self.theta, local_min_angle(mesh, sorted(set(mesh.vertex_faces(a))
                                                                   | set(mesh.vertex_faces(b)))))
            v = self.try_collapse(h, theta_ref)
            if v is None:
                continue
            self.stats.collapses["simplify"] += 1
            for f in mesh.vertex_faces(v):
                for g in mesh.face_halfedges(f):
                    push(g & ~1)

    # -- phase 2 --------------------------------------------------------------

    def greedy_phase(self):
        return greedy_improvement(self)

    def greedy_improve_angle(self, face, corner, theta_min):
        """One greedy step on the angle at ``corner`` of ``face``.

        Returns the committed operation kind, or None.
        """
        mesh = self.mesh
        hs = mesh.face_halfedges(face)
        h = hs[(corner + 1) % 3]
        v_o = mesh.face_vertices(face)[corner]
        v_s, v_e = mesh.from_vertex(h), mesh.he_to[h]
        if self.try_collapse(h, theta_min) is not None:
            self.stats.collapses["greedy"] += 1
            return "collapse"
        for v in (v_o, v_s, v_e):
            if self.try_relocate(v, theta_min) is not None:
                self.stats.relocations["greedy"] += 1
                return "relocate"
        if mesh.n_vertices + 1 > self.cfg.vertex_budget:
            self.stats.reject("budget")
            return None
        target = longest_side_propagation(mesh, h)
        if self.try_split(target) is not None:
            self.stats.splits += 1
            return "split"
        return None

    # -- phase 3 --------------------------------------------------------------

    def final_vertex_relocation(self):
        mesh = self.mesh
        gain = math.radians(self.cfg.delta_theta)
        queue = deque(mesh.vertices())
        queued = set(queue)
        accepted = {}
        while queue:
            v = queue.popleft()
            queued.discard(v)
            if not mesh.v_alive[v] or accepted.get(v, 0) >= self.cfg.max_relocations_per_vertex:
                continue
            before = local_min_angle(mesh, mesh.vertex_faces(v))
            pos = init_relocation_position(mesh, self.field, v, self.cfg.zeta)
            op = self._optimized(plan_relocate(mesh, v, pos))
            result = self.improvement_test(op, before + gain - 1e-15)
            if result is None:
                continue
            self.commit(op, result)
            accepted[v] = accepted.get(v, 0) + 1
            self.stats.relocations["final"] += 1
            for u in mesh.vertex_neighbors(v):
                if u not in queued:
                    queue.append(u)
                    queued.add(u)

    # -- driver ---------------------------------------------------------------

    def run(self):
        t = time.perf_counter
        t0 = t()
        if self.cfg.enable_initial_simplification:
            self.initial_simplification()
        t1 = t()
        self.stats.vertices_after_simplification = self.mesh.n_vertices
        self.stats.termination = self.greedy_phase()
        t2 = t()
        self.final_vertex_relocation()
        t3 = t()
        self.stats.timings = {"simplify": t1 - t0, "greedy": t2 - t1, "relocate": t3 - t2}
        return self.mesh


class AngleQueue:
    """Min-heap of (angle, facet, corner) with per-facet stamps.

    Entries of facets modified after being pushed are discarded on pop.
    """

    def __init__(self, theta):
        self.theta = theta
        self.heap = []
        self.stamp = {}

    def push_face(self, mesh, f):
        self.stamp[f] = self.stamp.get(f, 0) + 1
        ang = corner_angles(mesh._pos[list(mesh.face_vertices(f))][None])[0]
        for k in range(3):
            if ang[k] < self.theta:
                heapq.heappush(self.heap, (float(ang[k]), f, k, self.stamp[f]))

    def fill(self, mesh):
        faces = mesh.faces()
        if not faces:
            return
        ang = corner_angles(mesh._pos[mesh.face_array(faces)])
        for i, f in enumerate(faces):
            self.stamp[f] = self.stamp.get(f, 0) + 1
            for k in range(3):
                if ang[i, k] < self.theta:
                    heapq.heappush(self.heap, (float(ang[i, k]), f, k, self.stamp[f]))

    def invalidate(self, f):
        self.stamp[f] = self.stamp.get(f, 0) + 1

    def pop(self, mesh):
        """Smallest live entry or None."""
        while self.heap:
            ang, f, k, s = heapq.heappop(self.heap)
            if self.stamp.get(f) == s and mesh.f_alive[f]:
                return ang, f, k
        return None

    def __len__(self):
        return len(self.heap)


def _angle_key(mesh, f, k, canon):
    t = [canon.get(u, u) for u in mesh.face_vertices(f)]
    return t[k], tuple(sorted((t[(k + 1) % 3], t[(k + 2) % 3])))


def greedy_improvement(rm: Remesher):
    """Phase 2 loop. Returns the termination reason."""
    mesh = rm.mesh
    cfg = rm.cfg
    queue = AngleQueue(rm.theta)
    queue.fill(mesh)
    stalls = {}
    frozen = set()

    def refresh(v):
        faces = set()
        for f in mesh.vertex_faces(v):
            for u in mesh.face_vertices(f):
                faces.update(mesh.vertex_faces(u))
        for f in sorted(faces):
            queue.push_face(mesh, f)

    budget_hit = False
    best = {}  # angle key -> largest value seen at a pop
    # a collapse survivor inherits the older id of the vertex it absorbed,
    # so a corner rebuilt by a split-collapse cycle keeps its key
    canon = {}
    last_split = None  # (key, new vertex, split edge endpoints) of the previous commit
    while True:
        if mesh.n_vertices >= cfg.vertex_budget:
            budget_hit = True
            break
        item = queue.pop(mesh)
        if item is None:
            break
        theta_min, f, k = item
        key = _angle_key(mesh, f, k, canon)
        if key in frozen:
            continue
        # a pop counts as a stall unless the angle rose since the last pop
        # of the same corner; round-off sized gains do not count
        if key in best and theta_min <= best[key] + STALL_TOLERANCE:
            stalls[key] = stalls.get(key, 0) + 1
            if stalls[key] >= cfg.max_stall_operations:
                frozen.add(key)
                rm.stats.stalled_angles += 1
                continue
        else:
            stalls.pop(key, None)
        best[key] = max(theta_min, best.get(key, theta_min))
        kind = rm.greedy_improve_angle(f, k, theta_min)
        if kind == "collapse":
            a, b = rm.last_removed, rm.last_vertex
            if last_split is not None and _undoes_split(last_split, a, b):
                # the split is reverted: the same attempt would repeat
                frozen.add(last_split[0])
                rm.stats.stalled_angles += 1
            canon[b] = min(canon.get(a, a), canon.get(b, b))
        if kind is not None:
            last_split = (key, rm.last_vertex, rm.last_endpoints) if kind == "split" else None
        if kind is not None:
            # failed angles come back only when a commit touches their facet
            refresh(rm.last_vertex)
    if not _angles_below(mesh, rm.theta):
        return "theta_reached"
    if budget_hit:
        return "max_vertices"
    return "stall"


def _undoes_split(last_split, a, b):
    _, m, ends = last_split
    return m in (a, b) and bool({a, b} & set(ends))


def _angles_below(mesh, theta):
    faces = mesh.faces()
    if not faces:
        return []
    ang = corner_angles(mesh._pos[mesh.face_array(faces)])
    return ang[ang < theta].tolist()


def longest_side_propagation(mesh: HalfedgeMesh, h):
    """Walk to the longest edge of the adjacent triangles while it grows.

    Stops at a locally longest edge or upon reaching a boundary edge.
    Returns a halfedge of the terminal edge.
    """
    cur = h
    cur_len = mesh.edge_length(cur)
    visited = {cur >> 1}
    first = True
    while True:
        if not first and mesh.is_boundary_edge(cur):
            return cur
        first = False
        best, best_len = cur, cur_len
        for g in (cur, cur ^ 1):
            f = mesh.he_face[g]
            if f < 0:
                continue
            for e in mesh.face_halfedges(f):
                length = mesh.edge_length(e)
                if length > best_len:
                    best, best_len = e, length
        if best == cur or (best >> 1) in visited:
            return cur
        visited.add(best >> 1)
        cur, cur_len = best, best_len


def remesh(mesh_in: HalfedgeMesh, cfg: RemeshConfig | None = None, report=True):
    """Run all three phases on a copy of ``mesh_in``.

    Returns (working mesh, QualityReport or None, Remesher).
    """
    from .report import compute_report

    cfg = RemeshConfig() if cfg is None else cfg
    cfg.validate()
    mesh_in = mesh_in.compacted()
    rm = Remesher(mesh_in, cfg)
    rm.run()
    rep = compute_report(mesh_in, rm.mesh, cfg, rm) if report else None
    return rm.mesh, rep, rm
