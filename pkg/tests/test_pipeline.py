import math

import numpy as np
import pytest

from angleremesh import shapes
from angleremesh.fidelity import oracle_hausdorff
from angleremesh.geometry import bbox_diagonal, corner_angles
from angleremesh.mesh import HalfedgeMesh, plan_collapse, plan_relocate
from angleremesh.pipeline import (AngleQueue, RemeshConfig, Remesher, UnsupportedThetaError,
                                  local_min_angle, longest_side_propagation, remesh)


def _min_angle(m):
    return float(corner_angles(m._pos[m.face_array(m.faces())]).min())


def _center(m):
    c = m.live_points().mean(axis=0)
    return min((v for v in m.vertices() if not m.is_boundary_vertex(v)),
               key=lambda v: np.linalg.norm(m.point(v) - c))


def _squashed_grid(n, factor=0.1):
    p, f, _ = shapes.square_grid(n).to_arrays()
    p[:, 1] *= factor
    return HalfedgeMesh(p, f)


def _needle_grid():
    """Flat grid with one interior vertex pulled 90% of the way to a neighbour."""
    m = shapes.square_grid(6)
    v = _center(m)
    u = next(w for w in m.vertex_neighbors(v) if abs(m.point(w)[1] - m.point(v)[1]) < 1e-12)
    p, f, _ = m.to_arrays()
    p[v] += 0.9 * (p[u] - p[v])
    return HalfedgeMesh(p, f)


def _needle_sphere():
    m = shapes.icosphere(2)
    p, f, _ = m.to_arrays()
    u = m.vertex_neighbors(0)[0]
    p[0] += 0.9 * (p[u] - p[0])
    return HalfedgeMesh(p, f)


def _jittered_hex(amount, seed=0):
    m = shapes.hex_grid(3)
    p, f, _ = m.to_arrays()
    rng = np.random.default_rng(seed)
    for v in m.vertices():
        if not m.is_boundary_vertex(v):
            p[v, :2] += rng.uniform(-amount, amount, 2)
    return HalfedgeMesh(p, f)


# -- configuration -------------------------------------------------------------------

@pytest.mark.parametrize("theta", [60.0, 75.0])
def test_theta_at_or_above_sixty_is_rejected(theta):
    with pytest.raises(UnsupportedThetaError, match="unsupported"):
        RemeshConfig(theta=theta).validate()
    with pytest.raises(UnsupportedThetaError):
        remesh(shapes.tetrahedron(), RemeshConfig(theta=theta))


@pytest.mark.parametrize("kwargs", [dict(delta=0.0), dict(theta=-1.0), dict(max_vertices=0),
                                    dict(zeta=1.0), dict(lam=0.0), dict(delta_theta=0.0),
                                    dict(weighting="bogus"), dict(n_f=0)])
def test_invalid_config_rejected(kwargs):
    with pytest.raises(ValueError):
        RemeshConfig(**kwargs).validate()


# -- improvement test ----------------------------------------------------------------

def test_identity_relocate_passes_improvement_test():
    m = shapes.square_grid(6)
    rm = Remesher(m, RemeshConfig())
    v = _center(rm.mesh)
    op = plan_relocate(rm.mesh, v)
    ref = local_min_angle(rm.mesh, rm.mesh.vertex_faces(v)) - 1e-6
    assert rm.improvement_test(op, ref) is not None


def test_link_condition_short_circuits():
    rm = Remesher(shapes.tetrahedron(), RemeshConfig())
    op = plan_collapse(rm.mesh, 0)
    assert rm.improvement_test(op, 0.0) is None
    assert rm.stats.rejected == {"topology": 1}


def test_off_plane_relocation_fails_fidelity():
    rm = Remesher(shapes.square_grid(6), RemeshConfig())
    v = _center(rm.mesh)
    op = plan_relocate(rm.mesh, v, rm.mesh.point(v) + [0, 0, 2 * rm.delta_abs])
    assert rm.improvement_test(op, 0.0) is None
    assert rm.stats.rejected == {"fidelity": 1}


def test_angle_reference_is_strict():
    rm = Remesher(shapes.hex_grid(2), RemeshConfig())
    v = _center(rm.mesh)
    op = plan_relocate(rm.mesh, v)
    assert rm.improvement_test(op, math.pi / 3 + 1e-9) is None
    assert rm.stats.rejected == {"angle": 1}


# -- phase 1 ----------------------------------------------------------------------

def test_simplification_of_dense_flat_square():
    pts, faces = shapes.subdivide_midpoint(np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], float),
                                           [(0, 1, 2), (0, 2, 3)], levels=4)
    m = HalfedgeMesh(pts, faces)
    rm = Remesher(m, RemeshConfig())
    rm.initial_simplification()
    assert rm.mesh.n_vertices < 0.5 * m.n_vertices
    d, _ = oracle_hausdorff(m, rm.mesh, density=100)
    assert d <= rm.delta_abs
    rm.mesh.check_invariants()


def test_tetrahedron_is_left_unchanged():
    m = shapes.tetrahedron()
    out, rep, rm = remesh(m, RemeshConfig())
    assert out.n_vertices == 4 and out.n_faces == 4
    assert np.allclose(out.positions, m.positions)
    assert rep.termination == "theta_reached"


def test_coarse_delta_simplifies_sphere_aggressively():
    m = shapes.icosphere(3)
    out, rep, _ = remesh(m, RemeshConfig(delta=0.1))
    assert out.n_vertices < 0.25 * m.n_vertices
    assert rep.hausdorff <= 0.1 * 100 * 1.05  # report distances are in %bb


# -- longest-side propagation --------------------------------------------------------

def _chain(with_cap=True):
    pts = np.array([[0, 0, 0], [1, 0, 0], [0, 2, 0], [2.5, 2.5, 0], [2.8, 0.8, 0]], float)
    faces = [(0, 1, 2), (2, 1, 3)] + ([(3, 1, 4)] if with_cap else [])
    return HalfedgeMesh(pts, faces)


def test_propagation_walks_increasing_chain():
    m = _chain()
    end = longest_side_propagation(m, m.find_halfedge(0, 1))
    assert {m.from_vertex(end), m.he_to[end]} == {1, 3}
    assert not m.is_boundary_edge(end)


def test_propagation_locally_longest_is_fixed_point():
    m = _chain()
    h = m.find_halfedge(1, 3)
    assert longest_side_propagation(m, h) >> 1 == h >> 1


def test_propagation_stops_at_boundary():
    m = _chain(with_cap=False)
    end = longest_side_propagation(m, m.find_halfedge(0, 1))
    assert {m.from_vertex(end), m.he_to[end]} == {1, 3}
    assert m.is_boundary_edge(end)


def test_propagation_result_is_not_shorter():
    m = shapes.open_cylinder(16, 4)
    for h in m.edges():
        end = longest_side_propagation(m, h)
        assert m.edge_length(end) >= m.edge_length(h)


# -- phase 2 ----------------------------------------------------------------------

def test_angle_queue_order_and_staleness():
    m = _squashed_grid(5)
    q = AngleQueue(math.radians(30))
    q.fill(m)
    first = q.pop(m)
    q.invalidate(first[1])
    seen = [first]
    while (item := q.pop(m)) is not None:
        seen.append(item)
    values = [a for a, _, _ in seen]
    assert values == sorted(values)
    assert all(f != first[1] for _, f, _ in seen[1:])
    assert all(a < math.radians(30) for a in values)


def test_angle_queue_empty_iff_angles_reach_theta():
    q = AngleQueue(math.radians(30))
    q.fill(shapes.hex_grid(2))
    assert q.pop(shapes.hex_grid(2)) is None


def test_needle_is_collapsed():
    rm = Remesher(_needle_grid(), RemeshConfig())
    q = AngleQueue(rm.theta)
    q.fill(rm.mesh)
    theta_min, f, k = q.pop(rm.mesh)
    before = _min_angle(rm.mesh)
    assert theta_min == pytest.approx(before)
    n = rm.mesh.n_vertices
    assert rm.greedy_improve_angle(f, k, theta_min) == "collapse"
    assert rm.mesh.n_vertices == n - 1
    assert _min_angle(rm.mesh) > before


def test_failed_step_leaves_mesh_untouched():
    m = _needle_sphere()
    rm = Remesher(m, RemeshConfig(delta=1e-12, max_vertices=m.n_vertices))
    q = AngleQueue(rm.theta)
    q.fill(rm.mesh)
    theta_min, f, k = q.pop(rm.mesh)
    assert rm.greedy_improve_angle(f, k, theta_min) is None
    assert np.array_equal(rm.mesh.positions, m.positions)
    assert rm.stats.rejected.get("budget") == 1


def test_budget_caps_vertex_count_at_commits():
    m = shapes.torus(24, 6)
    probe = Remesher(m, RemeshConfig())
    probe.initial_simplification()
    cap = probe.mesh.n_vertices + 10
    rm = Remesher(m, RemeshConfig(max_vertices=cap))
    counts = []
    commit = rm.commit

    def spy(op, result):
        v = commit(op, result)
        counts.append(rm.mesh.n_vertices)
        return v

    rm.commit = spy
    rm.run()
    assert counts and max(counts) <= cap
    assert rm.stats.termination == "max_vertices"
    assert rm.stats.splits > 0


def test_squashed_grid_is_simplified_away():
    m = _squashed_grid(6)
    out, rep, rm = remesh(m, RemeshConfig())
    assert rep.termination == "theta_reached"
    assert out.n_vertices < 0.5 * m.n_vertices
    assert math.degrees(_min_angle(out)) >= 30.0


def test_coarse_torus_needs_splits_and_reaches_theta():
    out, rep, rm = remesh(shapes.torus(24, 6), RemeshConfig())
    assert rep.termination == "theta_reached"
    assert math.degrees(_min_angle(out)) >= 30.0
    assert rm.stats.splits > 0
    assert rep.hausdorff <= 0.2 * 1.05


def test_theta_zero_skips_greedy_phase():
    m = _squashed_grid(5)
    out, rep, rm = remesh(m, RemeshConfig(theta=0.0))
    assert rep.termination == "theta_reached"
    assert rm.stats.splits == 0
    assert rm.stats.collapses["greedy"] == 0
    assert rm.stats.relocations["greedy"] == 0


# -- phase 3 ----------------------------------------------------------------------

@pytest.mark.parametrize("mesh", [shapes.square_grid(8), shapes.hex_grid(3)])
def test_regular_grid_needs_no_relocation(mesh):
    rm = Remesher(mesh, RemeshConfig())
    rm.final_vertex_relocation()
    assert rm.stats.relocations["final"] == 0
    assert np.array_equal(rm.mesh.positions, mesh.positions)


def test_single_jittered_vertex_is_recentred():
    p, f, _ = shapes.hex_grid(3).to_arrays()
    p[0] += [0.3, 0.2, 0.0]
    m = HalfedgeMesh(p, f)
    rm = Remesher(m, RemeshConfig())
    before = local_min_angle(m, m.vertex_faces(0))
    rm.final_vertex_relocation()
    assert rm.stats.relocations["final"] >= 1
    assert local_min_angle(rm.mesh, rm.mesh.vertex_faces(0)) > before
    assert np.linalg.norm(rm.mesh.point(0)) < 1e-9


def test_larger_gain_threshold_accepts_fewer():
    m = _jittered_hex(0.2)
    counts = {}
    for dt in (0.1, 10.0):
        rm = Remesher(m, RemeshConfig(delta_theta=dt))
        rm.final_vertex_relocation()
        counts[dt] = rm.stats.relocations["final"]
    assert counts[10.0] < counts[0.1]


def test_final_relocation_never_lowers_min_angle():
    m = _jittered_hex(0.25, seed=3)
    rm = Remesher(m, RemeshConfig())
    before = _min_angle(rm.mesh)
    faces = rm.mesh.n_faces
    rm.final_vertex_relocation()
    assert rm.mesh.n_faces == faces
    assert _min_angle(rm.mesh) >= before - 1e-12


def test_remesh_does_not_touch_input():
    m = _squashed_grid(5)
    before = m.positions.copy()
    remesh(m, RemeshConfig(), report=False)
    assert np.array_equal(m.positions, before)


def test_open_mesh_keeps_boundary_within_bound():
    m = shapes.open_cylinder(24, 10)
    out, rep, _ = remesh(m, RemeshConfig())
    assert out.n_boundary_edges() > 0
    assert rep.hausdorff <= 0.2 * 1.05
    assert bbox_diagonal(out) == pytest.approx(bbox_diagonal(m), rel=1e-2)
