import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from angleremesh import shapes
from angleremesh.fidelity import (approx_hausdorff, commit_operation, directional_maxima, global_relink,
                                  init_fidelity, oracle_hausdorff, simulate_operation_fidelity)
from angleremesh.geometry import bbox_diagonal
from angleremesh.mesh import HalfedgeMesh, creates_foldover, plan_collapse, plan_relocate
from conftest import ICOSAHEDRON_INRADIUS_RATIO


def _square(n, z=0.0):
    return shapes.square_grid(n, 1.0, z)


def _center(m):
    c = m.live_points().mean(axis=0)
    return min((v for v in m.vertices() if not m.is_boundary_vertex(v)),
               key=lambda v: np.linalg.norm(m.point(v) - c))


def test_identical_meshes_have_zero_distance():
    m = shapes.icosphere(2)
    st_ = init_fidelity(m, m.copy(), 10, 0, 0.01)
    assert approx_hausdorff(st_) == pytest.approx(0.0, abs=1e-12)


def test_parallel_offset_squares():
    h = 0.013
    a, b = _square(4), _square(4, z=h)
    st_ = init_fidelity(a, b, 10, 0)
    d = approx_hausdorff(st_)
    assert 0.99 * h <= d <= h + 1e-12


def test_empty_meshes_are_rejected():
    empty = HalfedgeMesh(np.zeros((0, 3)), [])
    with pytest.raises(ValueError):
        init_fidelity(empty, shapes.tetrahedron())


def test_approx_is_symmetric():
    a, b = shapes.octahedron(), shapes.icosphere(1)
    assert approx_hausdorff(init_fidelity(a, b, 10, 3)) == approx_hausdorff(init_fidelity(b, a, 10, 3))


def test_approx_below_oracle_plus_gap():
    a, b = shapes.octahedron(), shapes.icosphere(2)
    approx = approx_hausdorff(init_fidelity(a, b, 10, 0))
    oracle = oracle_hausdorff(a, b, density=400).hausdorff
    tris = a._pos[a.face_array()]
    gap = 2 * math.sqrt(0.5 * np.linalg.norm(np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0]),
                                             axis=1).max() / 10)
    assert approx <= oracle + gap
    assert approx >= 0.8 * oracle


def test_in_direction_links_are_exact_at_start():
    a, b = shapes.octahedron(), shapes.icosphere(1)
    st_ = init_fidelity(a, b, 10, 0)
    hit = global_relink(st_, b)
    assert np.allclose(st_.link_dist, hit.distance, atol=1e-12)


# -- simulation --------------------------------------------------------------------

def _flat_setup(n=8, n_f=10):
    m = _square(n)
    delta = 0.002 * bbox_diagonal(m)
    return m, init_fidelity(m, m.copy(), n_f, 0, delta)


def test_identity_relocate_is_ok_and_keeps_links():
    m, st_ = _flat_setup()
    work = m.copy()
    st_ = init_fidelity(m, work, 10, 0, st_.delta_abs)
    v = _center(work)
    op = plan_relocate(work, v)
    before = st_.link_dist.copy()
    res = simulate_operation_fidelity(st_, work, op)
    assert res.ok
    commit_operation(st_, work, op, res)
    assert np.allclose(st_.link_dist, before, atol=1e-15)


def test_normal_displacement_rejected_with_violation():
    m = _square(8)
    work = m.copy()
    delta = 0.002 * bbox_diagonal(m)
    st_ = init_fidelity(m, work, 10, 0, delta)
    v = _center(work)
    op = plan_relocate(work, v, work.point(v) + [0, 0, 2 * delta])
    snapshot = (st_.link_dist.copy(), dict(st_.working))
    res = simulate_operation_fidelity(st_, work, op, early_exit=False)
    assert not res.ok
    assert res.violation["distance"] == pytest.approx(2 * delta, rel=1e-9)
    assert res.violation["excess"] == pytest.approx(delta, rel=1e-9)
    # nothing mutated
    assert np.array_equal(st_.link_dist, snapshot[0])
    assert st_.working.keys() == snapshot[1].keys()
    assert np.allclose(work.point(v), m.point(v))


def test_collapse_in_flat_oversampled_region_is_ok():
    m = _square(8)
    work = m.copy()
    st_ = init_fidelity(m, work, 20, 0, 0.002 * bbox_diagonal(m))
    v = _center(work)
    h = next(iter(work.outgoing(v)))
    op = plan_collapse(work, h, work.point(work.he_to[h]).copy())
    assert not creates_foldover(work, op)
    res = simulate_operation_fidelity(st_, work, op)
    assert res.ok
    assert res.out_max == pytest.approx(0.0, abs=1e-12)


def _commit_relocations(seed, steps=25):
    """Random small relocations on a sphere, committed when they pass."""
    m = shapes.icosphere(2)
    work = m.copy()
    st_ = init_fidelity(m, work, 10, seed, 0.02 * bbox_diagonal(m))
    rng = np.random.default_rng(seed)
    committed = 0
    for _ in range(steps):
        v = int(rng.choice(work.vertices()))
        op = plan_relocate(work, v, work.point(v) + rng.normal(scale=0.01, size=3))
        if creates_foldover(work, op):
            continue
        res = simulate_operation_fidelity(st_, work, op)
        if res.ok:
            commit_operation(st_, work, op, res)
            committed += 1
    return m, work, st_, committed


@given(st.integers(0, 10_000))
def test_committed_links_never_below_global_truth(seed):
    _, work, st_, committed = _commit_relocations(seed, steps=10)
    assert approx_hausdorff(st_) <= st_.delta_abs
    hit = global_relink(st_, work)
    assert np.all(st_.link_dist >= hit.distance - 1e-12)
    # links point at live facets only
    assert all(work.f_alive[f] for f in np.unique(st_.link_face))


def test_commit_keeps_working_samples_in_sync():
    _, work, st_, committed = _commit_relocations(1, steps=30)
    assert committed > 0
    assert set(st_.working) == set(work.faces())
    for f, rec in st_.working.items():
        assert tuple(sorted(rec.triple)) == tuple(sorted(work.face_vertices(f)))
    d_out, d_in = directional_maxima(st_)
    assert max(d_out, d_in) == approx_hausdorff(st_) <= st_.delta_abs


def test_disjoint_commits_commute():
    m = shapes.icosphere(2)
    p = m.positions
    a = int(np.argmax(p[:, 2]))
    b = int(np.argmin(p[:, 2]))
    moves = {a: p[a] * 0.995, b: p[b] * 0.995}

    def run(order):
        work = m.copy()
        st_ = init_fidelity(m, work, 10, 0, 0.05)
        for v in order:
            op = plan_relocate(work, v, moves[v])
            res = simulate_operation_fidelity(st_, work, op)
            assert res.ok
            commit_operation(st_, work, op, res)
        return work, st_

    w1, s1 = run([a, b])
    w2, s2 = run([b, a])
    assert np.array_equal(w1.positions, w2.positions)
    assert np.array_equal(s1.link_face, s2.link_face)
    assert np.array_equal(s1.link_dist, s2.link_dist)
    assert s1.working.keys() == s2.working.keys()
    for f in s1.working:
        assert np.array_equal(s1.working[f].points, s2.working[f].points)
        assert np.array_equal(s1.working[f].dist, s2.working[f].dist)


# -- oracle -----------------------------------------------------------------------

def test_oracle_identical_meshes():
    m = shapes.torus(12, 6)
    res = oracle_hausdorff(m, m, density=20)
    assert tuple(res) == pytest.approx((0.0, 0.0), abs=1e-12)


def test_oracle_parallel_squares():
    h = 0.25
    d, rms = oracle_hausdorff(_square(3), _square(3, z=h), density=30)
    assert d == pytest.approx(h, abs=1e-12)
    assert rms == pytest.approx(h, abs=1e-12)


def test_oracle_icosahedron_vs_sphere():
    ico = shapes.icosahedron()
    sphere = shapes.icosphere(4)
    d, _ = oracle_hausdorff(ico, sphere, density=200)
    assert d == pytest.approx(1.0 - ICOSAHEDRON_INRADIUS_RATIO, rel=0.01)
    assert 1.0 - ICOSAHEDRON_INRADIUS_RATIO == pytest.approx(0.2053, abs=1e-4)


def test_oracle_reports_one_sided_values():
    res = oracle_hausdorff(shapes.octahedron(), shapes.icosphere(2), density=50)
    assert res.hausdorff == max(res.forward, res.backward)
    lo, hi = sorted((res.rms_forward, res.rms_backward))
    assert lo - 1e-15 <= res.rms <= hi + 1e-15
