import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from angleremesh import shapes
from angleremesh.geometry import triangle_areas
from angleremesh.sampling import (EDGE, FACET, VERTEX, facet_sample_count, sample_edges,
                                  sample_facet, sample_patch, sample_patch_reference,
                                  stratified_sample)

EQUILATERAL = np.array([[0.0, 0, 0], [1, 0, 0], [0.5, math.sqrt(3) / 2, 0]])


def test_count_uniform_neighbourhood():
    assert facet_sample_count(1.0, [1.0] * 12, 10) == 10


def test_count_large_facet_exceeds_average():
    k = 3
    n = facet_sample_count(4.0, [1.0] * k, 10)
    # n_f (1 + k) / (1 + k/4)
    assert n == round(10 * 4 / 1.75)
    assert n > 10


def test_count_is_at_least_one():
    assert facet_sample_count(1e-9, [1.0] * 12, 10) == 1
    assert facet_sample_count(0.0, [1.0], 10) == 1


def test_single_sample_is_centroid():
    pts, bary, area, _ = sample_facet(*EQUILATERAL, 1, seed=3)
    assert np.allclose(pts[0], EQUILATERAL.mean(axis=0), atol=1e-12)
    assert area[0] == pytest.approx(triangle_areas(EQUILATERAL[None])[0])


def test_three_samples_split_area_evenly():
    a = triangle_areas(EQUILATERAL[None])[0]
    _, _, area, _ = sample_facet(*EQUILATERAL, 3, seed=7)
    assert np.allclose(area, a / 3, rtol=0.15)


def test_sample_facet_is_deterministic():
    a = sample_facet(*EQUILATERAL, 12, seed=5, key=(4, 9, 2))
    b = sample_facet(*EQUILATERAL, 12, seed=5, key=(4, 9, 2))
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
    c = sample_facet(*EQUILATERAL, 12, seed=6, key=(4, 9, 2))
    assert not np.array_equal(a[0], c[0])


@given(st.integers(1, 40), st.integers(0, 2**40), st.floats(0.05, 5.0), st.floats(0.1, 3.0))
def test_facet_cells_partition_the_facet(n, seed, stretch, height):
    tri = np.array([[0.0, 0, 0], [stretch, 0, 0], [0.3, height, 0]])
    pts, bary, area, _ = sample_facet(*tri, n, seed=seed)
    assert len(pts) == n
    assert np.all(bary >= -1e-12)
    assert np.allclose(bary.sum(axis=1), 1.0)
    assert np.all(area >= 0)
    assert area.sum() == pytest.approx(triangle_areas(tri[None])[0], rel=1e-6)


def _two_facet_patch():
    pts = np.array([[0.0, 0, 0], [1, 0, 0], [0.5, 0.9, 0], [0.5, -0.9, 0]])
    triples = np.array([(0, 1, 2), (1, 0, 3)])
    return triples, pts[triples]


def test_edge_samples_follow_touch_counts():
    triples, tris = _two_facet_patch()
    # one cell per facet touching the shared edge (local edge 0 of each facet)
    owner = np.array([0, 1])
    area = np.array([0.4, 0.4])
    touch = np.array([[1.0, 0, 0], [1.0, 0, 0]])
    (pts, host, bary, w), face_touch = sample_edges(triples, tris, owner, area, touch)
    assert len(pts) == 2
    t = np.sort(bary[:, 1])
    assert np.allclose(t, [1 / 3, 2 / 3])
    assert face_touch[0, 0] == face_touch[1, 0] == 1


def test_boundary_edge_with_one_cell_gets_its_midpoint():
    tri = EQUILATERAL[None]
    (pts, host, bary, w), _ = sample_edges(np.array([(0, 1, 2)]), tri, np.array([0]), np.array([0.4]),
                                           np.array([[1.0, 0, 0]]))
    assert len(pts) == 1
    assert np.allclose(pts[0], 0.5 * (EQUILATERAL[0] + EQUILATERAL[1]))


def test_untouched_edge_gets_no_samples():
    (pts, *_), _ = sample_edges(np.array([(0, 1, 2)]), EQUILATERAL[None], np.array([0]),
                                np.array([0.4]), np.zeros((1, 3)))
    assert len(pts) == 0


def test_tetrahedron_strata():
    m = shapes.tetrahedron()
    s = stratified_sample(m, n_f=1, seed=0)
    assert (s.kind == VERTEX).sum() == 4
    assert (s.kind == FACET).sum() == 4
    # one centroid cell per facet touches all three of its edges, and both
    # facets of an edge count: two samples on each of the six edges
    assert (s.kind == EDGE).sum() == 12


def test_hundred_facets_about_thousand_facet_samples():
    m = shapes.square_grid(n=7)  # 98 facets
    s = stratified_sample(m, n_f=10, seed=0)
    # border facets have fewer neighbours and round differently
    assert abs((s.kind == FACET).sum() - 10 * m.n_faces) <= 0.1 * 10 * m.n_faces
    sphere = shapes.icosphere(2)  # 320 nearly uniform facets
    s = stratified_sample(sphere, n_f=10, seed=0)
    assert abs((s.kind == FACET).sum() - 10 * sphere.n_faces) <= 0.05 * 10 * sphere.n_faces


def test_every_facet_and_vertex_is_sampled_once():
    m = shapes.open_cylinder(16, 5)
    s = stratified_sample(m, n_f=3, seed=1)
    assert set(s.face[s.kind == FACET].tolist()) == set(m.faces())
    v = s.points[s.kind == VERTEX]
    assert len(v) == m.n_vertices
    assert len({tuple(p) for p in v}) == m.n_vertices


def test_same_seed_same_set():
    m = shapes.icosphere(1)
    a = stratified_sample(m, 10, 42)
    b = stratified_sample(m, 10, 42)
    for k in ("points", "kind", "face", "bary", "area"):
        assert np.array_equal(getattr(a, k), getattr(b, k))


def test_per_facet_cell_areas_sum_to_facet_area():
    m = shapes.icosphere(2)
    s = stratified_sample(m, 10, 0)
    fac = s.kind == FACET
    sums = np.bincount(s.face[fac], weights=s.area[fac], minlength=len(m.f_alive))
    areas = triangle_areas(m._pos[m.face_array()])
    assert np.allclose(sums[m.faces()], areas, rtol=1e-6)


def test_barycentrics_reproduce_points():
    m = shapes.torus(12, 6)
    s = stratified_sample(m, 5, 3)
    tris = m._pos[m.face_array()]
    assert np.all(s.bary >= -1e-12)
    assert np.allclose(s.bary.sum(axis=1), 1)
    assert np.allclose(np.einsum("ij,ijk->ik", s.bary, tris[s.face]), s.points, atol=1e-12)


def test_max_gap_bound():
    m = shapes.icosphere(2)
    s = stratified_sample(m, 10, 0)
    tris = m._pos[m.face_array()]
    a_max = triangle_areas(tris).max()
    # probe points on the surface: dense random barycentrics
    rng = np.random.default_rng(0)
    r = rng.random((len(tris), 30, 2))
    flip = r.sum(axis=2) > 1
    r[flip] = 1 - r[flip]
    probe = (tris[:, None, 0] + r[..., :1] * (tris[:, None, 1] - tris[:, None, 0])
             + r[..., 1:] * (tris[:, None, 2] - tris[:, None, 0])).reshape(-1, 3)
    d = np.sqrt(((probe[:, None, :] - s.points[None, :, :]) ** 2).sum(axis=2)).min(axis=1)
    assert d.max() <= 2 * math.sqrt(a_max / 10)


@pytest.mark.parametrize("mesh_fn", [lambda: shapes.icosphere(1), lambda: shapes.cube(3),
                                     lambda: shapes.open_cylinder(10, 3)])
def test_compiled_patch_sampler_matches_reference(mesh_fn):
    m = mesh_fn()
    triples = m.face_array()
    tris = m._pos[triples]
    n_target = len(triples) // 2
    fast, touch_fast = sample_patch(triples, tris, 10, 9, n_target=n_target)
    ref, touch_ref = sample_patch_reference(triples, tris, 10, 9, n_target=n_target)
    assert np.array_equal(touch_fast, touch_ref)
    assert np.array_equal(fast.kind, ref.kind)
    assert np.array_equal(fast.face, ref.face)
    assert np.allclose(fast.points, ref.points, atol=1e-12)
    assert np.allclose(fast.area, ref.area, rtol=1e-9)


def test_resampling_a_patch_reproduces_stored_samples():
    # keys depend on vertex ids, not on facet order within the patch
    m = shapes.icosphere(1)
    triples = m.face_array()
    tris = m._pos[triples]
    a, _ = sample_patch(triples, tris, 10, 4)
    perm = np.arange(len(triples))[::-1]
    b, _ = sample_patch(triples[perm], tris[perm], 10, 4)
    fa = np.sort(a.points[a.kind == FACET].round(12), axis=0)
    fb = np.sort(b.points[b.kind == FACET].round(12), axis=0)
    assert np.array_equal(fa, fb)
