import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from angleremesh import shapes
from angleremesh.features import (F_MAX, FeatureField, VertexKind, classify_vertex, combine_intensity,
                                  feature_edge_intensity, feature_intensity, gaussian_curvature, tau)
from angleremesh.mesh import HalfedgeMesh
from angleremesh.experiments import cube_crease_vertices


def _center_vertex(m):
    c = m.live_points().mean(axis=0)
    return min((v for v in m.vertices() if not m.is_boundary_vertex(v)),
               key=lambda v: np.linalg.norm(m.point(v) - c))


def _cube_corner(m):
    return next(v for v in m.vertices() if np.allclose(np.abs(m.point(v)), 0.5))


def _cube_mid_crease(m):
    creases = cube_crease_vertices(m)
    return min(creases, key=lambda v: np.abs(m.point(v)).min())


def test_flat_vertex_has_no_curvature():
    m = shapes.square_grid(6)
    v = _center_vertex(m)
    assert gaussian_curvature(m, v) == pytest.approx(0.0, abs=1e-12)
    assert feature_edge_intensity(m, v) == pytest.approx(0.0, abs=1e-12)
    assert feature_intensity(m, v) == pytest.approx(0.0, abs=1e-12)


def test_cube_corner():
    m = shapes.cube(4)
    v = _cube_corner(m)
    assert gaussian_curvature(m, v) == pytest.approx(math.pi / 2)
    assert feature_edge_intensity(m, v) == pytest.approx(math.pi / 2)
    assert feature_intensity(m, v) == pytest.approx((math.pi + 1) ** 2 - 1)
    assert feature_intensity(m, v) == pytest.approx(16.152, abs=1e-3)


def test_straight_boundary_vertex():
    m = shapes.square_grid(4)
    v = next(v for v in m.vertices() if m.is_boundary_vertex(v)
             and 0 < m.point(v)[0] < 1 and m.point(v)[1] == 0)
    assert gaussian_curvature(m, v) == pytest.approx(0.0, abs=1e-12)
    assert feature_edge_intensity(m, v) == pytest.approx(math.pi)


def test_prism_crease_vertex():
    m = shapes.cube(4)
    v = _cube_mid_crease(m)
    assert gaussian_curvature(m, v) == pytest.approx(0.0, abs=1e-12)
    assert feature_edge_intensity(m, v) == pytest.approx(math.pi / 2)
    assert feature_intensity(m, v) == pytest.approx(math.pi)


@pytest.mark.parametrize("mesh, chi", [(shapes.icosphere(3), 2), (shapes.cube(6), 2),
                                       (shapes.torus(), 0), (shapes.octahedron(), 2)])
def test_gauss_bonnet(mesh, chi):
    k = sum(gaussian_curvature(mesh, v) for v in mesh.vertices())
    assert k == pytest.approx(2 * math.pi * chi, rel=1e-9, abs=1e-9)
    fld = FeatureField.compute(mesh)
    assert fld.K[mesh.vertices()].sum() == pytest.approx(2 * math.pi * chi, rel=1e-9, abs=1e-9)


def test_batched_field_matches_pointwise():
    m = shapes.open_cylinder(16, 5)
    fld = FeatureField.compute(m)
    for v in m.vertices():
        assert fld.K[v] == pytest.approx(gaussian_curvature(m, v), abs=1e-12)
        assert fld.E[v] == pytest.approx(feature_edge_intensity(m, v), abs=1e-12)
        assert fld.F[v] == pytest.approx(feature_intensity(m, v), abs=1e-12)


def test_field_update_after_mutation():
    m = shapes.icosphere(2)
    fld = FeatureField.compute(m)
    v = m.vertices()[5]
    m.relocate_vertex(v, 1.3 * m.point(v))
    ring = {u for f in m.vertex_faces(v) for u in m.face_vertices(f)}
    fld.update(m, ring)
    fresh = FeatureField.compute(m)
    assert np.allclose(fld.F[m.vertices()], fresh.F[m.vertices()])


@given(st.floats(-10, 10), st.floats(0, 10), st.floats(0, 5), st.floats(0, 5))
def test_intensity_range_and_monotonicity(k, e, dk, de):
    f = float(combine_intensity(k, e))
    assert 0.0 <= f <= F_MAX + 1e-12
    assert float(combine_intensity(abs(k) + dk, e)) >= f - 1e-12
    assert float(combine_intensity(k, e + de)) >= f - 1e-12


def test_tau_saturates():
    assert tau(0.1) == pytest.approx(0.2)
    assert tau(10.0) == pytest.approx(math.pi)


def test_classify_flat_grid_vertex_smooth():
    m = shapes.square_grid(6)
    fld = FeatureField.compute(m)
    assert classify_vertex(m, fld, _center_vertex(m)).kind is VertexKind.SMOOTH


def test_classify_crease_vertex():
    m = shapes.cube(4)
    fld = FeatureField.compute(m)
    v = _cube_mid_crease(m)
    cls = classify_vertex(m, fld, v)
    assert cls.kind is VertexKind.CREASE
    p = m.point(v)
    for u in cls.crease_neighbors:
        # both neighbours lie on the same crease line
        assert np.sum(np.isclose(np.abs(m.point(u)), 0.5)) >= 2
        assert np.sum(np.isclose(m.point(u), p)) >= 2


def test_classify_cube_corner_feature():
    m = shapes.cube(4)
    fld = FeatureField.compute(m)
    assert classify_vertex(m, fld, _cube_corner(m)).kind is VertexKind.FEATURE


def test_classify_rejects_bad_zeta():
    m = shapes.square_grid(2)
    fld = FeatureField.compute(m)
    with pytest.raises(ValueError):
        classify_vertex(m, fld, 0, zeta=1.0)


@given(st.floats(0.1, 10), st.floats(0, 2 * math.pi), st.integers(0, 1000))
def test_classification_invariant_under_similarity(scale, angle, pick):
    base = shapes.cube(3)
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])
    pts, faces, _ = base.to_arrays()
    moved = HalfedgeMesh(scale * pts @ rot.T + 1.5, faces)
    f0, f1 = FeatureField.compute(base), FeatureField.compute(moved)
    v = base.vertices()[pick % base.n_vertices]
    a, b = classify_vertex(base, f0, v), classify_vertex(moved, f1, v)
    assert a.kind is b.kind
    assert set(a.crease_neighbors) == set(b.crease_neighbors)
