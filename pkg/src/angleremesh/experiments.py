"""Reusable experiment drivers behind the scripts/ entry points and the
acceptance suite."""

from __future__ import annotations

import dataclasses

import numpy as np

from . import shapes
from .features import FeatureField
from .fidelity import init_fidelity
from .geometry import bbox_diagonal
from .mesh import HalfedgeMesh, plan_relocate
from .pipeline import RemeshConfig, remesh
from .relocate import RelocationContext, init_relocation_position, interpolate_intensity, minimize_vertex


def cube_crease_distance(points, size=1.0):
    """Distance of each point to the nearest edge segment of the origin-centred cube."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    h = 0.5 * size
    best = np.full(len(p), np.inf)
    for free in range(3):
        a, b = [k for k in range(3) if k != free]
        along = np.maximum(np.abs(p[:, free]) - h, 0.0)
        for sa in (-h, h):
            for sb in (-h, h):
                d2 = (p[:, a] - sa) ** 2 + (p[:, b] - sb) ** 2 + along ** 2
                best = np.minimum(best, d2)
    return np.sqrt(best)


def cube_corner_distance(points, size=1.0):
    p = np.atleast_2d(np.asarray(points, dtype=float))
    h = 0.5 * size
    return np.linalg.norm(np.abs(p) - h, axis=1)


def cube_crease_vertices(mesh, size=1.0, tol=1e-9):
    """Vertices on a cube edge, corners excluded."""
    verts = np.array(mesh.vertices())
    p = mesh._pos[verts]
    on_face = np.isclose(np.abs(p), 0.5 * size, atol=tol).sum(axis=1)
    return verts[on_face == 2]


def perturbed_copy(mesh: HalfedgeMesh, amount, seed):
    """Copy with every vertex displaced uniformly in a cube of half-width ``amount``."""
    pts, faces, _ = mesh.to_arrays()
    rng = np.random.default_rng(seed)
    return HalfedgeMesh(pts + rng.uniform(-amount, amount, pts.shape), faces)


def weighting_trial(seed, n=8, amount=0.3, iterations=2, lam=0.9, n_f=10,
                    weightings=("feature", "lawson")):
    """Mean distance to the true crease after relocating every crease vertex.

    The exact cube is the reference surface; the working mesh is a copy
    jittered by ``amount`` grid spacings. Each true-crease vertex is
    relocated once, independently and without committing, by the damped
    reweighted solver under each weighting. Returns {weighting: mean
    crease distance}.
    """
    mesh_in = shapes.cube(n)
    mesh_r = perturbed_copy(mesh_in, amount / n, seed)
    diag = bbox_diagonal(mesh_in)
    state = init_fidelity(mesh_in, mesh_r, n_f, seed, diag)
    field = FeatureField.compute(mesh_r)
    in_field = FeatureField.compute(mesh_in)
    s = state.input_samples
    host = mesh_in.face_array(mesh_in.faces())
    ctx = RelocationContext(state, mesh_r, field,
                            interpolate_intensity(s.bary, in_field.F[host[s.face]]))
    out = {}
    creases = cube_crease_vertices(mesh_in)
    for w in weightings:
        moved = []
        for v in creases:
            pos = init_relocation_position(mesh_r, field, v)
            op = plan_relocate(mesh_r, v, pos)
            moved.append(minimize_vertex(ctx, op, iterations, lam, w))
        out[w] = float(cube_crease_distance(np.array(moved)).mean())
    return out


def theta_sweep(mesh_in, thetas, base: RemeshConfig | None = None):
    """Remesh once per target angle; returns one summary dict per run."""
    base = RemeshConfig() if base is None else base
    rows = []
    for th in thetas:
        cfg = dataclasses.replace(base, theta=float(th))
        _, rep, _ = remesh(mesh_in, cfg)
        rows.append({"theta": float(th), "n_vertices": rep.n_vertices, "q_min": rep.q_min,
                     "q_avg": rep.q_avg, "theta_min": rep.theta_min, "theta_max": rep.theta_max,
                     "hausdorff": rep.hausdorff, "rms": rep.rms, "termination": rep.termination})
    return rows
