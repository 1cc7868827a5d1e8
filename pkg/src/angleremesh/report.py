"""Quality metrics of a remeshing result and their JSON / CSV export."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .fidelity import approx_hausdorff, oracle_hausdorff
from .geometry import bbox_diagonal, corner_angles, triangle_qualities

SCHEMA_VERSION = "1.0"
HISTOGRAM_BINS = 60
BIN_WIDTH_DEG = 3.0
QUALITY_CONVENTION = "Q_t = 2*sqrt(3)*area / (half-perimeter * longest edge)"


@dataclass
class QualityReport:
    schema_version: str
    n_vertices: int
    n_faces: int
    theta_min: float
    theta_max: float
    avg_min_angle: float
    q_min: float
    q_avg: float
    pct_angles_below_30: float
    v567: float
    v567_interior: float
    angle_histogram: list
    hausdorff: float = math.nan  # %bb
    rms: float = math.nan  # %bb, both directions pooled
    rms_forward: float = math.nan  # output -> input
    rms_backward: float = math.nan  # input -> output
    hausdorff_abs: float = math.nan
    delta_abs: float = math.nan
    approx_hausdorff_abs: float = math.nan
    input_vertices: int = 0
    vertices_after_simplification: int = 0
    termination: str = ""
    timings: dict = field(default_factory=dict)
    operations: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    quality_convention: str = QUALITY_CONVENTION

    def to_dict(self):
        return asdict(self)

    def to_json(self, path=None, indent=2):
        text = json.dumps(_jsonable(self.to_dict()), indent=indent, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def write_histogram_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_start_deg", "bin_end_deg", "count"])
            for i, c in enumerate(self.angle_histogram):
                w.writerow([i * BIN_WIDTH_DEG, (i + 1) * BIN_WIDTH_DEG, c])


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def angle_histogram(angles_deg):
    """Counts in 60 bins of 3 degrees over [0, 180]; 180 falls in the last bin."""
    idx = np.clip(np.floor(np.asarray(angles_deg) / BIN_WIDTH_DEG).astype(int), 0, HISTOGRAM_BINS - 1)
    return np.bincount(idx.ravel(), minlength=HISTOGRAM_BINS).tolist()


def valence_regularity(mesh):
    """(% of vertices with valence 5-7, same over interior vertices only)."""
    verts = mesh.vertices()
    val = np.array([mesh.valence(v) for v in verts])
    interior = np.array([not mesh.is_boundary_vertex(v) for v in verts], dtype=bool)
    good = (val >= 5) & (val <= 7)
    pct = 100.0 * good.mean() if len(val) else 0.0
    pct_int = 100.0 * good[interior].mean() if interior.any() else 0.0
    return float(pct), float(pct_int)


def mesh_statistics(mesh):
    """Angle, quality and valence metrics of one mesh (no distances)."""
    faces = mesh.faces()
    tris = mesh._pos[mesh.face_array(faces)]
    ang = np.degrees(corner_angles(tris))
    q = triangle_qualities(tris)
    v567, v567_int = valence_regularity(mesh)
    return {
        "n_vertices": mesh.n_vertices,
        "n_faces": len(faces),
        "theta_min": float(ang.min()),
        "theta_max": float(ang.max()),
        "avg_min_angle": float(ang.min(axis=1).mean()),
        "q_min": float(q.min()),
        "q_avg": float(q.mean()),
        "pct_angles_below_30": float(100.0 * (ang < 30.0).mean()),
        "v567": v567,
        "v567_interior": v567_int,
        "angle_histogram": angle_histogram(ang),
    }


def compute_report(mesh_in, mesh_r, cfg, remesher=None, oracle=True) -> QualityReport:
    """All metrics of ``mesh_r`` plus distances to ``mesh_in`` from the dense oracle
    at ten times the configured sampling density."""

    stats = mesh_statistics(mesh_r)
    diag = bbox_diagonal(mesh_in)
    rep = QualityReport(SCHEMA_VERSION, **stats)
    rep.input_vertices = mesh_in.n_vertices
    rep.delta_abs = cfg.delta * diag
    rep.config = asdict(cfg)
    if oracle:
        res = oracle_hausdorff(mesh_r, mesh_in, density=int(round(10 * cfg.n_f)), seed=cfg.seed)
        rep.hausdorff_abs = res.hausdorff
        rep.hausdorff = 100.0 * res.hausdorff / diag
        rep.rms = 100.0 * res.rms / diag
        rep.rms_forward = 100.0 * res.rms_forward / diag
        rep.rms_backward = 100.0 * res.rms_backward / diag
    if remesher is not None:
        st = remesher.stats
        rep.approx_hausdorff_abs = approx_hausdorff(remesher.state)
        rep.vertices_after_simplification = st.vertices_after_simplification
        rep.termination = st.termination
        rep.timings = dict(st.timings)
        rep.operations = {"collapses": dict(st.collapses), "relocations": dict(st.relocations),
                          "splits": st.splits, "rejected": dict(st.rejected),
                          "stalled_angles": st.stalled_angles,
                          "simulations": remesher.state.stats["simulations"]}
    return rep
