"""Error-bounded remeshing that raises the minimal angle of a triangle mesh."""

from .features import FeatureField, VertexKind, classify_vertex
from .fidelity import oracle_hausdorff
from .fileio import load_mesh, save_mesh
from .mesh import HalfedgeMesh, MeshError
from .pipeline import RemeshConfig, Remesher, UnsupportedThetaError, remesh
from .report import QualityReport, compute_report

__all__ = [
    "FeatureField", "HalfedgeMesh", "MeshError", "QualityReport", "RemeshConfig", "Remesher",
    "UnsupportedThetaError", "VertexKind", "classify_vertex", "compute_report", "load_mesh",
    "oracle_hausdorff", "remesh", "save_mesh",
]
