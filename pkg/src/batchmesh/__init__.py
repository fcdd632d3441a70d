"""Batch-parallel constrained Delaunay refinement in two dimensions."""

from .cdt import build_cdt, build_delaunay, recover_segments
from .mesh import Mesh, VertexKind
from .pslg import Pslg, read_poly, write_poly
from .refine import EngineConfig, QualityCriteria, RunReport, quality_report, refine
from .rules import RuleFlags

__all__ = [
    "EngineConfig", "Mesh", "Pslg", "QualityCriteria", "RuleFlags", "RunReport", "VertexKind",
    "build_cdt", "build_delaunay", "quality_report", "read_poly", "recover_segments", "refine",
    "write_poly",
]
__version__ = "0.1.0"
