"""Loop-group constructions of curvature-deformed submanifolds and the rank obstruction."""
from .birkhoff import factorize, factorize_in_subgroup
from .cartan_align import AlignmentResult, align_cartan
from .connection import ConnectionData11, extract_connection, mc_residuals
from .errors import (
    ConfigurationError,
    LoopflatError,
    ObstructionError,
    ParseError,
    VerificationError,
)
from .estimator import LoopFlatImmersion
from .flows import CurvedFlatSeed, FrameField, kdpw_lift, seed_from_alignment
from .geometry import (
    GeometryReport,
    ImmersionSamples,
    curvature_report,
    g2_report,
    lagrangian_diagnostics,
    metric_scaling,
    project,
)
from .lie_core import (
    Involution,
    LieAlgebraBasis,
    PairwiseSymmetricAlgebra,
    build_algebra,
    decompose,
    killing,
    maximal_abelian_in,
    rank_of,
)
from .loops import LaurentLoop
from .obstruction import CATALOG, GeometryCase, VerdictRow, full_table, verdict
from .pipeline import RunConfig, run_construction, verify_field

__version__ = "0.1.0"

__all__ = [
    "AlignmentResult",
    "CATALOG",
    "ConfigurationError",
    "ConnectionData11",
    "CurvedFlatSeed",
    "FrameField",
    "GeometryCase",
    "GeometryReport",
    "ImmersionSamples",
    "Involution",
    "LaurentLoop",
    "LieAlgebraBasis",
    "LoopFlatImmersion",
    "LoopflatError",
    "ObstructionError",
    "PairwiseSymmetricAlgebra",
    "ParseError",
    "RunConfig",
    "VerdictRow",
    "VerificationError",
    "align_cartan",
    "build_algebra",
    "curvature_report",
    "decompose",
    "extract_connection",
    "factorize",
    "factorize_in_subgroup",
    "full_table",
    "g2_report",
    "kdpw_lift",
    "killing",
    "lagrangian_diagnostics",
    "maximal_abelian_in",
    "mc_residuals",
    "metric_scaling",
    "project",
    "rank_of",
    "run_construction",
    "seed_from_alignment",
    "verdict",
    "verify_field",
]
