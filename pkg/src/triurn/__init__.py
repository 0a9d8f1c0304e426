"""Exact asymptotics and Monte Carlo verification for triangular urn processes.

A triangular urn draws a ball with probability proportional to activity-
weighted colour counts and adds a random replacement vector depending on the
drawn colour; "triangular" means the may-add relation between colours is
acyclic.  This package computes the exact growth exponents and limit
constants from the replacement structure, simulates the discrete urn and its
continuous-time embedding, and verifies the predictions by exact enumeration
and seeded Monte Carlo.
"""

from .corpus import CORPUS, build as build_corpus_spec, corpus_names
from .limits import (
    AnalysisError,
    AnalysisReport,
    CoefficientTable,
    ExactValue,
    LimitReport,
    Normalization,
    analyze_spec,
    classify_limits,
    compute_coefficients,
    normalization,
    predicted_constants_drawn,
)
from .model import (
    MeanMatrix,
    ReplacementRow,
    SpecError,
    UrnSpec,
    ValidationReport,
    emit_spec,
    mean_matrix,
    mean_urn,
    parse_spec,
    parse_spec_file,
    validate,
)
from .simulate import (
    Checkpoint,
    RngPlan,
    SimulationPlan,
    Trajectory,
    UrnState,
    enumerate_exact,
    exact_mean,
    run,
    step_continuous,
    step_discrete,
)
from .structure import (
    ColourGraph,
    ExponentTable,
    NonTriangularError,
    RoleTable,
    StructureReport,
    analyze_structure,
    build_graph,
    classify_roles,
    compute_exponents,
    extend_dummy_iota,
    extend_dummy_zero,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisError",
    "AnalysisReport",
    "CORPUS",
    "Checkpoint",
    "CoefficientTable",
    "ColourGraph",
    "ExactValue",
    "ExponentTable",
    "LimitReport",
    "MeanMatrix",
    "NonTriangularError",
    "Normalization",
    "ReplacementRow",
    "RngPlan",
    "RoleTable",
    "SimulationPlan",
    "SpecError",
    "StructureReport",
    "Trajectory",
    "UrnSpec",
    "UrnState",
    "ValidationReport",
    "analyze_spec",
    "analyze_structure",
    "build_corpus_spec",
    "build_graph",
    "classify_limits",
    "classify_roles",
    "compute_coefficients",
    "compute_exponents",
    "corpus_names",
    "emit_spec",
    "enumerate_exact",
    "exact_mean",
    "extend_dummy_iota",
    "extend_dummy_zero",
    "mean_matrix",
    "mean_urn",
    "normalization",
    "parse_spec",
    "parse_spec_file",
    "predicted_constants_drawn",
    "run",
    "step_continuous",
    "step_discrete",
    "validate",
]
