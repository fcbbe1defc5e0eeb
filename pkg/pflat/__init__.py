"""
pflat - Discrete conformal variations of piecewise flat manifolds

Computes curvatures, curvature Jacobians and Einstein-Hilbert-Regge Hessians
of closed piecewise flat 2- and 3-manifolds under conformal variations of a
decorated metric, and solves prescribed-curvature problems by Newton's method
or gradient flow.
"""

__version__ = "0.1.0"

# Configuration
from .config import (
    load_config,
    get_setting,
    get_thread_count,
    get_log_level,
    configure_logging,
    CONFIG_PATH,
    DEFAULTS,
)

# Errors
from .exceptions import (
    PflatError,
    ComplexError,
    NonManifold,
    DuplicateSimplex,
    UnknownSimplex,
    Degenerate,
    OutOfDomain,
    ParseError,
    InfeasibleTarget,
    NotCritical,
    SolverError,
    MaxIterations,
    LeftDomain,
    SingularHessian,
    AbortNonMonotone,
)

# Complexes and simplex geometry
from .complex import SimplicialComplex, build_complex
from .geometry import (
    cayley_menger,
    cm_volume,
    is_nondegenerate,
    face_angle,
    triangle_angles,
    dihedral_angles,
    dihedral_angle,
    solid_angle,
    solid_angles,
    embed_simplex,
)

# Metrics and duals
from .metric import (
    PreMetric,
    DualData,
    MetricReport,
    dual_data,
    height_2d,
    height_3d,
    dual_area,
    dual_length,
    vertex_volume,
    vertex_volumes,
    edge_volume,
    check_metric,
)

# Conformal charts
from .conformal import (
    ConformalChart,
    PackingChart,
    FixedInversiveChart,
    PerpBisectorChart,
    DomainReport,
    CHART_KINDS,
    make_chart,
)

# Curvature
from .curvature import (
    CurvatureReport,
    curvature_2d,
    edge_curvature_3d,
    scalar_curvature_3d,
    vertex_curvature,
    packing_scalar_curvature,
    ehr,
    total_volume,
    residuals,
    curvature_report,
)

# Variations
from .variation import (
    SparseOperator,
    QuadraticForm,
    angle_gradient_2d,
    dihedral_gradient_3d,
    dual_row_sums,
    laplacian,
    laplacian_weak_form,
    curvature_jacobian,
    ehr_hessian,
    functional_F,
    fd_jacobian,
    fd_second_directional,
)

# Solvers and diagnostics
from .solver import (
    SolveTarget,
    SolveProblem,
    SolveTrace,
    StepPolicy,
    Spectrum,
    DefinitenessReport,
    RigidityReport,
    newton_solve,
    gradient_flow,
    operator_spectrum,
    definiteness_report,
    rigidity_check,
)

# Mesh files and standard triangulations
from .meshfile import MeshFile, parse_mesh, serialize_mesh, read_mesh, write_mesh, off_to_mesh
from .catalog import Fixture, CATALOG, fixture

# CLI entry point
from .cli import main

__all__ = [
    # Configuration
    "load_config",
    "get_setting",
    "get_thread_count",
    "get_log_level",
    "configure_logging",
    "CONFIG_PATH",
    "DEFAULTS",
    # Errors
    "PflatError",
    "ComplexError",
    "NonManifold",
    "DuplicateSimplex",
    "UnknownSimplex",
    "Degenerate",
    "OutOfDomain",
    "ParseError",
    "InfeasibleTarget",
    "NotCritical",
    "SolverError",
    "MaxIterations",
    "LeftDomain",
    "SingularHessian",
    "AbortNonMonotone",
    # Complexes and simplex geometry
    "SimplicialComplex",
    "build_complex",
    "cayley_menger",
    "cm_volume",
    "is_nondegenerate",
    "face_angle",
    "triangle_angles",
    "dihedral_angles",
    "dihedral_angle",
    "solid_angle",
    "solid_angles",
    "embed_simplex",
    # Metrics and duals
    "PreMetric",
    "DualData",
    "MetricReport",
    "dual_data",
    "height_2d",
    "height_3d",
    "dual_area",
    "dual_length",
    "vertex_volume",
    "vertex_volumes",
    "edge_volume",
    "check_metric",
    # Conformal charts
    "ConformalChart",
    "PackingChart",
    "FixedInversiveChart",
    "PerpBisectorChart",
    "DomainReport",
    "CHART_KINDS",
    "make_chart",
    # Curvature
    "CurvatureReport",
    "curvature_2d",
    "edge_curvature_3d",
    "scalar_curvature_3d",
    "vertex_curvature",
    "packing_scalar_curvature",
    "ehr",
    "total_volume",
    "residuals",
    "curvature_report",
    # Variations
    "SparseOperator",
    "QuadraticForm",
    "angle_gradient_2d",
    "dihedral_gradient_3d",
    "dual_row_sums",
    "laplacian",
    "laplacian_weak_form",
    "curvature_jacobian",
    "ehr_hessian",
    "functional_F",
    "fd_jacobian",
    "fd_second_directional",
    # Solvers and diagnostics
    "SolveTarget",
    "SolveProblem",
    "SolveTrace",
    "StepPolicy",
    "Spectrum",
    "DefinitenessReport",
    "RigidityReport",
    "newton_solve",
    "gradient_flow",
    "operator_spectrum",
    "definiteness_report",
    "rigidity_check",
    # Mesh files and standard triangulations
    "MeshFile",
    "parse_mesh",
    "serialize_mesh",
    "read_mesh",
    "write_mesh",
    "off_to_mesh",
    "Fixture",
    "CATALOG",
    "fixture",
    # CLI
    "main",
]
