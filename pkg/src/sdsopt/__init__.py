"""Exact second-order cone relaxations for convex polynomial programs.

Sparse polynomials, dd/sdd matrix cones with certificates, an embedded
operator-splitting SOCP solver, SDSOS and first-order-convexity certification,
sup-representable semi-algebraic functions, the dual/moment relaxation pair
with solution recovery and assumption checks, a robust-optimization front end,
and brute-force oracles for cross-checking.
"""

from .certify import (
    CertifyResult,
    SdsosCertificate,
    SdsosRefutation,
    certify_first_order_convex,
    certify_sdsos,
    reduce_basis,
)
from .matrixcones import (
    SddCertificate,
    SddRefutation,
    SddResult,
    SymMatrix,
    assemble_blocks,
    certify_sdd,
    is_dd,
    verify_certificate,
)
from .oracle import (
    GridResult,
    GridSpec,
    gen_instance,
    gen_instance_detail,
    grid_minimize,
    lift_point,
)
from .poly import (
    MonomialBasis,
    Polynomial,
    basis_size,
    differentiate,
    first_order_gap,
    gradient,
    monomial_basis,
    poly_eval,
)
from .relax import (
    A2Report,
    MomentVector,
    RelaxationReport,
    SlaterReport,
    build_dual,
    build_moment,
    check_a2,
    check_slater,
    default_degree,
    lin_functional,
    recover,
    solve_program,
)
from .robust import (
    RobustProgram,
    UncertaintySet,
    lift_uncertainty,
    reformulate,
    solve_robust,
)
from .semialg import (
    Inconclusive,
    Program,
    SemiAlgebraicFunction,
    SocpSet,
    Unbounded,
    add,
    box_set,
    from_polynomial,
    norm1_function,
    norm2_function,
    trivial_set,
    unit_ball_set,
    validate,
)
from .socp import (
    ConicProgram,
    ConicSolution,
    FeasibilityResult,
    ProgramBuilder,
    SolverError,
    SolverSettings,
    SolveStatus,
    feasibility,
    register_backend,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "A2Report",
    "CertifyResult",
    "ConicProgram",
    "ConicSolution",
    "FeasibilityResult",
    "GridResult",
    "GridSpec",
    "Inconclusive",
    "MomentVector",
    "MonomialBasis",
    "Polynomial",
    "Program",
    "ProgramBuilder",
    "RelaxationReport",
    "RobustProgram",
    "SddCertificate",
    "SddRefutation",
    "SddResult",
    "SdsosCertificate",
    "SdsosRefutation",
    "SemiAlgebraicFunction",
    "SlaterReport",
    "SocpSet",
    "SolveStatus",
    "SolverError",
    "SolverSettings",
    "SymMatrix",
    "Unbounded",
    "UncertaintySet",
    "add",
    "assemble_blocks",
    "basis_size",
    "box_set",
    "build_dual",
    "build_moment",
    "certify_first_order_convex",
    "certify_sdd",
    "certify_sdsos",
    "check_a2",
    "check_slater",
    "default_degree",
    "differentiate",
    "feasibility",
    "first_order_gap",
    "from_polynomial",
    "gen_instance",
    "gen_instance_detail",
    "gradient",
    "grid_minimize",
    "is_dd",
    "lift_point",
    "lift_uncertainty",
    "lin_functional",
    "monomial_basis",
    "norm1_function",
    "norm2_function",
    "poly_eval",
    "recover",
    "reduce_basis",
    "reformulate",
    "register_backend",
    "solve",
    "solve_program",
    "solve_robust",
    "trivial_set",
    "unit_ball_set",
    "validate",
    "verify_certificate",
]
