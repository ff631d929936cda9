"""Multistep schemes on integer-offset stencils for scalar BSDEs.

The package builds one-sided derivative stencils from integer step
offsets, diagnoses the stability and convergence behaviour of the induced
backward scheme, and solves test problems by backward induction with
Gauss-Hermite conditional expectations, exposing the solver through a
scikit-learn style fit/predict estimator plus a CLI for diagnostics and
convergence studies.
"""

from .diagnostics import (
    CharacteristicPolynomial,
    LagCoefficients,
    SchemeDiagnostics,
    characteristic_polynomial,
    convergence_ratio,
    diagnose,
    diagnostics_table,
    lag_coefficients,
    polynomial_roots,
)
from .grids import (
    LevelData,
    OutOfDomainError,
    SpatialGrid,
    TimeGrid,
    interpolate,
    required_domain,
)
from .problems import BsdeProblem, builtin_problems, get_problem, verify_problem
from .quadrature import HermiteRule, expect, expect_weighted, hermite_rule
from .reporting import StudyReport, fit_order, run_study
from .solver import (
    MultistepBsdeSolver,
    PicardConvergenceError,
    SolutionSurface,
    initialize_levels,
    solve_backward,
    step_y,
    step_z,
)
from .stencil import (
    Stencil,
    StencilParams,
    approximate_derivative,
    make_stencil,
    truncation_order_probe,
)

__version__ = "0.1.0"

__all__ = [
    "BsdeProblem",
    "CharacteristicPolynomial",
    "HermiteRule",
    "LagCoefficients",
    "LevelData",
    "MultistepBsdeSolver",
    "OutOfDomainError",
    "PicardConvergenceError",
    "SchemeDiagnostics",
    "SolutionSurface",
    "SpatialGrid",
    "Stencil",
    "StencilParams",
    "StudyReport",
    "TimeGrid",
    "approximate_derivative",
    "builtin_problems",
    "characteristic_polynomial",
    "convergence_ratio",
    "diagnose",
    "diagnostics_table",
    "expect",
    "expect_weighted",
    "fit_order",
    "get_problem",
    "hermite_rule",
    "initialize_levels",
    "interpolate",
    "lag_coefficients",
    "make_stencil",
    "polynomial_roots",
    "required_domain",
    "run_study",
    "solve_backward",
    "step_y",
    "step_z",
    "truncation_order_probe",
    "verify_problem",
]
