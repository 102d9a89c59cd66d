"""Nonlinear potentials and pointwise estimates for measure-data problems."""
from .coefficients import Constant, HolderBump, Jump, Modulus, parse_coefficient
from .elliptic import ConvergenceError, SolverConfig, StructuredVectorField, check_structure, p_laplacian, solve_dirichlet
from .field import Ball, Grid, ScalarField, VectorField, ball_average, cylinder_average, gradient
from .fractional import (
    caccioppoli_classic,
    caccioppoli_nonlocal,
    degiorgi_bound_check,
    gagliardo_seminorm,
)
from .measure import BackwardCylinder, DensityGrid, RadonMeasure
from .parabolic import ParabolicVectorField, check_parabolic_structure, solve_parabolic
from .potential import (
    QuadratureSpec,
    caloric_potential,
    havin_mazja,
    riesz_global,
    truncated_riesz,
    wolff,
)
from .verify import VerificationReport, empirical_constant, mapping_experiment, refinement_study

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
