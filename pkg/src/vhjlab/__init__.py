"""Numerical laboratory for viscous Hamilton-Jacobi equations with superquadratic gradient terms."""

from .domain import Grid, build_grid
from .parabolic import ParabolicProblem, StepControl, solve_parabolic
from .stationary import StationaryProblem, solve_stationary, solve_state_constraint
from .ergodic import ergodic_solve
from .analysis import beta_exponent, holder_seminorm, asymptotic_slope
from .supconv import TimeSeriesField, sup_convolve

__all__ = [
    "Grid", "build_grid", "ParabolicProblem", "StepControl", "solve_parabolic",
    "StationaryProblem", "solve_stationary", "solve_state_constraint", "ergodic_solve",
    "beta_exponent", "holder_seminorm", "asymptotic_slope", "TimeSeriesField", "sup_convolve",
]
