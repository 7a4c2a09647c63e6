"""Constrained gradient flow of closed planar elastic wires with a density variable."""

from .errors import (
    DegeneratePi,
    InsufficientTail,
    NoConvergence,
    SingularJacobian,
    SolverFailure,
    StabilityViolation,
    WindingMismatch,
)
from .flow import FlowConfig, StepDiagnostics, Trajectory, run_flow, step_explicit_rk4, step_semi_implicit
from .grid import Grid, make_grid, solve_cyclic_tridiag
from .model import (
    AngleDensityState,
    ModelParams,
    Multipliers,
    StiffnessProfile,
    beta_eval,
    constraint_values,
    energy,
    flow_rhs,
    gradient,
    mean_theta,
    multipliers,
    pi_matrix,
    project_closure,
    reconstruct_curve,
    winding,
)

__version__ = "0.1.0"
