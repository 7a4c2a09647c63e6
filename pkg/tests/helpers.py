"""Shared test scaffolding (fixed-step trajectories, reference scenarios)."""

import math

import numpy as np

from wireflow import ModelParams, StiffnessProfile, make_grid, project_closure
from wireflow.flow import Trajectory, diagnose, step_explicit_rk4, step_semi_implicit
from wireflow.scenarios import perturbed_circle, winding_zero_seed


def fixed_steps(state, params, dt, steps, scheme="semi_implicit", project=True, constrained=True, snapshot_every=0):
    """Trajectory of ``steps`` steps at constant ``dt``, without any step control."""
    stepper = step_semi_implicit if scheme == "semi_implicit" else step_explicit_rk4
    traj = Trajectory()
    traj.diagnostics.append(diagnose(state, params, 0.0, constrained))
    traj.snapshots.append((state.time, state))
    for k in range(1, steps + 1):
        state, d = stepper(state, params, dt, project, constrained)
        traj.diagnostics.append(d)
        if snapshot_every and k % snapshot_every == 0 and k < steps:
            traj.snapshots.append((state.time, state))
    traj.snapshots.append((state.time, state))
    return traj


HEAT_MU = 0.7


def heat_problem(n):
    """Constant stiffness, c0 = 0, multipliers off: both fields solve heat equations."""
    g = make_grid(2 * math.pi, n)
    p = ModelParams(g.L, HEAT_MU, 0.0, 1, StiffnessProfile.constant(1.0), 0.0)
    return perturbed_circle(g, 1, (0.1,), (2,), 0.0, (0.1,), (3,)), p


def heat_exact(grid, t):
    s = grid.nodes
    return 0.1 * np.exp(-4 * t) * np.sin(2 * s), 0.1 * np.exp(-9 * HEAT_MU * t) * np.cos(3 * s)


def figure_eight(n=128):
    g = make_grid(2 * math.pi, n)
    p = ModelParams(g.L, 0.5, 0.0, 0, StiffnessProfile.exponential(1.0, 0.5), 0.2 * g.L)
    return project_closure(winding_zero_seed(g, 0.0, 0.2, 0.3), p), p


def reversed_circle(n=128):
    g = make_grid(2 * math.pi, n)
    p = ModelParams(g.L, 0.5, -1.0, -1, StiffnessProfile.exponential(1.0, 1.0), 0.0)
    return project_closure(perturbed_circle(g, -1, (0.15,), (3,), 0.0, (0.2,), (2,)), p), p
