import math

import numpy as np
import pytest

from wireflow import FlowConfig, ModelParams, NoConvergence, StiffnessProfile, make_grid, run_flow, winding
from wireflow.model import constraint_values, multipliers
from wireflow.scenarios import circle, standard_scenario
from wireflow.stationary import newton_refine, stationary_residual
from helpers import figure_eight

TWO_PI = 2 * math.pi


@pytest.fixture(scope="module")
def standard_limit():
    st, p = standard_scenario(256)
    traj = run_flow(st, p, FlowConfig(grad_tol=1e-8))
    assert traj.terminal == "stationary"
    return traj, p


def test_circle_residuals():
    g = make_grid(TWO_PI, 256)
    for beta in (StiffnessProfile.constant(), StiffnessProfile.exponential(1.0, 1.0)):
        rep = stationary_residual(circle(g), ModelParams(g.L, 1.0, 0.0, 1, beta))
        assert rep.residual_theta <= 1e-11 and rep.residual_rho <= 1e-11
    assert rep.mult.lam_rho == pytest.approx(-0.5, abs=1e-14)


def test_residual_matches_grad_norm(standard_limit):
    traj, p = standard_limit
    for d, (_, s) in ((traj.diagnostics[0], traj.snapshots[0]), (traj.diagnostics[-1], traj.snapshots[-1])):
        assert d.time == s.time
        assert abs(stationary_residual(s, p).residual_l2 - d.grad_norm) <= 1e-13


def test_residual_decreases_along_flow(standard_limit):
    traj, p = standard_limit
    g = np.array([d.grad_norm for d in traj.diagnostics])
    t = traj.times
    assert g[np.searchsorted(t, 1.0)] > 0
    assert np.all(np.diff(g) <= 0)


def test_newton_on_exact_circle():
    g = make_grid(TWO_PI, 128)
    st = circle(g, rho_mean=0.5)
    p = ModelParams(g.L, 0.5, 1.0, 1, StiffnessProfile.gaussian_bump(1, 1, 1, 0), 0.5 * g.L)
    out, rep = newton_refine(st, p)
    assert rep.iterations <= 1
    assert np.max(np.abs(out.theta - st.theta)) <= 1e-13
    assert np.max(np.abs(out.rho - st.rho)) <= 1e-13


def test_newton_refines_standard_limit(standard_limit):
    traj, p = standard_limit
    st = traj.final_state
    out, rep = newton_refine(st, p)
    assert max(rep.residual_theta, rep.residual_rho) <= 1e-12
    assert rep.iterations <= 5
    assert abs(rep.energy - traj.energies[-1]) <= 1e-10
    assert all(abs(v) <= 1e-12 for v in constraint_values(out, p))
    assert winding(out, verify=True) == 1
    formula = multipliers(out, p)
    for a, b in zip(vars(rep.kkt_mult).values(), vars(formula).values()):
        assert abs(a - b) <= 1e-9


def test_newton_figure_eight():
    # for omega = 0 the angle itself reaches |theta| ~ 2.4, which puts the
    # rounding floor of the residual near 1.2e-12
    st, p = figure_eight()
    traj = run_flow(st, p, FlowConfig(dt_max=0.03))
    out, rep = newton_refine(traj.final_state, p, tol=1e-11)
    assert max(rep.residual_theta, rep.residual_rho) <= 1e-11
    assert winding(out, verify=True) == 0
    assert all(abs(v) <= 1e-12 for v in constraint_values(out, p))
    formula = multipliers(out, p)
    assert abs(rep.kkt_mult.lam_theta1 - formula.lam_theta1) <= 1e-9
    assert abs(rep.kkt_mult.lam_rho - formula.lam_rho) <= 1e-9


def test_newton_rejects_far_state():
    st, p = standard_scenario(64)
    with pytest.raises(ValueError, match="too far"):
        newton_refine(st, p)


def test_newton_iteration_cap(standard_limit):
    traj, p = standard_limit
    with pytest.raises(NoConvergence):
        newton_refine(traj.final_state, p, max_iter=0)
