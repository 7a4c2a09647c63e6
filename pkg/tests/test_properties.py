import json
import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from wireflow import ModelParams, StiffnessProfile, energy, flow_rhs, gradient, make_grid, pi_matrix, winding
from wireflow.grid import cyclic_tridiag_matvec, solve_cyclic_tridiag
from wireflow.model import AngleDensityState, constraint_gradients
from wireflow.serialize import snapshot_dict, state_from_dict
from oracles import det_pi_double_sum

coef = st.floats(-0.15, 0.15)
profiles = st.sampled_from(
    [
        StiffnessProfile.constant(1.3),
        StiffnessProfile.exponential(1.0, 0.7),
        StiffnessProfile.gaussian_bump(1.0, 1.0, 1.0, 0.0),
        StiffnessProfile.polynomial((1.0, -0.5, 0.3)),
    ]
)


@st.composite
def smooth_states(draw, n=st.sampled_from([64, 96, 128])):
    """Few-mode trigonometric angle and density on a random length and winding."""
    g = make_grid(draw(st.floats(1.0, 10.0)), draw(n))
    omega = draw(st.sampled_from([-2, -1, 1, 2, 3]))
    k = 2 * math.pi / g.L
    s = g.nodes
    shift = sum(draw(coef) * np.sin(m * k * s) + draw(coef) * np.cos(m * k * s) for m in (1, 2, 3))
    shift = shift + draw(st.floats(-3, 3))
    rho = draw(st.floats(-0.5, 0.5)) + sum(draw(coef) * np.cos(m * k * s + draw(st.floats(0, 6))) for m in (1, 2))
    return AngleDensityState.from_shift(shift, rho, g, omega)


def model(state, beta, mu, c0):
    return ModelParams(state.grid.L, mu, c0, state.omega, beta, 0.0)


@given(smooth_states(), profiles, st.floats(0.1, 2.0), st.floats(-1.0, 1.0))
def test_rhs_is_minus_projected_gradient(state, beta, mu, c0):
    p = model(state, beta, mu, c0)
    dth, drh, m = flow_rhs(state, p)
    gt, gr = gradient(state, p)
    (g1t, g1r), (g2t, g2r), (g3t, g3r) = constraint_gradients(state)
    lam = (m.lam_theta1, m.lam_theta2, m.lam_rho)
    rt = dth + gt + lam[0] * g1t + lam[1] * g2t + lam[2] * g3t
    rr = drh + gr + lam[0] * g1r + lam[1] * g2r + lam[2] * g3r
    scale = 1 + max(np.max(np.abs(gt)), np.max(np.abs(gr)))
    assert max(np.max(np.abs(rt)), np.max(np.abs(rr))) <= 1e-12 * scale


@given(smooth_states(), profiles, st.floats(0.1, 2.0), st.floats(-1.0, 1.0))
def test_rhs_is_tangent_to_constraints(state, beta, mu, c0):
    p = model(state, beta, mu, c0)
    g = state.grid
    dth, drh, _ = flow_rhs(state, p)
    scale = g.L * (1 + np.max(np.abs(dth)) + np.max(np.abs(drh)))
    for gt, gr in constraint_gradients(state):
        assert abs(g.integrate(gt * dth + gr * drh)) <= 1e-11 * scale


@given(smooth_states(), profiles, st.floats(0.1, 2.0), st.floats(-1.0, 1.0))
def test_energy_decreases_along_rhs(state, beta, mu, c0):
    p = model(state, beta, mu, c0)
    dth, drh, _ = flow_rhs(state, p)
    gt, gr = gradient(state, p)
    g = state.grid
    rate = g.integrate(gt * dth + gr * drh)
    assert rate <= 1e-12 * (1 + abs(rate))
    assert abs(rate + g.integrate(dth**2 + drh**2)) <= 1e-10 * (1 + abs(rate))


@given(smooth_states(n=st.sampled_from([64, 128])))
def test_det_pi_matches_double_sum(state):
    _, det = pi_matrix(state)
    assert abs(det - det_pi_double_sum(state.theta, state.grid.h)) <= 1e-10 * (1 + state.grid.L**2)


@given(smooth_states(), profiles, st.floats(0.1, 2.0), st.floats(-1.0, 1.0), st.integers(0, 2**32 - 1))
def test_gradient_directional_derivative(state, beta, mu, c0, seed):
    p = model(state, beta, mu, c0)
    g = state.grid
    rng = np.random.default_rng(seed)
    k = 2 * math.pi / g.L
    v = sum(rng.normal() * np.sin(m * k * g.nodes + rng.uniform(0, 6)) for m in range(1, 4))
    w = sum(rng.normal() * np.cos(m * k * g.nodes + rng.uniform(0, 6)) for m in range(0, 3))
    eps = 1e-5
    plus = energy(state.with_fields(shift=state.shift + eps * v, rho=state.rho + eps * w), p)
    minus = energy(state.with_fields(shift=state.shift - eps * v, rho=state.rho - eps * w), p)
    gt, gr = gradient(state, p)
    exact = g.integrate(gt * v + gr * w)
    assert abs((plus - minus) / (2 * eps) - exact) <= 1e-6 * max(abs(exact), 1e-3)


@given(smooth_states())
def test_winding_survives_snapshot_round_trip(state):
    back = state_from_dict(json.loads(json.dumps(snapshot_dict(state))))
    assert back.omega == state.omega == winding(state, verify=True)
    assert np.array_equal(back.theta, state.theta) and np.array_equal(back.rho, state.rho)
    assert np.max(np.abs(back.shift - state.shift)) <= 4 * np.finfo(float).eps * (1 + np.max(np.abs(state.theta)))


@given(
    st.integers(8, 60),
    st.floats(0.0, 50.0),
    st.floats(0.05, 3.0),
    st.integers(0, 2**32 - 1),
)
def test_constants_annihilated_and_derivative_mean_free(n, c, L, seed):
    g = make_grid(L, n)
    assert np.all(g.deriv1(np.full(n, c)) == 0.0) and np.all(g.deriv2(np.full(n, c)) == 0.0)
    f = np.random.default_rng(seed).normal(size=n)
    assert abs(g.integrate(g.deriv1(f))) <= 1e-13 * (1 + np.max(np.abs(f)))
    assert abs(g.integrate(g.deriv2(f))) <= 1e-12 * (1 + np.max(np.abs(f))) / g.h


@given(st.integers(8, 200), st.floats(0.3, 0.99), st.integers(0, 2**32 - 1))
def test_cyclic_solver_residual(n, dominance, seed):
    rng = np.random.default_rng(seed)
    sub, sup = rng.uniform(-1, 1, n), rng.uniform(-1, 1, n)
    diag = (np.abs(sub) + np.abs(sup) + 1e-3) / dominance * rng.choice([-1, 1], n)
    b = rng.normal(size=n)
    x = solve_cyclic_tridiag(sub, diag, sup, b)
    assert np.max(np.abs(cyclic_tridiag_matvec(sub, diag, sup, x) - b)) <= 1e-10 * np.max(np.abs(b))
