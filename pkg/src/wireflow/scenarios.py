"""Initial-data families and the reference scenarios used in tests and examples."""

from __future__ import annotations

import math

import numpy as np

from .grid import make_grid
from .model import AngleDensityState, ModelParams, StiffnessProfile, project_closure

# first positive zero of the Bessel function J0; theta = J0_ZERO * sin(2 pi s / L)
# is a closed figure-eight with rotation index 0
J0_ZERO = 2.404825557695773


def circle(grid, omega=1, rho_mean=0.0, phase=0.0) -> AngleDensityState:
    """Round circle traversed ``omega`` times with uniform density."""
    shift = np.full(grid.n, float(phase))
    return AngleDensityState.from_shift(shift, np.full(grid.n, float(rho_mean)), grid, omega)


def perturbed_circle(
    grid,
    omega=1,
    amplitudes=(0.2,),
    modes=(2,),
    rho_mean=0.0,
    rho_amplitudes=(0.3,),
    rho_modes=(1,),
) -> AngleDensityState:
    """Circle plus sine modes in the angle and cosine modes in the density (not yet projected)."""
    if len(amplitudes) != len(modes) or len(rho_amplitudes) != len(rho_modes):
        raise ValueError("each amplitude needs a mode")
    k = 2.0 * math.pi / grid.L
    s = grid.nodes
    shift = np.zeros(grid.n)
    for a, m in zip(amplitudes, modes):
        shift = shift + a * np.sin(m * k * s)
    rho = np.full(grid.n, float(rho_mean))
    for a, m in zip(rho_amplitudes, rho_modes):
        rho = rho + a * np.cos(m * k * s)
    return AngleDensityState.from_shift(shift, rho, grid, omega)


def winding_zero_seed(grid, amplitude=0.0, rho_mean=0.0, rho_amplitude=0.0) -> AngleDensityState:
    """Figure-eight seed ``(J0_ZERO + amplitude) * sin(2 pi s / L)`` with rotation index 0."""
    k = 2.0 * math.pi / grid.L
    theta = (J0_ZERO + amplitude) * np.sin(k * grid.nodes)
    rho = rho_mean + rho_amplitude * np.cos(k * grid.nodes)
    return AngleDensityState(theta, rho, grid, 0)


def admissible(state: AngleDensityState, params: ModelParams) -> AngleDensityState:
    """Project onto the closure constraints with the model's mass."""
    return project_closure(state, params)


def standard_scenario(n=256):
    """Perturbed circle with a Gaussian-bump stiffness; the reference test problem.

    theta = s + 0.2 sin 2s, rho = 0.5 + 0.3 cos s on L = 2 pi, c0 = 1, mu = 0.5,
    beta(x) = 1 + exp(-x^2).
    """
    L = 2.0 * math.pi
    grid = make_grid(L, n)
    rho_mean = 0.5
    params = ModelParams(
        L=L,
        mu=0.5,
        c0=1.0,
        omega=1,
        beta=StiffnessProfile.gaussian_bump(a=1.0, b=1.0, c=1.0, x0=0.0),
        mass=rho_mean * L,
    )
    state = perturbed_circle(grid, 1, (0.2,), (2,), rho_mean, (0.3,), (1,))
    return admissible(state, params), params


def quadratic_basin_scenario(n=128, eps=0.05):
    """Small perturbation of the circle with constant stiffness: linearized dynamics."""
    L = 2.0 * math.pi
    grid = make_grid(L, n)
    params = ModelParams(
        L=L, mu=1.0, c0=0.5, omega=1, beta=StiffnessProfile.constant(1.0), mass=0.0
    )
    state = perturbed_circle(grid, 1, (eps,), (2,), 0.0, (eps,), (2,))
    return admissible(state, params), params
