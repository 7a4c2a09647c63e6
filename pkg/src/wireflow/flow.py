"""Time integration of the constrained flow.

``step_semi_implicit`` freezes the stiffness and the multipliers at the old
state and solves one cyclic tridiagonal system per variable.
``step_explicit_rk4`` is the classical four-stage rule on ``flow_rhs`` and
serves as a cross-check.  ``run_flow`` adds step-size control keyed to
energy decay and to the discrete dissipation identity.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePi, NoConvergence, SolverFailure, StabilityViolation
from .grid import solve_cyclic_tridiag
from .model import (
    AngleDensityState,
    ModelParams,
    Multipliers,
    _coupling,
    _gradient_from_terms,
    _multipliers_from_terms,
    _terms,
    beta_eval,
    constraint_values,
    energy,
    mean_theta,
    pi_matrix,
    project_closure,
)

logger = logging.getLogger(__name__)

ENERGY_SLACK = 1e-12
GROW = 1.2
SHRINK = 0.5
GROW_RESIDUAL = 0.01

SCHEMES = ("semi_implicit", "explicit_rk4")
TERMINALS = ("reached_t_end", "stationary", "step_failure")

_NO_MULT = Multipliers(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class FlowConfig:
    dt_init: float = 1e-3
    dt_min: float = 1e-8
    dt_max: float = 1e-1
    t_end: float = 50.0
    grad_tol: float = 1e-8
    project_every: int = 1
    scheme: str = "semi_implicit"
    snapshot_every: int = 0
    # False drops the multiplier terms (used for unconstrained verification problems)
    constrained: bool = True

    def __post_init__(self):
        for name in ("dt_init", "dt_min", "dt_max", "t_end", "grad_tol"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive")
        if not self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError("need dt_min <= dt_init <= dt_max")
        if self.project_every < 0:
            raise ValueError("project_every must be >= 0")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be >= 0")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")


@dataclass(frozen=True)
class StepDiagnostics:
    time: float
    dt: float
    energy: float
    dissipation: float
    mult: Multipliers
    gcos: float
    gsin: float
    gmass: float
    mean_theta: float
    grad_norm: float
    det_pi: float


@dataclass
class Trajectory:
    diagnostics: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)  # (time, AngleDensityState)
    terminal: str = "reached_t_end"
    rejections: int = 0

    @property
    def final_state(self) -> AngleDensityState:
        return self.snapshots[-1][1]

    @property
    def times(self):
        return np.array([d.time for d in self.diagnostics])

    @property
    def energies(self):
        return np.array([d.energy for d in self.diagnostics])


def rhs(state: AngleDensityState, params: ModelParams, constrained: bool = True):
    """``flow_rhs`` with the option of switching the multiplier terms off."""
    g = state.grid
    t = _terms(state, params)
    mult = _multipliers_from_terms(state, params, t) if constrained else _NO_MULT
    grad_theta, grad_rho = _gradient_from_terms(g, params, t)
    dtheta = -grad_theta + mult.lam_theta1 * t.sin - mult.lam_theta2 * t.cos
    drho = -grad_rho - mult.lam_rho
    return dtheta, drho, mult


def diagnose(state, params, dt=0.0, constrained=True) -> StepDiagnostics:
    g = state.grid
    dtheta, drho, mult = rhs(state, params, constrained)
    diss = g.integrate(dtheta**2 + drho**2)
    gcos, gsin, gmass = constraint_values(state, params)
    _, det = pi_matrix(state)
    return StepDiagnostics(
        time=state.time,
        dt=dt,
        energy=energy(state, params),
        dissipation=diss,
        mult=mult,
        gcos=gcos,
        gsin=gsin,
        gmass=gmass,
        mean_theta=mean_theta(state),
        grad_norm=math.sqrt(diss),
        det_pi=det,
    )


def step_semi_implicit(state, params, dt, project=False, constrained=True):
    """Advance one linearly implicit step; returns ``(next_state, diagnostics of next_state)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    g = state.grid
    t = _terms(state, params)
    mult = _multipliers_from_terms(state, params, t) if constrained else _NO_MULT
    w = dt / g.h**2

    # (I - dt d/ds(beta_mid d/ds)) shift_new = shift + dt * (explicit part); the
    # affine part of the angle contributes the constant slope inside the flux.
    bm = t.beta_mid  # bm[i] at s_{i+1/2}
    bm_left = np.roll(bm, 1)
    sub = -w * bm_left
    sup = -w * bm
    diag = 1.0 + w * (bm + bm_left)
    src = (g.slope(state.omega) - params.c0) * g.backward_div(bm)
    src = src + mult.lam_theta1 * t.sin - mult.lam_theta2 * t.cos
    shift = solve_cyclic_tridiag(sub, diag, sup, state.shift + dt * src)

    wm = w * params.mu
    off = np.full(g.n, -wm)
    rhs_rho = state.rho + dt * (-0.5 * t.dbeta * _coupling(t) - mult.lam_rho)
    rho = solve_cyclic_tridiag(off, np.full(g.n, 1.0 + 2.0 * wm), off, rhs_rho)

    nxt = state.with_fields(shift=shift, rho=rho, time=state.time + dt)
    if project:
        nxt = project_closure(nxt, params)
    return nxt, diagnose(nxt, params, dt, constrained)


def rk4_stability_bound(state, params) -> float:
    beta, _, _ = beta_eval(params.beta, state.rho)
    return state.grid.h**2 / (2.0 * float(np.max(beta)) + 2.0 * params.mu)


def step_explicit_rk4(state, params, dt, project=False, constrained=True):
    """Classical four-stage step; multipliers are recomputed at every stage."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    bound = rk4_stability_bound(state, params)
    if dt > bound:
        raise StabilityViolation(f"dt = {dt:.3e} exceeds explicit bound {bound:.3e}")

    def f(th, rh):
        d1, d2, _ = rhs(state.with_fields(shift=th, rho=rh), params, constrained)
        return d1, d2

    th, rh = state.shift, state.rho
    k1 = f(th, rh)
    k2 = f(th + 0.5 * dt * k1[0], rh + 0.5 * dt * k1[1])
    k3 = f(th + 0.5 * dt * k2[0], rh + 0.5 * dt * k2[1])
    k4 = f(th + dt * k3[0], rh + dt * k3[1])
    shift = th + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    rho = rh + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    nxt = state.with_fields(shift=shift, rho=rho, time=state.time + dt)
    if project:
        nxt = project_closure(nxt, params)
    return nxt, diagnose(nxt, params, dt, constrained)


_STEPPERS = {"semi_implicit": step_semi_implicit, "explicit_rk4": step_explicit_rk4}


def run_flow(state0: AngleDensityState, params: ModelParams, config: FlowConfig) -> Trajectory:
    """Advance until ``t_end``, stationarity (``grad_norm < grad_tol``) or step failure.

    A step is rejected (and ``dt`` halved, not below ``dt_min``) when the
    energy rises by more than 1e-12 or the linear solve/projection fails.
    After an accepted step whose relative dissipation-identity residual is
    below 0.01, ``dt`` grows by 1.2 up to ``dt_max``.
    """
    if state0.omega != params.omega:
        raise ValueError(f"state winding {state0.omega} != model winding {params.omega}")
    stepper = _STEPPERS[config.scheme]
    traj = Trajectory()
    state = state0
    cur = diagnose(state, params, 0.0, config.constrained)
    traj.diagnostics.append(cur)
    traj.snapshots.append((state.time, state))
    if cur.grad_norm < config.grad_tol:
        traj.terminal = "stationary"
        return traj

    t_end = state0.time + config.t_end
    dt = config.dt_init
    steps = 0
    traj.terminal = "reached_t_end"
    while t_end - state.time > 1e-12 * max(1.0, t_end):
        dt_try = min(dt, t_end - state.time)
        project = config.project_every > 0 and (steps + 1) % config.project_every == 0
        try:
            nxt, new = stepper(state, params, dt_try, project, config.constrained)
            ok = math.isfinite(new.energy) and new.energy <= cur.energy + ENERGY_SLACK
        except (SolverFailure, NoConvergence, StabilityViolation, ValueError) as exc:
            logger.debug("step at t=%.6g dt=%.3e failed: %s", state.time, dt_try, exc)
            ok = False
        except DegeneratePi as exc:
            logger.warning("degenerate multiplier matrix at t=%.6g: %s", state.time, exc)
            traj.terminal = "step_failure"
            break
        if not ok:
            traj.rejections += 1
            if dt <= config.dt_min:
                logger.warning("step rejected at dt_min=%.3e, t=%.6g", dt, state.time)
                traj.terminal = "step_failure"
                break
            dt = max(SHRINK * dt, config.dt_min)
            logger.info("rejected step at t=%.6g, dt -> %.3e", state.time, dt)
            continue

        residual = abs((new.energy - cur.energy) / dt_try + cur.dissipation) / (1.0 + cur.dissipation)
        if residual < GROW_RESIDUAL and dt_try == dt:
            dt = min(GROW * dt, config.dt_max)
        state, cur = nxt, new
        steps += 1
        traj.diagnostics.append(cur)
        if config.snapshot_every and steps % config.snapshot_every == 0:
            traj.snapshots.append((state.time, state))
        if cur.grad_norm < config.grad_tol:
            traj.terminal = "stationary"
            break

    if traj.snapshots[-1][1] is not state:
        traj.snapshots.append((state.time, state))
    return traj
