"""Residual of the stationary system and Newton refinement of flow limits.

Newton works on the KKT form: the three multipliers become unknowns next to
the angle and the density, and the three constraints are appended.  Rotating
a critical curve (``theta + const``) gives another critical curve, so the
plain KKT Jacobian is singular; the mean angle is pinned with a fourth
constraint whose multiplier vanishes at every solution.  Sliding the start
point along a non-circular curve is a second (discretely almost exact)
symmetry; when the state is not rotation-like it is pinned the same way,
orthogonally to the arc-length translation generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import NoConvergence, SingularJacobian
from .model import (
    AngleDensityState,
    ModelParams,
    Multipliers,
    _gradient_from_terms,
    _terms,
    energy,
    flow_rhs,
)


@dataclass(frozen=True)
class StationaryReport:
    residual_theta: float  # max norm
    residual_rho: float
    residual_l2: float  # quadrature L2 norm of both components
    mult: Multipliers
    energy: float
    iterations: int = 0
    kkt_mult: Multipliers | None = None


def stationary_residual(state: AngleDensityState, params: ModelParams) -> StationaryReport:
    dtheta, drho, mult = flow_rhs(state, params)
    return StationaryReport(
        residual_theta=float(np.max(np.abs(dtheta))),
        residual_rho=float(np.max(np.abs(drho))),
        residual_l2=math.sqrt(state.grid.integrate(dtheta**2 + drho**2)),
        mult=mult,
        energy=energy(state, params),
    )


def _state_norm(state):
    return math.sqrt(state.grid.integrate(state.theta**2 + state.rho**2))


# translation gauge is used when |generator|_L2 exceeds this fraction of sqrt(L)
TRANSLATION_GAUGE_MIN = 1e-4


def _local_residual(state, params, lam, gauge):
    """Stationary equations with prescribed multipliers ``lam = (l1, l2, lrho, nu, nu_t)``."""
    t = _terms(state, params)
    grad_theta, grad_rho = _gradient_from_terms(state.grid, params, t)
    r_theta = -grad_theta + lam[0] * t.sin - lam[1] * t.cos + lam[3]
    r_rho = -grad_rho - lam[2]
    if gauge is not None:
        r_theta = r_theta + lam[4] * gauge[0]
        r_rho = r_rho + lam[4] * gauge[1]
    return r_theta, r_rho


def _constraints(state, params, ref, gauge):
    g = state.grid
    rows = [
        g.integrate(np.cos(state.theta)),
        g.integrate(np.sin(state.theta)),
        g.integrate(state.rho) - params.mass,
        g.integrate(state.shift - ref.shift),
    ]
    if gauge is not None:
        rows.append(g.integrate((state.shift - ref.shift) * gauge[0] + (state.rho - ref.rho) * gauge[1]))
    return np.array(rows)


def _translation_generator(state):
    g = state.grid
    gen = (g.deriv1(state.shift), g.deriv1(state.rho))
    size = math.sqrt(g.integrate(gen[0] ** 2 + gen[1] ** 2))
    return gen if size > TRANSLATION_GAUGE_MIN * math.sqrt(g.L) else None


def _colors(n):
    """Greedy colouring so that same-colour nodes are at cyclic distance >= 3."""
    col = [-1] * n
    for i in range(n):
        taken = {col[(i + d) % n] for d in (-2, -1, 1, 2)}
        c = 0
        while c in taken:
            c += 1
        col[i] = c
    return np.array(col)


def _jacobian(state, params, lam, eps, gauge):
    g = state.grid
    n = g.n
    base_t, base_r = _local_residual(state, params, lam, gauge)
    colors = _colors(n)
    rows, cols, vals = [], [], []
    idx = np.arange(n)
    for var in (0, 1):  # 0: theta columns, 1: rho columns
        for c in range(colors.max() + 1):
            group = idx[colors == c]
            th = np.array(state.shift)
            rh = np.array(state.rho)
            (th if var == 0 else rh)[group] += eps
            pt, pr = _local_residual(state.with_fields(shift=th, rho=rh), params, lam, gauge)
            dt_ = (pt - base_t) / eps
            dr_ = (pr - base_r) / eps
            for j in group:
                for i in ((j - 1) % n, j, (j + 1) % n):
                    col = j + var * n
                    rows += [i, i + n]
                    cols += [col, col]
                    vals += [dt_[i], dr_[i]]
    # multiplier columns
    s, c_ = np.sin(state.theta), np.cos(state.theta)
    rows += list(idx) + list(idx) + list(idx) + list(idx + n)
    cols += [2 * n] * n + [2 * n + 1] * n + [2 * n + 3] * n + [2 * n + 2] * n
    vals += list(s) + list(-c_) + [1.0] * n + [-1.0] * n
    # constraint rows
    h = g.h
    rows += [2 * n] * n + [2 * n + 1] * n + [2 * n + 2] * n + [2 * n + 3] * n
    cols += list(idx) + list(idx) + list(idx + n) + list(idx)
    vals += list(-h * s) + list(h * c_) + [h] * n + [h] * n
    size = 2 * n + 4
    if gauge is not None:
        k = 2 * n + 4
        rows += list(idx) + list(idx + n) + [k] * (2 * n)
        cols += [k] * (2 * n) + list(idx) + list(idx + n)
        vals += list(gauge[0]) + list(gauge[1]) + list(h * gauge[0]) + list(h * gauge[1])
        size += 1
    return sp.csc_matrix((vals, (rows, cols)), shape=(size, size))


def newton_refine(
    state: AngleDensityState,
    params: ModelParams,
    tol: float = 1e-12,
    max_iter: int = 20,
):
    """Sharpen an approximate critical point by damped Newton on the KKT system.

    Returns ``(refined_state, report)``; ``report`` carries the formula-based
    residual of the refined state, the Newton iteration count and the KKT
    multipliers.  The mean angle of the input is preserved.
    """
    start = stationary_residual(state, params)
    if start.residual_l2 > 1e-3 * (1.0 + _state_norm(state)):
        raise ValueError(
            f"state too far from a critical point for Newton refinement "
            f"(L2 residual {start.residual_l2:.3e})"
        )
    g = state.grid
    n = g.n
    ref = state
    gauge = _translation_generator(state)
    m = start.mult
    lam = np.array([m.lam_theta1, m.lam_theta2, m.lam_rho, 0.0, 0.0])

    def full_residual(st, lm):
        rt, rr = _local_residual(st, params, lm, gauge)
        return np.concatenate([rt, rr, _constraints(st, params, ref, gauge)])

    r = full_residual(state, lam)
    it = 0
    while np.max(np.abs(r)) > tol:
        if it >= max_iter:
            raise NoConvergence(f"KKT residual {np.max(np.abs(r)):.3e} after {it} Newton iterations")
        eps = 1e-7 * (1.0 + max(np.max(np.abs(state.theta)), np.max(np.abs(state.rho))))
        jac = _jacobian(state, params, lam, eps, gauge)
        try:
            delta = splu(jac).solve(-r)
        except RuntimeError as exc:
            raise SingularJacobian(str(exc)) from exc
        if not np.all(np.isfinite(delta)):
            raise SingularJacobian("non-finite Newton update")
        norm0 = np.max(np.abs(r))
        step = 1.0
        for _ in range(12):
            cand = state.with_fields(
                shift=state.shift + step * delta[:n], rho=state.rho + step * delta[n : 2 * n]
            )
            cand_lam = lam.copy()
            cand_lam[: delta.size - 2 * n] += step * delta[2 * n :]
            cand_r = full_residual(cand, cand_lam)
            if np.max(np.abs(cand_r)) < norm0:
                break
            step *= 0.5
        else:
            raise NoConvergence(f"line search failed at KKT residual {norm0:.3e}")
        state, lam, r = cand, cand_lam, cand_r
        it += 1

    report = stationary_residual(state, params)
    return state, StationaryReport(
        residual_theta=report.residual_theta,
        residual_rho=report.residual_rho,
        residual_l2=report.residual_l2,
        mult=report.mult,
        energy=report.energy,
        iterations=it,
        kkt_mult=Multipliers(float(lam[0]), float(lam[1]), float(lam[2])),
    )
