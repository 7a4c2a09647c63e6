"""Verification harnesses that consume trajectories or rerun scenarios."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientTail
from .flow import Trajectory, step_semi_implicit
from .model import winding

NOISE_FLOOR = 1e-13


@dataclass(frozen=True)
class DissipationAudit:
    max: float
    mean: float  # dt-weighted time average
    series: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ConservationAudit:
    gcos: float
    gsin: float
    gmass: float
    mean_theta: float
    winding: int


@dataclass(frozen=True)
class OrderStudyReport:
    resolutions: list
    errors: list
    observed_order: float
    below_noise_floor: bool = False

    def to_dict(self) -> dict:
        out = {
            "resolutions": list(self.resolutions),
            "errors": [float(e) for e in self.errors],
            "observed_order": None if math.isnan(self.observed_order) else float(self.observed_order),
        }
        if self.below_noise_floor:
            out["note"] = "order undefined below noise floor"
        return out


@dataclass(frozen=True)
class LojasiewiczFit:
    theta_hat: float  # nan unless slope > 1
    r_squared: float
    slope: float  # d log(E - E_inf) / d log(grad_norm)
    points: int


def dissipation_audit(trajectory: Trajectory) -> DissipationAudit:
    """Residual of the energy identity per accepted step: |(E1 - E0)/dt + D0|."""
    d = trajectory.diagnostics
    if len(d) < 2:
        raise ValueError("dissipation audit needs at least two trajectory entries")
    e = np.array([x.energy for x in d])
    diss = np.array([x.dissipation for x in d])
    dt = np.array([x.dt for x in d[1:]])
    series = np.abs(np.diff(e) / dt + diss[:-1])
    return DissipationAudit(
        max=float(series.max()),
        mean=float(np.sum(series * dt) / np.sum(dt)),
        series=series,
    )


def conservation_audit(trajectory: Trajectory) -> ConservationAudit:
    d = trajectory.diagnostics
    if not d:
        raise ValueError("empty trajectory")

    def drift(name):
        v = np.array([getattr(x, name) for x in d])
        return float(np.max(np.abs(v - v[0])))

    windings = [winding(s, verify=True) for _, s in trajectory.snapshots]
    return ConservationAudit(
        gcos=drift("gcos"),
        gsin=drift("gsin"),
        gmass=drift("gmass"),
        mean_theta=drift("mean_theta"),
        winding=max(abs(w - windings[0]) for w in windings),
    )


def _evolve_fixed(state, params, t_final, steps, constrained):
    dt = t_final / steps
    for _ in range(steps):
        state, _ = step_semi_implicit(state, params, dt, constrained=constrained)
    return state


def _fit_slope(x, y):
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def spatial_order_study(
    build,
    resolutions,
    t_final=0.1,
    dt_factor=0.25,
    constrained=True,
    exact=None,
    reference="successive",
) -> OrderStudyReport:
    """Observed spatial order of the semi-implicit scheme.

    ``build(n)`` returns ``(state, params)`` on an ``n``-node grid.  Each grid
    is advanced to ``t_final`` with ``dt = t_final / steps`` and ``steps``
    scaled by 4 per grid doubling, so ``dt`` is proportional to ``h**2``.
    Without ``exact`` the error of each grid is its max-norm distance to a
    finer grid restricted by subsampling: the next one (``reference =
    "successive"``) or the finest one (``"finest"``, whose own error biases
    the fitted slope upward).  With ``exact(grid, t)`` returning
    ``(shift, rho)`` every grid is compared with it.
    """
    resolutions = [int(r) for r in resolutions]
    if len(resolutions) < 3:
        raise ValueError("order study needs at least three resolutions")
    if any(b % a or b <= a for a, b in zip(resolutions, resolutions[1:])):
        raise ValueError("each resolution must divide the next")
    if reference not in ("successive", "finest"):
        raise ValueError("reference must be 'successive' or 'finest'")

    finals = []
    base_steps = None
    for n in resolutions:
        state, params = build(n)
        if base_steps is None:
            base_steps = max(1, math.ceil(t_final / (dt_factor * state.grid.h**2)))
            steps = base_steps
        else:
            ratio = n // resolutions[0]
            steps = base_steps * ratio * ratio
        finals.append(_evolve_fixed(state, params, t_final, steps, constrained))

    if exact is not None:
        used = resolutions
        errors = []
        for st in finals:
            shift, rho = exact(st.grid, t_final)
            errors.append(max(np.max(np.abs(st.shift - shift)), np.max(np.abs(st.rho - rho))))
    else:
        used = resolutions[:-1]
        errors = []
        refs = finals[1:] if reference == "successive" else [finals[-1]] * (len(finals) - 1)
        for coarse, fine in zip(finals, refs):
            k = fine.grid.n // coarse.grid.n
            errors.append(
                max(
                    np.max(np.abs(coarse.shift - fine.shift[::k])),
                    np.max(np.abs(coarse.rho - fine.rho[::k])),
                )
            )
    errors = [float(e) for e in errors]
    if min(errors) <= NOISE_FLOOR:
        return OrderStudyReport(used, errors, float("nan"), below_noise_floor=True)
    h = np.array([finals[0].grid.L / n for n in used])
    return OrderStudyReport(used, errors, _fit_slope(np.log(h), np.log(errors)))


def lojasiewicz_probe(trajectory: Trajectory, tail_fraction: float = 0.5) -> LojasiewiczFit:
    """Fit log(E - E_inf) against log(grad_norm) over the trajectory tail.

    ``E_inf`` is the final energy; points closer than 1e-13 to it are noise.
    A slope ``p`` corresponds to the exponent ``1 - 1/p`` in
    ``|E - E_inf|^(1 - theta) <= C |grad|``.
    """
    if trajectory.terminal != "stationary":
        raise ValueError("probe needs a trajectory that reached stationarity")
    if not 0.0 < tail_fraction < 1.0:
        raise ValueError("tail_fraction must lie in (0, 1)")
    d = trajectory.diagnostics
    start = int(len(d) * (1.0 - tail_fraction))
    tail = d[start:]
    e_inf = d[-1].energy
    gap = np.array([x.energy - e_inf for x in tail])
    grad = np.array([x.grad_norm for x in tail])
    keep = (gap > NOISE_FLOOR) & (grad > 0)
    if keep.sum() < 20:
        raise InsufficientTail(f"only {int(keep.sum())} tail points above the noise floor")
    x = np.log(grad[keep])
    y = np.log(gap[keep])
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    r2 = 1.0 - float(np.sum(resid**2)) / float(np.sum((y - y.mean()) ** 2))
    theta_hat = 1.0 - 1.0 / slope if slope > 1.0 else float("nan")
    return LojasiewiczFit(float(theta_hat), r2, float(slope), int(keep.sum()))
