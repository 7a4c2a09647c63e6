"""Discrete elastic-wire model in the (angle, density) representation.

The energy is discretized on the staggered grid: curvature and density
slope live at midpoints, the stiffness there is the average of the two
nodal values.  Every gradient below is the exact gradient of that discrete
energy with respect to the quadrature inner product ``h * sum(f * g)``, so
the semi-discrete flow dissipates the discrete energy exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import DegeneratePi, NoConvergence, WindingMismatch
from .grid import Grid

BETA_FLOOR = 1e-8
DET_MIN_FACTOR = 1e-12

BETA_KINDS = ("constant", "exponential", "gaussian-bump", "polynomial-positive")


@dataclass(frozen=True)
class StiffnessProfile:
    """Analytic stiffness family.

    Parameters by kind:

    * ``constant``: ``a`` with ``beta = a``
    * ``exponential``: ``a, b`` with ``beta = a exp(b x)``
    * ``gaussian-bump``: ``a, b, c, x0`` with ``beta = a + b exp(-c (x - x0)^2)``
    * ``polynomial-positive``: ascending ``coeffs`` of ``p``; ``beta`` is
      ``p`` clamped smoothly from below at ``eps`` by a softplus of ``width``
    """

    kind: str
    a: float = 1.0
    b: float = 0.0
    c: float = 1.0
    x0: float = 0.0
    coeffs: tuple = ()
    eps: float = BETA_FLOOR
    width: float = 1e-3

    def __post_init__(self):
        if self.kind not in BETA_KINDS:
            raise ValueError(f"unknown stiffness kind {self.kind!r}")
        if self.kind == "constant" and not self.a > 0:
            raise ValueError("constant stiffness needs a > 0")
        if self.kind == "exponential" and not self.a > 0:
            raise ValueError("exponential stiffness needs a > 0")
        if self.kind == "gaussian-bump":
            if not self.a > 0 or not self.c > 0 or not self.a + min(self.b, 0.0) > 0:
                raise ValueError("gaussian-bump stiffness needs a > 0, c > 0, a + min(b, 0) > 0")
        if self.kind == "polynomial-positive":
            if len(self.coeffs) == 0:
                raise ValueError("polynomial-positive stiffness needs coefficients")
            if not self.eps >= BETA_FLOOR or not self.width > 0:
                raise ValueError("polynomial-positive stiffness needs eps >= 1e-8, width > 0")
            object.__setattr__(self, "coeffs", tuple(float(q) for q in self.coeffs))

    @classmethod
    def constant(cls, a=1.0):
        return cls("constant", a=a)

    @classmethod
    def exponential(cls, a=1.0, b=1.0):
        return cls("exponential", a=a, b=b)

    @classmethod
    def gaussian_bump(cls, a=1.0, b=1.0, c=1.0, x0=0.0):
        return cls("gaussian-bump", a=a, b=b, c=c, x0=x0)

    @classmethod
    def polynomial(cls, coeffs, eps=BETA_FLOOR, width=1e-3):
        return cls("polynomial-positive", coeffs=tuple(coeffs), eps=eps, width=width)

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": self.kind, "a": self.a}
        if self.kind == "exponential":
            return {"kind": self.kind, "a": self.a, "b": self.b}
        if self.kind == "gaussian-bump":
            return {"kind": self.kind, "a": self.a, "b": self.b, "c": self.c, "x0": self.x0}
        return {"kind": self.kind, "coeffs": list(self.coeffs), "eps": self.eps, "width": self.width}

    def __call__(self, x):
        return beta_eval(self, x)


def beta_eval(profile: StiffnessProfile, x):
    """Return ``(beta, beta', beta'')`` at ``x`` (scalar or array)."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("stiffness evaluated at non-finite density")
    kind = profile.kind
    if kind == "constant":
        b0 = np.full_like(x, profile.a)
        b1 = np.zeros_like(x)
        b2 = np.zeros_like(x)
    elif kind == "exponential":
        b0 = profile.a * np.exp(profile.b * x)
        b1 = profile.b * b0
        b2 = profile.b * b1
    elif kind == "gaussian-bump":
        d = x - profile.x0
        g = profile.b * np.exp(-profile.c * d * d)
        b0 = profile.a + g
        b1 = -2.0 * profile.c * d * g
        b2 = (4.0 * profile.c**2 * d * d - 2.0 * profile.c) * g
    else:
        coeffs = np.asarray(profile.coeffs)
        p = np.polynomial.polynomial.polyval(x, coeffs)
        dp = np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(coeffs))
        d2p = np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(coeffs, 2))
        w = profile.width
        y = (p - profile.eps) / w
        sig = expit(y)
        b0 = profile.eps + w * np.logaddexp(0.0, y)
        b1 = sig * dp
        b2 = sig * d2p + sig * (1.0 - sig) / w * dp * dp
    if b0.ndim == 0:
        return float(b0), float(b1), float(b2)
    return b0, b1, b2


@dataclass(frozen=True)
class ModelParams:
    L: float
    mu: float
    c0: float
    omega: int
    beta: StiffnessProfile
    mass: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.L) and self.L > 0):
            raise ValueError("L must be positive")
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise ValueError("mu must be positive")
        if not math.isfinite(self.c0):
            raise ValueError("c0 must be finite")
        if int(self.omega) != self.omega:
            raise ValueError("omega must be an integer")
        object.__setattr__(self, "omega", int(self.omega))


class AngleDensityState:
    """Angle and density sampled on ``grid``; the angle jumps by ``2 pi omega`` across the seam.

    The angle is held as its periodic part ``shift = theta - 2 pi omega s / L``
    so that curvatures are differences of small numbers; ``theta`` is derived.
    Construct from the angle directly or with :meth:`from_shift`.
    """

    __slots__ = ("shift", "rho", "grid", "omega", "time", "_theta")

    def __init__(self, theta, rho, grid: Grid, omega: int, time: float = 0.0):
        theta = np.asarray(theta, dtype=float)
        self._init(theta - grid.phase(omega), rho, grid, omega, time)

    @classmethod
    def from_shift(cls, shift, rho, grid: Grid, omega: int, time: float = 0.0):
        obj = cls.__new__(cls)
        obj._init(shift, rho, grid, omega, time)
        return obj

    def _init(self, shift, rho, grid, omega, time):
        shift = np.array(shift, dtype=float)
        rho = np.array(rho, dtype=float)
        if shift.shape != (grid.n,) or rho.shape != (grid.n,):
            raise ValueError("theta and rho must have one value per grid node")
        if not (np.all(np.isfinite(shift)) and np.all(np.isfinite(rho))):
            raise ValueError("state contains non-finite values")
        if int(omega) != omega:
            raise ValueError("omega must be an integer")
        shift.setflags(write=False)
        rho.setflags(write=False)
        self.shift = shift
        self.rho = rho
        self.grid = grid
        self.omega = int(omega)
        self.time = float(time)
        self._theta = None

    @property
    def theta(self) -> np.ndarray:
        if self._theta is None:
            theta = self.grid.phase(self.omega) + self.shift
            theta.setflags(write=False)
            self._theta = theta
        return self._theta

    def with_fields(self, shift=None, rho=None, time=None) -> "AngleDensityState":
        return AngleDensityState.from_shift(
            self.shift if shift is None else shift,
            self.rho if rho is None else rho,
            self.grid,
            self.omega,
            self.time if time is None else time,
        )

    def __repr__(self):
        return f"AngleDensityState(n={self.grid.n}, L={self.grid.L}, omega={self.omega}, time={self.time})"


@dataclass(frozen=True)
class Multipliers:
    lam_theta1: float
    lam_theta2: float
    lam_rho: float


@dataclass(frozen=True, eq=False)
class _Terms:
    """Midpoint quantities shared by energy, gradient and multipliers."""

    bending: np.ndarray  # kappa - c0 at midpoints
    drho: np.ndarray  # density slope at midpoints
    beta: np.ndarray  # nodal beta(rho)
    dbeta: np.ndarray
    beta_mid: np.ndarray
    flux: np.ndarray  # beta_mid * (kappa - c0)
    sin: np.ndarray = field(repr=False)
    cos: np.ndarray = field(repr=False)


def _terms(state: AngleDensityState, params: ModelParams) -> _Terms:
    g = state.grid
    bending = g.forward_diff(state.shift) + (g.slope(state.omega) - params.c0)
    beta, dbeta, _ = beta_eval(params.beta, state.rho)
    beta_mid = g.midpoint_average(beta)
    return _Terms(
        bending=bending,
        drho=g.forward_diff(state.rho),
        beta=beta,
        dbeta=dbeta,
        beta_mid=beta_mid,
        flux=beta_mid * bending,
        sin=np.sin(state.theta),
        cos=np.cos(state.theta),
    )


def det_min(L: float) -> float:
    return DET_MIN_FACTOR * L * L


def curvature(state: AngleDensityState):
    """Nodal curvature by seam-corrected central differences."""
    return state.grid.deriv1_winding(state.theta, state.omega)


def energy(state: AngleDensityState, params: ModelParams) -> float:
    t = _terms(state, params)
    integrand = t.beta_mid * t.bending**2 + params.mu * t.drho**2
    return 0.5 * state.grid.integrate(integrand)


def pi_matrix(state: AngleDensityState):
    """Gram matrix of (sin, -cos) and its determinant."""
    g = state.grid
    s = np.sin(state.theta)
    c = np.cos(state.theta)
    ss = g.integrate(s * s)
    cc = g.integrate(c * c)
    sc = g.integrate(s * c)
    m = np.array([[ss, -sc], [-sc, cc]])
    return m, ss * cc - sc * sc


def constraint_values(state: AngleDensityState, params: ModelParams):
    g = state.grid
    return (
        g.integrate(np.cos(state.theta)),
        g.integrate(np.sin(state.theta)),
        g.integrate(state.rho) - params.mass,
    )


def mean_theta(state: AngleDensityState) -> float:
    return state.grid.integrate(state.theta)


def _coupling(t: _Terms):
    """Nodal average of the squared bending term from the two adjacent midpoints."""
    return Grid.node_average(t.bending**2)


def gradient(state: AngleDensityState, params: ModelParams):
    """Unconstrained L2-gradient of the discrete energy (no multiplier terms)."""
    g = state.grid
    t = _terms(state, params)
    return _gradient_from_terms(g, params, t)


def _gradient_from_terms(g: Grid, params: ModelParams, t: _Terms):
    grad_theta = -g.backward_div(t.flux)
    grad_rho = -params.mu * g.backward_div(t.drho) + 0.5 * t.dbeta * _coupling(t)
    return grad_theta, grad_rho


def _multipliers_from_terms(state, params, t: _Terms) -> Multipliers:
    g = state.grid
    pi, det = pi_matrix(state)
    floor = det_min(g.L)
    if not det >= floor:
        raise DegeneratePi(det, floor)
    # Summation by parts of  int (-sin, cos) d/ds[beta (kappa - c0)] ds : only
    # first differences of sin/cos appear, paired with the midpoint flux.
    j1 = g.integrate(t.flux * g.forward_diff(t.sin))
    j2 = -g.integrate(t.flux * g.forward_diff(t.cos))
    lam1 = (pi[1, 1] * j1 - pi[0, 1] * j2) / det
    lam2 = (pi[0, 0] * j2 - pi[1, 0] * j1) / det
    lam_rho = -g.integrate(t.dbeta * _coupling(t)) / (2.0 * g.L)
    return Multipliers(float(lam1), float(lam2), float(lam_rho))


def multipliers(state: AngleDensityState, params: ModelParams) -> Multipliers:
    return _multipliers_from_terms(state, params, _terms(state, params))


def flow_rhs(state: AngleDensityState, params: ModelParams):
    """Time derivatives ``(dtheta, drho)`` of the constrained flow and the multipliers used."""
    g = state.grid
    t = _terms(state, params)
    mult = _multipliers_from_terms(state, params, t)
    grad_theta, grad_rho = _gradient_from_terms(g, params, t)
    dtheta = -grad_theta + mult.lam_theta1 * t.sin - mult.lam_theta2 * t.cos
    drho = -grad_rho - mult.lam_rho
    return dtheta, drho, mult


def constraint_gradients(state: AngleDensityState):
    """L2-gradients of the three constraint functionals as (theta part, rho part) pairs."""
    n = state.grid.n
    zero = np.zeros(n)
    return (
        (-np.sin(state.theta), zero),
        (np.cos(state.theta), zero),
        (zero, np.ones(n)),
    )


def project_closure(
    state: AngleDensityState,
    params: ModelParams,
    tol: float = 1e-13,
    max_iter: int = 8,
) -> AngleDensityState:
    """Restore the closure constraints and the mass.

    Newton iteration on ``theta <- theta + a sin(theta) - b cos(theta)``; the
    Jacobian of the defects in ``(a, b)`` is ``-Pi(theta)``.  The density is
    shifted by a constant so that its integral equals ``params.mass``.
    """
    g = state.grid
    shift = state.shift
    theta = state.theta
    rho = state.rho + (params.mass - g.integrate(state.rho)) / g.L
    gc = g.integrate(np.cos(theta))
    gs = g.integrate(np.sin(theta))
    if math.hypot(gc, gs) > 0.1 * g.L:
        raise ValueError(f"closure defect {math.hypot(gc, gs):.3e} too large to project")
    it = 0
    while max(abs(gc), abs(gs)) > tol:
        if it >= max_iter:
            raise NoConvergence(
                f"closure projection stalled at defect {max(abs(gc), abs(gs)):.3e} after {it} iterations"
            )
        pi, det = pi_matrix(state.with_fields(shift=shift))
        floor = det_min(g.L)
        if not det >= floor:
            raise DegeneratePi(det, floor)
        a, b = np.linalg.solve(pi, [gc, gs])
        shift = shift + a * np.sin(theta) - b * np.cos(theta)
        theta = g.phase(state.omega) + shift
        gc = g.integrate(np.cos(theta))
        gs = g.integrate(np.sin(theta))
        it += 1
    return state.with_fields(shift=shift, rho=rho)


def reconstruct_curve(state: AngleDensityState, base_point=(0.0, 0.0)):
    """Polyline of ``n + 1`` points with tangent angle taken at edge midpoints.

    Returns ``(points, gap)`` where ``gap = |points[n] - points[0]|``.
    """
    g = state.grid
    mid = g.phase(state.omega) + 0.5 * g.slope(state.omega) * g.h + g.midpoint_average(state.shift)
    steps = g.h * np.column_stack([np.cos(mid), np.sin(mid)])
    pts = np.empty((g.n + 1, 2))
    pts[0] = base_point
    pts[1:] = np.asarray(base_point, dtype=float) + np.cumsum(steps, axis=0)
    return pts, float(np.hypot(*(pts[-1] - pts[0])))


def winding(state: AngleDensityState, verify: bool = False) -> int:
    """Stored rotation index; with ``verify`` it is recomputed from the seam and checked."""
    if verify:
        th = state.theta
        # theta(L) - theta(0), with theta(L) extrapolated one step past the last node
        jump = th[-1] - th[0] + 0.5 * ((th[-1] - th[-2]) + (th[1] - th[0]))
        recomputed = int(round(jump / (2.0 * math.pi)))
        if recomputed != state.omega:
            raise WindingMismatch(f"stored omega {state.omega}, recomputed {recomputed}")
    return state.omega
