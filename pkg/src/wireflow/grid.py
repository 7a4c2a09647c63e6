"""Uniform periodic arc-length grid, difference operators and a cyclic tridiagonal solver.

Fields are plain 1-D float arrays of length ``grid.n``; index arithmetic is
modulo ``n``.  Angles carry an implicit jump of ``2*pi*omega`` across the
seam between node ``n-1`` and node ``0``; the ``*_winding`` operators and
``forward_diff(..., jump=...)`` account for it.  ``phase(omega)`` is the
affine angle whose removal leaves a periodic field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import SolverFailure

MIN_NODES = 8
DOMINANCE = 0.999


@dataclass(frozen=True, eq=False)
class Grid:
    n: int
    L: float
    h: float = field(init=False)
    nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "h", self.L / self.n)
        nodes = np.arange(self.n) * self.h
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    def __eq__(self, other):
        return isinstance(other, Grid) and self.n == other.n and self.L == other.L

    def __hash__(self):
        return hash((self.n, self.L))

    def slope(self, omega: int) -> float:
        """Mean angle slope 2 pi omega / L of a curve with rotation index omega."""
        return 2.0 * math.pi * omega / self.L

    def phase(self, omega: int):
        """Affine angle 2 pi omega s / L at the nodes."""
        return self.slope(omega) * self.nodes

    # quadrature ---------------------------------------------------------

    def integrate(self, f) -> float:
        """Rectangle rule; coincides with the trapezoid rule for periodic data."""
        return self.h * float(np.sum(f))

    # node-centred operators ----------------------------------------------

    def deriv1(self, f):
        return (np.roll(f, -1) - np.roll(f, 1)) / (2.0 * self.h)

    def deriv1_winding(self, theta, omega: int):
        jump = 2.0 * math.pi * omega
        up = np.roll(theta, -1)
        down = np.roll(theta, 1)
        up[-1] += jump
        down[0] -= jump
        return (up - down) / (2.0 * self.h)

    def deriv2(self, f):
        return (np.roll(f, -1) - 2.0 * f + np.roll(f, 1)) / self.h**2

    def deriv2_winding(self, theta, omega: int):
        jump = 2.0 * math.pi * omega
        up = np.roll(theta, -1)
        down = np.roll(theta, 1)
        up[-1] += jump
        down[0] -= jump
        return (up - 2.0 * theta + down) / self.h**2

    # staggered operators --------------------------------------------------
    # Entry i of a midpoint array lives at s_{i+1/2}.

    def forward_diff(self, f, jump: float = 0.0):
        """(f_{i+1} - f_i)/h at midpoints, with ``jump`` added across the seam."""
        d = np.roll(f, -1) - f
        if jump:
            d[-1] += jump
        return d / self.h

    def backward_div(self, g):
        """(g_{i+1/2} - g_{i-1/2})/h at nodes for a midpoint array ``g``."""
        return (g - np.roll(g, 1)) / self.h

    @staticmethod
    def midpoint_average(f):
        return 0.5 * (f + np.roll(f, -1))

    @staticmethod
    def node_average(g):
        """Average of the two midpoint values adjacent to each node."""
        return 0.5 * (g + np.roll(g, 1))


def make_grid(L: float, n: int) -> Grid:
    if int(n) != n or n < MIN_NODES:
        raise ValueError(f"n must be an integer >= {MIN_NODES}, got {n}")
    L = float(L)
    if not math.isfinite(L) or L <= 0.0:
        raise ValueError(f"L must be finite and positive, got {L}")
    return Grid(int(n), L)


def cyclic_tridiag_matvec(sub, diag, sup, x):
    """A @ x where row i is sub[i]*x[i-1] + diag[i]*x[i] + sup[i]*x[i+1] (indices mod n)."""
    return sub * np.roll(x, 1) + diag * x + sup * np.roll(x, -1)


def solve_cyclic_tridiag(sub, diag, sup, rhs):
    """Solve the periodic tridiagonal system ``cyclic_tridiag_matvec(sub, diag, sup, x) = rhs``.

    ``sub[0]`` couples row 0 to x[n-1] and ``sup[n-1]`` couples row n-1 to
    x[0].  The corner entries are removed by a rank-one (Sherman-Morrison)
    splitting, leaving two ordinary tridiagonal solves with the same matrix.

    Raises SolverFailure unless every row satisfies
    ``|sub| + |sup| <= 0.999 |diag|``.
    """
    sub = np.asarray(sub, dtype=float)
    diag = np.asarray(diag, dtype=float)
    sup = np.asarray(sup, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = diag.size
    if not (sub.size == sup.size == rhs.size == n) or n < 3:
        raise ValueError("sub, diag, sup and rhs must share one length >= 3")
    off = np.abs(sub) + np.abs(sup)
    bad = off > DOMINANCE * np.abs(diag)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise SolverFailure(
            f"row {i} not diagonally dominant: |off|={off[i]:.3e}, |diag|={abs(diag[i]):.3e}"
        )

    corner_lo = sub[0]  # A[0, n-1]
    corner_hi = sup[-1]  # A[n-1, 0]
    gamma = -diag[0]
    b = diag.copy()
    b[0] -= gamma
    b[-1] -= corner_lo * corner_hi / gamma

    ab = np.zeros((3, n))
    ab[0, 1:] = sup[:-1]
    ab[1] = b
    ab[2, :-1] = sub[1:]

    u = np.zeros(n)
    u[0] = gamma
    u[-1] = corner_hi
    y, z = solve_banded((1, 1), ab, np.column_stack([rhs, u]), check_finite=False).T

    # v = (1, 0, ..., 0, corner_lo / gamma)
    vy = y[0] + corner_lo / gamma * y[-1]
    vz = z[0] + corner_lo / gamma * z[-1]
    return y - z * (vy / (1.0 + vz))
