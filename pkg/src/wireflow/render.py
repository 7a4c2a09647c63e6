"""SVG rendering of a state as a closed polyline coloured by density.

Colour ramp: segment colour is interpolated linearly in RGB between
``RAMP_LOW`` (at min rho) and ``RAMP_HIGH`` (at max rho), using the mean of
the two endpoint densities.  A constant density (spread below 1e-12 relative)
draws every segment in ``RAMP_LOW``.  All coordinates are printed with a
fixed number of decimals, so identical input gives byte-identical output.
"""

from __future__ import annotations

import math

import numpy as np

from .model import AngleDensityState, reconstruct_curve

RAMP_LOW = (33, 102, 172)  # #2166ac
RAMP_HIGH = (178, 24, 43)  # #b2182b
SIZE = 600.0
MARGIN = 40.0
CAPTION_SPACE = 50.0


def ramp(values):
    """Hex colours for ``values`` on the two-colour ramp; flat when the range is degenerate."""
    values = np.asarray(values, dtype=float)
    lo, hi = float(values.min()), float(values.max())
    if hi - lo <= 1e-12 * (1.0 + max(abs(lo), abs(hi))):
        w = np.zeros_like(values)
    else:
        w = (values - lo) / (hi - lo)
    a = np.array(RAMP_LOW, dtype=float)
    b = np.array(RAMP_HIGH, dtype=float)
    rgb = np.rint(a[None, :] + w[:, None] * (b - a)[None, :]).astype(int)
    return ["#%02x%02x%02x" % tuple(c) for c in rgb]


def turning_number(points) -> int:
    """Total signed turning of a closed polyline divided by 2 pi."""
    edges = np.diff(points, axis=0)
    ang = np.arctan2(edges[:, 1], edges[:, 0])
    turn = np.diff(np.append(ang, ang[0]))
    turn = (turn + math.pi) % (2.0 * math.pi) - math.pi
    return int(round(turn.sum() / (2.0 * math.pi)))


def _f(x) -> str:
    return "%.3f" % x


def render_svg(state: AngleDensityState, energy: float | None = None) -> str:
    pts, _ = reconstruct_curve(state)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-300))
    draw = SIZE - 2.0 * MARGIN
    scale = draw / span
    center = 0.5 * (lo + hi)

    def xy(p):
        # SVG y axis points down
        return (SIZE / 2.0 + scale * (p[0] - center[0]), MARGIN + draw / 2.0 - scale * (p[1] - center[1]))

    screen = np.array([xy(p) for p in pts])
    rho = state.rho
    seg_rho = 0.5 * (rho + np.roll(rho, -1))
    colors = ramp(seg_rho)

    height = SIZE + CAPTION_SPACE
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(SIZE)}" height="{_f(height)}" '
        f'viewBox="0 0 {_f(SIZE)} {_f(height)}">',
        f'<rect x="0" y="0" width="{_f(SIZE)}" height="{_f(height)}" fill="#ffffff"/>',
        '<g id="curve" fill="none" stroke-width="2" stroke-linecap="round">',
    ]
    for i in range(state.grid.n):
        (x0, y0), (x1, y1) = screen[i], screen[i + 1]
        out.append(
            f'<polyline points="{_f(x0)},{_f(y0)} {_f(x1)},{_f(y1)}" stroke="{colors[i]}"/>'
        )
    out.append("</g>")

    bar = scale * state.grid.L / 10.0
    y_bar = SIZE + 10.0
    out.append(
        f'<line id="scale-bar" x1="{_f(MARGIN)}" y1="{_f(y_bar)}" x2="{_f(MARGIN + bar)}" '
        f'y2="{_f(y_bar)}" stroke="#000000" stroke-width="2"/>'
    )
    out.append(
        f'<text x="{_f(MARGIN)}" y="{_f(y_bar + 15.0)}" font-family="sans-serif" font-size="11">'
        f"L/10 = {state.grid.L / 10.0:.6g}</text>"
    )
    e_txt = "n/a" if energy is None else f"{energy:.10g}"
    out.append(
        f'<text id="caption" x="{_f(SIZE - MARGIN)}" y="{_f(y_bar + 15.0)}" text-anchor="end" '
        f'font-family="sans-serif" font-size="13">t = {state.time:.6g}, E = {e_txt}, '
        f"ω = {state.omega}</text>"
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
