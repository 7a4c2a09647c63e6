"""File formats: diagnostics CSV, state snapshots and report JSON.

Every writer goes through :func:`atomic_write_text`, so a failed run never
leaves a truncated file behind.  Floats in CSV use ``%.17g``; JSON floats use
Python's shortest round-trip representation, which is also exact.
"""

from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

from .errors import ParseError
from .grid import make_grid
from .model import AngleDensityState

CSV_COLUMNS = (
    "t",
    "dt",
    "energy",
    "dissipation",
    "lam_theta1",
    "lam_theta2",
    "lam_rho",
    "gcos",
    "gsin",
    "gmass",
    "mean_theta",
    "grad_norm",
    "det_pi",
)


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _g17(x) -> str:
    return "%.17g" % x


def diagnostics_csv(trajectory) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for d in trajectory.diagnostics:
        row = (
            d.time,
            d.dt,
            d.energy,
            d.dissipation,
            d.mult.lam_theta1,
            d.mult.lam_theta2,
            d.mult.lam_rho,
            d.gcos,
            d.gsin,
            d.gmass,
            d.mean_theta,
            d.grad_norm,
            d.det_pi,
        )
        lines.append(",".join(_g17(v) for v in row))
    return "\n".join(lines) + "\n"


def read_csv(path):
    """Diagnostics CSV as a dict of column name -> float array."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [[float(x) for x in line.split(",")] for line in fh if line.strip()]
    data = np.array(rows).reshape(-1, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def snapshot_dict(state: AngleDensityState) -> dict:
    return {
        "t": float(state.time),
        "L": float(state.grid.L),
        "omega": int(state.omega),
        "n": int(state.grid.n),
        "theta": [float(x) for x in state.theta],
        "rho": [float(x) for x in state.rho],
    }


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, allow_nan=False) + "\n"


def write_snapshot(path, state: AngleDensityState) -> None:
    atomic_write_text(path, dumps(snapshot_dict(state)))


def state_from_dict(data: dict, where: str = "snapshot") -> AngleDensityState:
    keys = {"t", "L", "omega", "n", "theta", "rho"}
    if not isinstance(data, dict) or set(data) != keys:
        raise ParseError(f"{where}: expected exactly the keys {sorted(keys)}")
    try:
        n = int(data["n"])
        if n != data["n"] or int(data["omega"]) != data["omega"]:
            raise ValueError("n and omega must be integers")
        if len(data["theta"]) != n or len(data["rho"]) != n:
            raise ValueError("theta and rho must have n entries")
        grid = make_grid(float(data["L"]), n)
        t = float(data["t"])
        if not math.isfinite(t):
            raise ValueError("t must be finite")
        return AngleDensityState(data["theta"], data["rho"], grid, int(data["omega"]), t)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: {exc}") from None


def read_snapshot(path) -> AngleDensityState:
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return state_from_dict(data, path)


def report_dict(report, terminal: str | None = None) -> dict:
    out = {
        "residual_theta": report.residual_theta,
        "residual_rho": report.residual_rho,
        "residual_l2": report.residual_l2,
        "lam_theta1": report.mult.lam_theta1,
        "lam_theta2": report.mult.lam_theta2,
        "lam_rho": report.mult.lam_rho,
        "energy": report.energy,
    }
    if terminal is not None:
        out["terminal"] = terminal
    return out
