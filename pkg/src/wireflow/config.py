"""Scenario configuration: strict JSON loading, validation and initial data.

A configuration file is a JSON object.  Every key is optional; omitted keys
take the defaults below.  Unknown keys anywhere are a ParseError.

    {
      "L": 6.283185307179586, "mu": 1.0, "c0": 0.0, "omega": 1,
      "beta": {"kind": "constant", "a": 1.0},
      "mass": null,                     # null: taken from the initial density
      "n": 256,
      "flow": {"dt_init": 1e-3, "dt_min": 1e-8, "dt_max": 0.1, "t_end": 50.0,
               "grad_tol": 1e-8, "project_every": 1,
               "scheme": "semi_implicit", "snapshot_every": 0},
      "initial": {"family": "circle", "rho_mean": 0.0},
      "output": "out"
    }

Initial families and their keys:

* ``circle``: ``rho_mean``, ``phase``
* ``perturbed_circle``: ``amplitudes``, ``modes``, ``rho_mean``,
  ``rho_amplitudes``, ``rho_modes``
* ``winding_zero_seed``: ``amplitude``, ``rho_mean``, ``rho_amplitude``
  (requires ``omega = 0``)
* ``from_snapshot``: ``path`` (relative paths resolve against the config file)

The initial state is always projected onto the closure constraints.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field

from .errors import ParseError, ValidationError
from .flow import FlowConfig
from .grid import make_grid
from .model import AngleDensityState, ModelParams, StiffnessProfile, project_closure
from .scenarios import circle, perturbed_circle, winding_zero_seed

TOP_KEYS = {"L", "mu", "c0", "omega", "beta", "mass", "n", "flow", "initial", "output"}
FLOW_KEYS = {f.name for f in dataclasses.fields(FlowConfig)} - {"constrained"}
BETA_KEYS = {
    "constant": {"kind", "a"},
    "exponential": {"kind", "a", "b"},
    "gaussian-bump": {"kind", "a", "b", "c", "x0"},
    "polynomial-positive": {"kind", "coeffs", "eps", "width"},
}
INITIAL_DEFAULTS = {
    "circle": {"rho_mean": 0.0, "phase": 0.0},
    "perturbed_circle": {
        "amplitudes": [0.2],
        "modes": [2],
        "rho_mean": 0.0,
        "rho_amplitudes": [0.0],
        "rho_modes": [1],
    },
    "winding_zero_seed": {"amplitude": 0.0, "rho_mean": 0.0, "rho_amplitude": 0.0},
    "from_snapshot": {"path": None},
}
SWEEP_AXES = ("mu", "c0", "amplitude")


@dataclass(frozen=True)
class InitialSpec:
    family: str = "circle"
    options: dict = field(default_factory=lambda: dict(INITIAL_DEFAULTS["circle"]))


@dataclass(frozen=True)
class ScenarioConfig:
    L: float = 2.0 * math.pi
    mu: float = 1.0
    c0: float = 0.0
    omega: int = 1
    beta: StiffnessProfile = field(default_factory=StiffnessProfile.constant)
    mass: float | None = None
    n: int = 256
    flow: FlowConfig = field(default_factory=FlowConfig)
    initial: InitialSpec = field(default_factory=InitialSpec)
    output: str = "out"
    base_dir: str = "."

    def __post_init__(self):
        validate(self)

    def params(self, mass: float) -> ModelParams:
        return ModelParams(L=self.L, mu=self.mu, c0=self.c0, omega=self.omega, beta=self.beta, mass=mass)

    def build(self, n: int | None = None):
        """Projected initial state and model parameters on an ``n``-node grid."""
        grid = make_grid(self.L, self.n if n is None else n)
        state = _initial_state(self, grid)
        mass = grid.integrate(state.rho) if self.mass is None else float(self.mass)
        params = self.params(mass)
        return project_closure(state, params), params

    def with_value(self, axis: str, value: float) -> "ScenarioConfig":
        """Copy with one sweepable scalar replaced."""
        if axis not in SWEEP_AXES:
            raise ValidationError(f"axis must be one of {', '.join(SWEEP_AXES)}, got {axis!r}")
        if axis != "amplitude":
            return dataclasses.replace(self, **{axis: float(value)})
        fam = self.initial.family
        opts = dict(self.initial.options)
        if fam == "perturbed_circle":
            opts["amplitudes"] = [float(value)] + list(opts["amplitudes"][1:])
        elif fam == "winding_zero_seed":
            opts["amplitude"] = float(value)
        else:
            raise ValidationError(f"amplitude sweep needs a perturbed family, not {fam}")
        return dataclasses.replace(self, initial=InitialSpec(fam, opts))


def validate(cfg: ScenarioConfig) -> None:
    try:
        cfg.params(0.0 if cfg.mass is None else cfg.mass)
        make_grid(cfg.L, cfg.n)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    if cfg.mass is not None and not math.isfinite(cfg.mass):
        raise ValidationError("mass must be finite")
    fam = cfg.initial.family
    opts = cfg.initial.options
    if fam == "winding_zero_seed" and cfg.omega != 0:
        raise ValidationError("winding_zero_seed needs omega = 0")
    if fam == "perturbed_circle":
        if len(opts["amplitudes"]) != len(opts["modes"]):
            raise ValidationError("initial.amplitudes and initial.modes must have equal length")
        if len(opts["rho_amplitudes"]) != len(opts["rho_modes"]):
            raise ValidationError("initial.rho_amplitudes and initial.rho_modes must have equal length")
    if fam == "from_snapshot" and not opts.get("path"):
        raise ValidationError("initial.path is required for from_snapshot")


def _initial_state(cfg: ScenarioConfig, grid) -> AngleDensityState:
    o = cfg.initial.options
    fam = cfg.initial.family
    if fam == "circle":
        return circle(grid, cfg.omega, o["rho_mean"], o["phase"])
    if fam == "perturbed_circle":
        return perturbed_circle(
            grid, cfg.omega, o["amplitudes"], o["modes"], o["rho_mean"], o["rho_amplitudes"], o["rho_modes"]
        )
    if fam == "winding_zero_seed":
        return winding_zero_seed(grid, o["amplitude"], o["rho_mean"], o["rho_amplitude"])
    from .serialize import read_snapshot

    path = o["path"]
    if not os.path.isabs(path):
        path = os.path.join(cfg.base_dir, path)
    state = read_snapshot(path)
    if state.grid != grid or state.omega != cfg.omega:
        raise ValidationError(
            f"snapshot {path} has n={state.grid.n}, L={state.grid.L}, omega={state.omega}; "
            f"config has n={grid.n}, L={grid.L}, omega={cfg.omega}"
        )
    return state


# parsing ---------------------------------------------------------------------


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ParseError(f"{where or 'config'}: expected a JSON object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        prefix = f"{where}." if where else ""
        raise ParseError(f"unknown key {prefix}{unknown[0]}")


def _number(obj, key, where, default):
    if key not in obj:
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"{where}{key}: expected a number, got {json.dumps(v)}")
    return float(v)


def _integer(obj, key, where, default):
    if key not in obj:
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ParseError(f"{where}{key}: expected an integer, got {json.dumps(v)}")
    return int(v)


def _numbers(obj, key, where, default, integer=False):
    if key not in obj:
        return list(default)
    v = obj[key]
    if not isinstance(v, list):
        raise ParseError(f"{where}{key}: expected a list")
    conv = _integer if integer else _number
    return [conv({"x": x}, "x", f"{where}{key}[{i}].", None) for i, x in enumerate(v)]


def _parse_beta(obj):
    if not isinstance(obj, dict):
        raise ParseError("beta: expected a JSON object")
    kind = obj.get("kind", "constant")
    if kind not in BETA_KEYS:
        raise ParseError(f"beta.kind: unknown stiffness kind {kind!r}")
    _check_keys(obj, BETA_KEYS[kind], "beta")
    w = "beta."
    try:
        if kind == "constant":
            return StiffnessProfile.constant(_number(obj, "a", w, 1.0))
        if kind == "exponential":
            return StiffnessProfile.exponential(_number(obj, "a", w, 1.0), _number(obj, "b", w, 1.0))
        if kind == "gaussian-bump":
            return StiffnessProfile.gaussian_bump(
                _number(obj, "a", w, 1.0), _number(obj, "b", w, 1.0), _number(obj, "c", w, 1.0), _number(obj, "x0", w, 0.0)
            )
        return StiffnessProfile.polynomial(
            _numbers(obj, "coeffs", w, ()), _number(obj, "eps", w, 1e-8), _number(obj, "width", w, 1e-3)
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def _parse_flow(obj):
    _check_keys(obj, FLOW_KEYS, "flow")
    w = "flow."
    d = FlowConfig.__dataclass_fields__
    kw = {}
    for name in ("dt_init", "dt_min", "dt_max", "t_end", "grad_tol"):
        kw[name] = _number(obj, name, w, d[name].default)
    for name in ("project_every", "snapshot_every"):
        kw[name] = _integer(obj, name, w, d[name].default)
    scheme = obj.get("scheme", d["scheme"].default)
    if not isinstance(scheme, str):
        raise ParseError("flow.scheme: expected a string")
    kw["scheme"] = scheme
    try:
        return FlowConfig(**kw)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def _parse_initial(obj):
    if not isinstance(obj, dict):
        raise ParseError("initial: expected a JSON object")
    fam = obj.get("family", "circle")
    if fam not in INITIAL_DEFAULTS:
        raise ParseError(f"initial.family: unknown family {fam!r}")
    defaults = INITIAL_DEFAULTS[fam]
    _check_keys(obj, set(defaults) | {"family"}, "initial")
    w = "initial."
    opts = {}
    for key, dv in defaults.items():
        if key == "path":
            v = obj.get("path")
            if v is not None and not isinstance(v, str):
                raise ParseError("initial.path: expected a string")
            opts[key] = v
        elif key == "modes" or key == "rho_modes":
            opts[key] = _numbers(obj, key, w, dv, integer=True)
        elif isinstance(dv, list):
            opts[key] = _numbers(obj, key, w, dv)
        else:
            opts[key] = _number(obj, key, w, dv)
    return InitialSpec(fam, opts)


def parse_config(data: dict, base_dir: str = ".") -> ScenarioConfig:
    _check_keys(data, TOP_KEYS, "")
    kw = {"base_dir": base_dir}
    for name in ("L", "mu", "c0"):
        if name in data:
            kw[name] = _number(data, name, "", None)
    if "omega" in data:
        kw["omega"] = _integer(data, "omega", "", None)
    if "n" in data:
        kw["n"] = _integer(data, "n", "", None)
    if data.get("mass") is not None:
        kw["mass"] = _number(data, "mass", "", None)
    if "beta" in data:
        kw["beta"] = _parse_beta(data["beta"])
    if "flow" in data:
        kw["flow"] = _parse_flow(data["flow"])
    if "initial" in data:
        kw["initial"] = _parse_initial(data["initial"])
    if "output" in data:
        if not isinstance(data["output"], str):
            raise ParseError("output: expected a string")
        kw["output"] = data["output"]
    return ScenarioConfig(**kw)


def load_config(path) -> ScenarioConfig:
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return parse_config(data, base_dir=os.path.dirname(os.path.abspath(path)))
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from None
