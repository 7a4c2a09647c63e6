"""Command line front end: ``wireflow run | render | sweep | order-study``.

Exit codes: 0 success (including a sweep whose rows failed individually),
1 a run ended in step_failure, 2 invalid configuration or arguments,
3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .config import SWEEP_AXES, ScenarioConfig, load_config
from .diagnostics import spatial_order_study
from .errors import ConfigError, ValidationError, WireflowError
from .flow import run_flow
from .model import energy
from .render import render_svg
from .serialize import (
    atomic_write_text,
    diagnostics_csv,
    dumps,
    read_snapshot,
    report_dict,
    snapshot_dict,
)
from .stationary import stationary_residual

EXIT_OK = 0
EXIT_STEP_FAILURE = 1
EXIT_CONFIG = 2
EXIT_IO = 3

ORDER_STUDY_T = 0.1
ORDER_STUDY_DT_FACTOR = 0.25

logger = logging.getLogger("wireflow")


def _ensure_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {path}: {exc.strerror}") from None


def execute_run(config: ScenarioConfig, out_dir: str):
    """Run one scenario and write its files; returns ``(trajectory, final report)``."""
    state, params = config.build()
    traj = run_flow(state, params, config.flow)
    final = traj.final_state
    report = stationary_residual(final, params)
    _ensure_dir(out_dir)
    files = [("trajectory.csv", diagnostics_csv(traj))]
    for k, (_, snap) in enumerate(traj.snapshots):
        files.append((f"snapshot_{k:06d}.json", dumps(snapshot_dict(snap))))
    files.append(("final.json", dumps(snapshot_dict(final))))
    files.append(("report.json", dumps(report_dict(report, traj.terminal))))
    for name, text in files:
        path = os.path.join(out_dir, name)
        try:
            atomic_write_text(path, text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror or exc}") from None
    return traj, report


def cmd_run(config: ScenarioConfig, out_dir: str | None = None) -> int:
    out_dir = config.output if out_dir is None else out_dir
    try:
        traj, report = execute_run(config, out_dir)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(
        f"terminal={traj.terminal} steps={len(traj.diagnostics) - 1} "
        f"t={traj.final_state.time:.6g} energy={report.energy:.12g} "
        f"grad_norm={traj.diagnostics[-1].grad_norm:.3e}"
    )
    return EXIT_STEP_FAILURE if traj.terminal == "step_failure" else EXIT_OK


def cmd_render(snapshot_path: str, out_svg_path: str, config: ScenarioConfig | None = None) -> int:
    """Render a snapshot; the caption energy needs the model from ``config``."""
    state = read_snapshot(snapshot_path)
    e = None
    if config is not None:
        if config.L != state.grid.L or config.omega != state.omega:
            raise ValidationError("snapshot L/omega do not match the configuration")
        e = energy(state, config.params(state.grid.integrate(state.rho)))
    try:
        atomic_write_text(out_svg_path, render_svg(state, e))
    except OSError as exc:
        print(f"error: cannot write {out_svg_path}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


SUMMARY_COLUMNS = ("value", "final_energy", "steps", "terminal", "final_grad_norm")


def _sweep_one(config: ScenarioConfig, axis: str, value: float, out_dir: str):
    try:
        traj, report = execute_run(config.with_value(axis, value), out_dir)
        return (value, report.energy, len(traj.diagnostics) - 1, traj.terminal, traj.diagnostics[-1].grad_norm)
    except Exception as exc:  # isolate failures: the row records them
        logger.warning("sweep %s=%r failed: %s", axis, value, exc)
        return (value, math.nan, 0, f"error: {type(exc).__name__}", math.nan)


def sweep_workers(count: int) -> int:
    env = os.environ.get("WIREFLOW_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            raise ValidationError(f"WIREFLOW_THREADS must be a positive integer, got {env!r}") from None
    return max(1, min(cap, count))


def cmd_sweep(config: ScenarioConfig, axis: str, values, out_dir: str | None = None) -> int:
    values = [float(v) for v in values]
    if not values:
        raise ValidationError("sweep needs at least one value")
    if axis not in SWEEP_AXES:
        raise ValidationError(f"axis must be one of {', '.join(SWEEP_AXES)}, got {axis!r}")
    config.with_value(axis, values[0])  # rejects an axis the initial family cannot take
    out_dir = config.output if out_dir is None else out_dir
    try:
        _ensure_dir(out_dir)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    dirs = [os.path.join(out_dir, f"{axis}_{k:03d}") for k in range(len(values))]
    workers = sweep_workers(len(values))
    if workers == 1:
        rows = [_sweep_one(config, axis, v, d) for v, d in zip(values, dirs)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, [config] * len(values), [axis] * len(values), values, dirs))
    lines = [",".join(SUMMARY_COLUMNS)]
    for value, e, steps, terminal, grad in rows:
        lines.append(f"{value:.17g},{e:.17g},{steps},{terminal},{grad:.17g}")
    path = os.path.join(out_dir, "summary.csv")
    try:
        atomic_write_text(path, "\n".join(lines) + "\n")
    except OSError as exc:
        print(f"error: cannot write {path}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    for row in rows:
        print(f"{axis}={row[0]:.6g} terminal={row[3]} energy={row[1]:.12g}")
    return EXIT_OK


def order_study(config: ScenarioConfig, resolutions):
    resolutions = [int(r) for r in resolutions]
    if len(resolutions) < 3:
        raise ValidationError("order study needs at least three resolutions")
    try:
        return spatial_order_study(
            config.build, resolutions, t_final=ORDER_STUDY_T, dt_factor=ORDER_STUDY_DT_FACTOR
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def cmd_order_study(config: ScenarioConfig, resolutions, out_path: str) -> int:
    report = order_study(config, resolutions)
    try:
        atomic_write_text(out_path, dumps(report.to_dict()))
    except OSError as exc:
        print(f"error: cannot write {out_path}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    order = "undefined (noise floor)" if report.below_noise_floor else f"{report.observed_order:.4f}"
    print(f"observed_order={order}")
    return EXIT_OK


def _csv_list(text, conv):
    try:
        return [conv(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wireflow", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log step-size control")
    sub = p.add_subparsers(dest="verb", required=True)

    r = sub.add_parser("run", help="integrate one scenario")
    r.add_argument("--config", required=True)
    r.add_argument("--out", help="output directory (default: config 'output')")

    rd = sub.add_parser("render", help="draw a snapshot as SVG")
    rd.add_argument("--snapshot", required=True)
    rd.add_argument("-o", dest="output", required=True, help="SVG path")
    rd.add_argument("--config", help="scenario config, for the caption energy")

    sw = sub.add_parser("sweep", help="run a scenario over a list of parameter values")
    sw.add_argument("--config", required=True)
    sw.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sw.add_argument("--values", required=True, type=lambda s: _csv_list(s, float))
    sw.add_argument("--out")

    o = sub.add_parser("order-study", help="observed spatial order of the scheme")
    o.add_argument("--config", required=True)
    o.add_argument("--resolutions", required=True, type=lambda s: _csv_list(s, int))
    o.add_argument("-o", dest="output", required=True, help="JSON report path")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.verb == "run":
            return cmd_run(load_config(args.config), args.out)
        if args.verb == "render":
            cfg = load_config(args.config) if args.config else None
            return cmd_render(args.snapshot, args.output, cfg)
        if args.verb == "sweep":
            return cmd_sweep(load_config(args.config), args.axis, args.values, args.out)
        return cmd_order_study(load_config(args.config), args.resolutions, args.output)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WireflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STEP_FAILURE


if __name__ == "__main__":
    sys.exit(main())
