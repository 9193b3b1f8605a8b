"""Command line front end: scenario ingestion, episodes, emitters.

Verbs:
  run <scenario.json>   simulate one scenario file, write CSV/metrics
                        (and optionally an SVG plot); exit 0 when no
                        zone was breached, 2 on breach, 1 on any error
  suite                 run the eight bundled episodes and print a
                        summary table; exit 2 if any of them breached
  check-bounds <file>   print the feasibility bound chain for a
                        scenario without simulating it

Scenario files are single JSON documents; see the README for the
schema. Set HERDING_LOG=debug|info|warning to control log verbosity.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import scenarios as bundled
from .bounds import DistanceBounds, feasibility_report
from .cbf import select_gains_table
from .controllers import DualConfig
from .errors import HerdingError, InitialBreachError, ScenarioFormatError
from .sim import EpisodeLog, Scenario, run
from .svgplot import episode_svg
from .world import SheepParams, WorldState, Zone

log = logging.getLogger(__name__)

_GAIN_DEFAULTS = {"k_s": 0.5, "k_g": 1.0, "k_d": 0.1, "r_s": 1.0}
_BOUND_DEFAULTS = {"l_s": 0.05, "m_s": 20.0, "l_d": 0.05, "m_g": 20.0,
                   "m_p": 20.0, "u_d_max": 2.0}
_DUAL_DEFAULTS = {"k_max": 1000, "gamma0": 1.0, "step_rule": "diminishing",
                  "averaging": "uniform"}
_TOP_KEYS = {"name", "sheep", "dogs", "goal", "gains", "zones", "controller",
             "dual", "cbf", "dt", "t_end", "bounds", "seed"}


def _schema_error(msg: str) -> ScenarioFormatError:
    return ScenarioFormatError("schema", msg)


def _point_list(doc, key: str, allow_empty: bool = False):
    val = doc.get(key)
    if val is None:
        raise _schema_error(f"missing required key '{key}'")
    if not isinstance(val, list) or (not val and not allow_empty):
        raise _schema_error(f"'{key}' must be a non-empty list of [x, y] pairs")
    out = []
    for idx, item in enumerate(val):
        if (not isinstance(item, (list, tuple)) or len(item) != 2
                or not all(isinstance(c, (int, float)) for c in item)):
            raise _schema_error(f"'{key}[{idx}]' must be an [x, y] pair of numbers")
        out.append([float(item[0]), float(item[1])])
    return out


def _number(doc, key: str, default=None):
    val = doc.get(key, default)
    if not isinstance(val, (int, float)) or isinstance(val, bool):
        raise _schema_error(f"'{key}' must be a number, got {val!r}")
    return float(val)


def _ring_dogs(spec: dict, zones, seed: int):
    """Seeded initializer: dogs sampled on a ring around the first zone."""
    for key in spec:
        if key not in {"count", "r_min", "r_max"}:
            raise _schema_error(f"unknown key 'dogs.{key}'")
    count = spec.get("count")
    if not isinstance(count, int) or count < 1:
        raise _schema_error("'dogs.count' must be a positive integer")
    r_min = float(spec.get("r_min", zones[0].inflated_radius + 0.2))
    r_max = float(spec.get("r_max", r_min + 0.5))
    if not 0 < r_min <= r_max:
        raise _schema_error("'dogs.r_min'/'dogs.r_max' must satisfy 0 < r_min <= r_max")
    rng = np.random.default_rng(seed)
    radii = rng.uniform(r_min, r_max, size=count)
    angles = rng.uniform(0.0, 2.0 * np.pi, size=count)
    center = zones[0].center
    return np.stack([center[0] + radii * np.cos(angles),
                     center[1] + radii * np.sin(angles)], axis=1)


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario JSON document.

    Raises ScenarioFormatError with code 'schema' (malformed document,
    wrong types, unknown keys), 'bad-dt' (non-positive step), or
    'initial-breach' (a sheep starting inside an inflated zone).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise _schema_error(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}")
    if not isinstance(doc, dict):
        raise _schema_error("scenario document must be a JSON object")
    for key in doc:
        if key not in _TOP_KEYS:
            raise _schema_error(f"unknown key '{key}'")

    name = doc.get("name", "scenario")
    if not isinstance(name, str):
        raise _schema_error("'name' must be a string")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise _schema_error("'seed' must be an integer")

    gains_doc = doc.get("gains", {})
    if not isinstance(gains_doc, dict):
        raise _schema_error("'gains' must be an object")
    for key in gains_doc:
        if key not in _GAIN_DEFAULTS:
            raise _schema_error(f"unknown key 'gains.{key}'")
    gains = {k: _number(gains_doc, k, d) for k, d in _GAIN_DEFAULTS.items()}

    goal = doc.get("goal")
    if (not isinstance(goal, (list, tuple)) or len(goal) != 2
            or not all(isinstance(c, (int, float)) for c in goal)):
        raise _schema_error("'goal' must be an [x, y] pair of numbers")

    zones_doc = doc.get("zones")
    if not isinstance(zones_doc, list) or not zones_doc:
        raise _schema_error("'zones' must be a non-empty list")
    zones = []
    for zi, zdoc in enumerate(zones_doc):
        if not isinstance(zdoc, dict):
            raise _schema_error(f"'zones[{zi}]' must be an object")
        for key in zdoc:
            if key not in {"center", "radius", "buffer"}:
                raise _schema_error(f"unknown key 'zones[{zi}].{key}'")
        center = zdoc.get("center")
        if (not isinstance(center, (list, tuple)) or len(center) != 2
                or not all(isinstance(c, (int, float)) for c in center)):
            raise _schema_error(f"'zones[{zi}].center' must be an [x, y] pair")
        try:
            zones.append(Zone(center=center, radius=_number(zdoc, "radius"),
                              buffer=_number(zdoc, "buffer", 0.0)))
        except ValueError as e:
            raise _schema_error(f"'zones[{zi}]': {e}")

    sheep = _point_list(doc, "sheep")
    dogs_doc = doc.get("dogs", [])
    if isinstance(dogs_doc, dict):
        for key in dogs_doc:
            if key != "ring":
                raise _schema_error(f"unknown key 'dogs.{key}'")
        dogs = _ring_dogs(dogs_doc.get("ring", {}), zones, seed)
    else:
        dogs = _point_list(doc, "dogs", allow_empty=True) if "dogs" in doc else []

    controller_doc = doc.get("controller", "centralized")
    dual_cfg = None
    if isinstance(controller_doc, str):
        controller = controller_doc
    elif isinstance(controller_doc, dict) and set(controller_doc) == {"dual"}:
        controller = "dual"
        dd = controller_doc["dual"]
        if not isinstance(dd, dict):
            raise _schema_error("'controller.dual' must be an object")
        for key in dd:
            if key not in _DUAL_DEFAULTS:
                raise _schema_error(f"unknown key 'controller.dual.{key}'")
        merged = _DUAL_DEFAULTS | dd
        try:
            dual_cfg = DualConfig(**merged)
        except (TypeError, ValueError) as e:
            raise _schema_error(f"'controller.dual': {e}")
    else:
        raise _schema_error("'controller' must be a name or {\"dual\": {...}}")
    if controller not in ("centralized", "allocated", "dual"):
        raise _schema_error(f"unknown controller '{controller}'")
    if controller == "dual" and dual_cfg is None:
        dual_cfg = DualConfig(**_DUAL_DEFAULTS)

    cbf_doc = doc.get("cbf", {})
    if not isinstance(cbf_doc, dict):
        raise _schema_error("'cbf' must be an object")
    for key in cbf_doc:
        if key not in {"base", "margin"}:
            raise _schema_error(f"unknown key 'cbf.{key}'")
    base = _number(cbf_doc, "base", 1.0)
    margin = _number(cbf_doc, "margin", 0.5)

    dt = _number(doc, "dt", 0.01)
    if dt <= 0:
        raise ScenarioFormatError("bad-dt", f"dt must be positive, got {dt}")
    t_end = _number(doc, "t_end", 10.0)
    if t_end < dt:
        raise _schema_error(f"t_end ({t_end}) must be at least dt ({dt})")

    bounds_doc = doc.get("bounds", {})
    if not isinstance(bounds_doc, dict):
        raise _schema_error("'bounds' must be an object")
    for key in bounds_doc:
        if key not in _BOUND_DEFAULTS:
            raise _schema_error(f"unknown key 'bounds.{key}'")
    try:
        db = DistanceBounds(**{k: _number(bounds_doc, k, d)
                               for k, d in _BOUND_DEFAULTS.items()})
    except ValueError as e:
        raise _schema_error(f"'bounds': {e}")

    try:
        scenario = Scenario(
            name=name,
            world0=WorldState(sheep=sheep, dogs=dogs, time=0.0),
            params=SheepParams(goal=goal, **gains),
            zones=tuple(zones),
            controller=controller,
            dual=dual_cfg,
            gains_base=base,
            gains_margin=margin,
            dt=dt,
            t_end=t_end,
            bounds=db,
            seed=seed,
        )
        scenario.validate()
    except InitialBreachError as e:
        raise ScenarioFormatError("initial-breach", str(e))
    except ValueError as e:
        raise _schema_error(str(e))
    return scenario


def log_to_csv(episode: EpisodeLog) -> str:
    """Full-precision CSV: t, agent positions, barrier values, commands."""
    m = episode.sheep.shape[1]
    n = episode.dogs.shape[1]
    nz = episode.h.shape[2]
    header = ["t"]
    header += [f"sheep{i}_{c}" for i in range(m) for c in ("x", "y")]
    header += [f"dog{k}_{c}" for k in range(n) for c in ("x", "y")]
    header += [f"h_s{i}_z{z}" for i in range(m) for z in range(nz)]
    header += [f"u_d{k}_{c}" for k in range(n) for c in ("x", "y")]
    lines = [",".join(header)]
    for r in range(episode.rows):
        vals = [episode.t[r]]
        vals += list(episode.sheep[r].reshape(-1))
        vals += list(episode.dogs[r].reshape(-1))
        vals += list(episode.h[r].reshape(-1))
        vals += list(episode.u[r].reshape(-1))
        lines.append(",".join(repr(float(v)) for v in vals))
    return "\n".join(lines) + "\n"


def episode_metrics(episode: EpisodeLog, scenario: Scenario) -> dict:
    """Metrics document for one finished episode."""
    w0 = scenario.world0
    alpha_max = max(g.alpha for row in episode.gains for g in row)
    # The bound chain is stated for equal team sizes; with unequal
    # teams the larger count keeps every inequality valid.
    n_bound = max(w0.n_sheep, w0.n_dogs) if w0.n_dogs else w0.n_sheep
    report = feasibility_report(
        n_bound,
        scenario.params,
        alpha_max,
        scenario.bounds,
        equal_teams=w0.n_sheep == w0.n_dogs,
    )
    return {
        "scenario": episode.name,
        "controller": episode.controller,
        "dt": episode.dt,
        "ticks": episode.rows,
        "breach": bool(episode.breach),
        "breach_time": episode.breach_time,
        "deadlock": bool(episode.deadlock),
        "budget": episode.budget,
        "min_h": episode.min_h,
        "assumption_violations": int(episode.monitor_counts.sum()),
        "v_negative_ticks": int(episode.v_negative_ticks),
        "infeasible_fallback_ticks": int(episode.fallback_ticks),
        "feasibility": report.as_dict(),
    }


@dataclass
class RunConfig:
    """Parsed options of the `run` verb."""

    scenario_path: str
    out_dir: str = "out"
    emit_csv: bool = True
    emit_metrics: bool = True
    emit_svg: bool = False
    controller: str | None = None
    dt: float | None = None
    k_max: int | None = None
    k_d: float | None = None


def _apply_overrides(scenario: Scenario, cfg) -> Scenario:
    if cfg.controller:
        dual = scenario.dual
        if cfg.controller == "dual" and dual is None:
            dual = DualConfig()
        scenario = dataclasses.replace(scenario, controller=cfg.controller, dual=dual)
    if cfg.dt:
        scenario = dataclasses.replace(scenario, dt=cfg.dt)
    if cfg.k_max and scenario.dual is not None:
        scenario = dataclasses.replace(
            scenario, dual=dataclasses.replace(scenario.dual, k_max=cfg.k_max)
        )
    if cfg.k_d is not None:
        scenario = dataclasses.replace(
            scenario, params=dataclasses.replace(scenario.params, k_d=cfg.k_d)
        )
    return scenario


def _emit(episode: EpisodeLog, scenario: Scenario, out_dir: Path,
          emit_csv=True, emit_metrics=True, emit_svg=False) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if emit_csv:
        (out_dir / f"{episode.name}.csv").write_text(log_to_csv(episode))
    if emit_metrics:
        doc = episode_metrics(episode, scenario)
        (out_dir / f"{episode.name}.metrics.json").write_text(
            json.dumps(doc, indent=2, sort_keys=True) + "\n"
        )
    if emit_svg:
        svg = episode_svg(episode, scenario.zones, goal=scenario.params.goal)
        (out_dir / f"{episode.name}.svg").write_text(svg)


def run_command(cfg: RunConfig) -> int:
    """Execute one scenario file; returns the process exit code."""
    try:
        text = Path(cfg.scenario_path).read_text()
    except OSError as e:
        print(f"error[io]: {e}", file=sys.stderr)
        return 1
    try:
        scenario = _apply_overrides(parse_scenario(text), cfg)
        episode = run(scenario)
    except ScenarioFormatError as e:
        print(f"error[{e.code}]: {e}", file=sys.stderr)
        return 1
    except HerdingError as e:
        print(f"error[sim]: {e}", file=sys.stderr)
        return 1
    try:
        _emit(episode, scenario, Path(cfg.out_dir),
              cfg.emit_csv, cfg.emit_metrics, cfg.emit_svg)
    except OSError as e:
        print(f"error[io]: {e}", file=sys.stderr)
        return 1
    print(f"{episode.name}: breach={episode.breach} deadlock={episode.deadlock} "
          f"budget={episode.budget:.4f} min_h={episode.min_h:.6f}")
    return 2 if episode.breach else 0


def suite_command(out_dir: str, emit_svg: bool = False, controller: str | None = None,
                  dt: float | None = None, k_max: int | None = None,
                  k_d: float | None = None) -> int:
    """Run the bundled suite, emit per-scenario artifacts, print a table."""
    cfg = RunConfig(scenario_path="", out_dir=out_dir, emit_svg=emit_svg,
                    controller=controller, dt=dt, k_max=k_max, k_d=k_d)
    rows = []
    any_breach = False
    for factory in bundled.SUITE:
        scenario = _apply_overrides(factory(), cfg)
        started = time.perf_counter()
        try:
            episode = run(scenario)
        except HerdingError as e:
            print(f"error[sim]: {scenario.name}: {e}", file=sys.stderr)
            return 1
        elapsed = time.perf_counter() - started
        _emit(episode, scenario, Path(out_dir), emit_svg=emit_svg)
        any_breach = any_breach or episode.breach
        rows.append((scenario.name, scenario.controller, episode.breach,
                     episode.deadlock, episode.budget, elapsed))
    print(f"{'scenario':<16} {'controller':<12} {'breach':<7} {'deadlock':<9} "
          f"{'budget':>9} {'runtime':>8}")
    for name, ctrl, breach, deadlock, budget, elapsed in rows:
        print(f"{name:<16} {ctrl:<12} {str(breach).lower():<7} "
              f"{str(deadlock).lower():<9} {budget:>9.4f} {elapsed:>7.2f}s")
    return 2 if any_breach else 0


def check_bounds_command(scenario_path: str) -> int:
    """Print the feasibility bound chain for a scenario, no simulation."""
    try:
        scenario = parse_scenario(Path(scenario_path).read_text())
    except OSError as e:
        print(f"error[io]: {e}", file=sys.stderr)
        return 1
    except ScenarioFormatError as e:
        print(f"error[{e.code}]: {e}", file=sys.stderr)
        return 1
    w0, p = scenario.world0, scenario.params
    gains = select_gains_table(w0, p, scenario.zones,
                               scenario.gains_base, scenario.gains_margin)
    alpha_max = max(g.alpha for row in gains for g in row)
    n_bound = max(w0.n_sheep, w0.n_dogs) if w0.n_dogs else w0.n_sheep
    report = feasibility_report(
        n_bound, p, alpha_max,
        scenario.bounds, equal_teams=w0.n_sheep == w0.n_dogs,
    )
    doc = {"scenario": scenario.name, "alpha_max": alpha_max} | report.as_dict()
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def main(argv=None) -> int:
    level = os.environ.get("HERDING_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")

    parser = argparse.ArgumentParser(
        prog="herding",
        description="Safety-constrained multi-robot herding simulator",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="simulate one scenario file")
    run_p.add_argument("scenario", help="path to a scenario JSON document")
    run_p.add_argument("--out", default="out", help="output directory")
    run_p.add_argument("--svg", action="store_true", help="emit an SVG plot")
    run_p.add_argument("--controller", choices=("centralized", "allocated", "dual"))
    run_p.add_argument("--dt", type=float, help="override the time step")
    run_p.add_argument("--kmax", type=int, help="override dual iteration count")
    run_p.add_argument("--kd", type=float, help="override the dog repulsion gain")

    suite_p = sub.add_parser("suite", help="run the bundled scenario suite")
    suite_p.add_argument("--out", default="out", help="output directory")
    suite_p.add_argument("--svg", action="store_true", help="emit SVG plots")
    suite_p.add_argument("--controller", choices=("centralized", "allocated", "dual"))
    suite_p.add_argument("--dt", type=float, help="override the time step")
    suite_p.add_argument("--kmax", type=int, help="override dual iteration count")
    suite_p.add_argument("--kd", type=float, help="override the dog repulsion gain")

    cb_p = sub.add_parser("check-bounds", help="print the feasibility bounds")
    cb_p.add_argument("scenario", help="path to a scenario JSON document")

    args = parser.parse_args(argv)
    if args.verb == "run":
        return run_command(RunConfig(
            scenario_path=args.scenario, out_dir=args.out, emit_svg=args.svg,
            controller=args.controller, dt=args.dt, k_max=args.kmax, k_d=args.kd,
        ))
    if args.verb == "suite":
        return suite_command(args.out, emit_svg=args.svg, controller=args.controller,
                             dt=args.dt, k_max=args.kmax, k_d=args.kd)
    return check_bounds_command(args.scenario)
