"""Command-line entry point.

Subcommands: ``simulate`` runs a named closed-loop or analysis scenario
and writes its trajectory log and verdict; ``design`` emits the geometry
design report; ``envelope`` exports the feasible wrench polygons;
``gains`` prints the attitude gain matrices for one configuration.

Exit code 0 means every verdict check passed.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .bounds import envelope_contains, feasible_envelope
from .controller import ControllerConfig
from .lqr import synthesis_residual, synthesize_gains
from .scenarios import (
    SCENARIO_NAMES,
    Scenario,
    design_report,
    envelope_rows,
    run_scenario,
    write_envelope_csv,
)
from .vehicle import Configuration, VehicleParams, load_config

_CONFIG_CHOICES = ("unfolded", "two_folded_24", "two_folded_13", "four_folded")


def _load_setup(path: str | None) -> tuple[VehicleParams, ControllerConfig]:
    if path is None:
        ref = resources.files("foldquad") / "data" / "default_vehicle.yaml"
        with resources.as_file(ref) as p:
            params, ctl = load_config(p)
    else:
        params, ctl = load_config(path)
    return params, ControllerConfig.from_mapping(ctl)


def _parse_override(text: str) -> tuple[str, object]:
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(
            f"override {text!r} is not of the form key=value")
    if raw.lower() in ("true", "false"):
        return key, raw.lower() == "true"
    try:
        return key, float(raw)
    except ValueError:
        return key, raw


def _print_verdict(result) -> None:
    for check in result.verdict.checks:
        tag = "PASS" if check.passed else "FAIL"
        line = f"[{tag}] {check.name}"
        if check.detail:
            line += f"  ({check.detail})"
        print(line)
    print("verdict:", "PASS" if result.verdict.passed else "FAIL")


def _cmd_simulate(args) -> int:
    params, ctl_cfg = _load_setup(args.config)
    overrides = dict(args.set or ())
    scenario = Scenario(
        name=args.scenario,
        cross_section=args.cross_section,
        gap_size=args.gap_size,
        gap_altitude=args.gap_altitude,
        payload_mass=args.payload_mass,
        payload_offset=tuple(args.payload_offset),
        overrides=overrides,
    )
    result = run_scenario(scenario, params, ctl_cfg,
                          enforce_fourfold_bounds=args.enforce_fourfold_bounds)
    written = result.write(args.out, fmt=args.format)
    print(f"scenario {args.scenario} (seed {args.seed})")
    for path in written:
        print("wrote", path)
    _print_verdict(result)
    return 0 if result.verdict.passed else 1


def _cmd_design(args) -> int:
    params, _ = _load_setup(args.config)
    report = design_report(params, f_des=args.f_des)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "design_report.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print("wrote", path)
    print(f"design fold angle: {report['design_fold_angle_deg']:.3f} deg "
          f"(floor {report['skew_floor_deg']:.3f} deg)")
    print(f"static lift margin: {report['lift_margin_n']:.3f} N")
    agility = report["agility"]
    print(f"hover yaw authority: {agility['yaw_max_with_folding']:.4f} N*m "
          f"({agility['yaw_reduction_pct']:.1f}% below conventional)")
    ok = report["skew_inequality_ok"] and report["lift_inequality_ok"]
    print("verdict:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def _cmd_envelope(args) -> int:
    params, _ = _load_setup(args.config)
    config = Configuration(args.configuration)
    rows = envelope_rows(params, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"envelope_{config.value}.csv"
    write_envelope_csv(path, rows)
    print("wrote", path)
    env = feasible_envelope(config, params)
    nested = (envelope_contains(env.vertices_a, env.vertices_b)
              and envelope_contains(env.vertices_b, env.vertices_c))
    print("nested (C within B within A):", "PASS" if nested else "FAIL")
    return 0 if nested else 1


def _cmd_gains(args) -> int:
    params, ctl = _load_setup(args.config)
    config = Configuration(args.configuration)
    gains = synthesize_gains(config, params, Q=np.diag(ctl.q_diag),
                             r_plus=ctl.r_forward, r_minus=ctl.r_reverse)
    residual = synthesis_residual(gains, params, Q=np.diag(ctl.q_diag),
                                  r_plus=ctl.r_forward, r_minus=ctl.r_reverse)
    np.set_printoptions(precision=6, suppress=True)
    print(f"configuration: {config.value}")
    print("proportional gain:")
    print(gains.proportional)
    print("derivative gain:")
    print(gains.derivative)
    print(f"riccati residual: {residual:.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="foldquad",
        description="Folding-arm quadcopter design, simulation, and scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and write its log")
    sim.add_argument("--scenario", required=True, choices=SCENARIO_NAMES)
    sim.add_argument("--config", help="vehicle/controller YAML (default built-in)")
    sim.add_argument("--out", default="out", help="output directory")
    sim.add_argument("--seed", type=int, default=0,
                     help="recorded for provenance; the simulation is deterministic")
    sim.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    sim.add_argument("--enforce-fourfold-bounds", action="store_true",
                     help="apply stay-folded hinge bounds in the four-folded mixer")
    sim.add_argument("--cross-section", type=float, default=0.43,
                     help="tunnel cross-section side length in m")
    sim.add_argument("--gap-size", type=float, default=0.43,
                     help="gap side length in m")
    sim.add_argument("--gap-altitude", type=float, default=3.3,
                     help="gap height above the start plane in m")
    sim.add_argument("--payload-mass", type=float, default=0.0)
    sim.add_argument("--payload-offset", type=float, nargs=3,
                     default=(0.0, 0.0, -0.05), metavar=("X", "Y", "Z"))
    sim.add_argument("--set", action="append", type=_parse_override,
                     metavar="KEY=VALUE", help="timeline override, repeatable")
    sim.set_defaults(func=_cmd_simulate)

    des = sub.add_parser("design", help="emit the geometry design report")
    des.add_argument("--config")
    des.add_argument("--out", default="out")
    des.add_argument("--f-des", type=float, default=-1.5,
                     help="folded-propeller design thrust, negative")
    des.set_defaults(func=_cmd_design)

    env = sub.add_parser("envelope", help="export feasible wrench polygons")
    env.add_argument("--config")
    env.add_argument("--out", default="out")
    env.add_argument("--configuration", choices=_CONFIG_CHOICES,
                     default="unfolded")
    env.set_defaults(func=_cmd_envelope)

    gns = sub.add_parser("gains", help="print attitude gains for a configuration")
    gns.add_argument("--config")
    gns.add_argument("--configuration", choices=_CONFIG_CHOICES,
                     default="unfolded")
    gns.set_defaults(func=_cmd_gains)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
