"""Scenario scripts, trajectory logging, and design analyses.

Each scenario drives one simulator plus controller pair through a fixed
timeline, logs one row per attitude step, and returns a verdict made of
named pass/fail checks.  Analysis scenarios (design report, grasp,
perch, envelope) emit a report dict instead of flying.

Logs are deterministic: identical configuration and scenario settings
produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bounds import agility_report, bound_matrix, feasible_envelope
from .controller import CascadeController, ControllerConfig, Setpoint
from .fsm import TransitionFsm
from .mixer import build_mapping, invert_mapping
from .sim import MultibodySim, SimState, make_state
from .so3 import quat_to_rotmat, yaw_of
from .vehicle import (
    Configuration,
    VehicleParams,
    center_of_mass,
    config_hinge_angles,
    footprint_width,
    min_horizontal_dimension,
)

SCENARIO_NAMES = (
    "hover_unfolded",
    "hover_two_folded",
    "step_response",
    "tunnel",
    "grasp",
    "perch_static",
    "gap_traversal",
    "design_report",
    "envelope",
)

LOG_COLUMNS = (
    "t",
    "px", "py", "pz",
    "vx", "vy", "vz",
    "qw", "qx", "qy", "qz",
    "wx", "wy", "wz",
    "hinge1", "hinge2", "hinge3", "hinge4",
    "wrench_f", "wrench_tx", "wrench_ty", "wrench_tz",
    "margin1", "margin2", "margin3", "margin4",
    "thrust1", "thrust2", "thrust3", "thrust4",
    "speed1", "speed2", "speed3", "speed4",
    "fsm",
)


class TrajectoryLog:
    """Fixed-schema telemetry, one row per attitude step."""

    def __init__(self):
        self.rows: list[tuple] = []

    def append(self, state: SimState, wrench, margins, thrusts, speeds,
               fsm_tag: str) -> None:
        self.rows.append((
            state.t,
            *state.position, *state.velocity, *state.quat, *state.omega,
            *state.hinge_angle, *wrench, *margins, *thrusts, *speeds,
            fsm_tag,
        ))

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        idx = LOG_COLUMNS.index(name)
        return np.array([row[idx] for row in self.rows])

    @staticmethod
    def header() -> str:
        return ",".join(LOG_COLUMNS)

    def write_csv(self, path: Path) -> None:
        with open(path, "w") as fh:
            fh.write(self.header() + "\n")
            for row in self.rows:
                fh.write(",".join(
                    v if isinstance(v, str) else repr(float(v))
                    for v in row) + "\n")

    def write_jsonl(self, path: Path) -> None:
        with open(path, "w") as fh:
            for row in self.rows:
                obj = {k: (v if isinstance(v, str) else float(v))
                       for k, v in zip(LOG_COLUMNS, row)}
                fh.write(json.dumps(obj, separators=(",", ":")) + "\n")

    def steady_margin_violations(self, include_four_folded: bool = False,
                                 tol: float = 1e-9) -> int:
        """Rows in a steady state with any negative hinge-bound margin.

        Four-folded rows are skipped by default because those bounds are
        not enforced by the default controller.
        """
        fsm_i = LOG_COLUMNS.index("fsm")
        m0 = LOG_COLUMNS.index("margin1")
        count = 0
        for row in self.rows:
            tag = row[fsm_i]
            if not tag.startswith("steady:"):
                continue
            if not include_four_folded and tag == "steady:four_folded":
                continue
            if min(row[m0:m0 + 4]) < -tol:
                count += 1
        return count


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class Verdict:
    checks: list[Check] = field(default_factory=list)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(Check(name, bool(passed), detail))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail}
                       for c in self.checks],
        }


@dataclass
class ScenarioResult:
    name: str
    verdict: Verdict
    log: TrajectoryLog | None = None
    report: dict = field(default_factory=dict)

    def write(self, out_dir: str | Path, fmt: str = "csv") -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        if self.log is not None and len(self.log):
            suffix = "csv" if fmt == "csv" else "jsonl"
            log_path = out / f"{self.name}_log.{suffix}"
            (self.log.write_csv if fmt == "csv" else self.log.write_jsonl)(log_path)
            written.append(log_path)
        verdict_path = out / f"{self.name}_verdict.json"
        payload = {"scenario": self.name, **self.verdict.to_dict()}
        if self.report:
            payload["report"] = self.report
        verdict_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        written.append(verdict_path)
        return written


@dataclass
class Scenario:
    """A named scenario plus its geometry, payload, and overrides."""

    name: str
    cross_section: float = 0.43
    gap_size: float = 0.43
    gap_altitude: float = 3.3
    payload_mass: float = 0.0
    payload_offset: tuple = (0.0, 0.0, -0.05)
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in SCENARIO_NAMES:
            raise ValueError(f"unknown scenario {self.name!r}; "
                             f"choose from {', '.join(SCENARIO_NAMES)}")
        if self.payload_mass and self.name not in ("grasp", "perch_static"):
            raise ValueError("payload settings only apply to grasp/perch_static")
        if self.name in ("tunnel",) and self.cross_section <= 0:
            raise ValueError("tunnel needs a positive cross-section")
        if self.name == "gap_traversal" and (self.gap_size <= 0
                                             or self.gap_altitude <= 0):
            raise ValueError("gap traversal needs positive gap size and altitude")


class FlightSession:
    """Simulator + controller pair stepped together with logging."""

    def __init__(self, params: VehicleParams, cfg: ControllerConfig,
                 config: Configuration, position, yaw: float = 0.0,
                 enforce_fourfold_bounds: bool = False):
        self.params = params
        self.cfg = cfg
        self.sim = MultibodySim(params)
        self.controller = CascadeController(
            params, cfg, enforce_fourfold_bounds=enforce_fourfold_bounds)
        self.fsm: TransitionFsm = cfg.make_fsm(config)
        self.state = make_state(params, config,
                                position=np.asarray(position, float), yaw=yaw)
        self.log = TrajectoryLog()
        self._commands = np.zeros(4)
        self._ticks = 0

    @property
    def t(self) -> float:
        return self.state.t

    def run(self, duration: float, setpoint, until=None) -> bool:
        """Advance the clock; returns True if ``until(state, fsm)`` fired."""
        setpoint_fn = setpoint if callable(setpoint) else (lambda t: setpoint)
        steps = int(round(duration / self.sim.dt))
        for _ in range(steps):
            if self._ticks % 2 == 0:
                self._control_tick(setpoint_fn(self.state.t))
            self.state = self.sim.step(self.state, self._commands)
            self._ticks += 1
            if until is not None and until(self.state, self.fsm):
                return True
        return False

    def _control_tick(self, setpoint: Setpoint) -> None:
        st = self.state
        yaw = yaw_of(quat_to_rotmat(st.quat))
        self.fsm.step(st.hinge_angle, st.t, yaw)
        cmds = self.controller.step_controller(st, setpoint, self.fsm)
        self._commands = np.array([c.thrust for c in cmds])
        self.log.append(st, self.controller.last_wrench,
                        self.controller.last_margins, self._commands,
                        [c.speed for c in cmds], self.fsm.describe())


def tilt_angle(quat: np.ndarray) -> float:
    """Angle between the body z-axis and vertical, radians."""
    z_body = quat_to_rotmat(quat)[:, 2]
    return float(math.acos(max(-1.0, min(1.0, z_body[2]))))


# ----- design / analysis helpers -----

def design_fold_angle(params: VehicleParams, f_des: float) -> float:
    """Arm skew angle that makes two folded propellers at thrust ``f_des``
    cancel the forward propellers' hover drag torque (radians)."""
    if f_des >= 0.0:
        raise ValueError("the folded propellers push down: f_des must be negative")
    weight = params.mass_total * float(np.linalg.norm(params.gravity))
    s = -params.drag_over_thrust_forward * weight / (
        math.sqrt(2.0) * params.prop_spacing * f_des)
    if not 0.0 < s < 1.0:
        raise ValueError(f"no skew angle solves the balance (sin = {s:.3f})")
    return math.asin(s)


def grasp_feasibility(params: VehicleParams, payload_mass: float,
                      payload_offset=(0.0, 0.0, -0.05),
                      f_des: float = -1.5) -> dict:
    """Two-folded hover feasibility with extra payload mass.

    Checks the two design inequalities at the vehicle's built skew angle
    plus the payload-adjusted hover allocation against thrust limits.
    """
    p = params
    g = float(np.linalg.norm(p.gravity))
    m_inflated = p.mass_total + payload_mass
    weight = m_inflated * g
    theta = p.arm_skew

    # folding-branch inequality: folded props must balance yaw within f_min
    sin_needed = p.drag_over_thrust_forward * weight / (
        math.sqrt(2.0) * p.prop_spacing * (-p.thrust_min))
    theta_required = math.asin(sin_needed) if sin_needed < 1.0 else math.inf
    skew_ok = theta >= theta_required

    # static-lift inequality: two forward props carry the full weight
    lift_margin = p.thrust_max - weight / 2.0
    lift_ok = lift_margin >= 0.0

    # payload-adjusted hover allocation in the two-folded configuration
    m2 = build_mapping(Configuration.TWO_FOLDED_24, p)
    offset = np.asarray(payload_offset, float)
    com = center_of_mass(Configuration.TWO_FOLDED_24, p,
                         payload_mass=payload_mass, payload_position=offset)
    trim = np.cross(offset - com, np.array([0.0, 0.0, -payload_mass * g]))
    wrench = np.array([weight, trim[0], trim[1], 0.0])
    thrusts = invert_mapping(m2, wrench)
    forward_ok = bool(np.all(thrusts[[0, 2]] <= p.thrust_max)
                      and np.all(thrusts[[0, 2]] >= 0.0))
    reverse_ok = bool(np.all(thrusts[[1, 3]] >= p.thrust_min)
                      and np.all(thrusts[[1, 3]] <= 0.0))

    binding = None
    if not skew_ok:
        binding = "skew angle below folded-yaw-balance requirement"
    elif not lift_ok:
        binding = "forward thrust limit below half the inflated weight"
    elif not (forward_ok and reverse_ok):
        binding = "payload-adjusted hover allocation exceeds a thrust branch"

    return {
        "payload_mass": payload_mass,
        "inflated_mass": m_inflated,
        "design_fold_angle_deg": math.degrees(design_fold_angle(p, f_des)),
        "skew_angle_deg": math.degrees(theta),
        "required_skew_deg": math.degrees(theta_required),
        "skew_inequality_ok": bool(skew_ok),
        "lift_margin_n": lift_margin,
        "lift_inequality_ok": bool(lift_ok),
        "hover_thrusts": [float(t) for t in thrusts],
        "allocation_ok": bool(forward_ok and reverse_ok),
        "feasible": bool(skew_ok and lift_ok and forward_ok and reverse_ok),
        "binding_inequality": binding,
    }


def perch_report(params: VehicleParams, payload_mass: float = 0.0,
                 payload_offset=(0.0, 0.0, -0.05)) -> dict:
    """Folded-configuration hang stability below a wire contact point."""
    offset = np.asarray(payload_offset, float)
    com_unfolded = center_of_mass(Configuration.UNFOLDED, params)
    com_folded = center_of_mass(Configuration.FOUR_FOLDED, params,
                                payload_mass=payload_mass,
                                payload_position=offset)
    below = params.wire_contact_z - com_folded[2]
    return {
        "com_unfolded_z": float(com_unfolded[2]),
        "com_folded_z": float(com_folded[2]),
        "com_shift_down": float(com_unfolded[2] - com_folded[2]),
        "wire_contact_z": params.wire_contact_z,
        "below_contact": float(below),
        "stable": bool(below > 0.0),
    }


def design_report(params: VehicleParams, f_des: float = -1.5) -> dict:
    """Geometry and agility summary used by the design subcommand."""
    import dataclasses

    g = float(np.linalg.norm(params.gravity))
    weight = params.mass_total * g
    theta = design_fold_angle(params, f_des)
    sin_floor = params.drag_over_thrust_forward * weight / (
        math.sqrt(2.0) * params.prop_spacing * (-params.thrust_min))

    curve = []
    for skew_deg in range(2, 21, 2):
        trial = dataclasses.replace(params, arm_skew=math.radians(skew_deg))
        curve.append({
            "skew_deg": float(skew_deg),
            "two_folded": min_horizontal_dimension(
                Configuration.TWO_FOLDED_24, trial, n_directions=720),
            "four_folded": min_horizontal_dimension(
                Configuration.FOUR_FOLDED, trial, n_directions=720),
        })

    return {
        "f_des": f_des,
        "design_fold_angle_deg": math.degrees(theta),
        "skew_floor_deg": math.degrees(math.asin(sin_floor)),
        "skew_inequality_ok": bool(theta >= math.asin(sin_floor)),
        "lift_margin_n": params.thrust_max - weight / 2.0,
        "lift_inequality_ok": bool(params.thrust_max >= weight / 2.0),
        "min_dimensions": {
            cfg.value: min_horizontal_dimension(cfg, params, n_directions=720)
            for cfg in (Configuration.UNFOLDED, Configuration.TWO_FOLDED_24,
                        Configuration.FOUR_FOLDED)},
        "min_dimension_vs_skew": curve,
        "agility": agility_report(params),
    }


# ----- flight scenarios -----

def _first_time_below(log: TrajectoryLog, target: np.ndarray,
                      radius: float) -> float | None:
    p = np.column_stack([log.column("px"), log.column("py"), log.column("pz")])
    err = np.linalg.norm(p - target, axis=1)
    idx = np.nonzero(err < radius)[0]
    return float(log.column("t")[idx[0]]) if idx.size else None


def _run_hover(scenario: Scenario, params: VehicleParams,
               cfg: ControllerConfig, config: Configuration,
               enforce_4f: bool) -> ScenarioResult:
    ov = scenario.overrides
    duration = float(ov.get("duration", 5.0))
    offset = float(ov.get("offset", 0.10))
    target = np.array([0.0, 0.0, 1.0])
    sess = FlightSession(params, cfg, config, target - [0, 0, offset],
                         enforce_fourfold_bounds=enforce_4f)
    sess.run(duration, Setpoint.position_hold(target))

    t_rec = _first_time_below(sess.log, target, 0.01)
    final = np.array([sess.state.position - target])
    final_err = float(np.linalg.norm(final))
    verdict = Verdict()
    verdict.add("recovered_within_window", t_rec is not None,
                f"error < 0.01 m at t = {t_rec}")
    verdict.add("final_error_small", final_err < 0.01,
                f"final error {final_err:.4f} m")
    viol = sess.log.steady_margin_violations()
    verdict.add("steady_margins_clean", viol == 0, f"{viol} violating rows")
    return ScenarioResult(scenario.name, verdict, sess.log,
                          report={"recovery_time": t_rec,
                                  "final_error": final_err})


def _run_step_response(scenario: Scenario, params: VehicleParams,
                       cfg: ControllerConfig, enforce_4f: bool) -> ScenarioResult:
    ov = scenario.overrides
    step = np.asarray(ov.get("step", [0.5, 0.0, 0.0]), float)
    start = np.array([0.0, 0.0, 1.0])
    target = start + step
    sess = FlightSession(params, cfg, Configuration.UNFOLDED, start,
                         enforce_fourfold_bounds=enforce_4f)
    sess.run(float(ov.get("settle", 1.0)), Setpoint.position_hold(start))
    t_step = sess.t
    # horizontal steps ring at the attitude loop's slow pole; give them room
    sess.run(float(ov.get("duration", 10.0)), Setpoint.position_hold(target))

    p = np.column_stack([sess.log.column("px"), sess.log.column("py"),
                         sess.log.column("pz")])
    ts = sess.log.column("t")
    after = ts >= t_step
    direction = step / np.linalg.norm(step)
    travel = (p[after] - start) @ direction
    overshoot = float(max(travel.max() - np.linalg.norm(step), 0.0))
    final_err = float(np.linalg.norm(sess.state.position - target))
    verdict = Verdict()
    verdict.add("settled", final_err < 0.02, f"final error {final_err:.4f} m")
    verdict.add("overshoot_bounded", overshoot < 0.25,
                f"overshoot {overshoot:.3f} m")
    viol = sess.log.steady_margin_violations()
    verdict.add("steady_margins_clean", viol == 0, f"{viol} violating rows")
    return ScenarioResult(scenario.name, verdict, sess.log,
                          report={"overshoot": overshoot,
                                  "final_error": final_err})


class _FootprintCache:
    def __init__(self, params: VehicleParams, n_directions: int = 720):
        self.params = params
        self.n = n_directions
        self._cache: dict[tuple, float] = {}

    def __call__(self, angles) -> float:
        key = tuple(np.round(angles, 3))
        if key not in self._cache:
            self._cache[key] = footprint_width(np.array(key), self.params, self.n)
        return self._cache[key]


def _clearance_checks(log: TrajectoryLog, inside_mask: np.ndarray,
                      passage: float, center_yz, params: VehicleParams,
                      axis_cols=("py", "pz")) -> tuple[bool, str]:
    """Footprint and centering check at every 10th in-passage row."""
    width_of = _FootprintCache(params)
    hinge = np.column_stack([log.column(f"hinge{i}") for i in range(1, 5)])
    coords = np.column_stack([log.column(c) for c in axis_cols])
    idx = np.nonzero(inside_mask)[0][::10]
    if idx.size == 0:
        return False, "no samples inside the passage"
    worst = math.inf
    for k in idx:
        w = width_of(hinge[k])
        margin = (passage - w) / 2.0
        off = np.abs(coords[k] - center_yz).max()
        worst = min(worst, margin - off)
        if margin <= 0.0 or off > margin:
            return False, (f"t = {log.column('t')[k]:.3f} s: width {w:.4f} m "
                           f"vs passage {passage} m, offset {off:.4f} m")
    return True, f"worst clearance margin {worst:.4f} m"


def _run_tunnel(scenario: Scenario, params: VehicleParams,
                cfg: ControllerConfig, enforce_4f: bool) -> ScenarioResult:
    ov = scenario.overrides
    fold = bool(ov.get("fold", True))
    cross = scenario.cross_section
    x_entry, x_exit = 0.0, float(ov.get("length", 1.0))
    height = float(ov.get("height", 1.0))
    speed = float(ov.get("speed", 0.5))
    start = np.array([-1.0, 0.0, height])
    sess = FlightSession(params, cfg, Configuration.UNFOLDED, start,
                         enforce_fourfold_bounds=enforce_4f)
    sess.run(1.5, Setpoint.position_hold(start))

    if fold:
        sess.fsm.request_fold_24(sess.t)
        reached = sess.run(
            2.0, Setpoint.position_hold(start),
            until=lambda st, fsm: fsm.in_steady
            and fsm.steady_config is Configuration.TWO_FOLDED_24)
        if not reached:
            verdict = Verdict()
            verdict.add("fold_completed", False, "fold24 did not complete in 2 s")
            return ScenarioResult(scenario.name, verdict, sess.log)
        sess.run(1.0, Setpoint.position_hold(start))

    t0 = sess.t
    x_end = x_exit + 1.0

    def cruise(t: float) -> Setpoint:
        x = min(start[0] + speed * (t - t0), x_end)
        vx = speed if x < x_end else 0.0
        return Setpoint.trajectory([x, 0.0, height], [vx, 0.0, 0.0],
                                   [0.0, 0.0, 0.0])

    sess.run((x_end - start[0]) / speed + 2.0, cruise)

    if fold:
        sess.fsm.request_unfold_24(sess.t)
        sess.run(2.0, Setpoint.position_hold([x_end, 0.0, height]),
                 until=lambda st, fsm: fsm.in_steady
                 and fsm.steady_config is Configuration.UNFOLDED)
        sess.run(1.0, Setpoint.position_hold([x_end, 0.0, height]))

    px = sess.log.column("px")
    inside = (px >= x_entry) & (px <= x_exit)
    clear_ok, detail = _clearance_checks(
        sess.log, inside, cross, np.array([0.0, height]), params)
    final_err = float(np.linalg.norm(sess.state.position - [x_end, 0.0, height]))
    verdict = Verdict()
    verdict.add("clearance", clear_ok, detail)
    verdict.add("traversed", bool(px.max() >= x_exit) and final_err < 0.05,
                f"final error {final_err:.4f} m")
    viol = sess.log.steady_margin_violations()
    verdict.add("steady_margins_clean", viol == 0, f"{viol} violating rows")
    return ScenarioResult(scenario.name, verdict, sess.log,
                          report={"folded": fold, "final_error": final_err})


def _run_gap(scenario: Scenario, params: VehicleParams, cfg: ControllerConfig,
             enforce_4f: bool) -> ScenarioResult:
    ov = scenario.overrides
    hover_z = float(ov.get("hover_height", 0.8))
    burn_thrust = float(ov.get("burn_thrust", 5.5))
    burn_duration = float(ov.get("burn_duration", 0.26))
    unfold_time = float(ov.get("unfold_time", 0.84))   # from burn start
    gap_z = scenario.gap_altitude
    gap = scenario.gap_size
    level = np.eye(3)

    start = np.array([0.0, 0.0, hover_z])
    sess = FlightSession(params, cfg, Configuration.UNFOLDED, start,
                         enforce_fourfold_bounds=enforce_4f)
    sess.run(float(ov.get("hover_time", 1.5)), Setpoint.position_hold(start))

    t_burn = sess.t
    sess.run(burn_duration, Setpoint.constant_thrust(burn_thrust))

    t_fold_cmd = sess.t
    sess.fsm.request_fold_all(sess.t)
    folded = sess.run(
        2.5, Setpoint.attitude_only(level),
        until=lambda st, fsm: fsm.in_steady
        and fsm.steady_config is Configuration.FOUR_FOLDED)
    t_folded = sess.t if folded else None

    # ballistic coast through the gap, attitude held level
    coast = t_burn + unfold_time - sess.t
    if coast > 0:
        sess.run(coast, Setpoint.attitude_only(level))

    t_unfold_cmd = sess.t
    unfolded = False
    tilt_at_unfold = None
    if folded:
        sess.fsm.request_unfold_all(sess.t)
        unfolded = sess.run(
            2.5, Setpoint.attitude_only(level),
            until=lambda st, fsm: fsm.in_steady
            and fsm.steady_config is Configuration.UNFOLDED)
        tilt_at_unfold = math.degrees(tilt_angle(sess.state.quat))

    if unfolded:
        brake = np.array([sess.state.position[0], sess.state.position[1],
                          max(gap_z - 1.0, 1.0)])
        sess.run(2.0, Setpoint.position_hold(brake))

    log = sess.log
    ts = log.column("t")
    pz = log.column("pz")
    hinge = np.column_stack([log.column(f"hinge{i}") for i in range(1, 5)])

    # physical fold duration: command to last arm first reaching the stop zone
    fold_duration = None
    at_stop = np.all(hinge >= math.radians(88.0), axis=1) & (ts >= t_fold_cmd)
    if at_stop.any():
        fold_duration = float(ts[np.nonzero(at_stop)[0][0]] - t_fold_cmd)

    crossing = (np.abs(pz - gap_z) <= 0.10) & (log.column("vz") > 0.0)
    clear_ok, clear_detail = _clearance_checks(
        log, crossing, gap, np.array([0.0, 0.0]), params,
        axis_cols=("px", "py"))

    verdict = Verdict()
    verdict.add("fold_completed", folded,
                f"fold duration {fold_duration}" if folded else "timed out")
    verdict.add("fold_duration_in_range",
                fold_duration is not None and 0.19 <= fold_duration <= 0.57,
                f"{fold_duration} s under {sess.fsm.fold_thrust} N command")
    verdict.add("apex_above_gap", bool(pz.max() > gap_z),
                f"apex {pz.max():.2f} m vs gap at {gap_z} m")
    verdict.add("gap_clearance", clear_ok, clear_detail)
    verdict.add("unfold_completed", unfolded, f"tilt {tilt_at_unfold} deg")
    verdict.add("attitude_error_at_unfold_below_10deg",
                tilt_at_unfold is not None and tilt_at_unfold < 10.0,
                f"{tilt_at_unfold} deg")
    viol = log.steady_margin_violations()
    verdict.add("steady_margins_clean", viol == 0, f"{viol} violating rows")
    report = {
        "fold_duration": fold_duration,
        "fold_command_time": t_fold_cmd,
        "fold_complete_time": t_folded,
        "unfold_command_time": t_unfold_cmd,
        "tilt_at_unfold_deg": tilt_at_unfold,
        "apex": float(pz.max()),
    }
    return ScenarioResult(scenario.name, verdict, log, report=report)


# ----- analysis scenarios -----

def _run_grasp(scenario: Scenario, params: VehicleParams) -> ScenarioResult:
    payload = scenario.payload_mass if scenario.payload_mass else 0.083
    report = grasp_feasibility(params, payload, scenario.payload_offset,
                               f_des=float(scenario.overrides.get("f_des", -1.5)))
    verdict = Verdict()
    verdict.add("skew_inequality", report["skew_inequality_ok"],
                f"skew {report['skew_angle_deg']:.2f} deg vs required "
                f"{report['required_skew_deg']:.2f} deg")
    verdict.add("lift_inequality", report["lift_inequality_ok"],
                f"margin {report['lift_margin_n']:.2f} N")
    verdict.add("hover_allocation", report["allocation_ok"],
                f"thrusts {np.round(report['hover_thrusts'], 3)}")
    return ScenarioResult(scenario.name, verdict, report=report)


def _run_perch(scenario: Scenario, params: VehicleParams) -> ScenarioResult:
    report = perch_report(params, scenario.payload_mass, scenario.payload_offset)
    verdict = Verdict()
    verdict.add("com_below_contact", report["stable"],
                f"below-contact margin {report['below_contact']:.4f} m")
    return ScenarioResult(scenario.name, verdict, report=report)


def _run_design(scenario: Scenario, params: VehicleParams) -> ScenarioResult:
    report = design_report(params,
                           f_des=float(scenario.overrides.get("f_des", -1.5)))
    verdict = Verdict()
    verdict.add("skew_inequality", report["skew_inequality_ok"],
                f"floor {report['skew_floor_deg']:.2f} deg")
    verdict.add("lift_inequality", report["lift_inequality_ok"],
                f"margin {report['lift_margin_n']:.2f} N")
    return ScenarioResult(scenario.name, verdict, report=report)


def envelope_rows(params: VehicleParams,
                  config: Configuration = Configuration.UNFOLDED) -> list[tuple]:
    """(set, f_sigma, tau_z) vertex rows for the three feasible sets."""
    env = feasible_envelope(config, params)
    rows = []
    for tag, verts in (("A", env.vertices_a), ("B", env.vertices_b),
                       ("C", env.vertices_c)):
        for f_sigma, tau_z in verts:
            rows.append((tag, float(f_sigma), float(tau_z)))
    return rows


def write_envelope_csv(path: Path, rows: list[tuple]) -> None:
    with open(path, "w") as fh:
        fh.write("set,f_sigma,tau_z\n")
        for tag, f_sigma, tau_z in rows:
            fh.write(f"{tag},{f_sigma!r},{tau_z!r}\n")


def _run_envelope(scenario: Scenario, params: VehicleParams) -> ScenarioResult:
    from .bounds import envelope_contains

    config = Configuration(scenario.overrides.get("configuration", "unfolded"))
    env = feasible_envelope(config, params)
    nested = (envelope_contains(env.vertices_a, env.vertices_b)
              and envelope_contains(env.vertices_b, env.vertices_c))
    verdict = Verdict()
    verdict.add("nested_envelopes", nested, "C within B within A")
    report = {"rows": [(t, f, z) for t, f, z in envelope_rows(params, config)],
              "configuration": config.value}
    return ScenarioResult(scenario.name, verdict, report=report)


def run_scenario(scenario: Scenario, params: VehicleParams,
                 cfg: ControllerConfig | None = None,
                 enforce_fourfold_bounds: bool = False) -> ScenarioResult:
    """Execute one scenario and return its log, report, and verdict."""
    cfg = cfg or ControllerConfig()
    name = scenario.name
    if name == "hover_unfolded":
        return _run_hover(scenario, params, cfg, Configuration.UNFOLDED,
                          enforce_fourfold_bounds)
    if name == "hover_two_folded":
        return _run_hover(scenario, params, cfg, Configuration.TWO_FOLDED_24,
                          enforce_fourfold_bounds)
    if name == "step_response":
        return _run_step_response(scenario, params, cfg, enforce_fourfold_bounds)
    if name == "tunnel":
        return _run_tunnel(scenario, params, cfg, enforce_fourfold_bounds)
    if name == "gap_traversal":
        return _run_gap(scenario, params, cfg, enforce_fourfold_bounds)
    if name == "grasp":
        return _run_grasp(scenario, params)
    if name == "perch_static":
        return _run_perch(scenario, params)
    if name == "design_report":
        return _run_design(scenario, params)
    if name == "envelope":
        return _run_envelope(scenario, params)
    raise ValueError(f"unhandled scenario {name!r}")
