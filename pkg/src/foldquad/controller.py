"""Cascaded flight controller.

Position PD at 50 Hz feeds desired acceleration to the 500 Hz attitude
stage: acceleration maps to a total thrust plus desired attitude, the
LQR computes body torques, the hinge-aware hierarchy trims the wrench,
and the configuration's mixer turns it into per-propeller thrusts and
speeds.  Constant-thrust mode bypasses every loop; the transition state
machine uses it while all four arms are in motion.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .bounds import BoundMatrix, bound_matrix, enforce_hierarchy
from .fsm import FsmState, TransitionFsm
from .lqr import GainMatrix, synthesize_gains
from .mixer import (
    allocate_min_norm,
    build_mapping,
    clamp_to_branch,
    forward_flags,
    invert_mapping,
)
from .so3 import quat_to_rotmat, rotation_error, rotmat_from_z_yaw, yaw_of
from .vehicle import Configuration, VehicleParams, speed_from_thrust

_FREE_FALL_EPS = 1e-6


class SetpointMode(enum.Enum):
    POSITION_HOLD = "position_hold"
    TRAJECTORY = "trajectory"
    ATTITUDE_ONLY = "attitude_only"
    CONSTANT_THRUST = "constant_thrust"


@dataclass(frozen=True)
class Setpoint:
    """Reference for one controller mode; exactly one payload is set."""

    mode: SetpointMode
    position: np.ndarray | None = None
    velocity: np.ndarray | None = None
    acceleration: np.ndarray | None = None
    yaw: float = 0.0
    attitude: np.ndarray | None = None    # desired rotation matrix
    f_sigma: float | None = None          # optional thrust for attitude mode
    thrust: float | None = None           # constant-thrust value

    def __post_init__(self):
        need_pos = self.mode in (SetpointMode.POSITION_HOLD, SetpointMode.TRAJECTORY)
        if need_pos and self.position is None:
            raise ValueError(f"{self.mode.value} needs a position reference")
        if self.mode is SetpointMode.ATTITUDE_ONLY and self.attitude is None:
            raise ValueError("attitude_only needs an attitude reference")
        if self.mode is SetpointMode.CONSTANT_THRUST and self.thrust is None:
            raise ValueError("constant_thrust needs a thrust value")
        if self.mode is not SetpointMode.CONSTANT_THRUST and self.thrust is not None:
            raise ValueError("thrust payload only belongs to constant_thrust mode")
        if self.mode is not SetpointMode.ATTITUDE_ONLY and self.attitude is not None:
            raise ValueError("attitude payload only belongs to attitude_only mode")
        if not need_pos and self.position is not None:
            raise ValueError("position payload requires a position mode")

    @classmethod
    def position_hold(cls, position, yaw: float = 0.0) -> "Setpoint":
        return cls(SetpointMode.POSITION_HOLD,
                   position=np.asarray(position, float), yaw=yaw)

    @classmethod
    def trajectory(cls, position, velocity, acceleration,
                   yaw: float = 0.0) -> "Setpoint":
        return cls(SetpointMode.TRAJECTORY,
                   position=np.asarray(position, float),
                   velocity=np.asarray(velocity, float),
                   acceleration=np.asarray(acceleration, float), yaw=yaw)

    @classmethod
    def attitude_only(cls, attitude, f_sigma: float | None = None) -> "Setpoint":
        return cls(SetpointMode.ATTITUDE_ONLY,
                   attitude=np.asarray(attitude, float), f_sigma=f_sigma)

    @classmethod
    def constant_thrust(cls, thrust: float) -> "Setpoint":
        return cls(SetpointMode.CONSTANT_THRUST, thrust=float(thrust))


@dataclass(frozen=True)
class MotorCommand:
    """One propeller command: signed speed and the thrust it encodes."""

    speed: float
    thrust: float
    forward: bool


@dataclass
class ControllerConfig:
    """Gains, loop rates, and transition settings.

    The position gains and acceleration cap are simulation-tuned; the
    attitude weights live here so a config file can override them.
    """

    kp_pos: float = 6.0
    kd_pos: float = 4.0
    acc_cap: float = 8.0
    attitude_period: float = 0.002        # 500 Hz
    position_divider: int = 10            # -> 50 Hz position loop
    q_diag: tuple = (40.0, 40.0, 20.0, 6.0, 6.0, 3.0)
    r_forward: float = 1.0
    r_reverse: float = 4.0
    fold_thrust: float = -1.0
    unfold_thrust: float = 1.0
    hinge_tolerance_deg: float = 2.0
    debounce: float = 0.05
    timeout: float = 2.0
    exit_mode: str = "hinge"
    timed_duration: float = 0.4

    @classmethod
    def from_mapping(cls, raw: dict) -> "ControllerConfig":
        valid = {f.name for f in fields(cls)}
        unknown = set(raw) - valid
        if unknown:
            raise ValueError(f"unknown controller config keys: {sorted(unknown)}")
        kwargs = dict(raw)
        if "q_diag" in kwargs:
            kwargs["q_diag"] = tuple(float(v) for v in kwargs["q_diag"])
        if "position_divider" in kwargs:
            kwargs["position_divider"] = int(kwargs["position_divider"])
        return cls(**kwargs)

    def make_fsm(self, config: Configuration = Configuration.UNFOLDED) -> TransitionFsm:
        return TransitionFsm(
            steady_config=config,
            hinge_tolerance=math.radians(self.hinge_tolerance_deg),
            debounce=self.debounce,
            timeout=self.timeout,
            exit_mode=self.exit_mode,
            timed_duration=self.timed_duration,
            fold_thrust=self.fold_thrust,
            unfold_thrust=self.unfold_thrust,
        )


def position_control(state, setpoint: Setpoint,
                     cfg: ControllerConfig | None = None) -> np.ndarray:
    """Desired acceleration from position and velocity errors.

    The feedback part is norm-capped; the feedforward reference passes
    through untouched.
    """
    cfg = cfg or ControllerConfig()
    v_ref = np.zeros(3) if setpoint.velocity is None else setpoint.velocity
    a_ref = np.zeros(3) if setpoint.acceleration is None else setpoint.acceleration
    feedback = (cfg.kp_pos * (setpoint.position - state.position)
                + cfg.kd_pos * (v_ref - state.velocity))
    norm = np.linalg.norm(feedback)
    if norm > cfg.acc_cap:
        feedback *= cfg.acc_cap / norm
    return a_ref + feedback


def acc_to_wrench_attitude(a_des: np.ndarray, yaw_des: float,
                           params: VehicleParams,
                           rotation: np.ndarray | None = None,
                           ) -> tuple[float, np.ndarray | None]:
    """Total thrust and desired attitude realizing an acceleration.

    Passing the current rotation projects the thrust onto the actual
    body z-axis instead of assuming perfect attitude tracking.  Returns
    ``(0.0, None)`` at the free-fall singularity; the caller should hold
    its previous attitude reference.
    """
    lift = a_des - params.gravity
    norm = float(np.linalg.norm(lift))
    if norm < _FREE_FALL_EPS:
        return 0.0, None
    z_des = lift / norm
    if rotation is None:
        f_sigma = params.mass_total * norm
    else:
        f_sigma = max(params.mass_total * float(lift @ rotation[:, 2]), 0.0)
    return f_sigma, rotmat_from_z_yaw(z_des, yaw_des)


class _Stack:
    """Per-configuration control pieces, built once and cached."""

    def __init__(self, config: Configuration, params: VehicleParams,
                 cfg: ControllerConfig):
        self.mapping = build_mapping(config, params)
        self.flags = forward_flags(config)
        self.bound = bound_matrix(config, params)
        self.gains = synthesize_gains(
            config, params, Q=np.diag(cfg.q_diag),
            r_plus=cfg.r_forward, r_minus=cfg.r_reverse)


class CascadeController:
    """Stateful 500 Hz controller; one instance per vehicle.

    Step it once per attitude period with the current simulator state,
    the active setpoint, and the transition machine.  All internal state
    is deterministic, so identical input streams give identical command
    streams.
    """

    def __init__(self, params: VehicleParams,
                 cfg: ControllerConfig | None = None,
                 enforce_fourfold_bounds: bool = False):
        self.params = params
        self.cfg = cfg or ControllerConfig()
        self.enforce_fourfold_bounds = enforce_fourfold_bounds
        self._stacks: dict[Configuration, _Stack] = {}
        self.reset()

    def reset(self) -> None:
        self._tick = 0
        self._a_des = np.zeros(3)
        self._last_attitude_ref: np.ndarray | None = None
        self._yaw_override: float | None = None
        self.last_wrench = np.zeros(4)
        self.last_margins = np.zeros(4)

    def stack(self, config: Configuration) -> _Stack:
        if config not in self._stacks:
            self._stacks[config] = _Stack(config, self.params, self.cfg)
        return self._stacks[config]

    def clear_yaw_override(self) -> None:
        self._yaw_override = None

    # ----- main entry -----

    def step_controller(self, state, setpoint: Setpoint,
                        fsm: TransitionFsm) -> list[MotorCommand]:
        p = self.params
        config = fsm.control_config
        stk = self.stack(config)
        pending_yaw = fsm.consume_yaw_target()
        if pending_yaw is not None:
            self._yaw_override = pending_yaw

        constant = fsm.constant_thrust
        if constant is None and setpoint.mode is SetpointMode.CONSTANT_THRUST:
            constant = setpoint.thrust
        if constant is not None:
            value = float(np.clip(constant, p.thrust_min, p.thrust_max))
            u = np.full(4, value)
            return self._emit(u, stk, branch_clamp=False)

        rotation = quat_to_rotmat(state.quat)
        yaw_des = self._yaw_override if self._yaw_override is not None else setpoint.yaw

        if fsm.state is FsmState.SAFE:
            if self._yaw_override is None:
                self._yaw_override = yaw_of(rotation)
                yaw_des = self._yaw_override
            attitude_ref = rotmat_from_z_yaw(np.array([0.0, 0.0, 1.0]), yaw_des)
            f_sigma = p.mass_total * float(np.linalg.norm(p.gravity))
        elif setpoint.mode is SetpointMode.ATTITUDE_ONLY:
            attitude_ref = setpoint.attitude
            f_sigma = (setpoint.f_sigma if setpoint.f_sigma is not None
                       else p.mass_total * float(np.linalg.norm(p.gravity)))
        else:
            if self._tick % self.cfg.position_divider == 0:
                self._a_des = position_control(state, setpoint, self.cfg)
            f_sigma, attitude_ref = acc_to_wrench_attitude(
                self._a_des, yaw_des, p, rotation)
            if attitude_ref is None:
                attitude_ref = (self._last_attitude_ref
                                if self._last_attitude_ref is not None else rotation)
                f_sigma = 0.0
        self._last_attitude_ref = attitude_ref

        r_err = rotation_error(rotation, attitude_ref)
        torque = stk.gains.proportional @ r_err - stk.gains.derivative @ state.omega
        wrench = np.array([f_sigma, *torque])

        if config is Configuration.FOUR_FOLDED:
            wrench[0] = 0.0          # folded propellers produce no net lift
            if self.enforce_fourfold_bounds:
                wrench = enforce_hierarchy(wrench, stk.bound, stk.mapping,
                                           p.thrust_min, p.thrust_max)
            u = allocate_min_norm(stk.mapping, wrench[1:])
        else:
            wrench = enforce_hierarchy(wrench, stk.bound, stk.mapping,
                                       p.thrust_min, p.thrust_max)
            u = invert_mapping(stk.mapping, wrench)
        return self._emit(u, stk, branch_clamp=True)

    def _emit(self, u: np.ndarray, stk: _Stack,
              branch_clamp: bool) -> list[MotorCommand]:
        if branch_clamp:
            u = clamp_to_branch(u, stk.flags, self.params)
        self.last_wrench = stk.mapping @ u
        self.last_margins = stk.bound.margins(self.last_wrench)
        self._tick += 1
        return [MotorCommand(speed=speed_from_thrust(self.params, t),
                             thrust=float(t), forward=t >= 0.0)
                for t in u]


def step_controller(controller: CascadeController, state, setpoint: Setpoint,
                    fsm: TransitionFsm) -> list[MotorCommand]:
    """Functional form of :meth:`CascadeController.step_controller`."""
    return controller.step_controller(state, setpoint, fsm)
