"""Configuration-transition state machine.

Two-arm transitions are instantaneous controller swaps: the machine
enters the transitional state, the control stack of the target
configuration takes over immediately, and the state is only bookkeeping
until the arms verifiably reach their stops.  Four-arm transitions
instead bypass the loops entirely and command a constant thrust on all
propellers until the arms arrive.

Exit detection uses simulated hinge angles by default.  The flight
hardware cannot sense arm positions, so a fixed-duration exit mode is
also available; select it with ``exit_mode="timed"``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .vehicle import Configuration


class FsmState(enum.Enum):
    STEADY = "steady"
    FOLDING_24 = "folding_24"
    UNFOLDING_24 = "unfolding_24"
    FOLDING_ALL = "folding_all"
    UNFOLDING_ALL = "unfolding_all"
    SAFE = "safe"


# (moving arm mask, target angle, steady config on completion)
_TRANSITIONS = {
    FsmState.FOLDING_24: (
        np.array([False, True, False, True]), 0.5 * math.pi,
        Configuration.TWO_FOLDED_24),
    FsmState.UNFOLDING_24: (
        np.array([False, True, False, True]), 0.0,
        Configuration.UNFOLDED),
    FsmState.FOLDING_ALL: (
        np.array([True, True, True, True]), 0.5 * math.pi,
        Configuration.FOUR_FOLDED),
    FsmState.UNFOLDING_ALL: (
        np.array([True, True, True, True]), 0.0,
        Configuration.UNFOLDED),
}

# control stack active while the transition runs
_CONTROL_BASIS = {
    FsmState.FOLDING_24: Configuration.TWO_FOLDED_24,
    FsmState.UNFOLDING_24: Configuration.UNFOLDED,
    FsmState.FOLDING_ALL: Configuration.FOUR_FOLDED,
    FsmState.UNFOLDING_ALL: Configuration.UNFOLDED,
}

_VALID_FROM = {
    FsmState.FOLDING_24: Configuration.UNFOLDED,
    FsmState.UNFOLDING_24: Configuration.TWO_FOLDED_24,
    FsmState.FOLDING_ALL: Configuration.UNFOLDED,
    FsmState.UNFOLDING_ALL: Configuration.FOUR_FOLDED,
}


@dataclass
class TransitionFsm:
    """Tracks the active configuration and in-flight transitions.

    ``yaw_target`` is set to the vehicle's yaw at the moment a
    transition completes and stays there until the controller consumes
    it, so the post-transition yaw error starts near zero.
    """

    steady_config: Configuration = Configuration.UNFOLDED
    hinge_tolerance: float = math.radians(2.0)
    debounce: float = 0.05
    timeout: float = 2.0
    exit_mode: str = "hinge"          # "hinge" or "timed"
    timed_duration: float = 0.4
    fold_thrust: float = -1.0
    unfold_thrust: float = 1.0

    state: FsmState = FsmState.STEADY
    entry_time: float = 0.0
    arm_done: np.ndarray = field(default_factory=lambda: np.zeros(4, bool))
    yaw_target: float | None = None
    _done_since: float | None = None

    def __post_init__(self):
        if self.exit_mode not in ("hinge", "timed"):
            raise ValueError("exit_mode must be 'hinge' or 'timed'")
        if not self.steady_config.is_steady:
            raise ValueError("initial configuration must be steady")

    # ----- requests -----

    def request(self, transition: FsmState, t: float) -> None:
        if self.state is not FsmState.STEADY:
            raise ValueError(f"cannot start {transition.value} while {self.state.value}")
        needed = _VALID_FROM[transition]
        if self.steady_config is not needed:
            raise ValueError(
                f"{transition.value} starts from {needed.value}, "
                f"not {self.steady_config.value}")
        self.state = transition
        self.entry_time = t
        self.arm_done = np.zeros(4, bool)
        self._done_since = None

    def request_fold_24(self, t: float) -> None:
        self.request(FsmState.FOLDING_24, t)

    def request_unfold_24(self, t: float) -> None:
        self.request(FsmState.UNFOLDING_24, t)

    def request_fold_all(self, t: float) -> None:
        self.request(FsmState.FOLDING_ALL, t)

    def request_unfold_all(self, t: float) -> None:
        self.request(FsmState.UNFOLDING_ALL, t)

    # ----- stepping -----

    def step(self, hinge_angles: np.ndarray, t: float,
             current_yaw: float | None = None) -> "TransitionFsm":
        """Advance transition bookkeeping; returns self."""
        if self.state in (FsmState.STEADY, FsmState.SAFE):
            return self
        moving, target, goal = _TRANSITIONS[self.state]
        within = np.abs(np.asarray(hinge_angles) - target) <= self.hinge_tolerance
        self.arm_done = np.where(moving, within, True)

        if self.exit_mode == "timed":
            done = (t - self.entry_time) >= self.timed_duration
        else:
            if self.arm_done.all():
                if self._done_since is None:
                    self._done_since = t
                done = (t - self._done_since) >= self.debounce
            else:
                self._done_since = None
                done = False

        if done:
            self.state = FsmState.STEADY
            self.steady_config = goal
            self.entry_time = t
            if current_yaw is not None:
                self.yaw_target = float(current_yaw)
        elif (t - self.entry_time) > self.timeout:
            self.state = FsmState.SAFE
            self.entry_time = t
        return self

    # ----- queries -----

    @property
    def in_steady(self) -> bool:
        return self.state is FsmState.STEADY

    @property
    def control_config(self) -> Configuration:
        """Configuration whose control stack should be running now."""
        if self.state in (FsmState.STEADY, FsmState.SAFE):
            return self.steady_config
        return _CONTROL_BASIS[self.state]

    @property
    def constant_thrust(self) -> float | None:
        """Open-loop thrust while all four arms are moving, else None."""
        if self.state is FsmState.FOLDING_ALL:
            return self.fold_thrust
        if self.state is FsmState.UNFOLDING_ALL:
            return self.unfold_thrust
        return None

    def consume_yaw_target(self) -> float | None:
        yaw = self.yaw_target
        self.yaw_target = None
        return yaw

    def describe(self) -> str:
        """Short tag for telemetry, e.g. ``steady:unfolded``."""
        if self.state is FsmState.STEADY:
            return f"steady:{self.steady_config.value}"
        if self.state is FsmState.SAFE:
            return f"safe:{self.steady_config.value}"
        return self.state.value


def fsm_step(fsm: TransitionFsm, hinge_angles: np.ndarray, t: float,
             current_yaw: float | None = None) -> TransitionFsm:
    """Functional form of :meth:`TransitionFsm.step`."""
    return fsm.step(hinge_angles, t, current_yaw)
