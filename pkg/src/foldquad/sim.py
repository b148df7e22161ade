"""Multibody flight simulator for the folding quadcopter.

The vehicle is modelled as five rigid bodies: the central body and four
arms, each connected by a passive one degree of freedom hinge with hard
stops at 0 and 90 degrees.  The solver assembles the Newton-Euler
equations of all five bodies together with the hinge constraints into one
linear system per evaluation, so the hinge reaction forces and torques
come out of the same solve as the accelerations.  Those reactions are
what the latching logic needs: a stop stays engaged only while the axial
reaction torque presses the arm into it.

Stop collisions are resolved as inelastic impulsive impacts by default
(restitution is a vehicle parameter), using the same system matrix with
velocity jumps and impulses as unknowns.

All dynamics are expressed in body coordinates; positions and velocities
are integrated in the world frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .so3 import hat, quat_derivative, quat_normalize, quat_to_rotmat
from .vehicle import (
    Configuration,
    VehicleParams,
    arm_rotation,
    config_hinge_angles,
    prop_torque,
)

HINGE_FREE = 0
HINGE_AT_0 = 1
HINGE_AT_90 = 2

HINGE_UPPER = 0.5 * math.pi

# Tolerances for the stepper.
EVENT_TIME_TOL = 1e-6
UNLOCK_TORQUE_TOL = 1e-12
_MAX_LOCK_PASSES = 4

# Unknown layout of the 34x34 system:
#   0:3    body com acceleration, body coords
#   3:6    body angular acceleration
#   6:10   hinge angular accelerations
#   10:22  hinge reaction forces on the body, body coords (3 per arm)
#   22:34  hinge reaction torques on the body, body coords (3 per arm)
_IX_AB = slice(0, 3)
_IX_WD = slice(3, 6)
_IX_QDD = slice(6, 10)



def _cross3(a, b) -> np.ndarray:
    """np.cross for plain 3-vectors without its axis-handling overhead."""
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def _cross_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise cross product of two (n, 3) arrays."""
    out = np.empty_like(a)
    out[:, 0] = a[:, 1] * b[:, 2] - a[:, 2] * b[:, 1]
    out[:, 1] = a[:, 2] * b[:, 0] - a[:, 0] * b[:, 2]
    out[:, 2] = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    return out


def _ix_force(i: int) -> slice:
    return slice(10 + 3 * i, 13 + 3 * i)


def _ix_torque(i: int) -> slice:
    return slice(22 + 3 * i, 25 + 3 * i)


@dataclass
class SimState:
    """Full mechanical and actuator state at one instant."""

    t: float
    position: np.ndarray          # body com, world frame (m)
    quat: np.ndarray              # body attitude, body-to-world, w first
    velocity: np.ndarray          # body com velocity, world frame (m/s)
    omega: np.ndarray             # body angular rate, body frame (rad/s)
    hinge_angle: np.ndarray       # 4 fold angles (rad), 0 = flat
    hinge_rate: np.ndarray        # 4 fold rates (rad/s)
    hinge_lock: np.ndarray        # 4 flags: HINGE_FREE / HINGE_AT_0 / HINGE_AT_90
    motor_thrust: np.ndarray      # 4 actual propeller thrusts (N)
    motor_dead_until: np.ndarray = field(
        default_factory=lambda: np.zeros(4))

    def copy(self) -> "SimState":
        return SimState(
            t=self.t,
            position=self.position.copy(),
            quat=self.quat.copy(),
            velocity=self.velocity.copy(),
            omega=self.omega.copy(),
            hinge_angle=self.hinge_angle.copy(),
            hinge_rate=self.hinge_rate.copy(),
            hinge_lock=self.hinge_lock.copy(),
            motor_thrust=self.motor_thrust.copy(),
            motor_dead_until=self.motor_dead_until.copy(),
        )


@dataclass
class DynamicsSolution:
    """Accelerations and hinge reactions from one dynamics solve.

    Reaction forces and torques act on the body; the arms feel the
    opposite.  ``hinge_axis_torques`` are the axial components, positive
    along each hinge axis, which is what the stop latching logic reads.
    """

    accel_world: np.ndarray       # body com linear acceleration, world (m/s^2)
    omega_dot: np.ndarray         # body angular acceleration, body (rad/s^2)
    hinge_accel: np.ndarray       # 4 fold accelerations (rad/s^2)
    reaction_forces: np.ndarray   # (4, 3) on the body, body coords (N)
    reaction_torques: np.ndarray  # (4, 3) on the body, body coords (N m)
    hinge_axis_torques: np.ndarray  # (4,) axial reaction torques (N m)
    matrix: np.ndarray = field(repr=False, default=None)
    rhs: np.ndarray = field(repr=False, default=None)
    raw: np.ndarray = field(repr=False, default=None)


def hinge_axis_torque(solution: DynamicsSolution, i: int) -> float:
    """Axial hinge reaction torque for arm ``i`` (0-based).

    Positive values push the arm toward larger fold angles, so a hinge
    latched flat stays latched while this is <= 0 and a hinge latched at
    the 90 degree stop stays latched while it is >= 0.
    """
    return float(solution.hinge_axis_torques[i])


def make_state(params: VehicleParams,
               config: Configuration = Configuration.UNFOLDED,
               position: np.ndarray | None = None,
               yaw: float = 0.0,
               t: float = 0.0) -> SimState:
    """Hovering-shape rest state in the given steady configuration."""
    angles = config_hinge_angles(config)
    locks = np.where(angles > 0.25 * math.pi, HINGE_AT_90, HINGE_AT_0)
    half = 0.5 * yaw
    quat = np.array([math.cos(half), 0.0, 0.0, math.sin(half)])
    pos = np.zeros(3) if position is None else np.asarray(position, float)
    return SimState(
        t=t,
        position=pos.copy(),
        quat=quat,
        velocity=np.zeros(3),
        omega=np.zeros(3),
        hinge_angle=angles.copy(),
        hinge_rate=np.zeros(4),
        hinge_lock=locks.astype(np.int64),
        motor_thrust=np.zeros(4),
    )


class MultibodySim:
    """Integrator for the five-body vehicle with latching hinges.

    ``body_fixed`` clamps the central body (zero linear and angular
    acceleration) and is meant for bench tests of single-arm behaviour;
    flight scenarios leave it off.
    """

    def __init__(self, params: VehicleParams, dt: float = 1e-3,
                 body_fixed: bool = False):
        if dt <= 0.0 or dt > 2e-3:
            raise ValueError("step size must be in (0, 2 ms]")
        self.params = params
        self.dt = dt
        self.body_fixed = body_fixed
        self._hinges = params.hinge_positions
        self._axes = params.hinge_axes
        self._j_arm = params.inertia_arm.copy()
        self._j_body = params.inertia_body.copy()
        self._rigid_cache: dict[tuple, dict] = {}

    # ----- dynamics -----

    def dynamics(self, state: SimState,
                 thrusts: np.ndarray | None = None) -> DynamicsSolution:
        """Solve for accelerations and hinge reactions at ``state``.

        ``thrusts`` overrides the motor thrusts stored in the state,
        which is what the integrator uses mid step.
        """
        u = state.motor_thrust if thrusts is None else np.asarray(thrusts, float)
        if not self.body_fixed and np.all(state.hinge_lock != HINGE_FREE):
            return self._rigid_dynamics(state, u)
        a_mat, b_vec = self._assemble_dynamics(
            state.quat, state.omega, state.hinge_angle, state.hinge_rate,
            state.hinge_lock, u)
        try:
            x = np.linalg.solve(a_mat, b_vec)
        except np.linalg.LinAlgError as exc:
            raise ValueError("singular mass system") from exc
        return self._solution_from_raw(state.quat, a_mat, b_vec, x)

    def _solution_from_raw(self, quat, a_mat, b_vec, x) -> DynamicsSolution:
        forces = x[10:22].reshape(4, 3)
        torques = x[22:34].reshape(4, 3)
        axial = np.array([self._axes[i] @ torques[i] for i in range(4)])
        r_eb = quat_to_rotmat(quat)
        return DynamicsSolution(
            accel_world=r_eb @ x[_IX_AB],
            omega_dot=x[_IX_WD].copy(),
            hinge_accel=x[_IX_QDD].copy(),
            reaction_forces=forces,
            reaction_torques=torques,
            hinge_axis_torques=axial,
            matrix=a_mat,
            rhs=b_vec,
            raw=x,
        )

    def _assemble_dynamics(self, quat, omega, hq, hqd, locks, u):
        """Newton-Euler system for accelerations.  34 equations:

        rows 0:3   body translation        rows 18:30  arm rotations
        rows 3:6   body rotation           rows 30:34  hinge axial / lock
        rows 6:18  arm translations
        """
        p = self.params
        m_b = p.mass_body
        m_a = p.mass_arm
        g_b = quat_to_rotmat(quat).T @ p.gravity
        a = np.zeros((34, 34))
        b = np.zeros(34)

        if self.body_fixed:
            a[0:3, _IX_AB] = np.eye(3)
            a[3:6, _IX_WD] = np.eye(3)
        else:
            a[0:3, _IX_AB] = m_b * np.eye(3)
            b[0:3] = m_b * g_b
            a[3:6, _IX_WD] = self._j_body
            b[3:6] = -_cross3(omega, self._j_body @ omega)
            for i in range(4):
                a[0:3, _ix_force(i)] = -np.eye(3)
                a[3:6, _ix_force(i)] = -hat(self._hinges[i])
                a[3:6, _ix_torque(i)] = -np.eye(3)

        for i in range(4):
            rot = arm_rotation(p, i, hq[i])
            y = self._axes[i]
            z = rot[:, 2]
            r2 = rot @ p.hinge_to_arm_com           # hinge -> arm com, body
            r12 = self._hinges[i] + r2              # body com -> arm com
            r_pa = rot @ (p.hinge_to_prop - p.hinge_to_arm_com)
            j_i = rot @ self._j_arm @ rot.T
            w_ai = omega + hqd[i] * y
            dj = hqd[i] * (hat(y) @ j_i - j_i @ hat(y))
            yxr2 = _cross3(y, r2)

            rt = slice(6 + 3 * i, 9 + 3 * i)
            a[rt, _IX_AB] = m_a * np.eye(3)
            a[rt, _IX_WD] = -m_a * hat(r12)
            a[rt, 6 + i] = m_a * yxr2
            a[rt, _ix_force(i)] = np.eye(3)
            b[rt] = (m_a * g_b + z * u[i]
                     - m_a * (_cross3(omega, _cross3(omega, r12))
                              + 2.0 * hqd[i] * _cross3(omega, yxr2)
                              + hqd[i] ** 2 * _cross3(y, yxr2)))

            rr = slice(18 + 3 * i, 21 + 3 * i)
            a[rr, _IX_WD] = j_i
            a[rr, 6 + i] = j_i @ y
            a[rr, _ix_torque(i)] = np.eye(3)
            a[rr, _ix_force(i)] = -hat(r2)
            b[rr] = (_cross3(r_pa, z * u[i])
                     + prop_torque(p, i, u[i]) * z
                     - dj @ w_ai
                     - _cross3(omega, j_i @ w_ai))

            row = 30 + i
            if locks[i] == HINGE_FREE:
                a[row, _ix_torque(i)] = y
                b[row] = p.hinge_viscous_friction * hqd[i]
            else:
                a[row, 6 + i] = 1.0
        return a, b

    def _rigid_accels(self, rot: np.ndarray, omega: np.ndarray,
                      u: np.ndarray, geo: dict) -> tuple:
        """Composite-rigid-body accelerations; no reaction recovery."""
        p = self.params
        g_b = rot.T @ p.gravity
        z = geo["z"]
        zu = z * u[:, None]
        kappa = np.where(u >= 0.0, p.drag_over_thrust_forward,
                         p.drag_over_thrust_reverse)
        gamma = geo["spin"] * kappa * u
        force = zu.sum(axis=0)
        torque = _cross_rows(geo["prop_rel"], zu).sum(axis=0) + z.T @ gamma
        a_com = g_b + force / p.mass_total
        wd = np.linalg.solve(
            geo["j_sys"], torque - _cross3(omega, geo["j_sys"] @ omega))
        b_rel = -geo["com"]
        a_body = (a_com + _cross3(wd, b_rel)
                  + _cross3(omega, _cross3(omega, b_rel)))
        return a_body, wd, a_com, g_b

    def _rigid_dynamics(self, state: SimState, u: np.ndarray) -> DynamicsSolution:
        """All hinges latched: treat the vehicle as one rigid body.

        Much cheaper than the full solve and exact in this regime; the
        hinge reactions are recovered arm by arm afterwards so latch
        checks still work.
        """
        p = self.params
        geo = self._rigid_geometry(state.hinge_angle)
        rot = quat_to_rotmat(state.quat)
        omega = state.omega
        a_body, wd, a_com, g_b = self._rigid_accels(rot, omega, u, geo)

        forces = np.zeros((4, 3))
        torques = np.zeros((4, 3))
        axial = np.zeros(4)
        for i in range(4):
            r_i = geo["arm_rel"][i]
            a_arm = (a_com + _cross3(wd, r_i)
                     + _cross3(omega, _cross3(omega, r_i)))
            zu = geo["z"][i] * u[i]
            f_on_arm = p.mass_arm * (a_arm - g_b) - zu
            j_i = geo["j_arm"][i]
            t_on_arm = (j_i @ wd + _cross3(omega, j_i @ omega)
                        - _cross3(geo["r_pa"][i], zu)
                        - prop_torque(p, i, u[i]) * geo["z"][i]
                        + _cross3(geo["r2"][i], f_on_arm))
            forces[i] = -f_on_arm
            torques[i] = -t_on_arm
            axial[i] = self._axes[i] @ torques[i]

        return DynamicsSolution(
            accel_world=rot @ a_body,
            omega_dot=wd,
            hinge_accel=np.zeros(4),
            reaction_forces=forces,
            reaction_torques=torques,
            hinge_axis_torques=axial,
        )

    def _rigid_geometry(self, hq: np.ndarray) -> dict:
        key = tuple(np.round(hq, 12))
        geo = self._rigid_cache.get(key)
        if geo is not None:
            return geo
        p = self.params
        z = np.zeros((4, 3))
        r2 = np.zeros((4, 3))
        arm_com = np.zeros((4, 3))
        prop = np.zeros((4, 3))
        j_arm = np.zeros((4, 3, 3))
        for i in range(4):
            rot = arm_rotation(p, i, hq[i])
            z[i] = rot[:, 2]
            r2[i] = rot @ p.hinge_to_arm_com
            arm_com[i] = self._hinges[i] + r2[i]
            prop[i] = self._hinges[i] + rot @ p.hinge_to_prop
            j_arm[i] = rot @ self._j_arm @ rot.T
        com = p.mass_arm * arm_com.sum(axis=0) / p.mass_total
        j_sys = self._j_body + p.mass_body * hat(com).T @ hat(com)
        arm_rel = arm_com - com
        for i in range(4):
            j_sys = j_sys + j_arm[i] + p.mass_arm * hat(arm_rel[i]).T @ hat(arm_rel[i])
        geo = {
            "z": z, "r2": r2, "arm_rel": arm_rel, "com": com,
            "prop_rel": prop - com, "r_pa": prop - arm_com,
            "j_arm": j_arm, "j_sys": j_sys,
            "spin": np.array([p.spin_sign(i) for i in range(4)]),
        }
        self._rigid_cache[key] = geo
        return geo

    # ----- impacts -----

    def _impact(self, state: SimState, hit: np.ndarray) -> None:
        """Impulsive stop collision for the arms flagged in ``hit``.

        Velocity jumps and impulses satisfy the same mass matrix as the
        smooth dynamics; the impacting hinge rows prescribe the
        restitution law.  Mutates the state's velocities in place.
        """
        p = self.params
        m_b = p.mass_body
        m_a = p.mass_arm
        a = np.zeros((34, 34))
        b = np.zeros(34)

        if self.body_fixed:
            a[0:3, _IX_AB] = np.eye(3)
            a[3:6, _IX_WD] = np.eye(3)
        else:
            a[0:3, _IX_AB] = m_b * np.eye(3)
            a[3:6, _IX_WD] = self._j_body
            for i in range(4):
                a[0:3, _ix_force(i)] = -np.eye(3)
                a[3:6, _ix_force(i)] = -hat(self._hinges[i])
                a[3:6, _ix_torque(i)] = -np.eye(3)

        for i in range(4):
            rot = arm_rotation(p, i, state.hinge_angle[i])
            y = self._axes[i]
            r2 = rot @ p.hinge_to_arm_com
            r12 = self._hinges[i] + r2
            j_i = rot @ self._j_arm @ rot.T

            rt = slice(6 + 3 * i, 9 + 3 * i)
            a[rt, _IX_AB] = m_a * np.eye(3)
            a[rt, _IX_WD] = -m_a * hat(r12)
            a[rt, 6 + i] = m_a * _cross3(y, r2)
            a[rt, _ix_force(i)] = np.eye(3)

            rr = slice(18 + 3 * i, 21 + 3 * i)
            a[rr, _IX_WD] = j_i
            a[rr, 6 + i] = j_i @ y
            a[rr, _ix_torque(i)] = np.eye(3)
            a[rr, _ix_force(i)] = -hat(r2)

            row = 30 + i
            if hit[i]:
                a[row, 6 + i] = 1.0
                b[row] = -(1.0 + p.restitution) * state.hinge_rate[i]
            elif state.hinge_lock[i] == HINGE_FREE:
                a[row, _ix_torque(i)] = y
            else:
                a[row, 6 + i] = 1.0

        x = np.linalg.solve(a, b)
        r_eb = quat_to_rotmat(state.quat)
        state.velocity += r_eb @ x[_IX_AB]
        state.omega += x[_IX_WD]
        state.hinge_rate += x[_IX_QDD]

    # ----- stepping -----

    def step(self, state: SimState, commands: np.ndarray,
             dt: float | None = None) -> SimState:
        """Advance one control period with thrust commands held constant.

        Handles, in order: latch release at the step boundary, motor lag
        and reversal dead time, stop impacts located by bisection, and
        re-latching.  Returns a new state; the input is not modified.
        """
        h_total = self.dt if dt is None else dt
        if h_total <= 0.0 or h_total > 2e-3:
            raise ValueError("step size must be in (0, 2 ms]")
        commands = np.asarray(commands, float)
        st = state.copy()
        t_end = state.t + h_total

        self._release_latches(st, commands)

        guard = 0
        while t_end - st.t > 1e-12:
            guard += 1
            if guard > 64:
                raise RuntimeError("step subdivided too many times")
            seg_end = self._next_motor_boundary(st, commands, t_end)
            h = seg_end - st.t
            all_locked = not self.body_fixed and bool(
                np.all(st.hinge_lock != HINGE_FREE))
            if all_locked:
                trial = self._rigid_rk4(st, commands, h)
                self._advance_motors(trial, st, commands)
                st = trial
                continue
            trial = self._rk4(st, commands, h)
            hit = self._stop_crossings(trial)
            if not hit.any():
                self._advance_motors(trial, st, commands)
                st = trial
                continue
            # Bisect the first crossing time to EVENT_TIME_TOL.
            lo, hi = 0.0, h
            while hi - lo > EVENT_TIME_TOL:
                mid = 0.5 * (lo + hi)
                if self._stop_crossings(self._rk4(st, commands, mid)).any():
                    hi = mid
                else:
                    lo = mid
            hit = self._stop_crossings(self._rk4(st, commands, hi))
            pre = self._rk4(st, commands, lo) if lo > 0.0 else st.copy()
            self._advance_motors(pre, st, commands)
            for i in range(4):
                if hit[i]:
                    # pre is within EVENT_TIME_TOL of the crossing, so the
                    # nearest stop is the crossed one. Snapping by rate sign
                    # instead would misfile a zero-rate grazing contact.
                    pre.hinge_angle[i] = (
                        HINGE_UPPER if pre.hinge_angle[i] > 0.25 * math.pi
                        else 0.0)
            self._impact(pre, hit)
            for i in range(4):
                if hit[i] and abs(pre.hinge_rate[i]) < 1e-10:
                    pre.hinge_rate[i] = 0.0
                    pre.hinge_lock[i] = (
                        HINGE_AT_90 if pre.hinge_angle[i] > 0.25 * math.pi
                        else HINGE_AT_0)
            st = pre
        st.quat = quat_normalize(st.quat)
        for i in range(4):
            if st.hinge_lock[i] == HINGE_AT_0:
                st.hinge_angle[i] = 0.0
                st.hinge_rate[i] = 0.0
            elif st.hinge_lock[i] == HINGE_AT_90:
                st.hinge_angle[i] = HINGE_UPPER
                st.hinge_rate[i] = 0.0
        return st

    def _release_latches(self, st: SimState, commands: np.ndarray) -> None:
        """Free any latched hinge whose reaction pulls away from its stop."""
        for _ in range(_MAX_LOCK_PASSES):
            if np.all(st.hinge_lock == HINGE_FREE):
                return
            sol = self.dynamics(st)
            changed = False
            for i in range(4):
                lam = sol.hinge_axis_torques[i]
                if (st.hinge_lock[i] == HINGE_AT_0
                        and lam > UNLOCK_TORQUE_TOL):
                    st.hinge_lock[i] = HINGE_FREE
                    changed = True
                elif (st.hinge_lock[i] == HINGE_AT_90
                        and lam < -UNLOCK_TORQUE_TOL):
                    st.hinge_lock[i] = HINGE_FREE
                    changed = True
            if not changed:
                return

    @staticmethod
    def _stop_crossings(st: SimState) -> np.ndarray:
        out = np.zeros(4, dtype=bool)
        for i in range(4):
            if st.hinge_lock[i] != HINGE_FREE:
                continue
            if st.hinge_angle[i] < 0.0 or st.hinge_angle[i] > HINGE_UPPER:
                out[i] = True
        return out

    # ----- motors -----

    def _motor_thrust_at(self, st: SimState, commands: np.ndarray,
                         t: float) -> np.ndarray:
        """Analytic first-order motor response at absolute time ``t``.

        Valid only within the current segment, i.e. before any pending
        zero crossing or dead-time expiry; the stepper guarantees that
        by splitting steps at motor boundaries.
        """
        p = self.params
        out = np.empty(4)
        for i in range(4):
            if t < st.motor_dead_until[i]:
                out[i] = 0.0
                continue
            t0 = max(st.t, st.motor_dead_until[i])
            f0 = st.motor_thrust[i] if st.motor_dead_until[i] <= st.t else 0.0
            decay = math.exp(-(t - t0) / p.motor_time_constant)
            out[i] = commands[i] + (f0 - commands[i]) * decay
        return out

    def _next_motor_boundary(self, st: SimState, commands: np.ndarray,
                             t_end: float) -> float:
        bound = t_end
        p = self.params
        for i in range(4):
            if st.t < st.motor_dead_until[i] < bound:
                bound = st.motor_dead_until[i]
                continue
            if st.motor_dead_until[i] > st.t:
                continue
            f0 = st.motor_thrust[i]
            c = commands[i]
            if f0 * c < 0.0:
                t_c = st.t + p.motor_time_constant * math.log((c - f0) / c)
                if st.t < t_c < bound:
                    bound = t_c
        return bound

    def _advance_motors(self, dst: SimState, src: SimState,
                        commands: np.ndarray) -> None:
        """Update motor state on ``dst`` after integrating from ``src``."""
        p = self.params
        t = dst.t
        thrust = self._motor_thrust_at(src, commands, t)
        for i in range(4):
            dead = src.motor_dead_until[i]
            if dead > src.t and abs(t - dead) <= 1e-12:
                # dead time just expired; thrust restarts from zero
                thrust[i] = 0.0
            elif dead <= src.t and src.motor_thrust[i] * commands[i] < 0.0:
                t_c = src.t + p.motor_time_constant * math.log(
                    (commands[i] - src.motor_thrust[i]) / commands[i])
                if abs(t - t_c) <= 1e-12:
                    # reversal through zero starts the dead window
                    thrust[i] = 0.0
                    dst.motor_dead_until[i] = t_c + p.reversal_dead_time
                    continue
            dst.motor_dead_until[i] = dead
        dst.motor_thrust = thrust

    # ----- integration -----

    def _rigid_rk4(self, st: SimState, commands: np.ndarray,
                   h: float) -> SimState:
        """RK4 with every hinge latched: only six mechanical DOF move."""
        geo = self._rigid_geometry(st.hinge_angle)

        def deriv(t, pos, quat, vel, omega):
            u = self._motor_thrust_at(st, commands, t)
            rot = quat_to_rotmat(quat)
            a_body, wd, _, _ = self._rigid_accels(rot, omega, u, geo)
            return vel, quat_derivative(quat, omega), rot @ a_body, wd

        y0 = (st.position, st.quat, st.velocity, st.omega)
        k1 = deriv(st.t, *y0)
        k2 = deriv(st.t + 0.5 * h,
                   *[y + 0.5 * h * k for y, k in zip(y0, k1)])
        k3 = deriv(st.t + 0.5 * h,
                   *[y + 0.5 * h * k for y, k in zip(y0, k2)])
        k4 = deriv(st.t + h, *[y + h * k for y, k in zip(y0, k3)])
        out = st.copy()
        out.position, out.quat, out.velocity, out.omega = [
            y + (h / 6.0) * (a + 2 * b + 2 * c + d)
            for y, a, b, c, d in zip(y0, k1, k2, k3, k4)]
        out.quat = quat_normalize(out.quat)
        out.t = st.t + h
        return out

    def _rk4(self, st: SimState, commands: np.ndarray, h: float) -> SimState:
        def deriv(t, pos, quat, vel, omega, hq, hqd):
            probe = SimState(
                t=t, position=pos, quat=quat, velocity=vel, omega=omega,
                hinge_angle=hq, hinge_rate=hqd, hinge_lock=st.hinge_lock,
                motor_thrust=st.motor_thrust,
                motor_dead_until=st.motor_dead_until)
            u = self._motor_thrust_at(st, commands, t)
            sol = self.dynamics(probe, u)
            free = st.hinge_lock == HINGE_FREE
            return (vel, quat_derivative(quat, omega), sol.accel_world,
                    sol.omega_dot, np.where(free, hqd, 0.0),
                    np.where(free, sol.hinge_accel, 0.0))

        y0 = (st.position, st.quat, st.velocity, st.omega,
              st.hinge_angle, st.hinge_rate)
        k1 = deriv(st.t, *y0)
        k2 = deriv(st.t + 0.5 * h,
                   *[y + 0.5 * h * k for y, k in zip(y0, k1)])
        k3 = deriv(st.t + 0.5 * h,
                   *[y + 0.5 * h * k for y, k in zip(y0, k2)])
        k4 = deriv(st.t + h, *[y + h * k for y, k in zip(y0, k3)])
        out = st.copy()
        vals = [y + (h / 6.0) * (a + 2 * b + 2 * c + d)
                for y, a, b, c, d in zip(y0, k1, k2, k3, k4)]
        out.position, out.quat, out.velocity = vals[0], vals[1], vals[2]
        out.omega, out.hinge_angle, out.hinge_rate = vals[3], vals[4], vals[5]
        out.quat = quat_normalize(out.quat)
        out.t = st.t + h
        return out

    # ----- bookkeeping for conservation checks -----

    def linear_momentum(self, st: SimState) -> np.ndarray:
        """Total linear momentum in the world frame."""
        p = self.params
        r_eb = quat_to_rotmat(st.quat)
        total = p.mass_body * st.velocity
        for i in range(4):
            v_arm = st.velocity + r_eb @ self._arm_com_velocity_body(st, i)
            total = total + p.mass_arm * v_arm
        return total

    def angular_momentum(self, st: SimState) -> np.ndarray:
        """Total angular momentum about the system mass centre, world frame."""
        p = self.params
        r_eb = quat_to_rotmat(st.quat)
        com_w, vcom_w = self._system_com_world(st)
        total = np.zeros(3)
        # body contribution
        r = st.position - com_w
        total += p.mass_body * _cross3(r, st.velocity - vcom_w)
        total += r_eb @ (self._j_body @ st.omega)
        for i in range(4):
            rot = arm_rotation(p, i, st.hinge_angle[i])
            r2 = rot @ p.hinge_to_arm_com
            pos_b = self._hinges[i] + r2
            pos_w = st.position + r_eb @ pos_b
            vel_w = st.velocity + r_eb @ self._arm_com_velocity_body(st, i)
            w_arm = st.omega + st.hinge_rate[i] * self._axes[i]
            j_i = rot @ self._j_arm @ rot.T
            total += p.mass_arm * _cross3(pos_w - com_w, vel_w - vcom_w)
            total += r_eb @ (j_i @ w_arm)
        return total

    def kinetic_energy(self, st: SimState) -> float:
        p = self.params
        r_eb = quat_to_rotmat(st.quat)
        total = 0.5 * p.mass_body * st.velocity @ st.velocity
        total += 0.5 * st.omega @ (self._j_body @ st.omega)
        for i in range(4):
            rot = arm_rotation(p, i, st.hinge_angle[i])
            vel_w = st.velocity + r_eb @ self._arm_com_velocity_body(st, i)
            w_arm = st.omega + st.hinge_rate[i] * self._axes[i]
            j_i = rot @ self._j_arm @ rot.T
            total += 0.5 * p.mass_arm * vel_w @ vel_w
            total += 0.5 * w_arm @ (j_i @ w_arm)
        return float(total)

    def potential_energy(self, st: SimState) -> float:
        p = self.params
        com_w, _ = self._system_com_world(st)
        return float(-p.mass_total * p.gravity @ com_w)

    def _arm_com_velocity_body(self, st: SimState, i: int) -> np.ndarray:
        """Arm com velocity relative to the body com, body coords."""
        p = self.params
        rot = arm_rotation(p, i, st.hinge_angle[i])
        y = self._axes[i]
        r2 = rot @ p.hinge_to_arm_com
        r12 = self._hinges[i] + r2
        return _cross3(st.omega, r12) + st.hinge_rate[i] * _cross3(y, r2)

    def _system_com_world(self, st: SimState) -> tuple[np.ndarray, np.ndarray]:
        p = self.params
        r_eb = quat_to_rotmat(st.quat)
        com_b = np.zeros(3)
        vcom_b = np.zeros(3)
        for i in range(4):
            rot = arm_rotation(p, i, st.hinge_angle[i])
            r12 = self._hinges[i] + rot @ p.hinge_to_arm_com
            com_b += p.mass_arm * r12
            vcom_b += p.mass_arm * self._arm_com_velocity_body(st, i)
        com_w = st.position + r_eb @ (com_b / p.mass_total)
        vcom_w = st.velocity + r_eb @ (vcom_b / p.mass_total)
        return com_w, vcom_w
