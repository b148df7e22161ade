"""Stay-in-configuration hinge-torque bounds, wrench hierarchy, envelopes.

The arms are held at their stops only by the reaction torque the airframe
exerts through each hinge. For a rigid configuration at low body rates that
reaction is linear in the commanded wrench, so the stay condition compresses
to four half-spaces W (f_sigma, tau) >= 0. This module extracts W, checks and
enforces it, and derives the feasible (f_sigma, tau_z) envelopes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mixer import allocate_min_norm, build_mapping, forward_flags
from .vehicle import (
    Configuration,
    VehicleParams,
    arm_com_position,
    arm_inertia_body,
    center_of_mass,
    combined_inertia,
    config_hinge_angles,
    prop_position,
    thrust_axis,
)

BISECT_TOL = 1e-6
_FEAS_SLACK = 1e-12

# unit wrench probes for extracting the linear bound map
_PROBES = np.vstack([np.zeros(4), np.eye(4)])


@dataclass(frozen=True)
class BoundMatrix:
    """Rows (c_f, c_x, c_y, c_z); W @ wrench >= 0 keeps all arms latched."""

    W: np.ndarray
    config: Configuration

    def margins(self, wrench: np.ndarray) -> np.ndarray:
        return self.W @ np.asarray(wrench, float)


@dataclass(frozen=True)
class Envelope:
    """Feasible (f_sigma, tau_z) polygons at fixed roll/pitch torque.

    a: propeller box only; b: same with reverse thrust disallowed;
    c: b intersected with the stay-in-configuration half-spaces.
    """

    vertices_a: np.ndarray
    vertices_b: np.ndarray
    vertices_c: np.ndarray
    config: Configuration


def _allocate(config: Configuration, M: np.ndarray, wrench: np.ndarray) -> np.ndarray:
    if config is Configuration.FOUR_FOLDED:
        return allocate_min_norm(M, wrench[1:4])
    return np.linalg.solve(M, wrench)


def hinge_reaction_torque(config: Configuration, params: VehicleParams,
                          wrench: np.ndarray) -> np.ndarray:
    """Axial hinge reaction torque on the body, one value per arm.

    Quasi-static: the vehicle is one rigid body at zero angular rate
    executing the thrusts that realize the wrench. Gravity cancels between
    the frame and each arm, so the result is exactly linear in the wrench.
    """
    angles = config_hinge_angles(config)
    flags = forward_flags(config)
    M = build_mapping(config, params)
    u = _allocate(config, M, np.asarray(wrench, float))

    com = center_of_mass(config, params)
    J_c = combined_inertia(config, params)
    axes = [thrust_axis(params, i, angles[i]) for i in range(4)]
    force = sum(u[i] * axes[i] for i in range(4))
    torque = (M @ u)[1:4]
    a_specific = force / params.mass_total
    omega_dot = np.linalg.solve(J_c, torque)

    lam = np.empty(4)
    for i in range(4):
        kappa = (params.drag_over_thrust_forward if flags[i]
                 else params.drag_over_thrust_reverse)
        g_i = params.spin_sign(i) * kappa
        arm_com = arm_com_position(params, i, angles[i])
        a_arm = a_specific + np.cross(omega_dot, arm_com - com)
        f_on_arm = params.mass_arm * a_arm - u[i] * axes[i]
        r_prop = prop_position(params, i, angles[i]) - arm_com
        r_hinge = params.hinge_positions[i] - arm_com
        tau_on_arm = (arm_inertia_body(params, i, angles[i]) @ omega_dot
                      - np.cross(r_prop, u[i] * axes[i]) - g_i * u[i] * axes[i]
                      - np.cross(r_hinge, f_on_arm))
        lam[i] = params.hinge_axes[i] @ (-tau_on_arm)
    return lam


def _stay_signs(config: Configuration) -> np.ndarray:
    # folded arms are pushed against the 90 deg stop, unfolded against 0
    angles = config_hinge_angles(config)
    return np.where(angles > 0.0, 1.0, -1.0)


def bound_matrix(config: Configuration, params: VehicleParams) -> BoundMatrix:
    """Extract W by probing the reaction at the unit wrenches.

    The reaction is linear, so four probes plus a zero check determine it.
    Rows are oriented so staying latched reads margin >= 0 and the thrust
    coefficient is non-negative.
    """
    signs = _stay_signs(config)
    rows = np.empty((4, 4))
    zero = hinge_reaction_torque(config, params, _PROBES[0])
    if np.max(np.abs(zero)) > 1e-9:
        raise AssertionError("reaction at zero wrench must vanish")
    for k in range(4):
        rows[:, k] = signs * hinge_reaction_torque(config, params, _PROBES[1 + k])
    return BoundMatrix(W=rows, config=config)


def bound_matrix_unfolded_analytic(params: VehicleParams) -> np.ndarray:
    """Unfolded W from the reduced axial-torque expression.

    For an unfolded arm the axial hinge moment collapses to a scalar
    balance between the propeller lever, the arm weight-share reaction and
    the inertial coupling:

        margin_i = x_ph u_i - (m_a x_ah / m_tot) f_sigma
                   + y_i . (J_arm_i wdot) - m_a (x_ah e_z - z_ah x_i) . (wdot x r_i)

    with x_ph the hinge-to-propeller arm, (x_ah, z_ah) the hinge-to-arm-COM
    offsets and r_i the arm COM relative to the vehicle COM. Serves as an
    independent cross-check of the probed matrix.
    """
    config = Configuration.UNFOLDED
    M = build_mapping(config, params)
    J_c = combined_inertia(config, params)
    com = center_of_mass(config, params)
    x_ph = params.hinge_to_prop[0]
    x_ah, z_ah = params.hinge_to_arm_com[0], params.hinge_to_arm_com[2]
    e_z = np.array([0.0, 0.0, 1.0])

    W = np.empty((4, 4))
    for k in range(4):
        w = np.eye(4)[k]
        u = np.linalg.solve(M, w)
        omega_dot = np.linalg.solve(J_c, w[1:4])
        for i in range(4):
            x_i = params.arm_directions[i]
            y_i = params.hinge_axes[i]
            r_i = arm_com_position(params, i, 0.0) - com
            W[i, k] = (x_ph * u[i]
                       - params.mass_arm * x_ah / params.mass_total * w[0]
                       + y_i @ (arm_inertia_body(params, i, 0.0) @ omega_dot)
                       - params.mass_arm * (x_ah * e_z - z_ah * x_i)
                       @ np.cross(omega_dot, r_i))
    return W


def check_bounds(bm: BoundMatrix, wrench: np.ndarray) -> tuple[np.ndarray, bool]:
    """Margins of the stay condition and whether all are non-negative."""
    m = bm.margins(wrench)
    return m, bool(np.all(m >= -_FEAS_SLACK))


def aggregate_bound_unfolded(wrench: np.ndarray, bm: BoundMatrix) -> float:
    """Single conservative margin c_f f - |c_x tx| - |c_y ty| - |c_z tz|.

    Never larger than the smallest row margin; equal to it whenever some row
    opposes the commanded torque sign pattern.
    """
    c = np.abs(bm.W[0])
    w = np.asarray(wrench, float)
    return float(c[0] * w[0] - c[1] * abs(w[1]) - c[2] * abs(w[2]) - c[3] * abs(w[3]))


def _box_ok(u: np.ndarray, f_min: float, f_max: float) -> bool:
    return bool(np.all(u >= f_min - _FEAS_SLACK) and np.all(u <= f_max + _FEAS_SLACK))


def _feasible(w: np.ndarray, bm: BoundMatrix, M: np.ndarray,
              f_min: float, f_max: float) -> bool:
    if not np.all(bm.margins(w) >= -_FEAS_SLACK):
        return False
    return _box_ok(np.linalg.solve(M, w), f_min, f_max)


def _bisect(lo: float, hi: float, good_at_lo: bool, pred, tol: float = BISECT_TOL) -> float:
    """Largest (or smallest) parameter on a monotone feasibility boundary.

    pred(lo) == good_at_lo must hold; returns the feasible endpoint of the
    bracket once it is tighter than tol.
    """
    feasible_end = lo if good_at_lo else hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid) == good_at_lo:
            lo = mid
            if good_at_lo:
                feasible_end = mid
        else:
            hi = mid
            if not good_at_lo:
                feasible_end = mid
    return feasible_end


def enforce_hierarchy(wrench: np.ndarray, bm: BoundMatrix, M: np.ndarray,
                      f_min: float, f_max: float) -> np.ndarray:
    """Reduce a wrench onto the feasible set, sacrificing axes in priority order.

    Yaw torque is surrendered first, then total thrust is raised (margins
    only ever improve with thrust), and only then are roll and pitch scaled
    down together. A feasible wrench is returned untouched, which also makes
    the operation idempotent.
    """
    w = np.asarray(wrench, float).copy()
    if _feasible(w, bm, M, f_min, f_max):
        return w

    # stage 1: shrink |tau_z|
    if w[3] != 0.0:
        def tz_ok(s: float) -> bool:
            trial = w.copy()
            trial[3] = s * w[3]
            return _feasible(trial, bm, M, f_min, f_max)
        zeroed = w.copy()
        zeroed[3] = 0.0
        if tz_ok(0.0):
            s_star = _bisect(0.0, 1.0, True, tz_ok, tol=BISECT_TOL / max(abs(w[3]), 1.0))
            w[3] *= s_star
            if _feasible(w, bm, M, f_min, f_max):
                return w
        else:
            w = zeroed

    # stage 2: raise f_sigma; margins grow monotonically with thrust
    ceiling = 4.0 * f_max

    def fs_ok(f: float) -> bool:
        trial = w.copy()
        trial[0] = f
        return _feasible(trial, bm, M, f_min, f_max)

    if fs_ok(ceiling):
        w[0] = _bisect(w[0], ceiling, False, fs_ok)
        return w

    # stage 3: scale roll/pitch together
    def xy_ok(k: float) -> bool:
        trial = w.copy()
        trial[1] = k * w[1]
        trial[2] = k * w[2]
        return _feasible(trial, bm, M, f_min, f_max)

    if not xy_ok(0.0):
        w[1] = 0.0
        w[2] = 0.0
        _report_binding(w, bm, M, f_min, f_max)
    k_star = _bisect(0.0, 1.0, True, xy_ok,
                     tol=BISECT_TOL / max(abs(w[1]), abs(w[2]), 1.0))
    w[1] *= k_star
    w[2] *= k_star
    if not _feasible(w, bm, M, f_min, f_max):
        # boundary point from bisection can sit a hair outside; nudge down
        w[1] *= 1.0 - 1e-9
        w[2] *= 1.0 - 1e-9
    return w


def _report_binding(w: np.ndarray, bm: BoundMatrix, M: np.ndarray,
                    f_min: float, f_max: float) -> None:
    margins = bm.margins(w)
    worst = int(np.argmin(margins))
    if margins[worst] < -_FEAS_SLACK:
        raise ValueError(
            f"wrench infeasible even with zero torque: hinge margin of arm "
            f"{worst + 1} is {margins[worst]:.3e}")
    u = np.linalg.solve(M, w)
    over = int(np.argmax(np.maximum(u - f_max, f_min - u)))
    raise ValueError(
        f"wrench infeasible even with zero torque: propeller {over + 1} "
        f"thrust {u[over]:.3f} N outside [{f_min}, {f_max}]")


def _halfplane_vertices(normals: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Vertices of {x : normals @ x <= offsets}, ordered counter-clockwise."""
    pts = []
    n = len(offsets)
    for i in range(n):
        for j in range(i + 1, n):
            A = np.vstack([normals[i], normals[j]])
            if abs(np.linalg.det(A)) < 1e-12:
                continue
            x = np.linalg.solve(A, np.array([offsets[i], offsets[j]]))
            if np.all(normals @ x <= offsets + 1e-9):
                pts.append(x)
    if not pts:
        return np.zeros((0, 2))
    pts = np.array(pts)
    center = pts.mean(axis=0)
    order = np.argsort(np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0]))
    pts = pts[order]
    keep = [0]
    for k in range(1, len(pts)):
        if np.linalg.norm(pts[k] - pts[keep[-1]]) > 1e-9:
            keep.append(k)
    if len(keep) > 1 and np.linalg.norm(pts[keep[-1]] - pts[keep[0]]) <= 1e-9:
        keep.pop()
    return pts[keep]


def feasible_envelope(config: Configuration, params: VehicleParams,
                      tau_xy: tuple[float, float] = (0.0, 0.0)) -> Envelope:
    """Polygons of achievable (f_sigma, tau_z) at fixed roll/pitch torque."""
    M = build_mapping(config, params)
    Minv = np.linalg.inv(M)
    base = Minv @ np.array([0.0, tau_xy[0], tau_xy[1], 0.0])
    # u_i = base_i + a_i f + b_i tz
    a, b = Minv[:, 0], Minv[:, 3]

    def box_planes(lo: float, hi: float):
        normals, offsets = [], []
        for i in range(4):
            normals.append([a[i], b[i]])
            offsets.append(hi - base[i])
            normals.append([-a[i], -b[i]])
            offsets.append(base[i] - lo)
        return normals, offsets

    na, oa = box_planes(params.thrust_min, params.thrust_max)
    nb, ob = box_planes(0.0, params.thrust_max)
    verts_a = _halfplane_vertices(np.array(na), np.array(oa))
    verts_b = _halfplane_vertices(np.array(nb), np.array(ob))

    W = bound_matrix(config, params).W
    nc = list(nb)
    oc = list(ob)
    for row in W:
        # row[0] f + row[1] tx + row[2] ty + row[3] tz >= 0
        nc.append([-row[0], -row[3]])
        oc.append(row[1] * tau_xy[0] + row[2] * tau_xy[1])
    verts_c = _halfplane_vertices(np.array(nc), np.array(oc))
    return Envelope(vertices_a=verts_a, vertices_b=verts_b, vertices_c=verts_c,
                    config=config)


def envelope_contains(outer: np.ndarray, inner: np.ndarray,
                      tol: float = 1e-7) -> bool:
    """True when every inner vertex lies inside the outer convex polygon.

    Vertices must be in counterclockwise order, as produced by
    :func:`feasible_envelope`. Shared boundary points count as inside.
    """
    if len(outer) < 3:
        return False
    for k in range(len(outer)):
        p, q = outer[k], outer[(k + 1) % len(outer)]
        cross = ((q[0] - p[0]) * (inner[:, 1] - p[1])
                 - (q[1] - p[1]) * (inner[:, 0] - p[0]))
        if np.any(cross < -tol):
            return False
    return True


def _max_abs_tau(verts: np.ndarray, f_sigma: float) -> float:
    """Largest |tau_z| inside a convex polygon at the given thrust slice."""
    best = 0.0
    n = len(verts)
    for i in range(n):
        p, q = verts[i], verts[(i + 1) % n]
        if (p[0] - f_sigma) * (q[0] - f_sigma) <= 0.0 and p[0] != q[0]:
            t = (f_sigma - p[0]) / (q[0] - p[0])
            best = max(best, abs(p[1] + t * (q[1] - p[1])))
    return best


def agility_report(params: VehicleParams) -> dict:
    """Hover-point authority of the folding vehicle vs a conventional one."""
    config = Configuration.UNFOLDED
    hover = params.mass_total * abs(params.gravity[2])
    env = feasible_envelope(config, params)
    tau_b = _max_abs_tau(env.vertices_b, hover)
    tau_c = _max_abs_tau(env.vertices_c, hover)

    bm = bound_matrix(config, params)
    M = build_mapping(config, params)

    def max_roll(with_hinge_bounds: bool) -> float:
        lo, hi = 0.0, 100.0
        def ok(tx: float) -> bool:
            w = np.array([hover, tx, 0.0, 0.0])
            u = np.linalg.solve(M, w)
            if not _box_ok(u, 0.0, params.thrust_max):
                return False
            return (not with_hinge_bounds) or bool(np.all(bm.margins(w) >= -_FEAS_SLACK))
        while hi - lo > 1e-9:
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
        return lo

    return {
        "yaw_max_conventional": tau_b,
        "yaw_max_with_folding": tau_c,
        "yaw_reduction_pct": 100.0 * (1.0 - tau_c / tau_b),
        "roll_pitch_max_conventional": max_roll(False),
        "roll_pitch_max_with_folding": max_roll(True),
        "f_sigma_range": (0.0, 4.0 * params.thrust_max),
    }
