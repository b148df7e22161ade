"""Configuration-dependent mapping between propeller thrusts and body wrench.

The wrench is (f_sigma, tau_x, tau_y, tau_z): total thrust along body z and
torque about the system COM of the active configuration. Column i of the
mapping is

    [ z_i . e_z ]
    [ r_i x z_i + g_i z_i ]

with z_i the thrust axis, r_i the propeller position relative to the
configuration COM and g_i the signed drag-to-thrust ratio of the branch the
propeller operates in (forward for unfolded arms, reverse for folded ones).

The geometric construction is the source of truth; the closed forms for the
unfolded and folded configurations exist as cross-checks.
"""
from __future__ import annotations

import numpy as np

from .vehicle import (
    Configuration,
    VehicleParams,
    center_of_mass,
    config_hinge_angles,
    prop_position,
    thrust_axis,
)

RANK_TOL = 1e-9

_FORWARD_FLAGS = {
    Configuration.UNFOLDED: (True, True, True, True),
    Configuration.TWO_FOLDED_24: (True, False, True, False),
    Configuration.TWO_FOLDED_13: (False, True, False, True),
    Configuration.FOUR_FOLDED: (False, False, False, False),
}


def forward_flags(config: Configuration) -> tuple[bool, bool, bool, bool]:
    """Which propellers spin in their forward branch in a steady config."""
    if config not in _FORWARD_FLAGS:
        raise ValueError(f"{config.value} is transitional, no allocation exists")
    return _FORWARD_FLAGS[config]


def build_mapping(config: Configuration, params: VehicleParams) -> np.ndarray:
    """4x4 thrust-to-wrench mapping for a steady configuration."""
    angles = config_hinge_angles(config)
    flags = forward_flags(config)
    com = center_of_mass(config, params)
    M = np.empty((4, 4))
    for i in range(4):
        z = thrust_axis(params, i, angles[i])
        r = prop_position(params, i, angles[i]) - com
        kappa = (params.drag_over_thrust_forward if flags[i]
                 else params.drag_over_thrust_reverse)
        g = params.spin_sign(i) * kappa
        M[0, i] = z[2]
        M[1:4, i] = np.cross(r, z) + g * z
    return M


def mapping_unfolded(params: VehicleParams) -> np.ndarray:
    """Closed form for the unfolded vehicle (plus-independent of arm skew)."""
    h = params.prop_spacing / 2.0
    k = params.drag_over_thrust_forward
    return np.array([
        [1.0, 1.0, 1.0, 1.0],
        [-h, -h, h, h],
        [-h, h, h, -h],
        [-k, k, -k, k],
    ])


def mapping_two_folded(params: VehicleParams) -> np.ndarray:
    """Closed form with arms 2 and 4 folded (reversed thrust)."""
    h = params.prop_spacing / 2.0
    kf = params.drag_over_thrust_forward
    kr = params.drag_over_thrust_reverse
    a = np.pi / 4.0 + params.arm_skew
    com = center_of_mass(Configuration.TWO_FOLDED_24, params)
    z_p2c = prop_position(params, 1, np.pi / 2.0)[2] - com[2]
    px = z_p2c * np.cos(a) - kr * np.sin(a)
    py = z_p2c * np.sin(a) + kr * np.cos(a)
    pz = h * np.sqrt(2.0) * np.sin(params.arm_skew)
    return np.array([
        [1.0, 0.0, 1.0, 0.0],
        [-h, px, h, -px],
        [-h, -py, h, py],
        [-kf, -pz, -kf, -pz],
    ])


def mapping_four_folded(params: VehicleParams) -> np.ndarray:
    """Closed form with all arms folded: no collective thrust authority."""
    kr = params.drag_over_thrust_reverse
    a = np.pi / 4.0 + params.arm_skew
    com = center_of_mass(Configuration.FOUR_FOLDED, params)
    z_pc = prop_position(params, 0, np.pi / 2.0)[2] - com[2]
    px = z_pc * np.cos(a) - kr * np.sin(a)
    py = z_pc * np.sin(a) + kr * np.cos(a)
    pz = params.prop_spacing / 2.0 * np.sqrt(2.0) * np.sin(params.arm_skew)
    return np.array([
        [0.0, 0.0, 0.0, 0.0],
        [px, px, -px, -px],
        [py, -py, -py, py],
        [pz, -pz, pz, -pz],
    ])


def invert_mapping(M: np.ndarray, wrench: np.ndarray) -> np.ndarray:
    """Thrusts realizing the wrench through a full-rank mapping."""
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] <= RANK_TOL * sv[0]:
        raise ValueError("mapping is singular; use the minimum-norm allocator")
    return np.linalg.solve(M, wrench)


def allocate_min_norm(M: np.ndarray, torque: np.ndarray) -> np.ndarray:
    """Minimum-norm thrusts for a pure torque through the 3x4 torque rows.

    Intended for the four-folded configuration, whose mapping has no thrust
    row. Rank below 3 means some torque direction is unreachable; with zero
    arm skew that lost direction is yaw.
    """
    Mt = M[1:4, :]
    U, s, Vt = np.linalg.svd(Mt, full_matrices=False)
    rank = int(np.sum(s > RANK_TOL * s[0]))
    if rank < 3:
        lost = U[:, rank:]
        if np.any(np.abs(lost[2, :]) > 0.5):
            raise ValueError(
                "torque mapping is rank deficient: yaw is unreachable "
                "(zero arm skew gives folded propellers no yaw moment)")
        raise ValueError("torque mapping is rank deficient")
    inv_s = 1.0 / s[:rank]
    return Vt[:rank].T @ (inv_s * (U[:, :rank].T @ np.asarray(torque, float)))


def clamp_to_branch(u: np.ndarray, flags: tuple[bool, ...],
                    params: VehicleParams) -> np.ndarray:
    """Clamp each thrust into its configuration's branch.

    Forward propellers live in [0, f_max], reversed ones in [f_min, 0];
    a steady configuration never lets a command cross zero.
    """
    out = np.array(u, float)
    for i, fwd in enumerate(flags):
        if fwd:
            out[i] = min(max(out[i], 0.0), params.thrust_max)
        else:
            out[i] = min(max(out[i], params.thrust_min), 0.0)
    return out
