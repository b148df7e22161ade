"""Rotation utilities: rotation matrices, quaternions, rotation vectors.

Quaternions are (w, x, y, z), unit norm. Rotation matrices map body -> world
unless stated otherwise. Rotation vectors use the angle*axis convention.
"""
from __future__ import annotations

import numpy as np

_EPS_SMALL_ANGLE = 1e-8
_EPS_PI = 1e-9


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix such that hat(v) @ w == cross(v, w)."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def exp_rotvec(r: np.ndarray) -> np.ndarray:
    """Rodrigues formula, series-expanded near zero angle."""
    angle = np.linalg.norm(r)
    K = hat(r)
    if angle < _EPS_SMALL_ANGLE:
        a = 1.0 - angle ** 2 / 6.0
        b = 0.5 - angle ** 2 / 24.0
    else:
        a = np.sin(angle) / angle
        b = (1.0 - np.cos(angle)) / angle ** 2
    return np.eye(3) + a * K + b * (K @ K)


def _lex_canonical(axis: np.ndarray) -> np.ndarray:
    # pick the lexicographically larger of {axis, -axis}
    for c in axis:
        if c > 0.0:
            return axis
        if c < 0.0:
            return -axis
    return axis


def log_rotmat(R: np.ndarray) -> np.ndarray:
    """Rotation vector of R, angle in [0, pi].

    At angle pi the axis sign is ambiguous; the lexicographically larger
    axis is returned so results are deterministic.
    """
    q = rotmat_to_quat(R)
    if q[0] < 0.0:
        q = -q
    vec = q[1:]
    s = np.linalg.norm(vec)
    if s < _EPS_SMALL_ANGLE:
        # angle ~ 0: r = 2*vec to first order
        return 2.0 * vec / max(q[0], 0.5)
    angle = 2.0 * np.arctan2(s, q[0])
    axis = vec / s
    if angle > np.pi - _EPS_PI:
        axis = _lex_canonical(axis)
        angle = min(angle, np.pi)
    return angle * axis


def rotation_error(R_current: np.ndarray, R_desired: np.ndarray) -> np.ndarray:
    """Attitude error as a body-frame rotation vector (current toward desired)."""
    return log_rotmat(R_current.T @ R_desired)


def quat_to_rotmat(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def rotmat_to_quat(R: np.ndarray) -> np.ndarray:
    """Shepperd's method: branch on the largest of (trace, diagonal)."""
    t = np.trace(R)
    if t > max(R[0, 0], R[1, 1], R[2, 2]):
        w = 0.5 * np.sqrt(1.0 + t)
        f = 0.25 / w
        q = np.array([w,
                      f * (R[2, 1] - R[1, 2]),
                      f * (R[0, 2] - R[2, 0]),
                      f * (R[1, 0] - R[0, 1])])
    else:
        i = int(np.argmax([R[0, 0], R[1, 1], R[2, 2]]))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = 0.5 * np.sqrt(1.0 + R[i, i] - R[j, j] - R[k, k])
        f = 0.25 / s
        q = np.empty(4)
        q[0] = f * (R[k, j] - R[j, k])
        q[1 + i] = s
        q[1 + j] = f * (R[j, i] + R[i, j])
        q[1 + k] = f * (R[k, i] + R[i, k])
    return q / np.linalg.norm(q)


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_derivative(q: np.ndarray, omega_body: np.ndarray) -> np.ndarray:
    """qdot for body angular velocity omega (rad/s)."""
    return 0.5 * quat_mul(q, np.concatenate(([0.0], omega_body)))


def quat_normalize(q: np.ndarray) -> np.ndarray:
    return q / np.linalg.norm(q)


def rotmat_from_z_yaw(z_body: np.ndarray, yaw: float) -> np.ndarray:
    """Rotation whose third column is z_body and whose heading matches yaw.

    z_body is the desired body z-axis in world coordinates (normalized here).
    Heading is resolved against the world-frame yaw direction; falls back to
    the yaw normal when the two are nearly parallel (pitch near +-90 deg).
    """
    z = z_body / np.linalg.norm(z_body)
    x_c = np.array([np.cos(yaw), np.sin(yaw), 0.0])
    y_b = np.cross(z, x_c)
    n = np.linalg.norm(y_b)
    if n < 1e-6:
        x_b = np.cross(np.array([-np.sin(yaw), np.cos(yaw), 0.0]), z)
        x_b /= np.linalg.norm(x_b)
        y_b = np.cross(z, x_b)
    else:
        y_b = y_b / n
        x_b = np.cross(y_b, z)
    return np.column_stack([x_b, y_b, z])


def yaw_of(R: np.ndarray) -> float:
    """Heading angle of the body x-axis projected to the horizontal plane."""
    return float(np.arctan2(R[1, 0], R[0, 0]))
