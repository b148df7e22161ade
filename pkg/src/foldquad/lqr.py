"""Per-configuration LQR attitude gains.

The attitude error is a rotation vector r with small-angle dynamics
rdot = omega, omega_dot = J_C^-1 tau, i.e. three decoupled double
integrators coupled only through the inertia. The input cost is expressed
in propeller space and pulled back through the minimum-norm allocation, so
configurations that must steer with reversed (inefficient) propellers are
penalized accordingly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mixer import build_mapping, forward_flags
from .so3 import rotation_error, rotmat_from_z_yaw
from .vehicle import Configuration, VehicleParams, combined_inertia

DEFAULT_Q = np.diag([40.0, 40.0, 20.0, 6.0, 6.0, 3.0])
DEFAULT_R_FORWARD = 1.0
DEFAULT_R_REVERSE = 4.0

_INIT_OMEGA = 3.0   # rad/s, pole-placement initialization
_INIT_ZETA = 1.0


@dataclass(frozen=True)
class GainMatrix:
    """LQR feedback K (torque = K @ [r; r_dot] on the error state)."""

    K: np.ndarray
    P: np.ndarray
    config: Configuration

    @property
    def proportional(self) -> np.ndarray:
        return self.K[:, :3]

    @property
    def derivative(self) -> np.ndarray:
        return self.K[:, 3:]


def build_input_cost(M_tau: np.ndarray, r_plus: float, r_minus: float,
                     config: Configuration) -> np.ndarray:
    """Torque-space cost (M_tau+)^T R_f (M_tau+) with per-propeller weights."""
    if r_plus <= 0 or r_minus <= 0:
        raise ValueError("propeller cost weights must be positive")
    s = np.linalg.svd(M_tau, compute_uv=False)
    if s[-1] <= 1e-9 * s[0]:
        raise ValueError("torque mapping is rank deficient")
    flags = forward_flags(config)
    R_f = np.diag([r_plus if f else r_minus for f in flags])
    pinv = M_tau.T @ np.linalg.inv(M_tau @ M_tau.T)
    R = pinv.T @ R_f @ pinv
    return 0.5 * (R + R.T)


def solve_lyapunov(A_cl: np.ndarray, S: np.ndarray) -> np.ndarray:
    """P solving A_cl^T P + P A_cl + S = 0, by the Kronecker-vectorized solve."""
    n = A_cl.shape[0]
    L = np.kron(np.eye(n), A_cl.T) + np.kron(A_cl.T, np.eye(n))
    P = np.linalg.solve(L, -S.reshape(-1, order="F")).reshape(n, n, order="F")
    return 0.5 * (P + P.T)


def care_residual(A, B, Q, R, P) -> float:
    X = A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q
    return float(np.max(np.abs(X)))


def _pole_placement_init(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Stabilizing gain for the stacked double-integrator structure."""
    n = A.shape[0]
    m = n // 2
    expected = np.block([[np.zeros((m, m)), np.eye(m)],
                         [np.zeros((m, m)), np.zeros((m, m))]])
    G = B[m:, :]
    if (n % 2 == 0 and B.shape[1] == m
            and np.allclose(A, expected) and np.allclose(B[:m, :], 0.0)
            and abs(np.linalg.det(G)) > 1e-12):
        G_inv = np.linalg.inv(G)
        return np.hstack([G_inv * _INIT_OMEGA ** 2,
                          G_inv * 2.0 * _INIT_ZETA * _INIT_OMEGA])
    if np.all(np.linalg.eigvals(A).real < 0.0):
        return np.zeros((B.shape[1], n))
    raise ValueError("cannot construct a stabilizing initial gain for this structure")


def solve_care(A: np.ndarray, B: np.ndarray, Q: np.ndarray, R: np.ndarray,
               K0: np.ndarray | None = None, max_iter: int = 60) -> np.ndarray:
    """Riccati solution by Newton-Kleinman iteration.

    Each step solves one Lyapunov equation for the current stabilizing gain;
    convergence is quadratic from any stabilizing start. The returned P
    satisfies the residual bound 1e-9 * ||Q||_inf.
    """
    K = _pole_placement_init(A, B) if K0 is None else np.asarray(K0, float)
    q_norm = max(np.max(np.abs(Q)), 1e-30)
    P = None
    prev = np.inf
    for _ in range(max_iter):
        A_cl = A - B @ K
        P = solve_lyapunov(A_cl, Q + K.T @ R @ K)
        K = np.linalg.solve(R, B.T @ P)
        resid = care_residual(A, B, Q, R, P)
        if resid <= 1e-12 * q_norm or resid >= prev * 0.5 and resid <= 1e-9 * q_norm:
            return P
        prev = resid
    resid = care_residual(A, B, Q, R, P)
    if resid <= 1e-9 * q_norm:
        return P
    raise RuntimeError(f"Riccati iteration did not converge: residual {resid:.3e}")


def _error_state_matrices(config: Configuration,
                          params: VehicleParams) -> tuple[np.ndarray, np.ndarray]:
    """(A, B) of the linearized attitude error state [r; r_dot]."""
    J_c = combined_inertia(config, params)
    A = np.block([[np.zeros((3, 3)), np.eye(3)],
                  [np.zeros((3, 3)), np.zeros((3, 3))]])
    B = np.vstack([np.zeros((3, 3)), np.linalg.inv(J_c)])
    return A, B


def synthesize_gains(config: Configuration, params: VehicleParams,
                     Q: np.ndarray | None = None,
                     r_plus: float = DEFAULT_R_FORWARD,
                     r_minus: float = DEFAULT_R_REVERSE) -> GainMatrix:
    """Attitude gains for one steady configuration."""
    Q = DEFAULT_Q if Q is None else np.asarray(Q, float)
    A, B = _error_state_matrices(config, params)
    M_tau = build_mapping(config, params)[1:4, :]
    R_tau = build_input_cost(M_tau, r_plus, r_minus, config)
    P = solve_care(A, B, Q, R_tau)
    K = np.linalg.solve(R_tau, B.T @ P)
    poles = np.linalg.eigvals(A - B @ K)
    if np.any(poles.real >= -1e-9):
        raise RuntimeError("synthesized gain does not stabilize the error dynamics")
    return GainMatrix(K=K, P=P, config=config)


def synthesis_residual(gains: GainMatrix, params: VehicleParams,
                       Q: np.ndarray | None = None,
                       r_plus: float = DEFAULT_R_FORWARD,
                       r_minus: float = DEFAULT_R_REVERSE) -> float:
    """CARE residual of a synthesized gain set, for diagnostics."""
    Q = DEFAULT_Q if Q is None else np.asarray(Q, float)
    A, B = _error_state_matrices(gains.config, params)
    M_tau = build_mapping(gains.config, params)[1:4, :]
    R_tau = build_input_cost(M_tau, r_plus, r_minus, gains.config)
    return care_residual(A, B, Q, R_tau, gains.P)


def attitude_error(R_BE: np.ndarray, yaw_des: float, z_des: np.ndarray) -> np.ndarray:
    """Rotation vector from the current attitude toward (z_des, yaw_des)."""
    R_des = rotmat_from_z_yaw(np.asarray(z_des, float), yaw_des)
    return rotation_error(R_BE, R_des)
