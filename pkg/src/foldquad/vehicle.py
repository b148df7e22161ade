"""Vehicle parameters and arm geometry for a quadcopter with folding arms.

Each of the four arms hangs on a passive hinge at the body and can fold
90 degrees downward. Frames:

  E  world, z up
  B  body, origin at the body-only center of mass
  Ai arm i, x along the arm toward the propeller, y along the hinge axis

Arm 1 points into the (+x, -y) body quadrant and the numbering runs
clockwise when seen from above (2 at (-x, -y), 3 at (-x, +y), 4 at (+x, +y)).
Arms are alternately skewed about z by +/- the skew angle so that propeller
drag contributes yaw authority once arms are folded.

All quantities are SI, angles in radians (config files use degrees for the
skew angle only; the loader converts).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .so3 import hat

# base azimuths and skew signs of the four arms (index 0 = arm 1)
_BASE_AZIMUTH = np.deg2rad(np.array([-45.0, -135.0, 135.0, 45.0]))
_SKEW_SIGN = np.array([1.0, -1.0, 1.0, -1.0])
# reflections generating hinges 2..4 from hinge 1
_HINGE_MIRROR = np.array([
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
])

FOLDED_ANGLE = np.pi / 2


class Configuration(enum.Enum):
    """Arm configurations, including transitional tags used by the mode logic.

    Only the four steady members describe a rigid geometry; the transitional
    members exist so the flight code can label fold/unfold maneuvers and are
    rejected by every function that needs locked hinge angles.
    """

    UNFOLDED = "unfolded"
    TWO_FOLDED_24 = "two_folded_24"
    TWO_FOLDED_13 = "two_folded_13"
    FOUR_FOLDED = "four_folded"
    FOLDING_24 = "folding_24"
    UNFOLDING_24 = "unfolding_24"
    FOLDING_ALL = "folding_all"
    UNFOLDING_ALL = "unfolding_all"

    @property
    def is_steady(self) -> bool:
        return self in _STEADY


_STEADY = {
    Configuration.UNFOLDED,
    Configuration.TWO_FOLDED_24,
    Configuration.TWO_FOLDED_13,
    Configuration.FOUR_FOLDED,
}

_CONFIG_ANGLES = {
    Configuration.UNFOLDED: (0.0, 0.0, 0.0, 0.0),
    Configuration.TWO_FOLDED_24: (0.0, FOLDED_ANGLE, 0.0, FOLDED_ANGLE),
    Configuration.TWO_FOLDED_13: (FOLDED_ANGLE, 0.0, FOLDED_ANGLE, 0.0),
    Configuration.FOUR_FOLDED: (FOLDED_ANGLE,) * 4,
}


def config_hinge_angles(config: Configuration) -> np.ndarray:
    """Locked hinge angles of a steady configuration."""
    if config not in _CONFIG_ANGLES:
        raise ValueError(f"{config.value} is transitional, hinge angles are not fixed")
    return np.array(_CONFIG_ANGLES[config])


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants of the vehicle.

    inertia_body is about the body COM in B axes; inertia_arm is about the
    arm COM in arm axes. arm_com_to_hinge points from the arm COM to its
    hinge, expressed in the arm frame.
    """

    mass_body: float = 0.356
    mass_arm: float = 0.067
    drag_over_thrust_forward: float = 0.0172
    drag_over_thrust_reverse: float = 0.038
    thrust_min: float = -3.4
    thrust_max: float = 7.8
    arm_skew: float = np.deg2rad(11.9)
    prop_spacing: float = 0.24
    prop_plane_height: float = 0.016
    hinge1_position: np.ndarray | None = None
    arm_com_to_hinge: np.ndarray = field(default_factory=lambda: np.array(
        [-0.076, 0.0, -0.014]))
    arm_com_to_prop_x: float = 0.014
    inertia_body: np.ndarray = field(default_factory=lambda: np.diag(
        [9.49822909e-04, 6.60206175e-04, 6.44660386e-04]))
    inertia_arm: np.ndarray = field(default_factory=lambda: np.diag(
        [2.0e-05, 1.8e-04, 1.9e-04]))
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    max_prop_speed: float = 1060.0
    prop_radius: float = 0.1016
    body_half_width: float = 0.065
    motor_time_constant: float = 0.030
    reversal_dead_time: float = 0.030
    wire_contact_z: float = -0.0118
    restitution: float = 0.0
    hinge_viscous_friction: float = 0.0

    def __post_init__(self):
        _validate(self)

    @property
    def mass_total(self) -> float:
        return self.mass_body + 4.0 * self.mass_arm

    @property
    def arm_azimuths(self) -> np.ndarray:
        return _BASE_AZIMUTH + _SKEW_SIGN * self.arm_skew

    @property
    def prop_square(self) -> np.ndarray:
        """(4, 3) unfolded propeller positions: a square of side prop_spacing."""
        h = self.prop_spacing / 2.0
        z = self.prop_plane_height
        return np.array([[h, -h, z], [-h, -h, z], [-h, h, z], [h, h, z]])

    @property
    def hinge_positions(self) -> np.ndarray:
        """(4, 3) hinge points in B.

        Derived from the propeller square unless a measured hinge1_position
        is supplied, in which case the other three follow by reflection.
        """
        if self.hinge1_position is not None:
            return _HINGE_MIRROR * self.hinge1_position
        v = self.hinge_to_prop
        out = np.empty((4, 3))
        for i in range(4):
            out[i] = self.prop_square[i] - arm_rotation(self, i, 0.0) @ v
        return out

    @property
    def hinge_axes(self) -> np.ndarray:
        """(4, 3) hinge axis unit vectors in B (z cross arm direction)."""
        phi = self.arm_azimuths
        return np.column_stack([-np.sin(phi), np.cos(phi), np.zeros(4)])

    @property
    def arm_directions(self) -> np.ndarray:
        """(4, 3) unit vectors along each unfolded arm in B."""
        phi = self.arm_azimuths
        return np.column_stack([np.cos(phi), np.sin(phi), np.zeros(4)])

    @property
    def hinge_to_prop(self) -> np.ndarray:
        """Propeller position relative to the hinge, arm frame."""
        return np.array([self.arm_com_to_prop_x, 0.0, 0.0]) - self.arm_com_to_hinge

    @property
    def hinge_to_arm_com(self) -> np.ndarray:
        return -self.arm_com_to_hinge

    def spin_sign(self, i: int) -> float:
        """+1 for counter-clockwise propellers (arms 2, 4), -1 for arms 1, 3."""
        return 1.0 if i % 2 == 1 else -1.0


def _rotz(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _axis_rot(axis: np.ndarray, a: float) -> np.ndarray:
    K = hat(axis)
    return np.eye(3) + np.sin(a) * K + (1.0 - np.cos(a)) * (K @ K)


def arm_rotation(params: VehicleParams, i: int, hinge_angle: float) -> np.ndarray:
    """R_B_Ai: arm frame -> body frame at the given fold angle."""
    return _axis_rot(params.hinge_axes[i], hinge_angle) @ _rotz(params.arm_azimuths[i])


def thrust_axis(params: VehicleParams, i: int, hinge_angle: float) -> np.ndarray:
    """Unit thrust direction of propeller i in B.

    Folding tilts the axis from +z toward the arm direction, so a fully
    folded propeller thrusts horizontally.
    """
    c, s = np.cos(hinge_angle), np.sin(hinge_angle)
    return c * np.array([0.0, 0.0, 1.0]) + s * params.arm_directions[i]


def prop_position(params: VehicleParams, i: int, hinge_angle: float) -> np.ndarray:
    return params.hinge_positions[i] + arm_rotation(params, i, hinge_angle) @ params.hinge_to_prop


def arm_com_position(params: VehicleParams, i: int, hinge_angle: float) -> np.ndarray:
    return params.hinge_positions[i] + arm_rotation(params, i, hinge_angle) @ params.hinge_to_arm_com


def arm_inertia_body(params: VehicleParams, i: int, hinge_angle: float) -> np.ndarray:
    """Arm inertia about its own COM, rotated into B axes."""
    R = arm_rotation(params, i, hinge_angle)
    return R @ params.inertia_arm @ R.T


def prop_torque(params: VehicleParams, i: int, thrust: float) -> float:
    """Aerodynamic reaction torque about the thrust axis, signed.

    Reversed thrust flips both the force and the torque, with a larger
    drag-to-thrust ratio because the blade works on its bad side.
    """
    kappa = (params.drag_over_thrust_forward if thrust >= 0.0
             else params.drag_over_thrust_reverse)
    return params.spin_sign(i) * kappa * thrust


def speed_from_thrust(params: VehicleParams, thrust: float) -> float:
    """Signed propeller speed (rad/s) producing the given thrust."""
    if thrust >= 0.0:
        c = params.thrust_max / params.max_prop_speed ** 2
        return float(np.sqrt(thrust / c))
    c = -params.thrust_min / params.max_prop_speed ** 2
    return -float(np.sqrt(-thrust / c))


def thrust_from_speed(params: VehicleParams, speed: float) -> float:
    if speed >= 0.0:
        c = params.thrust_max / params.max_prop_speed ** 2
        return c * speed ** 2
    c = -params.thrust_min / params.max_prop_speed ** 2
    return -c * speed ** 2


def center_of_mass(
    config: Configuration,
    params: VehicleParams,
    payload_mass: float = 0.0,
    payload_position: np.ndarray | None = None,
) -> np.ndarray:
    """System COM in B for a steady configuration, optional point payload."""
    angles = config_hinge_angles(config)
    total = params.mass_body
    weighted = np.zeros(3)
    for i in range(4):
        weighted += params.mass_arm * arm_com_position(params, i, angles[i])
        total += params.mass_arm
    if payload_mass:
        pos = np.zeros(3) if payload_position is None else np.asarray(payload_position, float)
        weighted += payload_mass * pos
        total += payload_mass
    return weighted / total


def combined_inertia(config: Configuration, params: VehicleParams) -> np.ndarray:
    """Inertia of the locked vehicle about its system COM, B axes."""
    angles = config_hinge_angles(config)
    com = center_of_mass(config, params)
    d = -com
    J = params.inertia_body + params.mass_body * (d @ d * np.eye(3) - np.outer(d, d))
    for i in range(4):
        a = arm_com_position(params, i, angles[i]) - com
        J += arm_inertia_body(params, i, angles[i])
        J += params.mass_arm * (a @ a * np.eye(3) - np.outer(a, a))
    return J


def min_horizontal_dimension(config: Configuration, params: VehicleParams,
                             n_directions: int = 3600) -> float:
    """Narrowest horizontal width over all headings.

    The footprint is the union of the body disc and the four propeller
    discs; a folded disc projects to an ellipse squashed along the arm
    direction by cos(fold angle).
    """
    return footprint_width(config_hinge_angles(config), params, n_directions)


def footprint_width(hinge_angles: np.ndarray, params: VehicleParams,
                    n_directions: int = 3600) -> float:
    """Same footprint measure for arbitrary fold angles."""
    angles = np.asarray(hinge_angles, float)
    centers = [np.zeros(2)]
    semi_y = [params.body_half_width]   # along hinge axis
    semi_x = [params.body_half_width]   # along arm direction
    axes_y = [np.array([0.0, 1.0])]
    axes_x = [np.array([1.0, 0.0])]
    for i in range(4):
        centers.append(prop_position(params, i, angles[i])[:2])
        axes_y.append(params.hinge_axes[i][:2])
        axes_x.append(params.arm_directions[i][:2])
        semi_y.append(params.prop_radius)
        semi_x.append(params.prop_radius * abs(np.cos(angles[i])))

    def width(direction: np.ndarray) -> float:
        hi = -np.inf
        lo = np.inf
        for c, ay, ax, ry, rx in zip(centers, axes_y, axes_x, semi_y, semi_x):
            r = np.hypot(ry * (direction @ ay), rx * (direction @ ax))
            hi = max(hi, c @ direction + r)
            lo = min(lo, c @ direction - r)
        return hi - lo

    best = np.inf
    for k in range(n_directions):
        a = np.pi * k / n_directions
        best = min(best, width(np.array([np.cos(a), np.sin(a)])))
    return float(best)


_DEG_KEYS = {"arm_skew_deg": "arm_skew"}
_VECTOR_KEYS = {"hinge1_position", "arm_com_to_hinge", "gravity"}
_MATRIX_DIAG_KEYS = {"inertia_body_diag": "inertia_body",
                     "inertia_arm_diag": "inertia_arm"}


def load_params(path: str | Path | None = None) -> VehicleParams:
    """Load vehicle parameters from YAML; unknown keys are an error.

    With no path the packaged defaults are returned.
    """
    return load_config(path)[0]


def load_config(path: str | Path | None = None) -> tuple[VehicleParams, dict]:
    """Load vehicle parameters plus the raw ``controller`` section.

    The file is either a flat vehicle mapping or split into ``vehicle``
    and ``controller`` sections.  The controller mapping is returned
    unparsed; an absent section gives an empty dict.
    """
    if path is None:
        text = resources.files("foldquad.data").joinpath("default_vehicle.yaml").read_text()
    else:
        text = Path(path).read_text()
    raw = yaml.safe_load(text) or {}
    if not isinstance(raw, dict):
        raise ValueError("vehicle config must be a mapping")
    controller = raw.pop("controller", None) or {}
    if "vehicle" in raw:
        vehicle_map = raw.pop("vehicle") or {}
        if raw:
            raise ValueError(f"unknown top-level config keys: {sorted(raw)}")
    else:
        vehicle_map = raw
    return _params_from_mapping(vehicle_map), controller


def _params_from_mapping(raw: dict) -> VehicleParams:
    valid = {f.name for f in fields(VehicleParams)}
    kwargs = {}
    for key, value in raw.items():
        if key in _DEG_KEYS:
            kwargs[_DEG_KEYS[key]] = float(np.deg2rad(value))
        elif key in _MATRIX_DIAG_KEYS:
            kwargs[_MATRIX_DIAG_KEYS[key]] = np.diag(np.asarray(value, float))
        elif key in valid:
            if key in _VECTOR_KEYS:
                kwargs[key] = np.asarray(value, float)
            elif key in ("arm_skew",):
                raise ValueError("use arm_skew_deg in config files")
            else:
                kwargs[key] = float(value)
        else:
            raise ValueError(f"unknown vehicle config key: {key!r}")
    return VehicleParams(**kwargs)


def _validate(p: VehicleParams) -> None:
    if p.mass_body <= 0 or p.mass_arm <= 0:
        raise ValueError("masses must be positive")
    if p.thrust_min >= 0 or p.thrust_max <= 0:
        raise ValueError("thrust_min must be negative and thrust_max positive")
    if not (0 < p.arm_skew < np.pi / 4):
        raise ValueError("arm skew out of range")
    for name in ("inertia_body", "inertia_arm"):
        J = getattr(p, name)
        if not np.allclose(J, J.T):
            raise ValueError(f"{name} must be symmetric")
        if np.any(np.linalg.eigvalsh(J) <= 0):
            raise ValueError(f"{name} must be positive definite")
    if not (0.0 <= p.restitution <= 1.0):
        raise ValueError("restitution must lie in [0, 1]")
