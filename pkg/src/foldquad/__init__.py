"""Folding-arm quadcopter: geometry, allocation, simulation, scenarios.

The vehicle carries its four propeller arms on passive hinges and folds
them in flight by reversing selected propellers. This package models the
geometry and inertia bookkeeping, the per-configuration control
allocation with its stay-in-configuration bounds, a maximal-coordinate
multibody simulator with hinge stops and motor lag, the cascaded
position/attitude controller, and the scripted flight scenarios.
"""

from .bounds import (
    BoundMatrix,
    Envelope,
    agility_report,
    bound_matrix,
    check_bounds,
    enforce_hierarchy,
    envelope_contains,
    feasible_envelope,
    hinge_reaction_torque,
)
from .controller import (
    CascadeController,
    ControllerConfig,
    MotorCommand,
    Setpoint,
    SetpointMode,
)
from .fsm import FsmState, TransitionFsm
from .lqr import GainMatrix, solve_care, synthesize_gains
from .mixer import (
    allocate_min_norm,
    build_mapping,
    clamp_to_branch,
    forward_flags,
    invert_mapping,
)
from .scenarios import (
    SCENARIO_NAMES,
    FlightSession,
    Scenario,
    ScenarioResult,
    TrajectoryLog,
    Verdict,
    design_fold_angle,
    design_report,
    grasp_feasibility,
    perch_report,
    run_scenario,
)
from .sim import DynamicsSolution, MultibodySim, SimState, make_state
from .vehicle import (
    Configuration,
    VehicleParams,
    center_of_mass,
    combined_inertia,
    config_hinge_angles,
    footprint_width,
    load_config,
    min_horizontal_dimension,
    speed_from_thrust,
)

__version__ = "0.1.0"

__all__ = [
    "BoundMatrix",
    "CascadeController",
    "Configuration",
    "ControllerConfig",
    "DynamicsSolution",
    "Envelope",
    "FlightSession",
    "FsmState",
    "GainMatrix",
    "MotorCommand",
    "MultibodySim",
    "SCENARIO_NAMES",
    "Scenario",
    "ScenarioResult",
    "Setpoint",
    "SetpointMode",
    "SimState",
    "TrajectoryLog",
    "TransitionFsm",
    "Verdict",
    "VehicleParams",
    "agility_report",
    "allocate_min_norm",
    "bound_matrix",
    "build_mapping",
    "center_of_mass",
    "check_bounds",
    "clamp_to_branch",
    "combined_inertia",
    "config_hinge_angles",
    "design_fold_angle",
    "design_report",
    "enforce_hierarchy",
    "envelope_contains",
    "feasible_envelope",
    "footprint_width",
    "forward_flags",
    "grasp_feasibility",
    "hinge_reaction_torque",
    "invert_mapping",
    "load_config",
    "make_state",
    "min_horizontal_dimension",
    "perch_report",
    "run_scenario",
    "solve_care",
    "speed_from_thrust",
    "synthesize_gains",
]
