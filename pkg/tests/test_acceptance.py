"""End-to-end acceptance checks, one test per criterion.

Each test measures its own wall time against the stated budget and
reports a single pass/fail line through the session summary hook.
"""

import math
import time

import numpy as np

from foldquad.bounds import (
    agility_report,
    bound_matrix,
    envelope_contains,
    feasible_envelope,
)
from foldquad.lqr import solve_care, synthesis_residual, synthesize_gains
from foldquad.mixer import build_mapping, invert_mapping
from foldquad.scenarios import (
    Scenario,
    design_fold_angle,
    perch_report,
    run_scenario,
)
from foldquad.vehicle import Configuration

from test_sim import (
    free_tumble_drift,
    impact_energy_profile,
    monte_carlo_departures,
    rigid_vs_full_max_error,
)

GRAVITY = 9.81


class _Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def _finish(acceptance_log, number, ok, detail, timer, budget):
    in_time = timer.elapsed < budget
    acceptance_log(
        number, ok and in_time,
        f"{detail} [{timer.elapsed:.2f}s / {budget:.0f}s budget]")
    assert ok, detail
    assert in_time, f"exceeded {budget:.0f}s budget: {timer.elapsed:.2f}s"


def test_criterion_01_bound_thrust_coefficient(params, acceptance_log):
    with _Timer() as tm:
        bm = bound_matrix(Configuration.UNFOLDED, params)
        c_f = float(bm.W[0, 0])
        ok = (abs(c_f - 0.0144) <= 2e-4
              and np.allclose(np.abs(bm.W[:, 0]), abs(c_f), atol=1e-12))
    _finish(acceptance_log, 1, ok, f"c_f = {c_f:.6f} vs 0.0144 +/- 2e-4",
            tm, 1.0)


def test_criterion_02_bound_yaw_coefficient(params, acceptance_log):
    with _Timer() as tm:
        bm = bound_matrix(Configuration.UNFOLDED, params)
        c_z = float(abs(bm.W[0, 3]))
        lever = params.hinge_to_prop[0] / (4.0 * params.drag_over_thrust_forward)
        ok = 1.29 <= c_z <= 1.31 and abs(lever - 1.308) <= 1e-3
    _finish(acceptance_log, 2, ok,
            f"|c_z| = {c_z:.4f} in [1.29, 1.31]; leading term {lever:.4f}",
            tm, 1.0)


def test_criterion_03_hover_yaw_reduction(params, acceptance_log):
    with _Timer() as tm:
        rep = agility_report(params)
        pct = rep["yaw_reduction_pct"]
        ok = abs(pct - 36.0) <= 1.0
    _finish(acceptance_log, 3, ok,
            f"yaw authority reduction {pct:.2f}% vs 36 +/- 1", tm, 1.0)


def test_criterion_04_design_fold_angle(params, acceptance_log):
    with _Timer() as tm:
        theta = math.degrees(design_fold_angle(params, -1.5))
        ok = abs(theta - 11.9) <= 0.1
    _finish(acceptance_log, 4, ok,
            f"fold angle {theta:.3f} deg vs 11.9 +/- 0.1", tm, 1.0)


def test_criterion_05_two_folded_hover_allocation(params, acceptance_log):
    with _Timer() as tm:
        mapping = build_mapping(Configuration.TWO_FOLDED_24, params)
        w = np.array([params.mass_total * GRAVITY, 0.0, 0.0, 0.0])
        u = invert_mapping(mapping, w)
        expect = np.array([3.06, -1.50, 3.06, -1.50])
        margins = bound_matrix(Configuration.TWO_FOLDED_24, params).margins(w)
        ok = (np.allclose(u, expect, atol=0.02)
              and np.all(u >= params.thrust_min)
              and np.all(u <= params.thrust_max)
              and np.all(margins >= 0.0))
    _finish(acceptance_log, 5, ok,
            f"u = {np.round(u, 4).tolist()} N, min margin {margins.min():.4f}",
            tm, 1.0)


def test_criterion_06_envelope_nesting_and_yaw_cap(params, acceptance_log):
    with _Timer() as tm:
        env = feasible_envelope(Configuration.UNFOLDED, params)
        nested = (envelope_contains(env.vertices_a, env.vertices_b)
                  and envelope_contains(env.vertices_b, env.vertices_c))
        yaw_cap = agility_report(params)["yaw_max_conventional"]
        ok = nested and abs(yaw_cap - 0.1053) <= 1e-3
    _finish(acceptance_log, 6, ok,
            f"nested = {nested}, hover yaw cap {yaw_cap:.5f} N*m vs 0.1053",
            tm, 1.0)


def test_criterion_07_rigid_limit(params, acceptance_log):
    with _Timer() as tm:
        worst = rigid_vs_full_max_error(params, n_states=100, seed=0)
        ok = worst < 1e-9
    _finish(acceptance_log, 7, ok,
            f"max acceleration mismatch {worst:.2e} over 100 states", tm, 10.0)


def test_criterion_08_conservation_and_impacts(params, acceptance_log):
    with _Timer() as tm:
        drift = free_tumble_drift(params, duration=1.0)
        worst_gain = 0.0
        for e in (0.0, 0.5, 1.0):
            energies, _ = impact_energy_profile(params, e, duration=1.0)
            worst_gain = max(worst_gain, float(np.diff(energies).max()))
        ok = (drift["linear"] < 1e-6 and drift["angular"] < 1e-6
              and worst_gain <= 2e-9)
    _finish(acceptance_log, 8, ok,
            f"momentum drift {max(drift['linear'], drift['angular']):.2e} rel, "
            f"max impact-step energy gain {worst_gain:.2e} J", tm, 10.0)


def test_criterion_09_monte_carlo_latch_holds(params, acceptance_log):
    with _Timer() as tm:
        worst = monte_carlo_departures(params, n_trials=200, seed=0,
                                       duration=0.5)
        ok = worst < math.radians(1.0)
    _finish(acceptance_log, 9, ok,
            f"max hinge departure {math.degrees(worst):.4f} deg "
            f"over 200 wrenches", tm, 60.0)


def test_criterion_10_hover_recovery_both_configs(params, ctl, acceptance_log):
    with _Timer() as tm:
        times = {}
        ok = True
        for name in ("hover_unfolded", "hover_two_folded"):
            res = run_scenario(Scenario(name=name), params, ctl)
            times[name] = res.report["recovery_time"]
            ok = ok and res.verdict.passed and res.report["recovery_time"] < 5.0
    _finish(acceptance_log, 10, ok,
            "recovery to <0.01 m at t = "
            + ", ".join(f"{k}: {v:.2f}s" for k, v in times.items()),
            tm, 30.0)


def test_criterion_11_gap_traversal(params, ctl, acceptance_log):
    with _Timer() as tm:
        res = run_scenario(Scenario(name="gap_traversal"), params, ctl)
        checks = {c.name: c.passed for c in res.verdict.checks}
        ok = res.verdict.passed
    _finish(acceptance_log, 11, ok,
            f"fold {res.report['fold_duration']:.3f}s in [0.19, 0.57], "
            f"tilt at unfold {res.report['tilt_at_unfold_deg']:.1f} deg, "
            f"all checks {sorted(k for k, v in checks.items() if not v) or 'pass'}",
            tm, 30.0)


def test_criterion_12_perch_geometry(params, acceptance_log):
    with _Timer() as tm:
        rep = perch_report(params)
        shift_cm = 100.0 * rep["com_shift_down"]
        below_cm = 100.0 * rep["below_contact"]
        ok = abs(shift_cm - 4.0) <= 1.0 and abs(below_cm - 2.0) <= 1.0
    _finish(acceptance_log, 12, ok,
            f"fold drops the mass center {shift_cm:.2f} cm (4 +/- 1); "
            f"{below_cm:.2f} cm below contact (2 +/- 1)", tm, 1.0)


def test_criterion_13_riccati_solver(params, acceptance_log):
    with _Timer() as tm:
        A = np.array([[0.0, 1.0], [0.0, 0.0]])
        B = np.array([[0.0], [1.0]])
        P = solve_care(A, B, np.eye(2), np.eye(1))
        K = (B.T @ P).ravel()
        scalar_ok = np.allclose(K, [1.0, math.sqrt(3.0)], atol=1e-9)

        residuals = {}
        for config in Configuration:
            if not config.is_steady:
                continue
            gains = synthesize_gains(config, params)
            residuals[config.value] = synthesis_residual(gains, params)
        bound = 1e-9 * 40.0
        ok = scalar_ok and all(r <= bound for r in residuals.values())
    _finish(acceptance_log, 13, ok,
            f"double-integrator K = {np.round(K, 9).tolist()}; "
            f"max residual {max(residuals.values()):.2e} <= {bound:.0e}",
            tm, 1.0)
