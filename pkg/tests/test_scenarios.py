import dataclasses
import json
import math

import numpy as np
import pytest

from foldquad.controller import Setpoint
from foldquad.scenarios import (
    LOG_COLUMNS,
    SCENARIO_NAMES,
    FlightSession,
    Scenario,
    ScenarioResult,
    TrajectoryLog,
    Verdict,
    design_fold_angle,
    design_report,
    envelope_rows,
    grasp_feasibility,
    perch_report,
    run_scenario,
    tilt_angle,
    write_envelope_csv,
)
from foldquad.sim import make_state
from foldquad.so3 import exp_rotvec, rotmat_to_quat
from foldquad.vehicle import Configuration

EXPECTED_NAMES = (
    "hover_unfolded",
    "hover_two_folded",
    "step_response",
    "tunnel",
    "grasp",
    "perch_static",
    "gap_traversal",
    "design_report",
    "envelope",
)

EXPECTED_HEADER = (
    "t,px,py,pz,vx,vy,vz,qw,qx,qy,qz,wx,wy,wz,"
    "hinge1,hinge2,hinge3,hinge4,wrench_f,wrench_tx,wrench_ty,wrench_tz,"
    "margin1,margin2,margin3,margin4,thrust1,thrust2,thrust3,thrust4,"
    "speed1,speed2,speed3,speed4,fsm"
)


def test_scenario_catalog_is_stable():
    assert SCENARIO_NAMES == EXPECTED_NAMES


def test_log_header_is_stable():
    assert TrajectoryLog.header() == EXPECTED_HEADER
    assert len(LOG_COLUMNS) == 35


# ----- the log -----

def fake_row(params, tag, margins):
    st = make_state(params, Configuration.UNFOLDED)
    return (st, np.zeros(4), np.asarray(margins, float), np.zeros(4),
            np.zeros(4), tag)


def test_margin_violation_counting(params):
    log = TrajectoryLog()
    log.append(*fake_row(params, "steady:unfolded", [0.1, 0.2, 0.3, 0.4]))
    log.append(*fake_row(params, "steady:unfolded", [-1e-6, 0.2, 0.3, 0.4]))
    log.append(*fake_row(params, "folding_24", [-0.5, -0.5, -0.5, -0.5]))
    log.append(*fake_row(params, "steady:four_folded", [-0.5, 0.1, 0.1, 0.1]))
    log.append(*fake_row(params, "safe:unfolded", [-0.5, 0.1, 0.1, 0.1]))
    log.append(*fake_row(params, "steady:two_folded_24", [0.0, -1e-12, 0.1, 0.1]))
    assert log.steady_margin_violations() == 1
    assert log.steady_margin_violations(include_four_folded=True) == 2
    assert log.steady_margin_violations(tol=1e-5) == 0


def test_log_serialization_round_trip(params, tmp_path):
    log = TrajectoryLog()
    log.append(*fake_row(params, "steady:unfolded", [0.1, 0.2, 0.3, 0.4]))
    log.append(*fake_row(params, "steady:unfolded", [0.5, 0.6, 0.7, 0.8]))

    csv_path = tmp_path / "log.csv"
    log.write_csv(csv_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == EXPECTED_HEADER
    assert len(lines) == 3
    assert lines[1].endswith(",steady:unfolded")

    jsonl_path = tmp_path / "log.jsonl"
    log.write_jsonl(jsonl_path)
    objs = [json.loads(s) for s in jsonl_path.read_text().splitlines()]
    assert len(objs) == 2
    assert objs[0]["fsm"] == "steady:unfolded"
    assert objs[1]["margin2"] == 0.6


def test_column_lookup(params):
    log = TrajectoryLog()
    log.append(*fake_row(params, "steady:unfolded", [1.0, 2.0, 3.0, 4.0]))
    assert log.column("margin3")[0] == 3.0
    with pytest.raises(ValueError):
        log.column("nonexistent")


# ----- verdicts and results -----

def test_verdict_aggregates_checks():
    v = Verdict()
    v.add("a", True, "fine")
    assert v.passed
    v.add("b", False, "broken")
    assert not v.passed
    d = v.to_dict()
    assert d["passed"] is False
    assert d["checks"][1] == {"name": "b", "passed": False, "detail": "broken"}


def test_result_writes_log_and_verdict(params, tmp_path):
    log = TrajectoryLog()
    log.append(*fake_row(params, "steady:unfolded", [0.1, 0.2, 0.3, 0.4]))
    v = Verdict()
    v.add("ok", True)
    res = ScenarioResult("hover_unfolded", v, log, report={"extra": 1.5})
    written = res.write(tmp_path, fmt="csv")
    assert [p.name for p in written] == ["hover_unfolded_log.csv",
                                         "hover_unfolded_verdict.json"]
    payload = json.loads(written[1].read_text())
    assert payload["scenario"] == "hover_unfolded"
    assert payload["passed"] is True
    assert payload["report"] == {"extra": 1.5}


def test_result_without_log_writes_verdict_only(tmp_path):
    res = ScenarioResult("design_report", Verdict())
    written = res.write(tmp_path)
    assert [p.name for p in written] == ["design_report_verdict.json"]


# ----- scenario construction -----

def test_unknown_scenario_rejected():
    with pytest.raises(ValueError, match="unknown scenario"):
        Scenario(name="lunar_landing")


def test_payload_restricted_to_payload_scenarios():
    with pytest.raises(ValueError, match="payload"):
        Scenario(name="hover_unfolded", payload_mass=0.1)
    Scenario(name="grasp", payload_mass=0.1)
    Scenario(name="perch_static", payload_mass=0.1)


def test_geometry_must_be_positive():
    with pytest.raises(ValueError):
        Scenario(name="tunnel", cross_section=0.0)
    with pytest.raises(ValueError):
        Scenario(name="gap_traversal", gap_size=-1.0)
    with pytest.raises(ValueError):
        Scenario(name="gap_traversal", gap_altitude=0.0)


# ----- flight session mechanics -----

def test_session_logs_at_the_control_rate(params, ctl):
    sess = FlightSession(params, ctl, Configuration.UNFOLDED, [0.0, 0.0, 1.0])
    sess.run(0.2, Setpoint.position_hold([0.0, 0.0, 1.0]))
    assert len(sess.log) == 100     # 0.2 s at a 0.002 s control period
    ts = sess.log.column("t")
    assert np.allclose(np.diff(ts), 0.002, atol=1e-12)


def test_session_until_predicate_stops_the_run(params, ctl):
    sess = FlightSession(params, ctl, Configuration.UNFOLDED, [0.0, 0.0, 1.0])
    fired = sess.run(1.0, Setpoint.position_hold([0.0, 0.0, 1.0]),
                     until=lambda st, fsm: st.t >= 0.05)
    assert fired
    assert sess.t < 0.1


def test_identical_sessions_are_byte_identical(params, ctl, tmp_path):
    def run(tag):
        scenario = Scenario(name="hover_unfolded",
                            overrides={"duration": 1.0})
        res = run_scenario(scenario, params, ctl)
        out = tmp_path / tag
        return res.write(out, fmt="csv")

    a_log, a_verdict = run("a")
    b_log, b_verdict = run("b")
    assert a_log.read_bytes() == b_log.read_bytes()
    assert a_verdict.read_bytes() == b_verdict.read_bytes()


def test_tilt_angle_conventions():
    level = rotmat_to_quat(np.eye(3))
    assert tilt_angle(level) == 0.0
    rolled = rotmat_to_quat(exp_rotvec(np.array([math.pi / 2, 0.0, 0.0])))
    assert np.isclose(tilt_angle(rolled), math.pi / 2, atol=1e-12)


# ----- analysis scenarios -----

def test_design_fold_angle_matches_closed_form(params):
    theta = design_fold_angle(params, -1.5)
    assert np.isclose(math.degrees(theta), 11.935280, atol=1e-5)
    with pytest.raises(ValueError):
        design_fold_angle(params, 1.0)
    with pytest.raises(ValueError, match="balance"):
        design_fold_angle(params, -1e-4)


def test_grasp_feasibility_thresholds(params):
    light = grasp_feasibility(params, 0.083)
    assert light["feasible"]
    assert light["binding_inequality"] is None
    assert np.isclose(light["required_skew_deg"], 5.9335, atol=1e-3)
    u = light["hover_thrusts"]
    assert u[0] > 0 and u[2] > 0 and u[1] < 0 and u[3] < 0

    heavy = grasp_feasibility(params, 0.9)
    assert not heavy["feasible"]
    assert heavy["binding_inequality"] == (
        "skew angle below folded-yaw-balance requirement")

    lateral = grasp_feasibility(params, 0.3, payload_offset=(0.25, 0.0, -0.05))
    assert not lateral["feasible"]
    assert lateral["binding_inequality"] == (
        "payload-adjusted hover allocation exceeds a thrust branch")

    wide = dataclasses.replace(params, arm_skew=math.radians(40.0))
    heavy_lift = grasp_feasibility(wide, 1.05)
    assert not heavy_lift["feasible"]
    assert heavy_lift["binding_inequality"] == (
        "forward thrust limit below half the inflated weight")


def test_perch_report_frozen_numbers(params):
    rep = perch_report(params)
    assert np.isclose(rep["com_shift_down"], 0.03865384615384616, atol=1e-12)
    assert np.isclose(rep["below_contact"], 0.019982051282051286, atol=1e-12)
    assert rep["stable"]
    hung = perch_report(params, payload_mass=0.05)
    assert hung["below_contact"] > rep["below_contact"]


def test_design_report_contents(params):
    rep = design_report(params)
    assert np.isclose(rep["design_fold_angle_deg"], 11.935280, atol=1e-5)
    assert rep["skew_floor_deg"] < rep["design_fold_angle_deg"]
    assert rep["skew_inequality_ok"]
    assert rep["lift_inequality_ok"]
    assert set(rep["min_dimensions"]) == {"unfolded", "two_folded_24",
                                          "four_folded"}
    curve = rep["min_dimension_vs_skew"]
    assert [c["skew_deg"] for c in curve] == [float(s) for s in range(2, 21, 2)]
    for c in curve:
        assert c["four_folded"] <= c["two_folded"] + 1e-12
    assert 0.0 < rep["agility"]["yaw_reduction_pct"] < 100.0


def test_envelope_rows_and_csv(params, tmp_path):
    rows = envelope_rows(params)
    assert len(rows) == 12
    assert {tag for tag, _, _ in rows} == {"A", "B", "C"}
    f_max_a = max(f for tag, f, _ in rows if tag == "A")
    f_min_a = min(f for tag, f, _ in rows if tag == "A")
    assert np.isclose(f_max_a, 4 * params.thrust_max, atol=1e-9)
    assert np.isclose(f_min_a, 4 * params.thrust_min, atol=1e-9)
    assert min(f for tag, f, _ in rows if tag == "B") >= -1e-12

    path = tmp_path / "env.csv"
    write_envelope_csv(path, rows)
    lines = path.read_text().splitlines()
    assert lines[0] == "set,f_sigma,tau_z"
    assert len(lines) == 13


# ----- dispatch -----

def test_run_scenario_dispatches_analysis(params):
    res = run_scenario(Scenario(name="perch_static"), params)
    assert res.verdict.passed
    assert res.log is None or len(res.log) == 0
    res = run_scenario(Scenario(name="envelope"), params)
    assert res.verdict.passed


def test_run_scenario_short_hover_two_folded(params, ctl):
    scenario = Scenario(name="hover_two_folded", overrides={"duration": 3.0})
    res = run_scenario(scenario, params, ctl)
    names = [c.name for c in res.verdict.checks]
    assert names == ["recovered_within_window", "final_error_small",
                     "steady_margins_clean"]
    assert res.verdict.passed
    assert res.report["recovery_time"] is not None
