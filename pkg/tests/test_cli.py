import json

import pytest

from foldquad.cli import _parse_override, main


def test_override_parsing_types():
    assert _parse_override("duration=2.5") == ("duration", 2.5)
    assert _parse_override("flag=true") == ("flag", True)
    assert _parse_override("flag=False") == ("flag", False)
    assert _parse_override("mode=hinge") == ("mode", "hinge")
    with pytest.raises(Exception):
        _parse_override("no_equals_sign")


def test_simulate_writes_log_and_verdict(tmp_path, capsys):
    rc = main(["simulate", "--scenario", "hover_unfolded",
               "--out", str(tmp_path), "--set", "duration=2.0"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "seed 0" in out
    assert "verdict: PASS" in out
    log = tmp_path / "hover_unfolded_log.csv"
    verdict = tmp_path / "hover_unfolded_verdict.json"
    assert log.exists() and verdict.exists()
    assert log.read_text().startswith("t,px,py,pz,")
    payload = json.loads(verdict.read_text())
    assert payload["passed"] is True


def test_simulate_jsonl_format(tmp_path):
    rc = main(["simulate", "--scenario", "hover_unfolded",
               "--out", str(tmp_path), "--format", "jsonl",
               "--set", "duration=2.0"])
    assert rc == 0
    log = tmp_path / "hover_unfolded_log.jsonl"
    first = json.loads(log.read_text().splitlines()[0])
    assert first["fsm"] == "steady:unfolded"


def test_simulate_failing_scenario_exits_one(tmp_path, capsys):
    # an unfolded vehicle cannot clear a tunnel narrower than its footprint
    rc = main(["simulate", "--scenario", "tunnel", "--out", str(tmp_path),
               "--set", "fold=false", "--set", "length=1.0"])
    assert rc == 1
    assert "verdict: FAIL" in capsys.readouterr().out


def test_simulate_rejects_bad_payload_combo(tmp_path, capsys):
    rc = main(["simulate", "--scenario", "hover_unfolded",
               "--out", str(tmp_path), "--payload-mass", "0.5"])
    assert rc == 2
    assert "payload" in capsys.readouterr().err


def test_simulate_requires_known_scenario(tmp_path):
    with pytest.raises(SystemExit):
        main(["simulate", "--scenario", "warp_drive", "--out", str(tmp_path)])


def test_design_subcommand(tmp_path, capsys):
    rc = main(["design", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "design fold angle: 11.935 deg" in out
    report = json.loads((tmp_path / "design_report.json").read_text())
    assert report["skew_inequality_ok"] is True


def test_design_infeasible_target_exits_two(tmp_path, capsys):
    rc = main(["design", "--out", str(tmp_path), "--f-des", "-0.0001"])
    assert rc == 2
    assert "balance" in capsys.readouterr().err


def test_envelope_subcommand(tmp_path, capsys):
    rc = main(["envelope", "--out", str(tmp_path),
               "--configuration", "two_folded_24"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "nested (C within B within A): PASS" in out
    path = tmp_path / "envelope_two_folded_24.csv"
    assert path.read_text().startswith("set,f_sigma,tau_z\n")


def test_gains_subcommand(capsys):
    rc = main(["gains", "--configuration", "two_folded_24"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "configuration: two_folded_24" in out
    assert "riccati residual:" in out
    residual = float(out.rsplit("riccati residual:", 1)[1].strip())
    assert residual < 1e-8


def test_custom_config_file_roundtrip(tmp_path, capsys):
    cfg = tmp_path / "vehicle.yaml"
    cfg.write_text(
        "vehicle:\n"
        "  mass_body: 0.356\n"
        "controller:\n"
        "  kp_pos: 5.0\n")
    rc = main(["gains", "--config", str(cfg)])
    assert rc == 0


def test_unreadable_config_exits_two(tmp_path, capsys):
    rc = main(["gains", "--config", str(tmp_path / "missing.yaml")])
    assert rc == 2
    assert capsys.readouterr().err != ""
