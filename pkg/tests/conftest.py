from importlib import resources

import pytest

from foldquad.controller import ControllerConfig
from foldquad.vehicle import load_config

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def params():
    ref = resources.files("foldquad") / "data" / "default_vehicle.yaml"
    with resources.as_file(ref) as path:
        vehicle, _ = load_config(path)
    return vehicle


@pytest.fixture
def ctl():
    return ControllerConfig()


@pytest.fixture(scope="session")
def acceptance_log():
    """Recorder for the acceptance suite; lines echo in the run summary."""
    def record(number: int, passed: bool, detail: str) -> None:
        tag = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES.append(f"criterion {number:2d}: {tag}  {detail}")
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
