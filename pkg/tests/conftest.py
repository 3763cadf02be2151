import json
from pathlib import Path

import pytest

from casimir_response.scenario import scenario_from_dict

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"

REFERENCE = {
    "epsilon_inf": 1.78,
    "profile": {"kind": "SmoothBubble", "R0": 1.0, "dR": 0.02, "T": 50.0, "t0": 0.0, "wall_width": 0.05},
    "cutoff_k": 4.0,
}

# acceptance lines collected by tests/test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES = []


def make_config(**overrides):
    data = json.loads(json.dumps(REFERENCE))
    for key, value in overrides.items():
        if key == "profile" and "kind" not in value:
            data["profile"].update(value)
        else:
            data[key] = value
    return scenario_from_dict(data)


@pytest.fixture(scope="session")
def ref_config():
    return scenario_from_dict(REFERENCE)


@pytest.fixture(scope="session")
def ref_table(ref_config):
    from casimir_response.response import _build_table

    return _build_table(ref_config)


@pytest.fixture(scope="session")
def ref_interp(ref_table):
    from casimir_response.response import SpectralInterpolant

    return SpectralInterpolant(ref_table)


@pytest.fixture(scope="session")
def ref_spectrum(ref_config, ref_table):
    from casimir_response.response import compute_spectrum

    return compute_spectrum(ref_config, table=ref_table)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
