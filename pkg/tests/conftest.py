import json

import pytest

from riskdp.data import instance_path
from riskdp.instance import load_instance


@pytest.fixture(scope="session")
def three_state():
    return load_instance(instance_path())


@pytest.fixture
def three_state_raw():
    return json.loads(instance_path().read_text())


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS):
        passed, detail = RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if passed else 'FAIL'}  {detail}")
