import pytest

from tactwin.calibration import generate_calibration, published_constants_calibration
from tactwin.physics import SensorParams
from tactwin.scenarios import scenario_params

ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])


@pytest.fixture(scope="session")
def params():
    return SensorParams()


@pytest.fixture(scope="session")
def cal(params):
    return generate_calibration(params)


@pytest.fixture(scope="session")
def gripper_params():
    return scenario_params("tea_fig6")


@pytest.fixture(scope="session")
def gripper_cal(gripper_params):
    return generate_calibration(gripper_params)


@pytest.fixture(scope="session")
def published_cal():
    return published_constants_calibration()
