import pytest

from boxthirding import BanditInstance, NoiseModel

# Filled by tests/test_acceptance.py; printed once at the end of the session.
ACCEPTANCE = {}


def record(number, passed, detail):
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(
            f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def worked_example():
    """Five arms with distinct deterministic rewards, presented in natural order."""
    return BanditInstance([0.5, 0.9, 0.1, 0.3, 0.2], NoiseModel("deterministic"))
