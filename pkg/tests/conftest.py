import pytest

from pnpsim import LaserParams


@pytest.fixture(scope="session")
def params():
    return LaserParams()


# Acceptance criteria record (id, passed, detail) here; the summary hook prints them.
ACCEPTANCE = {}


def record(criterion, passed, detail):
    """Store a criterion outcome; repeated calls (parametrized cases) are combined."""
    if criterion in ACCEPTANCE:
        prev_ok, prev_detail = ACCEPTANCE[criterion]
        passed, detail = prev_ok and passed, f"{prev_detail}; {detail}"
    ACCEPTANCE[criterion] = (bool(passed), detail)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {'PASS' if passed else 'FAIL'}: {detail}")
