import pytest

from builders import SCENARIOS
from fedsat.scenario import load_scenario


@pytest.fixture(scope="session")
def golds():
    return load_scenario(SCENARIOS / "golds_reference.json")


@pytest.fixture(scope="session")
def bedcs():
    return load_scenario(SCENARIOS / "bedcs_reference.json")


# -- acceptance summary --------------------------------------------------------

_ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def acceptance_record():
    """Record one pass/fail line per acceptance criterion for the terminal summary."""

    def record(criterion: str, passed: bool, detail: str = "") -> None:
        _ACCEPTANCE[criterion] = f"{'PASS' if passed else 'FAIL'}  {criterion}  {detail}".rstrip()

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[key])
