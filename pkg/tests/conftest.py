import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=20, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance():
    """Record one summary line per acceptance criterion; printed at the end of the run."""
    def record(number, passed, text):
        _ACCEPTANCE.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {text}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
