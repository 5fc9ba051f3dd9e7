import pytest
from hypothesis import HealthCheck, settings

from singlap.harness import (
    Experiment,
    ExperimentConfig,
    run_counterexample,
    run_table1,
    run_table2,
)

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def table1_rows():
    return run_table1(ExperimentConfig(Experiment.TABLE1))


@pytest.fixture(scope="session")
def table2_rows():
    return run_table2(ExperimentConfig(Experiment.TABLE2))


@pytest.fixture(scope="session")
def counterexample():
    return run_counterexample(ExperimentConfig(Experiment.COUNTEREXAMPLE))


@pytest.fixture
def report():
    """Record one PASS/FAIL line for the terminal summary."""
    def _report(name, ok, detail):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
