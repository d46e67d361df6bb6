from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from prossim.dataset import load_population

DATA = Path(__file__).resolve().parents[1] / "data" / "breast-cancer-wisconsin.data"
COVARIATE_SEED = 2015

settings.register_profile("default", settings(max_examples=200, deadline=None,
                                              suppress_health_check=[HealthCheck.too_slow]))
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def data_path():
    return DATA


@pytest.fixture(scope="session")
def pop():
    return load_population(DATA, seed=COVARIATE_SEED)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
