import functools

import pytest

from shiftlab.construct import SpectrumTarget, construct_admissible_set

ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def admissible(p: float, q: float, delta: float = 0.1, horizon: int = 10**6, rate: str = "auto"):
    """Constructions are deterministic and reused across test modules."""
    return construct_admissible_set(SpectrumTarget(p, q), delta=delta, horizon=horizon, rate=rate)


@pytest.fixture
def build_set():
    return admissible


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
