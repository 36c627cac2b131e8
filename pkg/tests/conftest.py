import numpy as np
import pytest

from hofd_sense.distributions import centered_mixture

ACCEPTANCE_LINES = []


def record_criterion(number, label, ok, detail):
    """Print and keep one pass/fail line for an acceptance criterion."""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {label} | {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def bilinear_spec():
    return centered_mixture(0.2, [[0.5, 0.4], [0.4, 0.5]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
