import numpy as np
import pytest

from semcolor.quantizer import build_grid

# one grid for the whole session; construction is deterministic
@pytest.fixture(scope="session")
def default_grid():
    return build_grid()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# --- acceptance reporting -------------------------------------------------
# test_acceptance registers one line per criterion; echoed after the run so
# the pass/fail table is visible without -s.

ACCEPTANCE_LINES = []


def record_acceptance(line):
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
