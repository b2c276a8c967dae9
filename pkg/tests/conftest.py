import numpy as np
import pytest

# criterion number -> (passed, one-line summary); filled by test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        ok, text = ACCEPTANCE_LINES[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: {text}")


@pytest.fixture
def small_grid():
    from stochburgers import SpaceTimeGrid
    return SpaceTimeGrid(-2.0, 2.0, 41, 1.0, 100)


@pytest.fixture
def rng_np():
    return np.random.default_rng(12345)
