import numpy as np
import pytest

from snlp.levy_model import ProcessSpec, TemperedStableJumps


@pytest.fixture
def bm():
    """psi(lam) = lam^2."""
    return ProcessSpec.brownian()


@pytest.fixture
def bm_drift():
    """psi(lam) = lam + lam^2."""
    return ProcessSpec.brownian(drift=1.0)


@pytest.fixture
def bm_negative():
    """psi(lam) = -lam + lam^2, drifting to -infinity with Phi(0) = 1."""
    return ProcessSpec.brownian(drift=-1.0)


@pytest.fixture
def stable15():
    return ProcessSpec.stable(1.5)


@pytest.fixture
def bv_cp():
    """Bounded variation: drift 2, exponential jumps of rate 1 and mean 1/2."""
    return ProcessSpec.bounded_variation_cp(2.0, 1.0, 0.5)


@pytest.fixture
def tempered():
    return ProcessSpec(0.5, 0.0, TemperedStableJumps(1.5, 1.0, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
