import math

import numpy as np
import pytest

from wallforge import model
from wallforge.grid1d import Grid, Profile
from wallforge.model import Params
from wallforge.solver1d import ContinuationSchedule, continue_in_R


def exact_alpha2(grid: Grid, omega: float, shift: float = 0.0) -> Profile:
    """Closed-form wall at alpha = 2: u + v is constant and u - v is a tanh."""
    s = math.sqrt(1.0 + omega)
    d = math.sqrt(1.0 - omega)
    t = d * np.tanh(d * (grid.x - shift) / math.sqrt(2.0))
    return Profile(grid, 0.5 * (s + t), 0.5 * (s - t))


@pytest.fixture(scope="session")
def wall_2_half():
    """Solved wall at alpha = 2, omega = 1/2 on [-40, 40], h = 0.01."""
    p = Params(2.0, 0.5)
    return p, continue_in_R(p, ContinuationSchedule((5, 10, 20, 40), 0.01))[-1]


@pytest.fixture(scope="session")
def eq_2_half():
    return model.equilibria(Params(2.0, 0.5))


_ACCEPTANCE: dict = {}


@pytest.fixture
def acceptance():
    """``record(n, ok, detail)`` stores the verdict line of acceptance criterion n."""

    def record(n, ok, detail):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[n] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
