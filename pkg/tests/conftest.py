import numpy as np
import pytest

from qball.grid import RadialGrid
from qball.potential import Potential
from qball.solver import SolverConfig, minimize_j_delta


@pytest.fixture(scope="session")
def pot():
    return Potential.reference()


@pytest.fixture(scope="session")
def grid():
    return RadialGrid(30.0, 3000)


@pytest.fixture(scope="session")
def charged(pot):
    """q = 0.05 soliton at a delta inside the certified range."""
    return minimize_j_delta(SolverConfig(delta=1e-4, q=0.05), pot)


@pytest.fixture(scope="session")
def neutral(pot):
    return minimize_j_delta(SolverConfig(delta=1e-4, q=0.0), pot)


def gaussian(grid, amp=1.0, width=1.0):
    return amp * np.exp(-(grid.r / width) ** 2)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def verdict():
    def record(label: str, ok: bool, detail: str) -> bool:
        line = f"{label}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[label] = line
        print(line, flush=True)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE, key=_label_order):
            terminalreporter.write_line(ACCEPTANCE[key])


def _label_order(label: str):
    kind, num = label.split()
    return kind, int(num)
