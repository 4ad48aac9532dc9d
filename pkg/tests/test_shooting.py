import numpy as np
import pytest

from qball.errors import NoGroundState
from qball.grid import RadialGrid, laplacian_radial
from qball.shooting import shooting_oracle_q0

G = RadialGrid(30.0, 1500)


@pytest.fixture(scope="module")
def profile(pot):
    return shooting_oracle_q0(0.95, pot, G)


def test_positive_and_decreasing(profile):
    assert np.all(profile[:-1] > 0)
    assert np.all(np.diff(profile) <= 0)


def test_tail_rate(profile):
    band = (G.r > 12) & (G.r < 25)
    slope = np.polyfit(G.r[band], np.log(profile[band] * G.r[band]), 1)[0]
    assert slope == pytest.approx(-np.sqrt(1 - 0.95**2), rel=1e-2)


def test_satisfies_ode(pot, profile):
    # discrete residual of -Lap u + W'(u) - omega^2 u, second order in h
    res = -laplacian_radial(G, profile) + pot.W_prime(profile) - 0.95**2 * profile
    assert np.max(np.abs(res[:-2])) < 20 * G.h**2


@pytest.mark.parametrize("omega", [0.85, 1.0, 1.2, 0.0])
def test_outside_window(pot, omega):
    # omega^2 <= alpha0 = 7/9 has no ground state; omega >= m has no decaying tail
    with pytest.raises(NoGroundState):
        shooting_oracle_q0(omega, pot, G)
