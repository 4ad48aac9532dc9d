import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sci

from qball.errors import ZeroCharge
from qball.grid import RadialGrid, ReducedState, integrate
from qball.observables import (binding_energy_density, charge, energy, energy_density,
                               hylenic_ratio, j_delta, lebesgue_norm, observe,
                               sharp_seminorm, star_norm, support_region)

G = RadialGrid(10.0, 2000)


def state(u, theta, q=0.0, grid=G):
    return ReducedState.from_fields(grid, u, theta, q)


def test_zero_state(pot):
    s = state(G.zeros(), G.zeros())
    b = energy(s, pot)
    assert b.total == 0.0 and charge(s) == 0.0
    assert not np.any(binding_energy_density(s, pot))
    with pytest.raises(ZeroCharge):
        hylenic_ratio(s, pot)


def test_gaussian_breakdown(pot):
    u = np.exp(-G.r**2)
    b = energy(state(u, G.zeros()), pot)
    # int |grad u|^2 = 3 pi^{3/2} / (2 sqrt 2); the breakdown stores half of each quadratic
    grad, _ = sci.quad(lambda r: 4 * np.pi * r**2 * (2 * r * np.exp(-r**2)) ** 2, 0, np.inf)
    assert grad == pytest.approx(3 * np.pi**1.5 / (2 * np.sqrt(2)), rel=1e-12)
    assert b.grad_u_term == pytest.approx(grad / 2, rel=1e-5)
    assert b.mass_term == pytest.approx(0.5 * np.pi**1.5 / (2 * np.sqrt(2)), rel=1e-5)
    assert b.theta_term == 0.0 and b.efield_term == 0.0


def test_theta_term_scaling(pot):
    u = np.exp(-G.r**2)
    t1 = energy(state(u, u), pot).theta_term
    t2 = energy(state(u, 2 * u), pot).theta_term
    assert t2 == pytest.approx(4 * t1, rel=1e-14)


def test_charge_values():
    u = np.exp(-G.r**2)
    assert charge(state(u, u)) == pytest.approx(np.pi**1.5 / (2 * np.sqrt(2)), rel=1e-5)
    assert charge(state(u, -u)) == -charge(state(u, u))


def test_ratio_by_scaling(pot):
    u = np.exp(-G.r**2)
    s = state(u, u)
    e, c = energy(s, pot).total, charge(s)
    assert hylenic_ratio(state(u, u * 2 * e / c), pot) == pytest.approx(
        energy(state(u, u * 2 * e / c), pot).total / (2 * e), rel=1e-14)


def test_j_delta_arithmetic(pot):
    u = np.exp(-G.r**2)
    s = state(u, u, q=0.3)
    obs = observe(s, pot, 0.01)
    assert obs.j_delta == pytest.approx(obs.hylenic_ratio + 0.01 * obs.energy, rel=1e-15)
    assert j_delta(s, pot, 1e-12) == pytest.approx(obs.hylenic_ratio, rel=1e-10)
    assert j_delta(s, pot, 0.5) >= obs.hylenic_ratio
    with pytest.raises(ValueError):
        j_delta(s, pot, 0.0)
    assert set(obs.to_dict()) == {"energy", "charge", "lambda", "j_delta", "breakdown"}


def test_energy_density_sums_to_energy(pot):
    u = 0.8 * np.exp(-(G.r / 2) ** 2)
    s = state(u, 0.9 * u, q=0.2)
    assert integrate(G, energy_density(s, pot)) == pytest.approx(energy(s, pot).total, rel=1e-13)


def test_efield_term_matches_field_integral(pot):
    g = RadialGrid(40.0, 4000)
    u = np.exp(-g.r**2)
    s = state(u, u, q=1.0, grid=g)
    # field of the enclosed charge, integrated to infinity
    Q = charge(s)
    q_enc = np.cumsum(g.weights * u * u)
    inner = 0.5 * np.sum(4 * np.pi * g.r_face**2 * g.h * (q_enc[:-1] / (4 * np.pi * g.r_face**2)) ** 2)
    tail = Q**2 / (8 * np.pi * g.r_max)
    assert energy(s, pot).efield_term == pytest.approx(inner + tail, rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(a=st.floats(0.1, 2.0), b=st.floats(0.1, 2.0), t=st.floats(0.1, 2.0))
def test_quadratic_part_parallelogram(pot, a, b, t):
    u2 = b * np.exp(-(G.r / 2) ** 2)
    u1 = u2 + a * np.exp(-G.r**2)  # keeps u1 - u2 >= 0
    th1, th2 = t * u1, -0.5 * u2

    def quad(u, th):
        e = energy(state(u, th), pot)
        return e.grad_u_term + e.mass_term + e.theta_term

    lhs = quad(u1 + u2, th1 + th2) + quad(u1 - u2, th1 - th2)
    rhs = 2 * quad(u1, th1) + 2 * quad(u2, th2)
    assert lhs == pytest.approx(rhs, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(a=st.floats(0.05, 3.0), b=st.floats(0.05, 3.0))
def test_charge_bilinear(a, b):
    u, th = np.exp(-G.r**2), np.exp(-(G.r / 3) ** 2)
    assert charge(state(a * u, b * th)) == pytest.approx(a * b * charge(state(u, th)), rel=1e-12)


def test_binding_density_integral_bound(pot, charged):
    s = charged.state
    beta = binding_energy_density(s, pot)
    obs = observe(s, pot)
    assert integrate(s.grid, beta) >= pot.m * abs(obs.charge) - obs.energy > 0
    regions = support_region(s.grid, beta)
    assert len(regions) == 1 and regions[0][0] == 0.0


def test_binding_density_vanishes_when_pointwise_unbound(pot):
    u = 0.01 * np.exp(-G.r**2)
    s = state(u, 0.1 * u)
    assert not np.any(binding_energy_density(s, pot))
    with pytest.raises(ValueError):
        binding_energy_density(s, pot, lambda0=0.0)


def test_support_region_cases():
    g = RadialGrid(5.0, 50)
    assert support_region(g, g.zeros()) == []
    assert support_region(g, (g.r < 2).astype(float)) == [(0.0, pytest.approx(1.9))]
    two = ((g.r < 1) | ((g.r > 3) & (g.r < 4))).astype(float)
    assert len(support_region(g, two)) == 2


def test_sharp_seminorm():
    u = np.exp(-G.r**2)
    l3, l4 = lebesgue_norm(G, u, 3), lebesgue_norm(G, u, 4)
    assert sharp_seminorm(G, u, 3, 4) == max(l3, l4)
    assert sharp_seminorm(G, G.zeros(), 3, 4) == 0.0
    eps = 0.1
    val = sharp_seminorm(G, eps * u, 3, 4)
    assert eps * min(l3, l4) - 1e-15 <= val <= eps * max(l3, l4) + 1e-15


def test_star_norm_small_support_equals_l1():
    g = RadialGrid(5.0, 5000)
    u = np.clip(0.8 - g.r, 0.0, None)
    assert star_norm(g, u) == pytest.approx(integrate(g, u), rel=1e-3)
    assert star_norm(g, g.zeros()) == 0.0


def test_star_norm_shell_oracle():
    # thin shell of radius 3: the best unit ball straddles it
    g = RadialGrid(6.0, 6000)
    u = np.exp(-((g.r - 3.0) / 0.05) ** 2)

    def ball(d):
        f = lambda r: np.exp(-((r - 3.0) / 0.05) ** 2) * np.pi * r * (1 - (r - d) ** 2) / d
        return sci.quad(f, d - 1, d + 1, points=[3.0], limit=200)[0]

    oracle = max(ball(d) for d in np.linspace(2.5, 3.5, 201))
    assert star_norm(g, u) == pytest.approx(oracle, rel=1e-3)


def test_star_norm_drops_when_spread():
    g = RadialGrid(30.0, 3000)
    narrow = np.exp(-(g.r / 1.0) ** 2)
    wide = np.exp(-(g.r / 10.0) ** 2)
    wide *= integrate(g, narrow) / integrate(g, wide)
    assert star_norm(g, wide) < star_norm(g, narrow)
