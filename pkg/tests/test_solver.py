from dataclasses import replace

import numpy as np
import pytest

from qball.errors import Collapse, DegenerateFit, NoConvergence, ZeroCharge
from qball.grid import RadialGrid, ReducedState, integrate, write_columns
from qball.observables import observe
from qball.shooting import shooting_oracle_q0
from qball.solver import (InitSpec, SolverConfig, el_residual, minimize_e_fixed_c,
                          minimize_j_delta, optimal_theta, solution_from_state, solve)

COARSE = dict(r_max=30.0, n=1000)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(delta=0.0)
    with pytest.raises(ValueError):
        SolverConfig(delta=1e-3, grad_tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(delta=1e-3, q=-1.0)


def test_solve_needs_exactly_one_target(pot):
    with pytest.raises(ValueError):
        solve(SolverConfig(), pot)
    with pytest.raises(ValueError):
        solve(SolverConfig(delta=1e-4, charge_target=10.0), pot)


@pytest.mark.parametrize("fixture", ["neutral", "charged"])
def test_accepted_solution_invariants(pot, fixture, request):
    sol = request.getfixturevalue(fixture)
    assert sol.energy > 0 and abs(sol.charge) > 0
    assert sol.lambda_ratio < pot.m and sol.j_value < pot.m
    assert max(sol.el_residual, sol.gauss_residual, sol.multiplier_residual) < 1e-6
    assert sol.eigen_cosine >= 1 - 1e-6
    obs = observe(sol.state, pot, sol.delta)
    assert obs.energy == pytest.approx(sol.energy, rel=1e-12)
    assert obs.j_delta == pytest.approx(sol.j_value, rel=1e-12)


def test_neutral_frequency_window(neutral):
    assert np.sqrt(7) / 3 < neutral.omega < 1
    assert np.sqrt(7) / 3 < neutral.lambda_ratio < 1


def test_neutral_matches_shooting(pot, neutral):
    g = neutral.state.grid
    u = shooting_oracle_q0(neutral.omega, pot, g)
    assert np.sqrt(integrate(g, (u - neutral.state.u) ** 2)) < 1e-3


def test_descent_is_monotone(pot):
    sol = minimize_j_delta(SolverConfig(delta=1e-4, q=0.05, **COARSE), pot, record=True)
    h = np.array(sol.history)
    assert len(h) == sol.iterations + 1
    assert np.all(np.diff(h) <= 8 * np.finfo(float).eps * np.abs(h[:-1]))


def test_fixed_charge_agrees(pot, charged):
    cfg = SolverConfig(q=0.05)
    fc = minimize_e_fixed_c(charged.charge, cfg, pot)
    g = fc.state.grid
    assert fc.charge == pytest.approx(charged.charge, rel=1e-12)
    assert np.sqrt(integrate(g, (fc.state.u - charged.state.u) ** 2)) < 1e-3
    flipped = minimize_e_fixed_c(-charged.charge, cfg, pot)
    assert flipped.energy == pytest.approx(fc.energy, rel=1e-9)
    assert flipped.charge < 0


def test_fixed_charge_tiny_target_collapses(pot):
    with pytest.raises(Collapse):
        minimize_e_fixed_c(1e-8, SolverConfig(q=0.05, **COARSE), pot)
    with pytest.raises(ValueError):
        minimize_e_fixed_c(0.0, SolverConfig(q=0.05, **COARSE), pot)


def test_delta_far_above_range_fails(pot):
    cfg = SolverConfig(delta=5.0, q=0.0, max_iters=400, **COARSE)
    with pytest.raises((Collapse, NoConvergence)):
        minimize_j_delta(cfg, pot)


def test_iteration_budget(pot):
    with pytest.raises(NoConvergence):
        minimize_j_delta(SolverConfig(delta=1e-4, max_iters=3, **COARSE), pot)


def test_optimal_theta_is_optimal(pot):
    g = RadialGrid(30.0, 1000)
    u = 0.5 * np.exp(-(g.r / 4) ** 2)
    for q in (0.0, 0.1):
        th = optimal_theta(g, u, pot, q, delta=1e-3)
        j = lambda t: observe(ReducedState.from_fields(g, u, t * th, q), pot, 1e-3).j_delta
        assert j(1.0) < j(1.001) and j(1.0) < j(0.999)


def test_optimal_theta_zero_profile(pot):
    g = RadialGrid(10.0, 100)
    with pytest.raises(ZeroCharge):
        optimal_theta(g, g.zeros(), pot, 0.0)


def test_residual_diagnostics(pot):
    g = RadialGrid(10.0, 200)
    u = np.exp(-g.r**2)
    s = ReducedState.from_fields(g, u, 0.3 * u * (1 + g.r), 0.2)
    res = el_residual(s, pot, 0.2)
    assert all(np.isfinite(res)) and res[0] > 1e-3
    spike = g.zeros()
    spike[:5] = 1.0
    with pytest.raises(DegenerateFit):
        el_residual(ReducedState.from_fields(g, spike, spike, 0.0), pot, 0.0)


def test_init_kinds(pot):
    for init in (InitSpec("gaussian", amplitude=0.7, width=5.0),
                 InitSpec("plateau", amplitude=2 / 3, radius=6.0, width=2.0)):
        sol = minimize_j_delta(SolverConfig(delta=1e-4, q=0.05, init=init, **COARSE), pot)
        assert sol.lambda_ratio < 1


def test_file_init_roundtrip(pot, charged, tmp_path):
    s = charged.state
    path = tmp_path / "profile.csv"
    write_columns(path, ["r", "u", "theta", "phi"], [s.grid.r, s.u, s.theta, s.phi])
    cfg = SolverConfig(delta=charged.delta, q=0.05, init=InitSpec("file", path=str(path)))
    again = minimize_j_delta(cfg, pot)
    assert again.iterations <= 5
    assert again.energy == pytest.approx(charged.energy, rel=1e-9)
    wrapped = solution_from_state(s, pot, 0.05, charged.delta)
    assert wrapped.omega == pytest.approx(charged.omega, rel=1e-12)


def test_deterministic(pot):
    cfg = SolverConfig(delta=1e-4, q=0.05, **COARSE)
    a, b = minimize_j_delta(cfg, pot), minimize_j_delta(cfg, pot)
    assert np.array_equal(a.state.u, b.state.u) and a.energy == b.energy
