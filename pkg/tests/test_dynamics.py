import numpy as np
import pytest

from qball.dynamics import (EvolutionConfig, SnapshotWriter, conserved_charge,
                            conserved_energy, dispersion_probe, embed_soliton, evolve,
                            gaussian_pulse, liapunov_v, make_state, orbit_distance,
                            screened_gauss_solve, stability_probe, step,
                            time_reversal_error)
from qball.errors import NumericAbort
from qball.grid import RadialGrid, integrate, poisson_solve, read_columns
from qball.shooting import shooting_oracle_q0

G = RadialGrid(30.0, 3000)


def test_cfl_checked_at_config():
    with pytest.raises(ValueError):
        EvolutionConfig(G, 0.6 * G.h, 1.0)
    with pytest.raises(ValueError):
        EvolutionConfig(G, 0.0, 1.0)
    assert EvolutionConfig.at_cfl(G, 1.0).dt == pytest.approx(0.5 * G.h)


def test_zero_state_is_fixed(pot):
    s = make_state(G, G.zeros(), G.zeros(), 0.1)
    out = step(s, EvolutionConfig.at_cfl(G, 1.0, q=0.1), pot, 20)
    assert not np.any(out.psi) and not np.any(out.dpsi)
    assert conserved_energy(s, pot, 0.1) == 0.0 and conserved_charge(s, 0.1) == 0.0
    _, series = dispersion_probe(0.0, EvolutionConfig.at_cfl(G, 0.5, snapshot_stride=50), pot)
    assert not np.any(series)


def test_screened_solve_matches_momentum_form():
    q = 0.3
    psi = 0.5 * np.exp(-(G.r / 3) ** 2) * np.exp(0.2j * G.r)
    dpsi = -0.9j * psi + 0.1 * psi
    phi = screened_gauss_solve(G, psi, dpsi, q)
    P = dpsi + 1j * q * phi * psi
    again = poisson_solve(G, np.imag(np.conj(psi) * P), q)
    assert np.max(np.abs(again - phi)) < 1e-12 * np.max(np.abs(phi))


def test_neutral_standing_wave(pot):
    u = shooting_oracle_q0(0.95, pot, G)
    s = make_state(G, u, -0.95j * u, 0.0)
    assert conserved_charge(s, 0.0) == pytest.approx(0.95 * integrate(G, s.psi.real**2), rel=1e-14)
    cfg = EvolutionConfig.at_cfl(G, 50.0, snapshot_stride=500)
    _, dev = evolve(s, cfg, pot, lambda st: np.max(np.abs(np.abs(st.psi) - u)))
    assert max(dev) < 1e-4


def test_linear_regime_frequency(pot):
    g = RadialGrid(60.0, 1200)
    s = make_state(g, 1e-3 * np.exp(-(g.r / 6) ** 2), g.zeros(), 0.0)
    cfg = EvolutionConfig.at_cfl(g, 40.0, snapshot_stride=1)
    _, rec = evolve(s, cfg, pot, lambda st: (st.t, st.psi[0].real))
    t, x = np.array(rec).T
    crossings = t[1:][np.diff(np.sign(x)) != 0]
    freq = np.pi / np.mean(np.diff(crossings))
    assert freq == pytest.approx(pot.m, rel=0.06)


def test_embedded_soliton_matches_static(pot, charged):
    s = embed_soliton(charged)
    assert conserved_energy(s, pot, 0.05) == pytest.approx(charged.energy, rel=1e-12)
    assert conserved_charge(s, 0.05) == pytest.approx(charged.charge, rel=1e-12)
    assert liapunov_v(s, charged.energy, charged.charge, pot, 0.05) < 1e-20
    # physical potential is the negative of the static one
    assert np.allclose(s.phi, -charged.state.phi, atol=1e-14)
    # d_t psi = -i omega u up to the multiplier residual
    assert np.max(np.abs(s.dpsi + 1j * charged.omega * s.psi)) < 1e-8


def test_orbit_distance(pot, charged):
    s = embed_soliton(charged)
    assert orbit_distance(s, charged) < 1e-10
    rot = make_state(G, s.psi * np.exp(1j * np.pi / 3), s.dpsi * np.exp(1j * np.pi / 3), 0.05)
    assert orbit_distance(rot, charged) < 1e-6
    bumped = make_state(G, 1.01 * s.psi, s.dpsi, 0.05)
    du = 0.01 * np.real(s.psi)
    size = np.sqrt(np.dot(G.face_coeff, np.diff(du) ** 2) + integrate(G, du**2))
    assert orbit_distance(bumped, charged) == pytest.approx(size, rel=0.3)


def test_liapunov_nonnegative(pot, charged):
    s = gaussian_pulse(G, 0.3, 3.0, pot.m, 0.05)
    assert liapunov_v(s, charged.energy, charged.charge, pot, 0.05) >= 0


def test_short_conservation_and_reversal(pot, charged):
    s = embed_soliton(charged)
    cfg = EvolutionConfig.at_cfl(G, 5.0, q=0.05)
    out = step(s, cfg, pot, cfg.n_steps)
    assert conserved_charge(out, 0.05) == pytest.approx(charged.charge, rel=1e-12)
    assert conserved_energy(out, pot, 0.05) == pytest.approx(charged.energy, rel=1e-9)
    assert time_reversal_error(s, cfg, pot) < 1e-10


def test_perturbed_charge_conserved(pot):
    s = gaussian_pulse(G, 0.5, 3.0, pot.m, 0.2)
    s = make_state(G, s.psi * np.exp(0.3j * G.r), s.dpsi + 0.05 * s.psi, 0.2)
    cfg = EvolutionConfig.at_cfl(G, 3.0, q=0.2)
    out = step(s, cfg, pot, cfg.n_steps)
    assert conserved_charge(out, 0.2) == pytest.approx(conserved_charge(s, 0.2), rel=1e-11)
    assert conserved_energy(out, pot, 0.2) == pytest.approx(conserved_energy(s, pot, 0.2), rel=1e-5)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nan_aborts(pot):
    psi = np.exp(-G.r**2).astype(complex)
    psi[5] = np.inf
    s = make_state(G, psi, G.zeros(), 0.0)
    with pytest.raises(NumericAbort):
        step(s, EvolutionConfig.at_cfl(G, 1.0), pot, 2)


def test_stability_probe_contract(pot, charged):
    # unperturbed: the floor is the O(dt^2) splitting error of the standing wave
    floors = []
    for c in (0.5, 0.25):
        cfg = EvolutionConfig.at_cfl(G, 2.0, q=0.05, snapshot_stride=100, cfl_safety=c)
        floors.append(stability_probe(charged, 0.0, cfg, pot).max_distance)
    assert floors[0] < 1e-4
    assert floors[0] / floors[1] == pytest.approx(4.0, rel=0.05)
    with pytest.raises(ValueError):
        stability_probe(charged, 0.2, cfg, pot)


def test_dispersion_probe_refuses_hylomorphic_pulse(pot):
    cfg = EvolutionConfig.at_cfl(G, 1.0)
    with pytest.raises(ValueError):
        dispersion_probe(2 / 3, cfg, pot, width=6.0)


def test_snapshot_writer(pot, charged, tmp_path):
    path = tmp_path / "snap.csv"
    writer = SnapshotWriter(path)
    cfg = EvolutionConfig.at_cfl(RadialGrid(30.0, 3000), 0.5, q=0.05, snapshot_stride=50)
    evolve(embed_soliton(charged), cfg, pot, writer=writer)
    writer.close()
    cols = read_columns(path)
    assert list(cols) == ["t", "r", "re", "im", "phi"]
    assert len(cols["t"]) == 3 * 3001
    assert np.array_equal(np.unique(cols["t"]), [0.0, 0.25, 0.5])
