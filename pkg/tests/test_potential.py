import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qball.potential import (Potential, check_assumptions, eval_W, eval_W_prime,
                             parse_coefficient)


def test_reference_values(pot):
    assert eval_W(pot, 0.0) == 0.0
    assert eval_W(pot, 2 / 3) == pytest.approx(14 / 81, rel=1e-14)
    assert eval_W(pot, 1.0) == pytest.approx(5 / 12, rel=1e-14)
    assert eval_W_prime(pot, 0.0) == 0.0
    assert eval_W_prime(pot, 1.0) == pytest.approx(1.0, rel=1e-14)
    assert eval_W_prime(pot, 2 / 3) == pytest.approx(2 / 3 - 4 / 9 + 8 / 27, rel=1e-14)


def test_negative_amplitude_rejected(pot):
    with pytest.raises(ValueError):
        eval_W(pot, -0.1)


def test_exponents_must_exceed_two():
    with pytest.raises(ValueError):
        Potential(1.0, ((2, 1.0),))
    with pytest.raises(ValueError):
        Potential(0.0)


def test_report_reference(pot):
    rep = check_assumptions(pot)
    assert rep.all_ok
    assert rep.alpha0 == pytest.approx(7 / 9, abs=1e-12)
    assert rep.s_star == pytest.approx(2 / 3, abs=1e-10)
    assert rep.witness_s0 == pytest.approx(1.0, abs=1e-12)
    assert rep.witness_N == pytest.approx(-1 / 12, abs=1e-15)
    assert rep.growth_exponents == (3.0, 4.0)


def test_alpha0_bounds_every_scan_point(pot):
    rep = check_assumptions(pot)
    s = np.linspace(1e-3, 10, 5000)
    assert np.all(pot.ratio(s) >= rep.alpha0 - 1e-15)


def test_free_potential_not_hylomorphic():
    rep = check_assumptions(Potential(1.0))
    assert not rep.hylomorphy_ok
    assert rep.alpha0 == pytest.approx(1.0)
    assert not rep.all_ok


def test_negative_leading_coefficient_fails_positivity():
    rep = check_assumptions(Potential(1.0, ((3, 0.1), (4, -0.01))))
    assert not rep.positivity_ok
    assert any("leading" in n for n in rep.notes)


def test_sextic_violates_growth():
    rep = check_assumptions(Potential(1.0, ((4, -0.5), (6, 0.1))))
    assert not rep.growth_ok


def test_scan_size_precondition(pot):
    with pytest.raises(ValueError):
        check_assumptions(pot, n_scan=10)


def test_parse_coefficient():
    assert parse_coefficient("-1/3") == -1 / 3
    assert parse_coefficient(0.25) == 0.25


@settings(max_examples=50, deadline=None)
@given(s=st.floats(0.05, 5.0))
def test_derivative_matches_finite_difference(pot, s):
    h = 1e-5
    fd = (pot.W(s + h) - pot.W(s - h)) / (2 * h)
    assert pot.W_prime(s) == pytest.approx(fd, rel=1e-8, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(s=st.floats(1e-3, 10.0))
def test_reference_potential_positive(pot, s):
    assert pot.W(s) > 0


@settings(max_examples=30, deadline=None)
@given(a3=st.floats(-2.0, 2.0), a4=st.floats(0.01, 2.0))
def test_hylomorphy_iff_negative_N_somewhere(a3, a4):
    p = Potential(1.0, ((3, a3), (4, a4)))
    rep = check_assumptions(p)
    s = np.linspace(10 / 20000, 10, 20000)
    assert rep.hylomorphy_ok == bool(np.any(p.N(s) < 0))
