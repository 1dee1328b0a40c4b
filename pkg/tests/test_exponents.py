import math
from fractions import Fraction

import pytest

from steinweiss.exponents import (ExponentConfig, ExponentError, as_real, conformal_config,
                                  conformal_exponents, el_exponents, is_conformal, mu_values,
                                  require_valid, sobolev_exponent, solve_r, to_dual,
                                  validate_primal)


def test_rational_inputs_agree():
    a = ExponentConfig.make(1, 1, "1/10", (1, 10), Fraction(10, 7), "10/7")
    b = ExponentConfig.make(1, 1.0, 0.1, 0.1, 10 / 7, 10 / 7)
    assert a == b
    assert as_real(" 3/4 ") == 0.75
    with pytest.raises(ExponentError):
        as_real((1, 0))
    with pytest.raises(ExponentError):
        as_real(True)


def test_baseline_is_valid_and_attained(baseline):
    rep = validate_primal(1, 1, 0.1, 0.1, 10 / 7, 10 / 7)
    assert rep.valid and rep.violations == []
    assert rep.attainment == "attained"
    assert baseline.q == pytest.approx(10 / 3, rel=1e-14)
    assert abs(baseline.balance_defect()) < 1e-14


def test_solve_r_closes_the_balance():
    r = solve_r(1, 1.0, 0.2, 0.0, 1.5)
    assert r == pytest.approx(15 / 11, rel=1e-14)
    assert abs(ExponentConfig(1, 1.0, 0.2, 0.0, 1.5, r).balance_defect()) < 1e-14
    with pytest.raises(ExponentError):
        solve_r(1, 1.9, 0.6, 0.6, 1.1)


@pytest.mark.parametrize("args, fragment", [
    ((1, 1, 0.5, 0.1, 2, 2), "alpha < 1/p'"),
    ((1, 1, 0.1, 0.1, 10 / 7, 1.5), "balance"),
    ((1, 2.5, 0.1, 0.1, 2, 2), "0 < lambda < n+1"),
    ((1, 1, -0.3, 0.1, 2, 2), "alpha + beta >= 0"),
    ((0, 0.5, 0.1, 0.1, 2, 2), "n >= 1"),
    ((1, 1, 0.1, 0.1, 1.0, 2), "p > 1"),
])
def test_violations_are_named(args, fragment):
    rep = validate_primal(*args)
    assert not rep.valid
    assert any(fragment in v for v in rep.violations)


def test_validate_is_total_on_garbage():
    for bad in (float("nan"), float("inf"), "x/y", None, (1, 0)):
        rep = validate_primal(1, 1, bad, 0.1, 2, 2)
        assert not rep.valid


def test_attainment_notes():
    # alpha = beta = 0 with p != q
    c = ExponentConfig.make(1, 1, 0, 0, 4 / 3)
    rep = validate_primal(c.n, c.lam, c.alpha, c.beta, c.p, c.r)
    assert rep.valid and rep.attainment == "non-attained"
    # p = q: n = 1, lambda = 1.6, alpha = beta = 0.2, p = r = 2
    rep = validate_primal(1, 1.6, 0.2, 0.2, 2, 2)
    assert rep.valid and rep.attainment == "non-attained"
    rep = validate_primal(1, 1.0, 0.2, -0.2, 1.25, 1.25)
    assert rep.attainment in ("unknown", "n/a")


def test_dual_form_and_el_exponents(baseline):
    assert to_dual(baseline) is baseline
    ex = el_exponents(baseline)
    assert ex.theta == pytest.approx(7 / 3, rel=1e-14)
    assert ex.kappa == pytest.approx(7 / 3, rel=1e-14)
    # p > q is not allowed in the dual form
    with pytest.raises(ExponentError):
        to_dual(ExponentConfig.make(1, 1.9, 0.3, 0.3, 2.0))


def test_conformal_exponents_match_el_exponents():
    for n, lam, a, b in ((1, 1.0, 0.1, 0.1), (1, 0.8, 0.3, 0.0), (2, 2.0, 0.25, 0.25)):
        cd = conformal_exponents(n, lam, a, b)
        cfg = conformal_config(n, lam, a, b)
        assert is_conformal(cfg)
        ex = el_exponents(cfg)
        assert abs(ex.kappa - cd.kappa_star) < 1e-12
        assert abs(ex.theta - cd.theta_star) < 1e-12
        assert abs(cd.mu1) < 1e-12 and abs(cd.mu2) < 1e-12


def test_baseline_is_conformal(baseline):
    assert is_conformal(baseline)
    assert not is_conformal(ExponentConfig.make(1, 1, 0.2, 0.0, 1.5))


def test_mu_sign_tracks_kappa():
    n, lam, b = 1, 1.0, 0.1
    ks = conformal_exponents(n, lam, 0.1, b).kappa_star
    for kappa in (0.5 * ks, 0.9 * ks, ks, 1.1 * ks, 2 * ks):
        mu1, _ = mu_values(n, lam, 0.1, b, kappa, 1.0)
        assert (mu1 >= -1e-12) == (kappa <= ks * (1 + 1e-12))


def test_require_valid_raises():
    with pytest.raises(ExponentError, match="inadmissible"):
        require_valid(ExponentConfig(1, 1.0, 0.5, 0.1, 2.0, 2.0))


def test_sobolev_exponent_examples():
    s = sobolev_exponent(1, 1.5, 0.2, 0.0)
    assert s.p_star == pytest.approx(30 / 7, rel=1e-14)
    assert s.admissible
    assert s.alpha_range[0] == pytest.approx(-0.15, abs=1e-14)
    assert not sobolev_exponent(1, 1.5, 0.6, 0.0).admissible
    assert sobolev_exponent(3, 2, 0, 0).p_star == pytest.approx(4.0, rel=1e-14)
    with pytest.raises(ExponentError):
        sobolev_exponent(1, 2.0, 0.0, 0.0)
