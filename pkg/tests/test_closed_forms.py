"""Closed-form constants against values frozen from 30-digit evaluations of
the Gamma-function formulas (independent arbitrary-precision library)."""
import math

import numpy as np
import pytest
from scipy import integrate

from steinweiss.closed_forms import (angular_J, bounds_report, gamma, hardy_A_supremum,
                                     hardy_constants, hls_upper, representation_constant,
                                     sphere_area, r_indexed_d_forms)
from steinweiss.exponents import ExponentConfig, ExponentError, conformal_config

GAMMA_ORACLE = {
    0.1: 9.5135076986687318,
    3.7: 4.1706517837966032,
    0.001: 999.42377248459547,
    45.3: 8.308990531110264e54,
}


@pytest.mark.parametrize("x, value", sorted(GAMMA_ORACLE.items()))
def test_gamma_against_frozen_values(x, value):
    assert gamma(x) == pytest.approx(value, rel=1e-13)


def test_gamma_integers_and_domain():
    assert gamma(1) == 1.0 and gamma(6) == 120.0
    for bad in (0.0, -1.5, float("nan")):
        with pytest.raises(ValueError):
            gamma(bad)
    with pytest.raises(OverflowError):
        gamma(200.0)


def test_gamma_matches_stdlib_on_a_sweep():
    xs = np.linspace(0.05, 30, 211)
    err = max(abs(gamma(x) / math.gamma(x) - 1) for x in xs)
    assert err < 1e-13


def test_sphere_areas():
    assert sphere_area(1) == pytest.approx(2.0, rel=1e-15)
    assert sphere_area(2) == pytest.approx(2 * math.pi, rel=1e-15)
    assert sphere_area(4) == pytest.approx(2 * math.pi ** 2, rel=1e-14)
    assert representation_constant(3) == pytest.approx(2 * math.pi, rel=1e-14)
    with pytest.raises(ValueError):
        sphere_area(0)


def _edge_quad(h, sigma):
    """int_0^{pi/2} h(u) sin(u)^{-sigma} du with u^{-sigma} moved into the weight;
    u is the angle to the boundary plane."""
    g = lambda u: h(u) * (math.sin(u) / u if u > 0 else 1.0) ** (-sigma)  # noqa: E731
    return integrate.quad(g, 0, math.pi / 2, weight="alg", wvar=(-sigma, 0), epsabs=0, epsrel=1e-13)[0]


def test_angular_J_is_the_hemisphere_integral_for_n1():
    # upper half circle, angle phi from the t-axis: int cos(phi)^{-sigma}
    for sigma in (-0.5, 0.3, 0.7):
        direct = 2 * _edge_quad(lambda u: 1.0, sigma)
        assert angular_J(sigma, 1) == pytest.approx(direct, rel=1e-9)
    with pytest.raises(ValueError):
        angular_J(1.0, 2)


def test_angular_J_is_the_hemisphere_integral_for_n2():
    # upper unit hemisphere in R^3, polar angle from the t-axis
    for sigma in (-1.0, 0.4, 0.9):
        direct = 2 * math.pi * _edge_quad(math.cos, sigma)
        assert angular_J(sigma, 2) == pytest.approx(direct, rel=1e-9)
        assert angular_J(sigma, 2) == pytest.approx(2 * math.pi / (1 - sigma), rel=1e-13)


HARDY_ORACLE = {
    # (n, lam, alpha, beta, p): C1..C4
    (1, 1.0, 0.1, 0.1, 10 / 7): (2.5239277895858177,) * 4,
    (1, 1.0, 0.2, 0.0, 1.5): (1.7951958020513104, 4.4776093743471688, 3.9179082025537727,
                              1.5707963267948966),
}


@pytest.mark.parametrize("key", sorted(HARDY_ORACLE))
def test_hardy_constants_frozen(key):
    c = ExponentConfig.make(*key, **({"r": key[-1]} if key[0] == 1 and key[2] == key[3] else {}))
    h = hardy_constants(c)
    assert (h.c1, h.c2, h.c3, h.c4) == pytest.approx(HARDY_ORACLE[key], rel=1e-13)


def test_hardy_exponents_close_the_balance(baseline):
    h = hardy_constants(baseline)
    assert h.e1 / baseline.q + h.e2 / baseline.p_prime == pytest.approx(0.0, abs=1e-13)
    assert h.e4 / baseline.q + h.e3 / baseline.p_prime == pytest.approx(0.0, abs=1e-13)
    assert h.value(2, 2.0) == pytest.approx(h.c2 * 2 ** h.e2)


def test_hardy_supremum_sides(baseline):
    assert hardy_A_supremum(baseline, "a2", 3.0) == pytest.approx(hardy_A_supremum(baseline, "A2", 0.1))
    with pytest.raises(ValueError):
        hardy_A_supremum(baseline, "A4", 1.0)
    with pytest.raises(ValueError):
        hardy_A_supremum(baseline, "A2", 0.0)


BOUNDS_ORACLE = {
    # config: (D1, D2, upper, hls_upper)
    "baseline": (1.7427943979388683, 1.7427943979388683, 3.2102669732108377, 5.7016105332013933),
    "tilted": (1.9265423226398553, 1.7782113827065468, 3.3606089283519698, 5.8230932083491872),
    "n2": (4.7854618985789742, 4.7854618985789742, 9.4382994107834771, 11.224068769855446),
}
BOUNDS_CONFIGS = {
    "baseline": ExponentConfig.make(1, 1, 0.1, 0.1, 10 / 7, 10 / 7),
    "tilted": ExponentConfig.make(1, 1, 0.2, 0.0, 1.5),
    "n2": conformal_config(2, 2, 0.25, 0.25),
}


@pytest.mark.parametrize("name", sorted(BOUNDS_ORACLE))
def test_bounds_report_frozen(name):
    rep = bounds_report(BOUNDS_CONFIGS[name])
    d1, d2, upper, hls = BOUNDS_ORACLE[name]
    assert rep.d1 == pytest.approx(d1, rel=1e-13)
    assert rep.d2 == pytest.approx(d2, rel=1e-13)
    assert rep.upper == pytest.approx(upper, rel=1e-13)
    assert rep.hls_upper == pytest.approx(hls, rel=1e-13)
    assert rep.lower == max(rep.d1, rep.d2, rep.d3)
    assert rep.d3 == max(rep.d3_terms)


def test_baseline_lower_value(baseline):
    assert bounds_report(baseline).lower == pytest.approx(7.019505955019423, rel=1e-12)


@pytest.mark.parametrize("name", sorted(BOUNDS_CONFIGS))
def test_statement_forms_agree_with_proof_forms(name):
    cfg = BOUNDS_CONFIGS[name]
    d1, d2 = r_indexed_d_forms(cfg)
    rep = bounds_report(cfg)
    assert d1 == pytest.approx(rep.d1, rel=1e-12)
    assert d2 == pytest.approx(rep.d2, rel=1e-12)


def test_hls_upper_domain():
    with pytest.raises(ExponentError):
        hls_upper(2, 1.5, 2.0)
    with pytest.raises(ExponentError):
        hls_upper(2, 1.0, 1.0)
