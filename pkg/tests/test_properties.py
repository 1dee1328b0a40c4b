"""Property-based checks on the pure functions."""
import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from steinweiss.closed_forms import angular_J, gamma, hardy_A_supremum, hardy_constants
from steinweiss.exponents import (ExponentConfig, ExponentError, conformal_config, el_exponents,
                                  solve_r, validate_primal)
from steinweiss.operators import rect_integral

anything = st.one_of(st.floats(allow_nan=True, allow_infinity=True), st.integers(-5, 5),
                     st.text(max_size=5), st.none())


@given(anything, anything, anything, anything, anything, anything)
def test_validate_primal_is_total(n, lam, a, b, p, r):
    rep = validate_primal(n, lam, a, b, p, r)
    assert isinstance(rep.valid, bool)
    assert rep.valid == (not rep.violations)


@st.composite
def admissible(draw):
    n = draw(st.sampled_from([1, 2]))
    lam = draw(st.floats(0.2, n + 0.8))
    p = draw(st.floats(1.1, 4.0))
    alpha = draw(st.floats(0.0, 0.95)) * (p - 1) / p
    beta = draw(st.floats(0.0, 0.95))
    try:
        r = solve_r(n, lam, alpha, 0.0, p)
    except ExponentError:
        assume(False)
    beta = beta * (r - 1) / r
    try:
        cfg = ExponentConfig.make(n, lam, alpha, beta, p)
    except ExponentError:
        assume(False)
    assume(validate_primal(cfg.n, cfg.lam, cfg.alpha, cfg.beta, cfg.p, cfg.r).valid)
    return cfg


@settings(max_examples=150)
@given(admissible(), st.floats(0.01, 100.0))
def test_hardy_supremum_does_not_depend_on_R(cfg, R):
    try:
        ref = hardy_A_supremum(cfg, "A2", 1.0)
        other = hardy_A_supremum(cfg, "A2", R)
    except ExponentError:
        assume(False)
    assert math.isclose(ref, other, rel_tol=1e-10)


@given(admissible())
def test_swapping_twice_is_identity(cfg):
    assert cfg.swapped().swapped() == cfg
    assert abs(cfg.swapped().balance_defect()) < 1e-12


@settings(max_examples=60)
@given(st.sampled_from([1, 2]), st.floats(0.3, 1.7), st.floats(0.0, 0.3), st.floats(0.0, 0.3))
def test_conformal_tuples_have_critical_el_exponents(n, lam, a, b):
    try:
        cfg = conformal_config(n, lam, a, b)
        ex = el_exponents(cfg)
    except ExponentError:
        assume(False)
    assert math.isclose(ex.theta, (2 * n + 2 - lam - 2 * a) / (lam + 2 * a), rel_tol=1e-12)


@given(st.floats(0.01, 60.0))
def test_gamma_recurrence(x):
    assert math.isclose(gamma(x + 1), x * gamma(x), rel_tol=5e-14)


@given(st.floats(-3.0, 0.99), st.integers(1, 4))
def test_angular_J_recurrence_in_n(sigma, n):
    # J(sigma; n+1) / J(sigma; n) = int_0^pi sin^{n-sigma}
    ratio = angular_J(sigma, n + 1) / angular_J(sigma, n)
    s = n - sigma
    assert math.isclose(ratio, math.sqrt(math.pi) * gamma((s + 1) / 2) / gamma(s / 2 + 1), rel_tol=1e-12)


@given(st.floats(-1.0, 1.0), st.floats(0.05, 1.0), st.floats(-1.0, 1.0), st.floats(0.05, 1.0),
       st.floats(0.05, 0.95), st.floats(0.2, 1.8))
def test_rect_integral_additive_and_positive(x0, w, t0, h, split, lam):
    x1, t1 = x0 + w, t0 + h
    xm = x0 + split * w
    whole = rect_integral(x0, x1, t0, t1, lam)
    parts = rect_integral(x0, xm, t0, t1, lam) + rect_integral(xm, x1, t0, t1, lam)
    assert whole > 0
    assert math.isclose(whole, parts, rel_tol=1e-9)
    # reflection symmetry of the kernel
    assert math.isclose(whole, rect_integral(-x1, -x0, t0, t1, lam), rel_tol=1e-12)
