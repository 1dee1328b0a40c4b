import math

import numpy as np
import pytest
from scipy import integrate

from steinweiss.discretization import Field, GaussianBump, build_grid, sample
from steinweiss.exponents import ExponentConfig, ExponentError, conformal_config
from steinweiss.operators import (_line_integral, apply_E, apply_K, apply_K_adjoint, box_integral, clear_cache,
                                  duality_gap, functional_bilinear, kernel_operator, pairing,
                                  potential_at, rayleigh, rect_integral, tail_estimate,
                                  weighted_norm)


# ---------------------------------------------------------- exact cell integrals

@pytest.mark.parametrize("lam", [0.3, 1.0, 1.7])
def test_rect_integral_around_the_singularity(lam):
    # square [-a, a]^2 about the origin, by polar sectors: 8 a^{2-lam}/(2-lam) int_0^{pi/4} cos^{lam-2}
    a = 0.4
    sector = integrate.quad(lambda th: math.cos(th) ** (lam - 2), 0, math.pi / 4, epsrel=1e-13)[0]
    exact = 8 * a ** (2 - lam) / (2 - lam) * sector
    assert rect_integral(-a, a, -a, a, lam) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("lam", [0.5, 1.2])
def test_rect_integral_offset_cell(lam):
    f = lambda b, a: (a * a + b * b) ** (-lam / 2)  # noqa: E731
    direct = integrate.dblquad(f, 0.3, 0.8, -0.2, 0.5, epsabs=0, epsrel=1e-12)[0]
    assert rect_integral(0.3, 0.8, -0.2, 0.5, lam) == pytest.approx(direct, rel=1e-10)


@pytest.mark.parametrize("lam", [0.5, 1.5, 2.5])
def test_box_integral_cube_by_pyramids(lam):
    # six pyramids with apex at the centre: a/(3-lam) int_{[-a,a]^2} (a^2+u^2+v^2)^{-lam/2}
    a = 0.3
    face = integrate.dblquad(lambda v, u: (a * a + u * u + v * v) ** (-lam / 2), -a, a, -a, a,
                             epsabs=0, epsrel=1e-12)[0]
    exact = 6 * a / (3 - lam) * face
    got = box_integral(np.array([[-a, -a, -a]]), np.array([[a, a, a]]), lam)[0]
    assert got == pytest.approx(exact, rel=1e-10)


def test_box_integral_offset_matches_tplquad():
    lam = 1.4
    lo, hi = np.array([0.1, -0.3, 0.05]), np.array([0.5, 0.2, 0.4])
    direct = integrate.tplquad(lambda z, y, x: (x * x + y * y + z * z) ** (-lam / 2),
                               lo[0], hi[0], lo[1], hi[1], lo[2], hi[2], epsabs=0, epsrel=1e-11)[0]
    assert box_integral(lo[None], hi[None], lam)[0] == pytest.approx(direct, rel=1e-9)


@pytest.mark.parametrize("a,c", [(1.0, 0.5), (0.2, 3.0), (1e-3, 1e4), (5e-324, 1.0), (1.0, 1e300)])
def test_line_integral_at_lambda_one_is_asinh(a, c):
    want = math.asinh(c / a) if c / a < 1e300 else math.log(2 * c) - math.log(a)
    assert _line_integral(a, c, 1.0) == pytest.approx(want, rel=1e-13)


@pytest.mark.parametrize("lam,a,c,want", [
    # mpmath hyp2f1 at 40 digits
    (0.7, 0.3, 1e6, 208.52024283844855659),
    (1.6, 2.0, 1e9, 1.5023992858132441968),
    (0.05, 1.0, 1e200, 1.0526315789473670484e190),
])
def test_line_integral_far_from_the_axis(lam, a, c, want):
    assert _line_integral(a, c, lam) == pytest.approx(want, rel=1e-12)


def test_rect_integral_is_additive():
    lam = 0.9
    whole = rect_integral(-0.5, 0.7, -0.4, 0.6, lam)
    parts = rect_integral(-0.5, 0.1, -0.4, 0.6, lam) + rect_integral(0.1, 0.7, -0.4, 0.6, lam)
    assert whole == pytest.approx(parts, rel=1e-12)


# --------------------------------------------------------------- the operator

def test_fft_application_matches_dense_matrix(rng):
    g = build_grid(1, 2.0, 2.0, 12, 10)
    op = kernel_operator(g, 0.8)
    f = rng.random(g.shape)
    dense = op.dense() @ f.ravel()
    assert np.allclose(op.apply(f * g.weights).ravel(), dense, rtol=1e-12, atol=0)
    assert np.allclose(op.kernel, np.swapaxes(op.kernel, 0, 1))


def test_fft_application_matches_direct_sum_n2(rng):
    g = build_grid(2, 1.0, 1.0, 5, 4)
    op = kernel_operator(g, 1.5)
    f = rng.random(g.shape) * g.weights
    fast = op.apply(f)
    # direct convolution over the stored offsets
    slow = np.zeros(g.shape)
    nx = g.nx
    for l in range(g.nt):
        for i in range(nx):
            for j in range(nx):
                blk = op.kernel[l, :, nx - 1 - i:2 * nx - 1 - i, nx - 1 - j:2 * nx - 1 - j]
                slow[l, i, j] = np.sum(blk * f)
    assert np.allclose(fast, slow, rtol=1e-12)


def test_E_lambda_against_direct_quadrature():
    g = build_grid(1, 3.0, 3.0, 96, 96)
    spec = GaussianBump((0.0, 1.0), 0.5)
    lam = 1.0
    e = apply_E(sample(spec, g), lam).values
    for (l, i) in ((10, 48), (40, 30), (70, 60)):
        y = (g.x_nodes[i], g.t_nodes[l])
        fn = lambda t, x: spec(np.array([[x, t]]))[0] * ((x - y[0]) ** 2 + (t - y[1]) ** 2) ** (-lam / 2)  # noqa: E731
        direct = integrate.dblquad(fn, -3, 3, 0, 3, epsabs=1e-10, epsrel=1e-8)[0]
        assert e[l, i] == pytest.approx(direct, rel=5e-3)


def test_discrete_adjoint_identity(baseline, rng):
    g = build_grid(1, 3.0, 3.0, 24, 20)
    f, h = Field(g, rng.random(g.shape)), Field(g, rng.random(g.shape))
    lhs = pairing(h, apply_K(f, baseline))
    rhs = pairing(f, apply_K_adjoint(h, baseline))
    assert lhs == pytest.approx(rhs, rel=1e-13)
    assert functional_bilinear(f, h, baseline) == pytest.approx(lhs, rel=1e-13)


def test_rayleigh_is_homogeneous_and_below_dual_bound(baseline, rng):
    g = build_grid(1, 3.0, 3.0, 24, 20)
    f = Field(g, rng.random(g.shape))
    assert rayleigh(f * 3.7, baseline) == pytest.approx(rayleigh(f, baseline), rel=1e-13)
    with pytest.raises(ValueError):
        rayleigh(f * 0.0, baseline)


def test_duality_gap_zero_and_sign_guard(rng):
    cfg = conformal_config(2, 2, 0.25, 0.25)
    g = build_grid(2, 2.0, 2.0, 8, 8)
    f = Field(g, rng.random(g.shape))
    assert abs(duality_gap(f, cfg)) < 1e-12
    with pytest.raises(ValueError):
        duality_gap(f * -1.0, cfg)


def test_zero_field_gives_zero_functional(baseline):
    g = build_grid(1, 1.0, 1.0, 8, 8)
    z = Field(g, np.zeros(g.shape))
    assert functional_bilinear(z, sample(GaussianBump((0, 0.5)), g), baseline) == 0.0


def test_weighted_norm_and_pairing_guards():
    g = build_grid(1, 1.0, 1.0, 8, 8)
    f = Field(g, np.ones(g.shape))
    assert weighted_norm(f, 0.0, 2.0) == pytest.approx(math.sqrt(2.0))
    with pytest.raises(ValueError):
        weighted_norm(f, 0.0, 0.5)
    with pytest.raises(ValueError):
        pairing(f, Field(build_grid(1, 2.0, 1.0, 8, 8), np.ones((8, 8))))


def test_lambda_range_is_enforced():
    g = build_grid(1, 1.0, 1.0, 8, 8)
    with pytest.raises(ExponentError):
        apply_E(Field(g, np.ones(g.shape)), 2.0)


def test_kernel_cache_reuses_operators():
    clear_cache()
    g = build_grid(1, 1.0, 1.0, 8, 8)
    same = build_grid(1, 1.0, 1.0, 8, 8)
    assert kernel_operator(g, 0.7) is kernel_operator(same, 0.7)
    assert kernel_operator(g, 0.7) is not kernel_operator(g, 0.8)


def test_potential_far_field_and_nodes(baseline):
    g = build_grid(1, 3.0, 3.0, 48, 48)
    f = sample(GaussianBump((0.0, 1.0), 0.4), g)
    mass = float(np.sum(f.values * g.weights))
    far = np.array([[80.0, 60.0]])
    pot = potential_at(f, 1.0, far)[0]
    # centroid of the bump is at (0, 1); first-order multipole
    assert pot == pytest.approx(mass / math.hypot(80.0, 59.0), rel=1e-4)
    nodes = g.points()[[10, 30], [24, 24]]
    grid_vals = apply_E(f, 1.0).values[[10, 30], [24, 24]]
    assert np.allclose(potential_at(f, 1.0, nodes), grid_vals, rtol=1e-2)


def test_tail_estimate_shrinks_with_the_box(baseline):
    spec = GaussianBump((0.0, 1.0), 0.5)
    small = tail_estimate(sample(spec, build_grid(1, 2.0, 2.0, 32, 32)), baseline)
    large = tail_estimate(sample(spec, build_grid(1, 4.0, 4.0, 32, 32)), baseline)
    assert 0 < large < small
