"""Numerical certificates for the structural statements: symmetry and
monotonicity of extremals, boundary bubble profiles, the Kelvin (ball) and
hyperbolic reformulations, and scaling invariance."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import least_squares, minimize_scalar
from scipy.special import roots_jacobi

from .discretization import Field, FuncSpec, GaussianBump, HalfSpaceGrid, Scaled, build_grid, sample
from .exponents import (ExponentConfig, ExponentError, conformal_exponents, conjugate,
                        is_conformal, require_valid, validate_primal)
from .operators import apply_E, functional_bilinear, pairing, weighted_norm


@dataclass
class DiagnosticRecord:
    """One JSON-serializable check result."""

    name: str
    inputs: dict
    value: float
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=float)


def record(name, inputs, value, tolerance, details=None) -> DiagnosticRecord:
    value = float(value)
    return DiagnosticRecord(name, inputs, value, tolerance, bool(value < tolerance), details or {})


def checksum(f: Field) -> str:
    return hashlib.sha256(np.ascontiguousarray(f.values).tobytes()).hexdigest()


# ------------------------------------------------------------------ symmetry

def _reflection_residual(vals, x, w, axis, c):
    """Weighted L2 misfit between f and its reflection about x = c along ``axis``.

    Only nodes whose mirror image lies inside the node range are compared.
    """
    xr = 2 * c - x
    inside = (xr >= x[0]) & (xr <= x[-1])
    if inside.sum() < 4:
        return np.inf
    spline = CubicSpline(x, vals, axis=axis)
    refl = spline(xr[inside])
    sl = [slice(None)] * vals.ndim
    sl[axis] = inside
    sl = tuple(sl)
    diff = vals[sl] - refl
    ww = w[sl]
    return float(np.sqrt(np.sum(ww * diff * diff) / np.sum(ww * vals[sl] ** 2)))


def symmetry_residual(f: Field, p: float = 2.0) -> tuple[tuple, float]:
    """Centre of symmetry in x and the relative reflection misfit.

    The centre starts at the centroid of |f|^p in each x-direction and is
    refined within two cells by minimizing the reflection misfit.  For n = 2
    every axis is reflected and the largest residual is reported.
    """
    g = f.grid
    vals = f.values
    if np.any(vals < 0) or not np.any(vals > 0):
        raise ValueError("symmetry residual needs a nonnegative nonzero field")
    x = g.x_nodes
    w = g.weights
    mass = np.abs(vals) ** p * w
    centers, residuals = [], []
    for axis in range(1, g.n + 1):
        coord = g.coords()[axis - 1]
        c0 = float(np.sum(mass * coord) / mass.sum())
        obj = lambda c: _reflection_residual(vals, x, w, axis, c)  # noqa: E731
        opt = minimize_scalar(obj, bounds=(c0 - 2 * g.dx, c0 + 2 * g.dx), method="bounded",
                              options={"xatol": 1e-12})
        c, r = (opt.x, opt.fun) if opt.fun <= obj(c0) else (c0, obj(c0))
        centers.append(float(c))
        residuals.append(float(r))
    return tuple(centers), max(residuals)


def monotonicity_violation(f: Field, center=None) -> float:
    """Largest outward increase of f along x-lines, relative to max f."""
    g = f.grid
    if center is None:
        center, _ = symmetry_residual(f)
    center = np.atleast_1d(np.asarray(center, float))
    vals = f.values
    x = g.x_nodes
    worst = 0.0
    for axis in range(1, g.n + 1):
        c = center[axis - 1]
        d = np.diff(vals, axis=axis)
        mid = 0.5 * (x[1:] + x[:-1])
        shape = [1] * vals.ndim
        shape[axis] = mid.size
        outward = np.sign(mid - c).reshape(shape)
        # a step entirely on one side of c must not increase away from it
        lo = x[:-1].reshape(shape) - c
        hi = x[1:].reshape(shape) - c
        one_side = (lo * hi) >= 0
        viol = np.where(one_side, np.maximum(outward * d, 0.0), 0.0)
        worst = max(worst, float(viol.max()))
    return worst / float(np.abs(vals).max())


# ------------------------------------------------------------ boundary traces

def boundary_exponents(cfg: ExponentConfig) -> dict:
    """Bubble exponents for the boundary rows of f, g, u, v at conformal exponents.

    ``stated_*`` are the exponents obtained by assuming u and v continuous up
    to t = 0.  The ``weighted_*`` exponents come from the Kelvin covariance of
    U = t^alpha u and V = z^beta v, which are the traces that stay finite
    when alpha, beta > 0: U, V carry exponent lambda/2, so the rows of
    f = t^{-alpha theta} U^theta and g = z^{-beta kappa} V^kappa are bubbles of
    exponent lambda theta*/2 and lambda kappa*/2 (the t-powers are constant
    along a row).  Both sets agree when alpha = beta = 0.
    """
    cd = conformal_exponents(cfg.n, cfg.lam, cfg.alpha, cfg.beta)
    n2 = 2 * cfg.n + 2
    return {
        "stated_f": (n2 - cfg.lam - 2 * cfg.alpha) / 2,
        "stated_g": (n2 - cfg.lam - 2 * cfg.beta) / 2,
        "stated_u": (cfg.lam + 2 * cfg.alpha) / 2,
        "stated_v": (cfg.lam + 2 * cfg.beta) / 2,
        "weighted_f": cfg.lam * cd.theta_star / 2,
        "weighted_g": cfg.lam * cd.kappa_star / 2,
        "weighted_U": cfg.lam / 2,
        "weighted_V": cfg.lam / 2,
    }


@dataclass
class BubbleFit:
    c: float
    d: float
    center: tuple
    residual: float
    exponent: float
    log_residual: float = math.nan

    def to_dict(self) -> dict:
        out = asdict(self)
        out["center"] = list(self.center)
        return out

    def model(self, y):
        y = np.atleast_2d(np.asarray(y, float).T).T if np.ndim(y) > 1 else np.asarray(y, float)[:, None]
        r2 = np.sum((y - np.asarray(self.center)) ** 2, axis=1)
        return self.c * (r2 + self.d ** 2) ** (-self.exponent)


def _bubble_eval(theta, y, e):
    logc, logd = theta[0], theta[1]
    y0 = theta[2:]
    r2 = np.sum((y - y0) ** 2, axis=1)
    s = r2 + math.exp(2 * logd)
    return logc - e * np.log(s), s, y0


def fit_boundary_bubble(y, values, exponent_e: float, *, polish: bool = True) -> BubbleFit:
    """Fit c (|y - y0|^2 + d^2)^{-e} to positive boundary values.

    Log-space Gauss-Newton (trust-region least squares with analytic
    Jacobian) from the starts d in {0.5, 1, 2}, y0 in {argmax, argmax +- one
    spacing}; the best log fit is then refined on the relative linear misfit,
    which is the reported residual.
    """
    y = np.asarray(y, float)
    if y.ndim == 1:
        y = y[:, None]
    v = np.asarray(values, float).ravel()
    if v.size != y.shape[0]:
        raise ValueError("trace values and coordinates differ in length")
    if not np.any(v > 0) or not exponent_e > 0:
        raise ValueError("trace must be positive somewhere and exponent positive")
    pos = v > 0
    yp, lv = y[pos], np.log(v[pos])
    e = float(exponent_e)

    def res_log(th):
        return _bubble_eval(th, yp, e)[0] - lv

    def jac_log(th):
        _, s, y0 = _bubble_eval(th, yp, e)
        J = np.empty((yp.shape[0], th.size))
        J[:, 0] = 1.0
        J[:, 1] = -e * 2 * math.exp(2 * th[1]) / s
        J[:, 2:] = 2 * e * (yp - y0) / s[:, None]
        return J

    k = int(np.argmax(v))
    spacing = float(np.min(np.abs(np.diff(np.unique(y[:, 0]))))) if np.unique(y[:, 0]).size > 1 else 1.0
    best = None
    for d0 in (0.5, 1.0, 2.0):
        for sh in (-1, 0, 1):
            y0 = y[k].copy()
            y0[0] += sh * spacing
            c0 = v[k] * (d0 * d0) ** e
            th0 = np.concatenate([[math.log(c0), math.log(d0)], y0])
            try:
                sol = least_squares(res_log, th0, jac=jac_log, method="trf", xtol=1e-15,
                                    ftol=1e-15, gtol=1e-15, max_nfev=2000)
            except (ValueError, FloatingPointError):
                continue
            if np.all(np.isfinite(sol.x)) and (best is None or sol.cost < best.cost):
                best = sol
    if best is None:
        return BubbleFit(math.nan, math.nan, tuple([math.nan] * y.shape[1]), math.inf, e)
    th = best.x
    log_res = float(np.sqrt(np.mean(best.fun ** 2)))
    scale = float(np.linalg.norm(v))

    def res_lin(t):
        return (np.exp(_bubble_eval(t, y, e)[0]) - v) / scale

    if polish:
        sol = least_squares(res_lin, th, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            max_nfev=2000)
        if np.all(np.isfinite(sol.x)) and np.linalg.norm(sol.fun) <= np.linalg.norm(res_lin(th)):
            th = sol.x
    rel = float(np.linalg.norm(res_lin(th)))
    if not np.isfinite(rel):
        rel = math.inf
    return BubbleFit(float(math.exp(th[0])), float(math.exp(th[1])), tuple(float(c) for c in th[2:]),
                     rel, e, log_res)


def boundary_trace(f: Field) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates and values of the first graded t-row."""
    g = f.grid
    pts = g.points()[0]
    return pts[..., :-1].reshape(-1, g.n), f.values[0].ravel()


def default_test_pair(n: int = 1) -> tuple[FuncSpec, FuncSpec]:
    """The Gaussian pair used by the command-line checks."""
    z = (0.0,) * (n - 1)
    return GaussianBump(z + (0.0, 1.0), 0.6), GaussianBump(z + (0.3, 0.8), 0.5)


# --------------------------------------------------------- Kelvin transform

X0_SHIFT = -2.0


def kelvin_map(pts: np.ndarray) -> np.ndarray:
    """eta -> 4 (eta - x0)/|eta - x0|^2 + x0 with x0 = (0,...,0,-2); an involution."""
    pts = np.asarray(pts, float)
    x0 = np.zeros(pts.shape[-1])
    x0[-1] = X0_SHIFT
    d = pts - x0
    return 4 * d / np.sum(d * d, axis=-1, keepdims=True) + x0


def ball_transform(spec: FuncSpec, mu: float):
    """F(xi) = (2/|xi - x0|)^mu f(xi*), as a callable on ball points."""
    def F(pts):
        pts = np.asarray(pts, float)
        x0 = np.zeros(pts.shape[-1])
        x0[-1] = X0_SHIFT
        r = np.sqrt(np.sum((pts - x0) ** 2, axis=-1))
        return (2.0 / r) ** mu * spec(kelvin_map(pts))
    return F


def _ball_weight(pts, power):
    """(2/(1 - |xi - x1|^2))^power with x1 = (0,...,0,-1)."""
    x1 = np.zeros(pts.shape[-1])
    x1[-1] = -1.0
    return (2.0 / (1.0 - np.sum((pts - x1) ** 2, axis=-1))) ** power


def _ray_to_circle(p, direction):
    """Distance from p (inside the unit disk about x1) to the circle along ``direction``."""
    x1 = np.array([0.0, -1.0])
    q = p - x1
    b = np.sum(q * direction, axis=-1)
    c = np.sum(q * q, axis=-1) - 1.0
    return -b + np.sqrt(b * b - c)


@dataclass
class KelvinResult:
    functional_half: float
    functional_ball: float
    functional_discrepancy: float
    norm_f_half: float
    norm_f_ball: float
    norm_g_half: float
    norm_g_ball: float
    norm_discrepancy: float

    def to_dict(self):
        return asdict(self)


def ball_functional(F, G, alpha, beta, lam, n_radial=32, n_angle=64,
                    inner_radial=24, inner_angle=48) -> float:
    """int_B int_B w_alpha(xi) w_beta(eta) F(xi) G(eta) |xi - eta|^{-lambda} on the unit disk about x1.

    Outer integral: polar grid about x1 with Gauss-Jacobi nodes carrying
    rho (1 - rho)^{-alpha}; inner potential: polar rays about each outer node
    with Gauss-Jacobi nodes carrying s^{1-lambda} (R - s)^{-beta}.
    Both angular rules are periodic trapezoid rules.
    """
    x1 = np.array([0.0, -1.0])
    # outer nodes
    xr, wr = roots_jacobi(n_radial, -alpha, 1.0)          # weight (1-x)^{-a}(1+x)
    rho = (xr + 1) / 2
    wrho = wr * 2.0 ** (alpha - 2)                         # rho (1-rho)^{-alpha} d rho
    phi = 2 * np.pi * np.arange(n_angle) / n_angle
    R, P = np.meshgrid(rho, phi, indexing="ij")
    xi = np.stack([R * np.cos(P), R * np.sin(P)], axis=-1) + x1
    wout = (wrho[:, None] * np.full(n_angle, 2 * np.pi / n_angle)[None, :])
    # w_alpha without the (1 - rho)^{-alpha} already absorbed: (2/((1-rho)(1+rho)))^alpha
    wa_rest = (2.0 / (1.0 + R)) ** alpha
    Fv = F(xi.reshape(-1, 2)).reshape(R.shape)
    # inner potential at each outer node
    sx, sw = roots_jacobi(inner_radial, -beta, 1.0 - lam)  # (1-x)^{-b}(1+x)^{1-lam}
    psi = 2 * np.pi * (np.arange(inner_angle) + 0.5) / inner_angle
    dirs = np.stack([np.cos(psi), np.sin(psi)], axis=-1)
    pts = xi.reshape(-1, 2)
    pot = np.empty(pts.shape[0])
    for i, p in enumerate(pts):
        Rl = _ray_to_circle(p[None, :], dirs)               # (inner_angle,)
        s = (sx[None, :] + 1) / 2 * Rl[:, None]             # (angle, radial)
        eta = p + s[..., None] * dirs[:, None, :]
        # s^{1-lam} (R-s)^{-beta} ds = (R/2)^{2-lam-beta} (1+x)^{1-lam} (1-x)^{-beta} dx
        jac = (Rl / 2) ** (2 - lam - beta)
        # remaining smooth part of w_beta: (1-|eta-x1|^2)^{-beta} (R-s)^{beta}
        dist2 = np.sum((eta - x1) ** 2, axis=-1)
        smooth = 2.0 ** beta * ((1.0 - dist2) / (Rl[:, None] - s)) ** (-beta)
        Gv = G(eta.reshape(-1, 2)).reshape(s.shape)
        pot[i] = np.sum(jac[:, None] * sw[None, :] * smooth * Gv) * (2 * np.pi / inner_angle)
    return float(np.sum(wout * wa_rest * Fv * pot.reshape(R.shape)))


def ball_norm(F, p, n_radial=32, n_angle=64) -> float:
    x1 = np.array([0.0, -1.0])
    xr, wr = np.polynomial.legendre.leggauss(n_radial)
    rho = (xr + 1) / 2
    phi = 2 * np.pi * np.arange(n_angle) / n_angle
    R, P = np.meshgrid(rho, phi, indexing="ij")
    xi = np.stack([R * np.cos(P), R * np.sin(P)], axis=-1) + x1
    w = (wr / 2 * rho)[:, None] * (2 * np.pi / n_angle)
    vals = np.abs(F(xi.reshape(-1, 2)).reshape(R.shape)) ** p
    return float(np.sum(w * vals) ** (1 / p))


def kelvin_check(f_spec: FuncSpec, g_spec: FuncSpec, cfg: ExponentConfig, grid: HalfSpaceGrid,
                 ball_resolution: int = 32) -> KelvinResult:
    """Compare the half-space functional and norms with their ball images.

    ``ball_resolution`` sets the radial node count of the outer polar grid;
    the angular and inner counts scale with it.
    """
    require_valid(cfg)
    if cfg.n != 1 or grid.n != 1:
        raise NotImplementedError("the ball quadrature is implemented for n = 1")
    if not is_conformal(cfg):
        cd = conformal_exponents(cfg.n, cfg.lam, cfg.alpha, cfg.beta)
        raise ExponentError(f"kelvin check needs p = p_alpha = {cd.p_alpha}, r = r_beta = {cd.r_beta}")
    fh = sample(f_spec, grid)
    gh = sample(g_spec, grid)
    if not np.any(fh.values) or not np.any(gh.values):
        return KelvinResult(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    lhs_half = functional_bilinear(fh, gh, cfg)
    mu1 = 2 * (cfg.n + 1) - cfg.lam - 2 * cfg.alpha
    mu2 = 2 * (cfg.n + 1) - cfg.lam - 2 * cfg.beta
    F = ball_transform(f_spec, mu1)
    G = ball_transform(g_spec, mu2)
    m = ball_resolution
    lhs_ball = ball_functional(F, G, cfg.alpha, cfg.beta, cfg.lam, m, 2 * m, max(8, 3 * m // 4),
                               max(16, 3 * m // 2))
    nf_h, ng_h = weighted_norm(fh, 0.0, cfg.p), weighted_norm(gh, 0.0, cfg.r)
    nf_b, ng_b = ball_norm(F, cfg.p, 2 * m, 4 * m), ball_norm(G, cfg.r, 2 * m, 4 * m)
    disc = abs(lhs_half - lhs_ball) / abs(lhs_half)
    ndisc = max(abs(nf_h - nf_b) / nf_h, abs(ng_h - ng_b) / ng_h)
    return KelvinResult(lhs_half, lhs_ball, disc, nf_h, nf_b, ng_h, ng_b, ndisc)


# ------------------------------------------------------------------ scaling

@dataclass
class ScalingResult:
    norm_discrepancy_f: float
    norm_discrepancy_g: float
    functional_discrepancy: float
    mode: str

    def to_dict(self):
        return asdict(self)

    @property
    def worst(self) -> float:
        return max(self.norm_discrepancy_f, self.norm_discrepancy_g, self.functional_discrepancy)


def _scaling_values(fs, gs, cfg, grid):
    f = sample(fs, grid)
    g = sample(gs, grid)
    e = apply_E(f, cfg.lam)
    ez = e.with_values(e.values * grid.t_field ** (-cfg.beta))
    return weighted_norm(f, cfg.alpha, cfg.p), weighted_norm(g, 0.0, cfg.r), pairing(g, ez)


def scaling_check(f_spec: FuncSpec, g_spec: FuncSpec, tau: float, cfg: ExponentConfig,
                  grid: HalfSpaceGrid, mode: str = "adapted") -> ScalingResult:
    """Invariance of ||t^alpha f||_p, ||g||_r and <g, z^{-beta} E_lambda f> under

    f^tau(X) = tau^{-(n+1+alpha p)/p} f(X/tau),  g^tau(Y) = tau^{-(n+1)/r} g(Y/tau).

    ``mode="adapted"`` evaluates the scaled pair on the tau-scaled grid;
    ``mode="common"`` keeps the original grid, so the discrepancy measures
    quadrature and truncation error.
    """
    require_valid(cfg)
    if not 0.25 <= tau <= 4:
        raise ValueError("tau must lie in [0.25, 4]")
    n1 = cfg.n + 1
    ft = Scaled(f_spec, tau, (n1 + cfg.alpha * cfg.p) / cfg.p)
    gt = Scaled(g_spec, tau, n1 / cfg.r)
    base = _scaling_values(f_spec, g_spec, cfg, grid)
    if mode == "adapted":
        other = _scaling_values(ft, gt, cfg, grid.scaled(tau))
    elif mode == "common":
        other = _scaling_values(ft, gt, cfg, grid)
    else:
        raise ValueError("mode must be 'adapted' or 'common'")
    d = [abs(a - b) / abs(a) if a != 0 else abs(b) for a, b in zip(base, other)]
    return ScalingResult(d[0], d[1], d[2], mode)


# --------------------------------------------------------------- hyperbolic

def forced_hyperbolic_weights(n: int, lam: float, p: float, r: float) -> tuple[float, float]:
    """alpha = (n+1)/p' - lambda/2 and beta = (n+1)/r' - lambda/2."""
    return (n + 1) / conjugate(p) - lam / 2, (n + 1) / conjugate(r) - lam / 2


@dataclass
class HyperbolicResult:
    functional_half: float
    functional_hyperbolic: float
    discrepancy: float
    norm_discrepancy: float

    def to_dict(self):
        return asdict(self)


def hyperbolic_check(f_spec: FuncSpec, g_spec: FuncSpec, cfg: ExponentConfig,
                     grid: HalfSpaceGrid) -> HyperbolicResult:
    """Half-space functional versus its hyperbolic form on the same grid.

    With F = f t^{(n+1)/p}, G = g z^{(n+1)/r}, the hyperbolic distance
    d = |w - w'|/sqrt(t z) and volume t^{-(n+1)} dx dt, the integral of
    F G d^{-lambda} equals the half-space functional pointwise in the integrand
    exactly when the weights take their forced values.
    """
    rep = validate_primal(cfg.n, cfg.lam, cfg.alpha, cfg.beta, cfg.p, cfg.r)
    fa, fb = forced_hyperbolic_weights(cfg.n, cfg.lam, cfg.p, cfg.r)
    if abs(cfg.alpha - fa) > 1e-12 or abs(cfg.beta - fb) > 1e-12:
        raise ExponentError(f"hyperbolic form needs alpha = {fa}, beta = {fb}")
    if not rep.valid:
        raise ExponentError("forced tuple is inadmissible: " + "; ".join(rep.violations))
    n1 = cfg.n + 1
    t = grid.t_field
    f = sample(f_spec, grid)
    g = sample(g_spec, grid)
    half = functional_bilinear(f, g, cfg)
    F = f.values * t ** (n1 / cfg.p)
    G = g.values * t ** (n1 / cfg.r)
    # hyperbolic integrand F(w) G(w') (t z)^{lambda/2} |w - w'|^{-lambda} t^{-(n+1)} z^{-(n+1)}
    src = f.with_values(F * t ** (cfg.lam / 2 - n1))
    pot = apply_E(src, cfg.lam)
    hyp = pairing(g.with_values(G * t ** (cfg.lam / 2 - n1)), pot)
    nF = float(np.sum(np.abs(F) ** cfg.p * t ** (-n1) * grid.weights) ** (1 / cfg.p))
    nG = float(np.sum(np.abs(G) ** cfg.r * t ** (-n1) * grid.weights) ** (1 / cfg.r))
    nd = max(abs(nF - weighted_norm(f, 0, cfg.p)) / nF, abs(nG - weighted_norm(g, 0, cfg.r)) / nG)
    return HyperbolicResult(half, hyp, abs(half - hyp) / abs(half), nd)


__all__ = [
    "DiagnosticRecord", "record", "default_test_pair", "checksum", "symmetry_residual", "monotonicity_violation",
    "boundary_exponents", "BubbleFit", "fit_boundary_bubble", "boundary_trace", "kelvin_map",
    "ball_transform", "ball_functional", "ball_norm", "KelvinResult", "kelvin_check",
    "ScalingResult", "scaling_check", "forced_hyperbolic_weights", "HyperbolicResult",
    "hyperbolic_check",
]
