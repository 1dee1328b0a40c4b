"""Nonlinear power iteration for the discrete sharp constant and the
Euler-Lagrange system.

The map

    T(f) = normalize( K_{beta,alpha}( (K_{alpha,beta} f)^{q-1} )^{1/(p-1)} )

has the Euler-Lagrange solutions as fixed points.  It is run in two phases.

1. Picard steps until the constant estimate N_k = ||K f_k||_q settles to
   ``tol``.  Between steps the iterate may be moved by whole x-cells when
   that raises N; the continuum problem is translation invariant, and these
   moves remove the slow drift of an off-centre start.
2. Anderson-accelerated polishing of the fixed-point defect.  A candidate is
   only accepted if it does not lower N, otherwise the plain step is taken
   and the history is dropped.

The truncation box breaks translation invariance only weakly, so an iterate
whose centre sits a fraction of a cell away from the box centre drifts back
extremely slowly and looks converged.  With ``recenter`` the phase-1 result
is also shifted (cubic interpolation) so that the x-centroid of f^p sits at
the box centre, polished separately, and the larger N wins.

Fields are in the form used by K: ``f_star`` has ||f_star||_p = 1, which is
the same as ||t^alpha F||_p = 1 for F = t^{-alpha} f_star, the variable of
the supremum over E_lambda.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import shift as nd_shift

from .discretization import Field, FuncSpec, HalfSpaceGrid, sample
from .exponents import BALANCE_TOL, ExponentConfig, ExponentError, el_exponents, require_valid
from .operators import _apply_weighted, apply_K, apply_K_adjoint, weighted_norm

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 500


@dataclass
class ExtremalResult:
    f_star: Field
    g_star: Field
    n_est: float
    converged: bool
    iterations: int
    polish_iterations: int
    fixed_point_defect: float
    trace: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "n_est": self.n_est, "converged": self.converged, "iterations": self.iterations,
            "polish_iterations": self.polish_iterations,
            "fixed_point_defect": self.fixed_point_defect, "warnings": list(self.warnings),
            "grid": self.f_star.grid.describe(),
        }

    def write_trace(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "n_estimate", "relative_change", "centroid_t", "mass_fraction"])
            for row in self.trace:
                w.writerow([row[0]] + [f"{v:.17g}" for v in row[1:]])


def dual_field(f: Field, cfg: ExponentConfig) -> Field:
    """t^{-alpha} f: the maximizer written for the constraint ||t^alpha F||_p = 1."""
    return f.with_values(f.values * f.grid.t_field ** (-cfg.alpha))


class _Problem:
    def __init__(self, cfg: ExponentConfig, grid: HalfSpaceGrid):
        self.cfg = cfg
        self.grid = grid
        self.w = grid.weights
        self.t = grid.t_field

    def norm(self, v, s):
        return float(np.sum(self.w * np.abs(v) ** s) ** (1.0 / s))

    def K(self, f):
        c = self.cfg
        return _apply_weighted(Field(self.grid, f), c.lam, c.alpha, c.beta).values

    def Kt(self, g):
        c = self.cfg
        return _apply_weighted(Field(self.grid, g), c.lam, c.beta, c.alpha).values

    def N(self, f):
        return self.norm(self.K(f), self.cfg.q)

    def step(self, f):
        """One application of T; returns (T f, N(f))."""
        kf = self.K(f)
        n_val = self.norm(kf, self.cfg.q)
        h = np.maximum(self.Kt(kf ** (self.cfg.q - 1)), 0.0) ** (1.0 / (self.cfg.p - 1))
        s = self.norm(h, self.cfg.p)
        if not np.isfinite(s) or s == 0:
            raise ValueError("iterate collapsed to zero: mass escaped the truncation box")
        return h / s, n_val

    def normalize(self, f):
        return f / self.norm(f, self.cfg.p)

    def telemetry(self, f):
        fp = np.abs(f) ** self.cfg.p * self.w
        tot = fp.sum()
        centroid_t = float(np.sum(fp * self.t) / tot)
        g = self.grid
        inner = np.ones(g.shape, bool)
        for c in g.coords()[:-1]:
            inner &= np.abs(c) <= 0.5 * g.x_extent
        inner &= (self.t <= 0.5 * g.t_max) & (self.t >= g.t_edges[1])
        return centroid_t, float(fp[inner].sum() / tot)


def _shift(f, axis, s):
    out = np.zeros_like(f)
    src = [slice(None)] * f.ndim
    dst = [slice(None)] * f.ndim
    if s > 0:
        src[axis], dst[axis] = slice(None, -s), slice(s, None)
    else:
        src[axis], dst[axis] = slice(-s, None), slice(None, s)
    out[tuple(dst)] = f[tuple(src)]
    return out


def _translate_up(prob: _Problem, f, base):
    """Whole-cell x-moves while they increase N."""
    for axis in range(1, f.ndim):
        for s in (-1, 1):
            while True:
                cand = prob.normalize(_shift(f, axis, s))
                n_c = prob.N(cand)
                if n_c > base * (1 + 1e-15):
                    f, base = cand, n_c
                else:
                    break
    return f, base


def _recentered(prob: _Problem, f):
    """f moved so that the x-centroid of f^p lies at the box centre."""
    mass = np.abs(f) ** prob.cfg.p * prob.w
    offsets = [0.0]
    for c in prob.grid.coords()[:-1]:
        offsets.append(-float(np.sum(mass * c) / mass.sum()) / prob.grid.dx)
    moved = np.maximum(nd_shift(f, offsets, order=3, mode="nearest"), 0.0)
    return prob.normalize(moved)


def _anderson(prob: _Problem, f, n_val, depth, max_iter, defect_tol):
    """Safeguarded Anderson acceleration on f -> T f."""
    xs, gs = [], []
    it = 0
    defect = np.inf
    for it in range(1, max_iter + 1):
        tf, n_val = prob.step(f)
        gk = (tf - f).ravel()
        defect = float(np.abs(gk).max() / f.max())
        if defect < defect_tol:
            return f, n_val, it, defect
        xs.append(f.ravel().copy())
        gs.append(gk.copy())
        del xs[:-(depth + 1)], gs[:-(depth + 1)]
        nxt = tf
        if len(gs) > 1:
            dG = np.diff(np.array(gs), axis=0).T
            dX = np.diff(np.array(xs), axis=0).T
            gamma = np.linalg.lstsq(dG, gk, rcond=None)[0]
            cand = (f.ravel() + gk - (dX + dG) @ gamma).reshape(f.shape)
            cand = np.maximum(cand, 0.0)
            if cand.max() > 0:
                cand = prob.normalize(cand)
                if prob.N(cand) >= n_val * (1 - 1e-13):
                    nxt = cand
                else:
                    xs, gs = [], []
            else:
                xs, gs = [], []
        f = nxt
    return f, prob.N(f), it, defect


def power_iterate(cfg: ExponentConfig, grid: HalfSpaceGrid, init: FuncSpec | Field,
                  max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL, *,
                  translate: bool = True, polish: bool = True, recenter: bool = True,
                  polish_iter: int = 3000,
                  defect_tol: float = 1e-11, anderson_depth: int = 6) -> ExtremalResult:
    """Estimate N on ``grid`` by the generalized power method.

    Returns the normalized maximizer, the paired g* = (K f*)^{q-1} (unit
    L^r norm), the constant estimate and the iteration trace.
    """
    require_valid(cfg)
    warnings = []
    if abs(cfg.p - cfg.q) < BALANCE_TOL:
        warnings.append("p = q: extremal functions cannot be expected to be attained")
    if abs(cfg.alpha) < BALANCE_TOL and abs(cfg.beta) < BALANCE_TOL:
        warnings.append("alpha = beta = 0: extremals are not attained; watch centroid_t and mass_fraction")
    prob = _Problem(cfg, grid)
    f0 = init.values if isinstance(init, Field) else sample(init, grid).values
    if np.any(f0 < 0) or not np.any(f0 > 0):
        raise ValueError("initial function must be nonnegative and nonzero")
    f = prob.normalize(np.array(f0, dtype=float))
    trace = []
    n_old = prob.N(f)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if translate:
            f, n_old = _translate_up(prob, f, n_old)
        f, _ = prob.step(f)
        n_new = prob.N(f)
        rel = abs(n_new - n_old) / n_new
        trace.append((it, n_new, rel) + prob.telemetry(f))
        n_old = n_new
        if rel < tol:
            converged = True
            break
    polish_its = 0
    defect = float(np.abs(prob.step(f)[0] - f).max() / f.max())
    if polish and converged:
        f1 = f
        f, n_pol, polish_its, defect = _anderson(prob, f1, n_old, anderson_depth, polish_iter, defect_tol)
        if recenter:
            fr = _recentered(prob, f1)
            fr, n_r, its_r, defect_r = _anderson(prob, fr, prob.N(fr), anderson_depth, polish_iter,
                                                 defect_tol)
            polish_its += its_r
            if n_r > n_pol:
                f, n_pol, defect = fr, n_r, defect_r
        n_old = prob.N(f)
        trace.append((it + polish_its, n_old, abs(n_old - trace[-1][1]) / n_old) + prob.telemetry(f))
    if not converged:
        warnings.append(f"no convergence within {max_iter} iterations")
    ct, mf = prob.telemetry(f)
    if mf < 0.5:
        warnings.append(f"only {mf:.3f} of the p-mass lies in the inner box: concentration or escape")
    kf = prob.K(f)
    g = kf ** (cfg.q - 1)
    g = g / prob.norm(g, cfg.r)
    log.info("power_iterate: N=%.12g after %d+%d iterations", n_old, it, polish_its)
    return ExtremalResult(Field(grid, f), Field(grid, g), n_old, converged, it, polish_its,
                          defect, trace, warnings)


# --------------------------------------------------------- Euler-Lagrange pair

def el_residual(u: Field, v: Field, cfg: ExponentConfig) -> tuple[float, float]:
    """Relative sup-norm defects of u = K_{beta,alpha}(v^kappa), v = K_{alpha,beta}(u^theta)."""
    ex = el_exponents(cfg)
    ru = apply_K_adjoint(v.with_values(np.abs(v.values) ** ex.kappa), cfg).values
    rv = apply_K(u.with_values(np.abs(u.values) ** ex.theta), cfg).values
    du = float(np.abs(u.values - ru).max() / max(np.abs(u.values).max(), 1e-300))
    dv = float(np.abs(v.values - rv).max() / max(np.abs(v.values).max(), 1e-300))
    return du, dv


def el_pair_from_extremal(f: Field, cfg: ExponentConfig) -> tuple[Field, Field]:
    """Map a normalized maximizer to an exact solution pair (u, v).

    With mu = ||K f||_q^q the normalized fixed point satisfies
    K_{beta,alpha}((K f)^kappa) = mu f^{p-1}; the multiplier is absorbed by
    u = c f^{p-1}, v = c^theta K f with c = mu^{-1/(theta kappa - 1)}.
    """
    ex = el_exponents(cfg)
    if abs(ex.kappa * ex.theta - 1) < 1e-12:
        raise ExponentError("kappa*theta = 1: the multiplier cannot be absorbed by amplitude")
    f = f.with_values(f.values / weighted_norm(f, 0.0, cfg.p))
    kf = apply_K(f, cfg)
    mu = weighted_norm(kf, 0.0, cfg.q) ** cfg.q
    c = mu ** (-1.0 / (ex.theta * ex.kappa - 1))
    return f.with_values(c * f.values ** (cfg.p - 1)), kf.with_values(c ** ex.theta * kf.values)


@dataclass
class ELPairResult:
    u: Field
    v: Field
    residuals: tuple
    sweeps: int
    converged: bool
    diverged: bool = False
    trace: list = field(default_factory=list)


def solve_el_pair(cfg: ExponentConfig, grid: HalfSpaceGrid, init_u: FuncSpec | Field | None,
                  init_v: FuncSpec | Field | None = None, max_iter: int = 3000,
                  tol: float = 1e-10, anderson_depth: int = 6) -> ELPairResult:
    """Solve the Euler-Lagrange system by alternating sweeps.

    Each sweep is v <- K_{alpha,beta}(u^theta), u <- K_{beta,alpha}(v^kappa),
    followed by the joint renormalization ||u||_{theta+1} = 1.  The sweep is
    accelerated as in :func:`power_iterate` (without translation moves, so
    the solution stays where the data put it).  The multiplier left by the
    normalization is removed at the end by amplitude rescaling.
    """
    ex = el_exponents(cfg)
    prob = _Problem(cfg, grid)

    def as_values(x):
        if x is None:
            return None
        return x.values if isinstance(x, Field) else sample(x, grid).values

    u0, v0 = as_values(init_u), as_values(init_v)
    if u0 is None or not np.any(u0 > 0):
        if v0 is None or not np.any(v0 > 0):
            raise ValueError("need a nonzero nonnegative initial u or v")
        u0 = prob.Kt(np.abs(v0) ** ex.kappa)
    if np.any(u0 < 0):
        raise ValueError("initial u must be nonnegative")
    # work with f = u^theta so that the sweep is the map T
    f = prob.normalize(np.abs(u0) ** ex.theta)
    trace = []
    n_old = prob.N(f)
    diverged = False
    sweeps = 0
    for sweeps in range(1, max_iter + 1):
        f, _ = prob.step(f)
        if not np.all(np.isfinite(f)) or f.max() > 1e12:
            diverged = True
            break
        n_new = prob.N(f)
        rel = abs(n_new - n_old) / n_new
        trace.append((sweeps, n_new, rel))
        n_old = n_new
        if rel < DEFAULT_TOL:
            break
    if diverged:
        nanfield = Field(grid, np.zeros(grid.shape))
        return ELPairResult(nanfield, nanfield, (np.inf, np.inf), sweeps, False, True, trace)
    f, _, extra, defect = _anderson(prob, f, n_old, anderson_depth, max_iter, tol)
    u, v = el_pair_from_extremal(Field(grid, f), cfg)
    res = el_residual(u, v, cfg)
    return ELPairResult(u, v, res, sweeps + extra, max(res) < max(tol * 100, 1e-8), False, trace)


def dilate_pair(u: Field, v: Field, cfg: ExponentConfig, tau: float) -> tuple[Field, Field]:
    """The solution pair dilated by tau, placed on the tau-scaled grid.

    u_tau(X) = tau^a u(X/tau), v_tau(X) = tau^b v(X/tau) with
    s = n+1-alpha-beta-lambda, a = -s(kappa+1)/(kappa theta - 1), b = a theta + s.
    """
    ex = el_exponents(cfg)
    s = cfg.n + 1 - cfg.alpha - cfg.beta - cfg.lam
    a = -s * (ex.kappa + 1) / (ex.kappa * ex.theta - 1)
    b = a * ex.theta + s
    grid = u.grid.scaled(tau)
    return Field(grid, tau ** a * u.values), Field(grid, tau ** b * v.values)


__all__ = [
    "ExtremalResult", "power_iterate", "dual_field", "el_residual", "el_pair_from_extremal",
    "ELPairResult", "solve_el_pair", "dilate_pair", "DEFAULT_TOL", "DEFAULT_MAX_ITER",
]
