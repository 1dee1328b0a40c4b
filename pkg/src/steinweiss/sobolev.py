"""First-order gradient representation and the weighted Sobolev inequality
obtained from it.

For u smooth with compact support in the closed half space of R^d,

    u(x) = (1/C(d)) int_{y_d > x_d} <grad u(y), x - y> |x - y|^{-d} dy,
    C(d) = pi^{d/2} / Gamma(d/2),

the integral running over the half space above the probe: each ray from x
travels upward and never meets the boundary, where u need not vanish.
Dominating the kernel by |x - y|^{1-d} and applying the weighted HLS bound
with lambda = d - 1 gives

    (int t^{beta1} |u|^{p*})^{p/p*} <= (N / C(d))^p int t^{alpha1} |grad u|^p.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .closed_forms import bounds_report, representation_constant
from .discretization import FuncSpec, HalfSpaceGrid, build_grid
from .exponents import ExponentConfig, ExponentError, solve_r, sobolev_exponent


# -------------------------------------------------------- representation

def _phi(a, b):
    """Antiderivative of a/(a^2+b^2) in both variables: b ln(a^2+b^2)/2 - b + a atan(b/a)."""
    r2 = a * a + b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        log_term = np.where(r2 > 0, 0.5 * b * np.log(np.where(r2 > 0, r2, 1.0)), 0.0)
        at = np.where(a != 0, a * np.arctan(b / np.where(a != 0, a, 1.0)), 0.0)
    return log_term - b + at


def _cell_kernel_2d(a0, a1, b0, b1):
    """Exact integrals of a/r^2 and b/r^2 over [a0,a1] x [b0,b1]."""
    ia = _phi(a1, b1) - _phi(a0, b1) - _phi(a1, b0) + _phi(a0, b0)
    ib = _phi(b1, a1) - _phi(b0, a1) - _phi(b1, a0) + _phi(b0, a0)
    return ia, ib


def representation_value(u_spec: FuncSpec, probe, grid: HalfSpaceGrid, region: str = "above") -> float:
    """(1/C(2)) int <grad u(y), x - y>/|x - y|^2 dy on a planar grid.

    ``region="above"`` integrates over y_2 > x_2 (the identity), ``"half"``
    over the whole half plane, which doubles the value for interior support.
    The kernel is integrated exactly on each cell, with grad u frozen at the
    centre of the (clipped) cell.
    """
    if grid.n != 1:
        raise NotImplementedError("representation check runs on planar grids")
    x = np.asarray(probe, float)
    if x.shape != (2,):
        raise ValueError("probe must be a point (x, t)")
    if abs(x[0]) > grid.x_extent or not 0 <= x[1] <= grid.t_max:
        raise ValueError(f"probe {tuple(x)} lies outside the grid box")
    xe, te = grid.x_edges, grid.t_edges
    X0, T0 = np.meshgrid(xe[:-1], te[:-1], indexing="xy")
    X1, T1 = np.meshgrid(xe[1:], te[1:], indexing="xy")
    if region == "above":
        T0 = np.maximum(T0, x[1])
    elif region != "half":
        raise ValueError("region must be 'above' or 'half'")
    keep = T1 > T0
    X0, X1, T0, T1 = X0[keep], X1[keep], T0[keep], T1[keep]
    centres = np.stack([(X0 + X1) / 2, (T0 + T1) / 2], axis=-1)
    grad = u_spec.grad(centres)
    ia, ib = _cell_kernel_2d(X0 - x[0], X1 - x[0], T0 - x[1], T1 - x[1])
    # <grad u, x - y> / |x - y|^2 = -(a u_x + b u_t)/r^2 with (a, b) = y - x
    total = -np.sum(grad[:, 0] * ia + grad[:, 1] * ib)
    return float(total / representation_constant(2))


def representation_check(u_spec: FuncSpec, probe_points, grid: HalfSpaceGrid | None = None,
                         region: str = "above") -> dict:
    """Pointwise comparison of u with its gradient representation.

    Returns per-probe values plus the largest error relative to max |u| at
    the probes (absolute when u vanishes there).
    """
    if grid is None:
        grid = build_grid(1, 4.0, 4.0, 256, 256, 1.0)
    probes = np.atleast_2d(np.asarray(probe_points, float))
    exact = u_spec(probes)
    rep = np.array([representation_value(u_spec, x, grid, region) for x in probes])
    scale = float(np.max(np.abs(exact)))
    if scale == 0:
        return {"exact": exact.tolist(), "represented": rep.tolist(), "max_error": float(np.max(np.abs(rep)))}
    return {"exact": exact.tolist(), "represented": rep.tolist(),
            "max_error": float(np.max(np.abs(rep - exact)) / scale),
            "pointwise_relative": (np.abs(rep - exact) / np.maximum(np.abs(exact), 1e-300)).tolist()}


# ---------------------------------------------------------- Sobolev ratio

@dataclass
class SobolevReport:
    lhs: float
    rhs: float
    ratio: float
    certified_bound: float
    p_star: float
    hls_config: dict

    @property
    def slack(self) -> float:
        return self.certified_bound / self.ratio if self.ratio > 0 else math.inf

    def to_dict(self) -> dict:
        out = asdict(self)
        out["slack"] = self.slack
        return out


def sobolev_hls_config(n: int, p: float, alpha1: float, beta1: float) -> ExponentConfig:
    """The weighted HLS tuple behind the Sobolev inequality.

    lambda = n (so lambda = d - 1 in R^{n+1}), alpha = alpha1/p, beta = -beta1/p*.
    """
    win = sobolev_exponent(n, p, alpha1, beta1, 1)
    if not win.admissible:
        parts = []
        if not win.window_alpha:
            parts.append(f"alpha1 outside ({win.alpha_range[0]:.6g}, {win.alpha_range[1]:.6g})")
        if not win.window_beta:
            parts.append(f"beta1 outside (-1, {win.beta_range[1]:.6g}]")
        if not win.p_less_than_p_star:
            parts.append("p < p* fails (empty window)")
        raise ExponentError("Sobolev exponent window violated: " + "; ".join(parts))
    lam = float(n)
    alpha, beta = alpha1 / p, -beta1 / win.p_star
    r = solve_r(n, lam, alpha, beta, p)
    cfg = ExponentConfig(n, lam, alpha, beta, p, r)
    if abs(cfg.q - win.p_star) > 1e-9 * win.p_star:
        raise ExponentError("HLS exponent q does not match p*")
    return cfg


def certified_bound(n: int, p: float, alpha1: float, beta1: float) -> float:
    """(N_upper / C(n+1))^p with N_upper the closed-form upper bound."""
    cfg = sobolev_hls_config(n, p, alpha1, beta1)
    return (bounds_report(cfg).upper / representation_constant(n + 1)) ** p


def ws_ratio(u_spec: FuncSpec, p: float, alpha1: float, beta1: float,
             grid: HalfSpaceGrid | None = None, n: int = 1) -> SobolevReport:
    """lhs = (int t^{beta1}|u|^{p*})^{p/p*}, rhs = int t^{alpha1}|grad u|^p, their ratio and the bound."""
    cfg = sobolev_hls_config(n, p, alpha1, beta1)
    bound = certified_bound(n, p, alpha1, beta1)
    ps = cfg.q
    if grid is None:
        grid = build_grid(n, 4.0, 4.0, 256 if n == 1 else 64, 256 if n == 1 else 64, 2.0)
    pts = grid.points()
    t = grid.t_field
    w = grid.weights
    u = u_spec(pts)
    gu = np.sqrt(np.sum(u_spec.grad(pts) ** 2, axis=-1))
    lhs = float(np.sum(t ** beta1 * np.abs(u) ** ps * w) ** (p / ps))
    rhs = float(np.sum(t ** alpha1 * gu ** p * w))
    ratio = 0.0 if rhs == 0 else lhs / rhs
    return SobolevReport(lhs, rhs, ratio, bound, ps, cfg.as_dict())


__all__ = [
    "representation_value", "representation_check", "SobolevReport", "sobolev_hls_config",
    "certified_bound", "ws_ratio",
]
