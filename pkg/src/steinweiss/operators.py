"""Discrete E_lambda, K_{alpha,beta}, weighted norms and the bilinear
functional on a :class:`HalfSpaceGrid`.

Kernel discretization
---------------------
For a target node Y and a source cell Q the entry is the cell average of
|X - Y|^{-lambda} over Q.  Cells close to Y (including the one containing
Y) are integrated exactly: in the plane by the rectangle antiderivative
written with a Gauss hypergeometric function, in three dimensions by
splitting each corner box into three pyramids with apex at Y.  Remote cells
use a tensor Gauss rule.  The resulting node-to-node kernel is symmetrized,
which makes the discrete adjoint identity exact up to rounding.

Since the kernel only depends on x-differences, it is stored as a
block-Toeplitz array and applied by FFT circulant embedding.
"""
from __future__ import annotations

import threading

import numpy as np
from scipy.special import hyp2f1, zeta

from .closed_forms import hardy_constants
from .discretization import Field, HalfSpaceGrid
from .exponents import ExponentConfig, ExponentError, require_valid

NEAR_FACTOR = 3.0
_GAUSS_ORDER = 4
MAX_KERNEL_ENTRIES = 10 ** 9


# ------------------------------------------------------------- exact cell sums

_QUARTER = np.pi / 4
_NSER = 18
_KS = np.arange(1, _NSER + 1)
# log(sin x / x) = -sum_k zeta(2k) x^{2k} / (k pi^{2k})
_LOG_SINC = -zeta(2.0 * _KS) / (_KS * np.pi ** (2 * _KS))


def _sinc_power_coeffs(e):
    """Coefficients of (sin x / x)^e in powers of x^2 (series exponentiation)."""
    g = e * _LOG_SINC
    f = np.zeros(_NSER + 1)
    f[0] = 1.0
    for k in range(1, _NSER + 1):
        j = np.arange(1, k + 1)
        f[k] = np.sum(j * g[j - 1] * f[k - j]) / k
    return f


def _line_integral(a, c, lam):
    """int_0^c (a^2 + z^2)^{-lam/2} dz for a > 0, c >= 0 (arrays).

    For c <= a the hypergeometric form is used directly. Beyond that scipy's
    hyp2f1 loses digits near lam = 1, so the stretch past z = a is written
    with z = a cot(psi) as a^{1-lam} int_eps^{pi/4} sin^{lam-2}(psi), and
    (sin psi/psi)^{lam-2} is expanded in a series that converges like 16^{-k}
    on [0, pi/4]. Each monomial integrates exactly; exponents near zero go
    through expm1 so lam = 1 needs no special case.
    """
    a, c = np.broadcast_arrays(np.asarray(a, float), np.asarray(c, float))
    out = np.empty(a.shape)
    near = c <= a
    s = c[near] / a[near]
    out[near] = a[near] ** (1.0 - lam) * s * hyp2f1(0.5, lam / 2.0, 1.5, -s * s)
    far = ~near
    if not far.any():
        return out
    af = a[far]
    log_scale = (1.0 - lam) * np.log(af)
    log_ratio = np.log(np.arctan2(af, c[far])) - np.log(_QUARTER)
    total = np.exp(log_scale) * hyp2f1(0.5, lam / 2.0, 1.5, -1.0)
    for k, ck in enumerate(_sinc_power_coeffs(lam - 2.0)):
        m = lam - 1.0 + 2 * k
        base = log_scale + m * np.log(_QUARTER)
        if m == 0:
            total += ck * -log_ratio * np.exp(base)
            continue
        mL = m * log_ratio
        with np.errstate(over="ignore"):
            term = np.where(mL < 50.0, -np.exp(base) * np.expm1(mL) / m,
                            -(np.exp(base + mL) - np.exp(base)) / m)
        total += ck * term
    out[far] = total
    return out


def _corner2(a, b, lam):
    """Integral of r^{-lam} over [0,a] x [0,b] for a, b >= 0."""
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    out = np.zeros(a.shape)
    m = (a > 0) & (b > 0)
    am, bm = a[m], b[m]
    out[m] = (am * _line_integral(am, bm, lam) + bm * _line_integral(bm, am, lam)) / (2.0 - lam)
    return out


def rect_integral(dx0, dx1, dt0, dt1, lam):
    """Integral of r^{-lam} over [dx0,dx1] x [dt0,dt1] (origin anywhere)."""
    def F(a, b):
        return np.sign(a) * np.sign(b) * _corner2(np.abs(a), np.abs(b), lam)
    return F(dx1, dt1) - F(dx0, dt1) - F(dx1, dt0) + F(dx0, dt0)


_GL8 = np.polynomial.legendre.leggauss(8)


def _face_integral(a, b, c, lam):
    """int_0^b int_0^c (a^2+y^2+z^2)^{-lam/2} dz dy, a > 0, via geometric panels in y."""
    out = np.zeros(a.shape)
    xg, wg = _GL8
    npan = np.clip(np.ceil(np.log2(np.maximum(b / a, 1.0))).astype(int) + 1, 1, 60)
    for P in np.unique(npan):
        sel = npan == P
        aa, bb, cc = a[sel], b[sel], c[sel]
        # panel edges 0, b 2^{-(P-1)}, ..., b/2, b
        edges = np.concatenate([np.zeros((aa.size, 1)),
                                bb[:, None] * 2.0 ** (-np.arange(P - 1, -1, -1))[None, :]], axis=1)
        lo, hi = edges[:, :-1], edges[:, 1:]
        y = 0.5 * (hi - lo)[..., None] * (xg + 1) + lo[..., None]
        A = np.sqrt(aa[:, None, None] ** 2 + y * y)
        vals = _line_integral(A, np.broadcast_to(cc[:, None, None], A.shape), lam)
        out[sel] = np.sum(0.5 * (hi - lo)[..., None] * wg * vals, axis=(1, 2))
    return out


def _corner3(a, b, c, lam):
    """Integral of r^{-lam} over [0,a]x[0,b]x[0,c]: three pyramids with apex at 0."""
    a, b, c = np.broadcast_arrays(*(np.asarray(v, float) for v in (a, b, c)))
    out = np.zeros(a.shape)
    m = (a > 0) & (b > 0) & (c > 0)
    am, bm, cm = a[m], b[m], c[m]
    acc = am * _face_integral(am, bm, cm, lam)
    acc += bm * _face_integral(bm, am, cm, lam)
    acc += cm * _face_integral(cm, am, bm, lam)
    out[m] = acc / (3.0 - lam)
    return out


def box_integral(lo, hi, lam):
    """Integral of r^{-lam} over the box prod [lo_i, hi_i] in R^2 or R^3.

    ``lo`` and ``hi`` are arrays of shape (..., d) of offsets from the probe.
    """
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    d = lo.shape[-1]
    if d == 2:
        return rect_integral(lo[..., 0], hi[..., 0], lo[..., 1], hi[..., 1], lam)
    if d != 3:
        raise ValueError("boxes of dimension 2 or 3 only")
    total = np.zeros(lo.shape[:-1])
    for corner in range(8):
        pick = [(corner >> i) & 1 for i in range(3)]
        pts = [hi[..., i] if pick[i] else lo[..., i] for i in range(3)]
        sign = (-1) ** (3 - sum(pick))
        sgn = np.sign(pts[0]) * np.sign(pts[1]) * np.sign(pts[2])
        total += sign * sgn * _corner3(np.abs(pts[0]), np.abs(pts[1]), np.abs(pts[2]), lam)
    return total


# ------------------------------------------------------------ kernel assembly

def _box_distance(lo, hi):
    """Euclidean distance from the origin to boxes [lo, hi] (last axis = dims)."""
    gap = np.maximum(np.maximum(lo, -hi), 0.0)
    return np.sqrt(np.sum(gap * gap, axis=-1))


def _cell_average(lo, hi, lam):
    """Average of r^{-lam} over boxes; exact near the origin, Gauss otherwise."""
    d = lo.shape[-1]
    size = hi - lo
    vol = np.prod(size, axis=-1)
    diam = np.sqrt(np.sum(size * size, axis=-1))
    near = _box_distance(lo, hi) < NEAR_FACTOR * diam
    out = np.empty(vol.shape)
    xg, wg = np.polynomial.legendre.leggauss(_GAUSS_ORDER)
    far = ~near
    if np.any(far):
        flo, fsz = lo[far], size[far]
        acc = np.zeros(flo.shape[0])
        for idx in np.ndindex(*(_GAUSS_ORDER,) * d):
            w = np.prod([wg[i] for i in idx]) / 2 ** d
            pt = flo + fsz * (np.array([xg[i] for i in idx]) + 1) / 2
            acc += w * np.sum(pt * pt, axis=-1) ** (-lam / 2)
        out[far] = acc
    if np.any(near):
        out[near] = box_integral(lo[near], hi[near], lam) / vol[near]
    return out


class KernelOperator:
    """Discretized E_lambda on one grid.

    ``kernel`` has shape (nt, nt, 2nx-1) for n = 1 and (nt, nt, 2nx-1, 2nx-1)
    for n = 2; entry [l, k, o] is the symmetrized cell-average kernel between
    t-row l and t-row k at x-offset o.  Apply with :meth:`apply`, which
    takes values already multiplied by quadrature weights.
    """

    def __init__(self, grid: HalfSpaceGrid, lam: float):
        if not 0 < lam < grid.n + 1:
            raise ExponentError(f"lambda must lie in (0, {grid.n + 1}), got {lam}")
        entries = grid.nt ** 2 * (2 * grid.nx - 1) ** grid.n
        if entries > MAX_KERNEL_ENTRIES:
            raise ValueError(f"kernel with {entries} entries exceeds the memory guard")
        self.grid = grid
        self.lam = float(lam)
        self.kernel = self._assemble()
        self._fft = self._embed()

    def _assemble(self) -> np.ndarray:
        g = self.grid
        n, nx, nt, dx = g.n, g.nx, g.nt, g.dx
        offs = np.arange(-(nx - 1), nx) * dx
        tc, te = g.t_nodes, g.t_edges
        shape = (nt, nt) + (offs.size,) * n
        lo = np.empty(shape + (n + 1,))
        hi = np.empty(shape + (n + 1,))
        for axis in range(n):
            bshape = [1] * (2 + n)
            bshape[2 + axis] = offs.size
            o = offs.reshape(bshape)
            lo[..., axis] = o - dx / 2
            hi[..., axis] = o + dx / 2
        rows = (nt, 1) + (1,) * n
        cols = (1, nt) + (1,) * n
        lo[..., n] = te[:-1].reshape(cols) - tc.reshape(rows)
        hi[..., n] = te[1:].reshape(cols) - tc.reshape(rows)
        k = _cell_average(lo.reshape(-1, n + 1), hi.reshape(-1, n + 1), self.lam).reshape(shape)
        return 0.5 * (k + np.swapaxes(k, 0, 1))

    def _embed(self):
        g = self.grid
        M = 2 * g.nx
        offs = np.arange(-(g.nx - 1), g.nx) % M
        circ = np.zeros((g.nt, g.nt) + (M,) * g.n)
        if g.n == 1:
            circ[:, :, offs] = self.kernel
        else:
            circ[:, :, offs[:, None], offs[None, :]] = self.kernel
        axes = tuple(range(2, 2 + g.n))
        return np.fft.rfftn(circ, axes=axes)

    def apply(self, weighted: np.ndarray) -> np.ndarray:
        """sum over source nodes of kernel * weighted (weights already folded in)."""
        g = self.grid
        M = 2 * g.nx
        axes = tuple(range(1, 1 + g.n))
        fh = np.fft.rfftn(weighted, s=(M,) * g.n, axes=axes)
        if g.n == 1:
            out = np.einsum("lkw,kw->lw", self._fft, fh)
        else:
            out = np.einsum("lkuw,kuw->luw", self._fft, fh)
        full = np.fft.irfftn(out, s=(M,) * g.n, axes=axes)
        return full[(slice(None),) + (slice(0, g.nx),) * g.n]

    def dense(self) -> np.ndarray:
        """Dense matrix M[target, source] including source weights (small grids only)."""
        g = self.grid
        if g.size > 6000:
            raise ValueError("dense() is meant for small test grids")
        w = g.weights.ravel()
        cols = []
        for j in range(g.size):
            e = np.zeros(g.size)
            e[j] = w[j]
            cols.append(self.apply(e.reshape(g.shape)).ravel())
        return np.array(cols).T


_cache: dict = {}
_cache_lock = threading.Lock()


def kernel_operator(grid: HalfSpaceGrid, lam: float) -> KernelOperator:
    """Cached :class:`KernelOperator` for (grid, lambda)."""
    key = (grid.key(), float(lam))
    with _cache_lock:
        op = _cache.get(key)
    if op is None:
        op = KernelOperator(grid, lam)
        with _cache_lock:
            if len(_cache) > 8:
                _cache.pop(next(iter(_cache)))
            _cache[key] = op
    return op


def clear_cache() -> None:
    with _cache_lock:
        _cache.clear()


# ----------------------------------------------------------------- operators

def _check_lam(lam, n):
    if not 0 < lam < n + 1:
        raise ExponentError(f"lambda must lie in (0, {n + 1}), got {lam}")


def apply_E(f: Field, lam: float) -> Field:
    """E_lambda f(Y) = int f(X) |X - Y|^{-lambda} dX over the grid box."""
    _check_lam(lam, f.grid.n)
    op = kernel_operator(f.grid, lam)
    return f.with_values(op.apply(f.values * f.grid.weights))


def apply_K(f: Field, cfg: ExponentConfig) -> Field:
    """K_{alpha,beta} f = z^{-beta} E_lambda(t^{-alpha} f)."""
    require_valid(cfg)
    return _apply_weighted(f, cfg.lam, cfg.alpha, cfg.beta)


def _apply_weighted(f: Field, lam: float, a: float, b: float) -> Field:
    t = f.grid.t_field
    e = apply_E(f.with_values(f.values * t ** (-a)), lam)
    return e.with_values(e.values * t ** (-b))


def apply_K_adjoint(g: Field, cfg: ExponentConfig) -> Field:
    """K_{beta,alpha} g, the adjoint of K_{alpha,beta} for the plain pairing."""
    require_valid(cfg)
    return _apply_weighted(g, cfg.lam, cfg.beta, cfg.alpha)


def weighted_norm(f: Field, weight_exp: float, p: float) -> float:
    """||t^weight_exp f||_p on the grid."""
    if p < 1:
        raise ValueError("p >= 1 required")
    g = f.grid
    integrand = g.t_field ** (weight_exp * p) * np.abs(f.values) ** p
    return float(np.sum(integrand * g.weights) ** (1.0 / p))


def pairing(f: Field, g: Field) -> float:
    """Plain discrete pairing sum f g w."""
    if f.grid is not g.grid and f.grid.key() != g.grid.key():
        raise ValueError("fields live on different grids")
    return float(np.sum(f.values * g.values * f.grid.weights))


def functional_bilinear(f: Field, g: Field, cfg: ExponentConfig) -> float:
    """int int f(X) g(Y) t^{-alpha} |X-Y|^{-lambda} z^{-beta} dX dY.

    Evaluated as <f, K_{beta,alpha} g>; the primal route <g, K_{alpha,beta} f>
    agrees by the discrete adjoint identity.
    """
    if not np.any(f.values) or not np.any(g.values):
        return 0.0
    return pairing(f, apply_K_adjoint(g, cfg))


def rayleigh(f: Field, cfg: ExponentConfig) -> float:
    """||K_{alpha,beta} f||_q / ||f||_p."""
    den = weighted_norm(f, 0.0, cfg.p)
    if den == 0:
        raise ValueError("rayleigh quotient of the zero field")
    return weighted_norm(apply_K(f, cfg), 0.0, cfg.q) / den


def dual_maximizer(f: Field, cfg: ExponentConfig) -> Field:
    """g* = (K f)^{q-1}, normalized in L^r."""
    kf = apply_K(f, cfg).values
    g = f.with_values(np.abs(kf) ** (cfg.q - 1))
    return g.with_values(g.values / weighted_norm(g, 0.0, cfg.r))


def duality_gap(f: Field, cfg: ExponentConfig) -> float:
    """1 - F(f, g*) / (||g*||_r ||K f||_q) for the Hoelder maximizer g*.

    F is evaluated through K_{beta,alpha}, the norm through K_{alpha,beta},
    so a zero gap certifies the primal/dual equivalence on the grid.
    """
    if np.any(f.values < 0):
        raise ValueError("duality gap needs a nonnegative field")
    g = dual_maximizer(f, cfg)
    num = functional_bilinear(f, g, cfg)
    den = weighted_norm(g, 0.0, cfg.r) * weighted_norm(apply_K(f, cfg), 0.0, cfg.q)
    return 1.0 - num / den


def tail_estimate(f: Field, cfg: ExponentConfig) -> float:
    """Estimate of ||K f||_q outside the grid box.

    Far away K f(Y) ~ m z^{-beta} |Y|^{-lambda} with m = int t^{-alpha} f; the
    L^q norm of that profile outside the half ball of radius R inscribed in
    the box is m (C1 R^{e1})^{1/q}.
    """
    g = f.grid
    mass = float(np.sum(np.abs(f.values) * g.t_field ** (-cfg.alpha) * g.weights))
    R = min(g.x_extent, g.t_max)
    h = hardy_constants(cfg)
    return mass * h.value(1, R) ** (1.0 / cfg.q)


# --------------------------------------------------------- off-grid potentials

def potential_at(f: Field, lam: float, points: np.ndarray, src_weight_exp: float = 0.0) -> np.ndarray:
    """E_lambda(t^{-src_weight_exp} f) at arbitrary points in the closed half space.

    Cells near a point are integrated exactly (piecewise-constant f), the
    remaining ones with the cell-average rule used by the kernel.
    """
    g = f.grid
    _check_lam(lam, g.n)
    pts = np.atleast_2d(np.asarray(points, float))
    if pts.shape[-1] != g.n + 1:
        raise ValueError("points must have n+1 coordinates")
    dens = (f.values * g.t_field ** (-src_weight_exp)).ravel()
    w = g.weights.ravel()
    dx = g.dx
    xs = [c.ravel() for c in g.coords()[:-1]]
    t_lo = np.broadcast_to(g.t_edges[:-1].reshape((g.nt,) + (1,) * g.n), g.shape).ravel()
    t_hi = np.broadcast_to(g.t_edges[1:].reshape((g.nt,) + (1,) * g.n), g.shape).ravel()
    out = np.empty(len(pts))
    for i, y in enumerate(pts):
        lo = np.stack([x - dx / 2 - y[j] for j, x in enumerate(xs)] + [t_lo - y[-1]], axis=-1)
        hi = np.stack([x + dx / 2 - y[j] for j, x in enumerate(xs)] + [t_hi - y[-1]], axis=-1)
        out[i] = float(np.sum(dens * w * _cell_average(lo, hi, lam)))
    return out


__all__ = [
    "KernelOperator", "kernel_operator", "clear_cache", "apply_E", "apply_K", "apply_K_adjoint",
    "weighted_norm", "pairing", "functional_bilinear", "rayleigh", "dual_maximizer",
    "duality_gap", "tail_estimate", "potential_at", "rect_integral", "box_integral",
]
