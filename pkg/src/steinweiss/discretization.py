"""Truncated half-space grids, sampled fields, the test-function library and
a Monte Carlo integration oracle."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

MAX_NODES = 10_000_000


# --------------------------------------------------------------------- grids

@dataclass(frozen=True, eq=False)
class HalfSpaceGrid:
    """Tensor grid on [-x_extent, x_extent]^n x (0, t_max].

    x-cells are uniform; t-cell j spans [t_max (j/nt)^g, t_max ((j+1)/nt)^g].
    Nodes are cell midpoints and weights are exact cell measures.
    Field arrays are indexed ``[t, x1, ..., xn]``.
    """

    n: int
    x_extent: float
    t_max: float
    nx: int
    nt: int
    grading_g: float
    x_edges: np.ndarray = field(repr=False)
    t_edges: np.ndarray = field(repr=False)

    @property
    def x_nodes(self) -> np.ndarray:
        return 0.5 * (self.x_edges[1:] + self.x_edges[:-1])

    @property
    def t_nodes(self) -> np.ndarray:
        return 0.5 * (self.t_edges[1:] + self.t_edges[:-1])

    @property
    def dx(self) -> float:
        return 2 * self.x_extent / self.nx

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.t_edges)

    @property
    def shape(self) -> tuple:
        return (self.nt,) + (self.nx,) * self.n

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def weights(self) -> np.ndarray:
        w = self.dt * self.dx ** self.n
        return np.broadcast_to(w.reshape((self.nt,) + (1,) * self.n), self.shape)

    @property
    def t_field(self) -> np.ndarray:
        return np.broadcast_to(self.t_nodes.reshape((self.nt,) + (1,) * self.n), self.shape)

    def coords(self) -> list[np.ndarray]:
        """Broadcast coordinate arrays [x1, ..., xn, t], each of grid shape."""
        xs = self.x_nodes
        out = []
        for axis in range(self.n):
            shape = [1] * (self.n + 1)
            shape[axis + 1] = self.nx
            out.append(np.broadcast_to(xs.reshape(shape), self.shape))
        out.append(self.t_field)
        return out

    def points(self) -> np.ndarray:
        """Node coordinates as an array of shape grid.shape + (n+1,)."""
        return np.stack(self.coords(), axis=-1)

    def key(self) -> tuple:
        return (self.n, self.x_extent, self.t_max, self.nx, self.nt, self.grading_g)

    def scaled(self, tau: float) -> "HalfSpaceGrid":
        """The grid dilated by tau (same node counts and grading)."""
        return build_grid(self.n, self.x_extent * tau, self.t_max * tau, self.nx, self.nt, self.grading_g)

    def describe(self) -> dict:
        return {"n": self.n, "x_extent": self.x_extent, "t_max": self.t_max, "nx": self.nx,
                "nt": self.nt, "grading_g": self.grading_g}


def build_grid(n: int, x_extent: float, t_max: float, nx: int, nt: int,
               grading_g: float = 2.0) -> HalfSpaceGrid:
    if n not in (1, 2):
        raise ValueError("grids are supported for n = 1 and n = 2")
    if nx < 4 or nt < 4:
        raise ValueError("nx and nt must be at least 4")
    if not grading_g >= 1:
        raise ValueError("grading exponent must be >= 1")
    if not (x_extent > 0 and t_max > 0):
        raise ValueError("extents must be positive")
    if nt * nx ** n > MAX_NODES:
        raise ValueError(f"grid with {nt * nx ** n} nodes exceeds the {MAX_NODES} node guard")
    xe = np.linspace(-x_extent, x_extent, nx + 1)
    te = t_max * (np.arange(nt + 1) / nt) ** grading_g
    return HalfSpaceGrid(int(n), float(x_extent), float(t_max), int(nx), int(nt),
                         float(grading_g), xe, te)


@dataclass(frozen=True, eq=False)
class Field:
    """Values on a grid; the carrier for f, g, u, v."""

    grid: HalfSpaceGrid
    values: np.ndarray
    symmetry_hint: str = "none"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError(f"field shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values, self.symmetry_hint)

    def __mul__(self, c: float) -> "Field":
        return self.with_values(self.values * c)

    __rmul__ = __mul__


def quadrature(field_: Field) -> float:
    return float(np.sum(field_.values * field_.grid.weights))


def write_field_csv(field_: Field, path) -> None:
    """Columns x1..xn, t, value; 17 significant digits."""
    g = field_.grid
    cols = [c.ravel() for c in g.coords()]
    names = [f"x{i + 1}" for i in range(g.n)] + ["t", "value"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*cols, field_.values.ravel()):
            w.writerow([f"{v:.17g}" for v in row])


def read_field_csv(path, grid: HalfSpaceGrid) -> Field:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    return Field(grid, data[:, -1].reshape(grid.shape))


# ------------------------------------------------------- test-function library

class FuncSpec:
    """Closed-form function on the closed half space.

    ``__call__`` takes an array of points with last axis of length n+1
    (x1..xn, t); ``grad`` returns the gradient in the same layout.
    """

    def __call__(self, pts: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def grad(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no analytic gradient")

    def to_dict(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError


def _offset(pts, center):
    pts = np.asarray(pts, dtype=float)
    c = np.asarray(center, dtype=float)
    if c.shape[-1] != pts.shape[-1]:
        raise ValueError(f"center {tuple(c)} has wrong dimension for points of size {pts.shape[-1]}")
    return pts - c


@dataclass(frozen=True)
class GaussianBump(FuncSpec):
    center: tuple
    width: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("width must be positive")

    def __call__(self, pts):
        d = _offset(pts, self.center)
        return self.amplitude * np.exp(-np.sum(d * d, axis=-1) / self.width ** 2)

    def grad(self, pts):
        d = _offset(pts, self.center)
        return (-2.0 / self.width ** 2) * d * self(pts)[..., None]

    def to_dict(self):
        return {"kind": "gaussian_bump", "center": list(self.center), "width": self.width,
                "amplitude": self.amplitude}


@dataclass(frozen=True)
class Bubble(FuncSpec):
    """c (1/(|X - center|^2 + d^2))^exponent."""

    c: float
    d: float
    center: tuple
    exponent: float

    def __post_init__(self):
        if not (self.exponent > 0 and self.d > 0):
            raise ValueError("bubble needs exponent > 0 and d > 0")

    def __call__(self, pts):
        d = _offset(pts, self.center)
        return self.c * (np.sum(d * d, axis=-1) + self.d ** 2) ** (-self.exponent)

    def grad(self, pts):
        d = _offset(pts, self.center)
        s = np.sum(d * d, axis=-1) + self.d ** 2
        return (-2 * self.exponent * self.c * s ** (-self.exponent - 1))[..., None] * d

    def to_dict(self):
        return {"kind": "bubble", "c": self.c, "d": self.d, "center": list(self.center),
                "exponent": self.exponent}


@dataclass(frozen=True)
class CutoffBump(FuncSpec):
    """exp(-s rho^2/(1 - rho^2)) for rho = |X - center|/radius < 1, else 0.

    Smooth with compact support; small ``smoothness`` makes it indicator-like.
    """

    center: tuple
    radius: float = 1.0
    smoothness: float = 1.0

    def __post_init__(self):
        if not (self.radius > 0 and self.smoothness > 0):
            raise ValueError("radius and smoothness must be positive")

    def _parts(self, pts):
        d = _offset(pts, self.center)
        rho2 = np.sum(d * d, axis=-1) / self.radius ** 2
        inside = rho2 < 1
        safe = np.where(inside, rho2, 0.0)
        val = np.where(inside, np.exp(-self.smoothness * safe / (1 - safe)), 0.0)
        return d, safe, inside, val

    def __call__(self, pts):
        return self._parts(pts)[3]

    def grad(self, pts):
        d, rho2, inside, val = self._parts(pts)
        # d/dX exp(-s r/(1-r)) with r = |d|^2/R^2
        dr = np.where(inside, -self.smoothness / (1 - rho2) ** 2, 0.0)
        return (val * dr * 2 / self.radius ** 2)[..., None] * d

    def to_dict(self):
        return {"kind": "cutoff_bump", "center": list(self.center), "radius": self.radius,
                "smoothness": self.smoothness}


@dataclass(frozen=True)
class Scaled(FuncSpec):
    """tau^{-power} inner(X / tau)."""

    inner: FuncSpec
    tau: float
    power: float = 0.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")

    def __call__(self, pts):
        return self.tau ** (-self.power) * self.inner(np.asarray(pts, float) / self.tau)

    def grad(self, pts):
        return self.tau ** (-self.power - 1) * self.inner.grad(np.asarray(pts, float) / self.tau)

    def to_dict(self):
        return {"kind": "scaled", "inner": self.inner.to_dict(), "tau": self.tau, "power": self.power}


@dataclass(frozen=True)
class Product(FuncSpec):
    """Pointwise product of two specs (used for Gaussian-cutoff bumps)."""

    a: FuncSpec
    b: FuncSpec

    def __call__(self, pts):
        return self.a(pts) * self.b(pts)

    def grad(self, pts):
        return self.a.grad(pts) * self.b(pts)[..., None] + self.a(pts)[..., None] * self.b.grad(pts)

    def to_dict(self):
        return {"kind": "product", "a": self.a.to_dict(), "b": self.b.to_dict()}


def norm_scaling(inner: FuncSpec, tau: float, n: int, weight_exp: float, p: float) -> Scaled:
    """The dilation that preserves ||t^weight_exp f||_p on R^{n+1}_+."""
    return Scaled(inner, tau, (n + 1 + weight_exp * p) / p)


def spec_from_dict(d: dict) -> FuncSpec:
    kind = d.get("kind")
    if kind == "gaussian_bump":
        return GaussianBump(tuple(d["center"]), d.get("width", 1.0), d.get("amplitude", 1.0))
    if kind == "bubble":
        return Bubble(d["c"], d["d"], tuple(d["center"]), d["exponent"])
    if kind == "cutoff_bump":
        return CutoffBump(tuple(d["center"]), d.get("radius", 1.0), d.get("smoothness", 1.0))
    if kind == "scaled":
        return Scaled(spec_from_dict(d["inner"]), d["tau"], d.get("power", 0.0))
    if kind == "product":
        return Product(spec_from_dict(d["a"]), spec_from_dict(d["b"]))
    raise ValueError(f"unknown function kind {kind!r}")


def sample(spec: FuncSpec, grid: HalfSpaceGrid) -> Field:
    return Field(grid, spec(grid.points()))


def library(n: int = 1) -> list[FuncSpec]:
    """A fixed family of nonnegative test functions used in sup checks."""
    z = (0.0,) * n
    out: list[FuncSpec] = []
    for w in (0.3, 0.6, 1.0):
        for t0 in (0.0, 0.5, 1.0):
            out.append(GaussianBump(z + (t0,), w))
    out.append(GaussianBump((0.7,) * n + (0.4,), 0.5))
    for d in (0.3, 0.6, 1.2):
        out.append(Bubble(1.0, d, z + (0.0,), 1.4))
        out.append(Bubble(1.0, d, z + (-d,), 1.4))
    out.append(CutoffBump(z + (0.5,), 0.8, 0.5))
    out.append(CutoffBump(z + (1.0,), 1.5, 2.0))
    return out


# ---------------------------------------------------------------- Monte Carlo

@dataclass(frozen=True)
class BallPlus:
    """{|X - (center, 0)| < R, t > 0}."""

    R: float
    center: tuple = ()


@dataclass(frozen=True)
class ExteriorBallPlus:
    """Half space minus the half ball of radius R at the origin.

    With ``box`` = L the region is intersected with [-L, L]^n x (0, L];
    without it the whole unbounded region is sampled through the inversion
    Y -> R^2 Y/|Y|^2, which maps it onto the half ball.
    """

    R: float
    box: float | None = None


@dataclass(frozen=True)
class Box:
    x_extent: float
    t_max: float


@dataclass
class MCResult:
    estimate: float
    stderr: float
    n_samples: int
    heavy_tail: bool = False
    chunk_estimates: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {"estimate": self.estimate, "stderr": self.stderr, "n_samples": self.n_samples,
                "heavy_tail": self.heavy_tail}


N_CHUNKS = 64


def _sample_t(rng, size, t_max, sigma):
    """Draw t on (0, t_max) with density proportional to t^{-sigma}; return t and 1/density."""
    u = rng.random(size)
    a = 1.0 - sigma
    t = t_max * u ** (1.0 / a)
    inv_density = t_max ** a / a * t ** sigma
    return t, inv_density


def _chunk(func, region, n, dim, seed_seq, sigma):
    rng = np.random.default_rng(seed_seq)
    nb = dim - 1
    if isinstance(region, Box):
        x = rng.uniform(-region.x_extent, region.x_extent, (n, nb))
        t, inv = _sample_t(rng, n, region.t_max, sigma)
        pts = np.column_stack([x, t])
        vals = func(pts) * inv * (2 * region.x_extent) ** nb
    elif isinstance(region, BallPlus):
        R = region.R
        c = np.asarray(region.center if region.center else (0.0,) * nb, float)
        x = rng.uniform(-R, R, (n, nb)) + c
        t, inv = _sample_t(rng, n, R, sigma)
        pts = np.column_stack([x, t])
        inside = np.sum((pts[:, :nb] - c) ** 2, axis=1) + t ** 2 < R * R
        vals = np.where(inside, func(pts), 0.0) * inv * (2 * R) ** nb
    elif isinstance(region, ExteriorBallPlus):
        R = region.R
        if region.box is not None:
            L = region.box
            x = rng.uniform(-L, L, (n, nb))
            t, inv = _sample_t(rng, n, L, sigma)
            pts = np.column_stack([x, t])
            outside = np.sum(pts * pts, axis=1) >= R * R
            vals = np.where(outside, func(pts), 0.0) * inv * (2 * L) ** nb
        else:
            x = rng.uniform(-R, R, (n, nb))
            t, inv = _sample_t(rng, n, R, sigma)
            pp = np.column_stack([x, t])
            r2 = np.sum(pp * pp, axis=1)
            inside = r2 < R * R
            r2s = np.where(inside, r2, R * R)
            img = pp * (R * R / r2s)[:, None]
            jac = (R * R / r2s) ** dim
            vals = np.where(inside, func(img) * jac, 0.0) * inv * (2 * R) ** nb
    else:
        raise TypeError(f"unsupported region {region!r}")
    return float(np.sum(vals)), float(np.sum(vals * vals)), float(np.max(np.abs(vals), initial=0.0))


def mc_integral(func: Callable[[np.ndarray], np.ndarray], region, dim: int, n_samples: int,
                seed: int = 0, workers: int = 1, t_exponent: float = 0.0) -> MCResult:
    """Monte Carlo integral of ``func`` over a half-space region of R^dim.

    Samples t with density proportional to t^{-t_exponent} to absorb power
    singularities at the boundary.  The sample budget is split into a fixed
    number of chunks with seeds spawned from ``seed``; partial sums are
    reduced in chunk order, so the result does not depend on ``workers``.
    """
    if not t_exponent < 1:
        raise ValueError("t importance exponent must be < 1")
    if n_samples < N_CHUNKS:
        raise ValueError(f"need at least {N_CHUNKS} samples")
    seeds = np.random.SeedSequence(seed).spawn(N_CHUNKS)
    sizes = [n_samples // N_CHUNKS + (1 if i < n_samples % N_CHUNKS else 0) for i in range(N_CHUNKS)]
    jobs = list(zip(sizes, seeds))
    run = lambda job: _chunk(func, region, job[0], dim, job[1], t_exponent)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    big = max(p[2] for p in parts)
    mean = s1 / n_samples
    var = max(s2 / n_samples - mean * mean, 0.0)
    stderr = math.sqrt(var / n_samples)
    chunk_est = [p[0] / s for p, s in zip(parts, sizes)]
    # one sample carrying a visible share of the total signals infinite variance
    heavy = bool(s1 != 0 and big / abs(s1) > 0.01)
    return MCResult(mean, stderr, n_samples, heavy, chunk_est)
