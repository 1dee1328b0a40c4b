"""Closed-form constants: Gamma, sphere areas, angular integrals, Hardy and
bound constants.

The Gamma function is a Lanczos approximation (g = 7, nine coefficients),
shifted with the recurrence below x = 1/2 so that relative accuracy stays
near machine precision on (0, 50].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict

from .exponents import ExponentConfig, ExponentError, conjugate, require_valid

_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def _lanczos_core(x: float) -> float:
    # Gamma(x) for x >= 0.5
    z = x - 1.0
    acc = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2 * math.pi) * t ** (z + 0.5) * math.exp(-t) * acc


def gamma(x: float) -> float:
    """Euler Gamma function for x > 0."""
    x = float(x)
    if not math.isfinite(x) or x <= 0:
        raise ValueError(f"gamma is implemented for finite x > 0, got {x}")
    if x > 171.6:
        raise OverflowError("gamma overflows double precision")
    shift = 1.0
    while x < 0.5:
        shift *= x
        x += 1.0
    # integers are returned exactly (factorials up to 170!)
    if x == int(x) and x <= 171:
        return math.factorial(int(x) - 1) / shift
    return _lanczos_core(x) / shift


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d: 2 pi^{d/2} / Gamma(d/2)."""
    if int(d) != d or d < 1:
        raise ValueError("sphere_area needs a positive integer dimension")
    return 2 * math.pi ** (d / 2) / gamma(d / 2)


def angular_J(sigma: float, n: int) -> float:
    """Integral of cos(angle to the t-axis)^(-sigma) over the upper unit
    hemisphere of R^{n+1}: pi^{n/2} Gamma((1-sigma)/2) / Gamma((n+1-sigma)/2)."""
    if not sigma < 1:
        raise ValueError(f"angular integral diverges for sigma >= 1 (sigma={sigma})")
    return math.pi ** (n / 2) * gamma((1 - sigma) / 2) / gamma((n + 1 - sigma) / 2)


def representation_constant(d: int) -> float:
    """Half the area of the unit sphere in R^d: pi^{d/2} / Gamma(d/2)."""
    return sphere_area(d) / 2


@dataclass(frozen=True)
class HardyConstants:
    c1: float
    c2: float
    c3: float
    c4: float
    e1: float
    e2: float
    e3: float
    e4: float

    def value(self, which: int, R: float) -> float:
        c = (self.c1, self.c2, self.c3, self.c4)[which - 1]
        e = (self.e1, self.e2, self.e3, self.e4)[which - 1]
        return c * R ** e

    def to_dict(self) -> dict:
        return asdict(self)


def hardy_constants(cfg: ExponentConfig) -> HardyConstants:
    """C1..C4 of the four power-weight integrals.

    C1: tail of z^{-beta q}|Y|^{-lambda q};   C2: half ball of t^{-alpha p'};
    C3: tail of t^{-alpha p'}|X|^{-lambda p'}; C4: half ball of z^{-beta q}.
    The tail denominators are written with the positive sign.
    """
    require_valid(cfg)
    n1 = cfg.n + 1
    q, pp = cfg.q, cfg.p_prime
    sb, sa = cfg.beta * q, cfg.alpha * pp
    checks = [
        (sb < 1, "beta q < 1"),
        (sa < 1, "alpha p' < 1"),
        ((cfg.beta + cfg.lam) * q > n1, "(beta+lambda) q > n+1"),
        ((cfg.alpha + cfg.lam) * pp > n1, "(alpha+lambda) p' > n+1"),
    ]
    for ok, name in checks:
        if not ok:
            raise ExponentError(f"Hardy integral diverges: {name} violated")
    jb, ja = angular_J(sb, cfg.n), angular_J(sa, cfg.n)
    return HardyConstants(
        c1=jb / ((cfg.beta + cfg.lam) * q - n1),
        c2=ja / (n1 - sa),
        c3=ja / ((cfg.alpha + cfg.lam) * pp - n1),
        c4=jb / (n1 - sb),
        e1=n1 - (cfg.beta + cfg.lam) * q,
        e2=n1 - sa,
        e3=n1 - (cfg.alpha + cfg.lam) * pp,
        e4=n1 - sb,
    )


def hardy_A_supremum(cfg: ExponentConfig, side: str, R: float) -> float:
    """Product of the tail and ball integrals raised to 1/q and 1/p'."""
    if not R > 0:
        raise ValueError("R must be positive")
    h = hardy_constants(cfg)
    q, pp = cfg.q, cfg.p_prime
    side = side.upper()
    if side == "A2":
        return h.value(1, R) ** (1 / q) * h.value(2, R) ** (1 / pp)
    if side == "A3":
        return h.value(4, R) ** (1 / q) * h.value(3, R) ** (1 / pp)
    raise ValueError("side must be 'A2' or 'A3'")


def hls_upper(n_ambient: int, p: float, lam: float) -> float:
    """Upper bound for the sharp Hardy-Littlewood-Sobolev constant on R^N.

    Uses |S^{N-1}|/N, the volume of the unit ball in R^N.
    """
    N = int(n_ambient)
    if not 0 < lam < N:
        raise ExponentError("0 < lambda < N required")
    if not p > 1:
        raise ExponentError("p > 1 required")
    inv_t = 2 - 1 / p - lam / N
    if not 0 < inv_t < 1:
        raise ExponentError("no conjugate exponent t in (1, inf) for this (p, lambda)")
    t = 1 / inv_t
    w = sphere_area(N)
    s = lam / N
    bracket = (p * lam / (N * (p - 1))) ** s + (t * lam / (N * (t - 1))) ** s
    return N / (p * t * (N - lam)) * (w / N) ** s * bracket


@dataclass
class BoundsReport:
    d1: float
    d2: float
    d3: float
    d3_terms: tuple
    lower: float
    upper: float
    hls_upper: float
    factor: float
    attainment_note: str
    d3_flag: str = "upper-bound surrogate"

    def to_dict(self) -> dict:
        out = asdict(self)
        out["d3_terms"] = list(self.d3_terms)
        return out


def bounds_report(cfg: ExponentConfig) -> BoundsReport:
    from .exponents import validate_primal

    h = hardy_constants(cfg)
    q, pp, p = cfg.q, cfg.p_prime, cfg.p
    n = cfg.n
    d1 = h.c1 ** (1 / q) * h.c2 ** (1 / pp)
    d2 = h.c3 ** (1 / pp) * h.c4 ** (1 / q)
    w_nm1 = sphere_area(n)
    w_n = sphere_area(n + 1)
    base = ((2 ** n - 1) * w_nm1 / n) ** (1 / q)
    hls = hls_upper(n + 1, p, cfg.lam)
    t3 = 2 ** cfg.lam * ((2 ** n - 2.0 ** (-(n + 2))) * w_n / (n + 1)) ** (1 / pp) * base
    terms = (base, hls * base, t3)
    d3 = max(terms)
    factor = pp ** (1 / pp) * p ** (1 / p)
    rep = validate_primal(cfg.n, cfg.lam, cfg.alpha, cfg.beta, cfg.p, cfg.r)
    note = rep.attainment + ("; " + "; ".join(rep.notes) if rep.notes else "")
    return BoundsReport(d1, d2, d3, terms, max(d1, d2, d3), factor * min(d1, d2), hls, factor, note)


def r_indexed_d_forms(cfg: ExponentConfig) -> tuple[float, float]:
    """D1, D2 written with r-indexed Gamma arguments (the statement form).

    The two linear denominators that are negative under the hypotheses are
    taken in absolute value, exactly as in :func:`hardy_constants`.
    """
    require_valid(cfg)
    n1 = cfg.n + 1
    r, p, a, b, lam = cfg.r, cfg.p, cfg.alpha, cfg.beta, cfg.lam
    pin = math.pi ** (cfg.n / 2)
    gb = gamma((r * (1 - b) - 1) / (2 * (r - 1))) / gamma((r * (n1 - b) - n1) / (2 * (r - 1)))
    ga = gamma((p * (1 - a) - 1) / (2 * (p - 1))) / gamma((p * (n1 - a) - n1) / (2 * (p - 1)))
    d1 = (abs((r - 1) * pin / (r * (n1 - b - lam) - n1)) * gb) ** ((r - 1) / r) * \
         ((p - 1) * pin / (p * (n1 - a) - n1) * ga) ** ((p - 1) / p)
    d2 = ((r - 1) * pin / (r * (n1 - b) - n1) * gb) ** ((r - 1) / r) * \
         (abs((p - 1) * pin / (p * (n1 - a - lam) - n1)) * ga) ** ((p - 1) / p)
    return d1, d2


__all__ = [
    "gamma", "sphere_area", "angular_J", "representation_constant", "HardyConstants",
    "hardy_constants", "hardy_A_supremum", "hls_upper", "BoundsReport", "bounds_report",
    "r_indexed_d_forms", "conjugate",
]
