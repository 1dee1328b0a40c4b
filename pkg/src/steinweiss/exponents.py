"""Exponent tuples, derived exponents and admissibility predicates.

Everything here is plain arithmetic on floats.  Exponents may be passed as
floats, :class:`fractions.Fraction`, ``"num/den"`` strings or ``(num, den)``
pairs; they are converted once by :func:`as_real`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Union

BALANCE_TOL = 1e-12

Real = Union[float, int, Fraction, str, tuple]


class ExponentError(ValueError):
    """Raised when an exponent tuple violates a hard precondition."""


def as_real(value: Real) -> float:
    """Convert a float, Fraction, ``"a/b"`` string or ``(a, b)`` pair to float."""
    if isinstance(value, tuple):
        if len(value) != 2:
            raise ExponentError(f"rational pair must have two entries, got {value!r}")
        num, den = value
        if den == 0:
            raise ExponentError("rational pair with zero denominator")
        return float(Fraction(num) / Fraction(den))
    if isinstance(value, str):
        return float(Fraction(value.strip()))
    if isinstance(value, bool):
        raise ExponentError("booleans are not exponents")
    return float(value)


def conjugate(p: float) -> float:
    """Hölder conjugate p' = p/(p-1)."""
    if p <= 1:
        raise ExponentError(f"conjugate exponent needs p > 1, got {p}")
    return p / (p - 1.0)


@dataclass(frozen=True)
class ExponentConfig:
    """The tuple (n, lambda, alpha, beta, p, r) with q = r' derived."""

    n: int
    lam: float
    alpha: float
    beta: float
    p: float
    r: float

    @property
    def q(self) -> float:
        return conjugate(self.r)

    @property
    def p_prime(self) -> float:
        return conjugate(self.p)

    @property
    def dim(self) -> int:
        """Ambient dimension n+1."""
        return self.n + 1

    def balance_defect(self) -> float:
        return 1.0 / self.p + 1.0 / self.r + (self.alpha + self.beta + self.lam) / (self.n + 1) - 2.0

    def swapped(self) -> "ExponentConfig":
        """The adjoint tuple: (alpha, p) and (beta, r) exchange roles."""
        return replace(self, alpha=self.beta, beta=self.alpha, p=self.r, r=self.p)

    def as_dict(self) -> dict:
        return {"n": self.n, "lambda": self.lam, "alpha": self.alpha, "beta": self.beta,
                "p": self.p, "r": self.r, "q": self.q}

    @classmethod
    def make(cls, n: int, lam: Real, alpha: Real, beta: Real, p: Real,
             r: Real | None = None) -> "ExponentConfig":
        """Build a config, solving r from the balance equation when omitted."""
        lam_, a_, b_, p_ = (as_real(v) for v in (lam, alpha, beta, p))
        if r is None:
            r_ = solve_r(n, lam_, a_, b_, p_)
        else:
            r_ = as_real(r)
        return cls(int(n), lam_, a_, b_, p_, r_)


def solve_r(n: int, lam: float, alpha: float, beta: float, p: float) -> float:
    """r determined by 1/p + 1/r + (alpha+beta+lam)/(n+1) = 2."""
    inv_r = 2.0 - 1.0 / p - (alpha + beta + lam) / (n + 1)
    if not inv_r > 0 or not inv_r < 1:
        raise ExponentError(f"balance equation gives 1/r = {inv_r}, outside (0, 1)")
    return 1.0 / inv_r


@dataclass
class AdmissibilityReport:
    valid: bool
    violations: list[str] = field(default_factory=list)
    attainment: str = "attained"
    notes: list[str] = field(default_factory=list)
    config: dict | None = None

    def to_dict(self) -> dict:
        return {"valid": self.valid, "violations": list(self.violations),
                "attainment": self.attainment, "notes": list(self.notes),
                "config": self.config}


def _attainment(alpha: float, beta: float, p: float, q: float) -> tuple[str, list[str]]:
    notes = []
    if abs(alpha) < BALANCE_TOL and abs(beta) < BALANCE_TOL:
        notes.append("alpha = beta = 0: extremal functions are not attained")
        return "non-attained", notes
    if abs(alpha + beta) < BALANCE_TOL:
        notes.append("alpha = -beta != 0: attainment of extremals is not settled")
        return "unknown", notes
    if abs(p - q) < BALANCE_TOL:
        notes.append("p = q: extremal functions cannot be expected to be attained")
        return "non-attained", notes
    return "attained", notes


def validate_primal(n, lam, alpha, beta, p, r) -> AdmissibilityReport:
    """Check the admissibility conditions of the primal tuple.

    Total: every input produces a report, nothing is raised.
    """
    try:
        vals = [as_real(v) for v in (lam, alpha, beta, p, r)]
        n_ = as_real(n)
    except (ExponentError, ValueError, TypeError, ZeroDivisionError) as exc:
        return AdmissibilityReport(False, [f"unparseable input: {exc}"], "n/a")
    lam_, a_, b_, p_, r_ = vals
    if not all(math.isfinite(v) for v in vals + [n_]):
        return AdmissibilityReport(False, ["non-finite input"], "n/a")
    bad = []
    if n_ < 1 or n_ != int(n_):
        bad.append("n >= 1 integer")
    if not 0 < lam_ < n_ + 1:
        bad.append("0 < lambda < n+1")
    if not p_ > 1:
        bad.append("p > 1")
    if not r_ > 1:
        bad.append("r > 1")
    if p_ > 1 and not a_ < (p_ - 1) / p_:
        bad.append("alpha < 1/p'")
    if r_ > 1 and not b_ < (r_ - 1) / r_:
        bad.append("beta < 1/r'")
    if not a_ + b_ >= -BALANCE_TOL:
        bad.append("alpha + beta >= 0")
    if p_ != 0 and r_ != 0:
        defect = 1 / p_ + 1 / r_ + (a_ + b_ + lam_) / (n_ + 1) - 2
        if abs(defect) > BALANCE_TOL:
            bad.append(f"balance 1/p + 1/r + (alpha+beta+lambda)/(n+1) = 2 (defect {defect:.3e})")
    cfg = {"n": n_, "lambda": lam_, "alpha": a_, "beta": b_, "p": p_, "r": r_}
    if bad:
        return AdmissibilityReport(False, bad, "n/a", config=cfg)
    q_ = conjugate(r_)
    cfg["q"] = q_
    att, notes = _attainment(a_, b_, p_, q_)
    return AdmissibilityReport(True, [], att, notes, cfg)


def require_valid(cfg: ExponentConfig) -> ExponentConfig:
    rep = validate_primal(cfg.n, cfg.lam, cfg.alpha, cfg.beta, cfg.p, cfg.r)
    if not rep.valid:
        raise ExponentError("inadmissible exponents: " + "; ".join(rep.violations))
    return cfg


def to_dual(cfg: ExponentConfig) -> ExponentConfig:
    """Return cfg after checking the dual-form relation for q = r'."""
    if not cfg.r > 1:
        raise ExponentError("r must exceed 1")
    require_valid(cfg)
    q = cfg.q
    rhs = 1.0 / cfg.p - (cfg.n + 1 - (cfg.alpha + cfg.beta + cfg.lam)) / (cfg.n + 1)
    if abs(1.0 / q - rhs) > BALANCE_TOL:
        raise ExponentError(f"dual relation fails: 1/q = {1 / q}, expected {rhs}")
    if cfg.p > q * (1 + BALANCE_TOL):
        raise ExponentError("dual form requires p <= q")
    return cfg


@dataclass(frozen=True)
class ELExponents:
    theta: float
    kappa: float


def el_exponents(cfg: ExponentConfig) -> ELExponents:
    to_dual(cfg)
    theta = 1.0 / (cfg.p - 1.0)
    kappa = cfg.q - 1.0
    if kappa * theta < 1 - BALANCE_TOL:
        raise ExponentError(f"kappa*theta = {kappa * theta} < 1")
    lhs = 1 / (theta + 1) + 1 / (kappa + 1)
    if abs(lhs - (cfg.alpha + cfg.beta + cfg.lam) / (cfg.n + 1)) > 1e-12:
        raise ExponentError("1/(theta+1) + 1/(kappa+1) != (alpha+beta+lambda)/(n+1)")
    if not cfg.alpha < 1 / (theta + 1) or not cfg.beta < 1 / (kappa + 1):
        raise ExponentError("alpha < 1/(theta+1) and beta < 1/(kappa+1) required")
    return ELExponents(theta, kappa)


@dataclass(frozen=True)
class ConformalData:
    p_alpha: float
    r_beta: float
    kappa_star: float
    theta_star: float
    mu1: float
    mu2: float


def mu_values(n: int, lam: float, alpha: float, beta: float,
              kappa: float, theta: float) -> tuple[float, float]:
    """The Kelvin defects mu1, mu2 for given (kappa, theta)."""
    mu1 = 2 * n + 2 - (kappa + 1) * (lam + 2 * beta)
    mu2 = 2 * n + 2 - (theta + 1) * (lam + 2 * alpha)
    return mu1, mu2


def conformal_exponents(n, lam, alpha, beta) -> ConformalData:
    lam, alpha, beta = as_real(lam), as_real(alpha), as_real(beta)
    d = 2 * (n + 1)
    if not lam + 2 * alpha > 0:
        raise ExponentError("lambda + 2 alpha > 0 required")
    if not lam + 2 * beta > 0:
        raise ExponentError("lambda + 2 beta > 0 required")
    if not d - lam - 2 * alpha > 0:
        raise ExponentError("2(n+1) - lambda - 2 alpha > 0 required")
    if not d - lam - 2 * beta > 0:
        raise ExponentError("2(n+1) - lambda - 2 beta > 0 required")
    p_a = d / (d - lam - 2 * alpha)
    r_b = d / (d - lam - 2 * beta)
    k_s = (d - lam - 2 * beta) / (lam + 2 * beta)
    t_s = (d - lam - 2 * alpha) / (lam + 2 * alpha)
    mu1, mu2 = mu_values(n, lam, alpha, beta, k_s, t_s)
    return ConformalData(p_a, r_b, k_s, t_s, mu1, mu2)


def conformal_config(n: int, lam, alpha, beta) -> ExponentConfig:
    cd = conformal_exponents(n, lam, alpha, beta)
    return ExponentConfig(int(n), as_real(lam), as_real(alpha), as_real(beta), cd.p_alpha, cd.r_beta)


def is_conformal(cfg: ExponentConfig, tol: float = 1e-10) -> bool:
    try:
        cd = conformal_exponents(cfg.n, cfg.lam, cfg.alpha, cfg.beta)
    except ExponentError:
        return False
    return abs(cfg.p - cd.p_alpha) < tol and abs(cfg.r - cd.r_beta) < tol


@dataclass
class SobolevExponent:
    p_star: float
    window_alpha: bool
    window_beta: bool
    p_less_than_p_star: bool
    alpha_range: tuple[float, float]
    beta_range: tuple[float, float]

    @property
    def admissible(self) -> bool:
        return self.window_alpha and self.window_beta and self.p_less_than_p_star


def sobolev_exponent(n: int, p, alpha1, beta1, m: int = 1) -> SobolevExponent:
    """p*_m = p(n+1+beta)/(n+1+alpha-mp) and the exponent window."""
    p, a1, b1 = as_real(p), as_real(alpha1), as_real(beta1)
    if m < 1:
        raise ExponentError("m must be a positive integer")
    if not m * p < n + 1:
        raise ExponentError("mp < n+1 required")
    den = n + 1 + a1 - m * p
    if not den > 0:
        raise ExponentError(f"denominator n+1+alpha-mp = {den} must be positive")
    ps = p * (n + 1 + b1) / den
    lo_a = p * n / ps - (n + 1 - m * p) if ps > 0 else math.inf
    hi_b = a1 * (n + 1) / (n + 1 - m * p)
    win_a = lo_a < a1 < p - 1
    win_b = -1 < b1 <= hi_b + 1e-15
    return SobolevExponent(ps, win_a, win_b, ps > p * (1 + 1e-14), (lo_a, p - 1), (-1.0, hi_b))
