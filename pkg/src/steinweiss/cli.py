"""Command line front end.

    python3 -m steinweiss validate --config cfg.json
    python3 -m steinweiss bounds   --config cfg.json --out bounds.json
    python3 -m steinweiss estimate --config cfg.json --out est.json
    python3 -m steinweiss check    --config cfg.json --suite duality,kelvin

Exit codes: 0 success, 2 mathematical rejection or failed check, 1 usage or
I/O error.  Results are written as sorted, indented JSON carrying a
``schema_version``; run metadata (timestamp, worker count) goes to a
separate ``*.meta.json`` file so the result bytes only depend on the input.
Set STEINWEISS_LOG to a logging level name for diagnostics on stderr.
"""
from __future__ import annotations

import argparse
import datetime
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .closed_forms import bounds_report, hardy_constants
from .diagnostics import (checksum, default_test_pair, forced_hyperbolic_weights, hyperbolic_check,
                          kelvin_check, monotonicity_violation, record, scaling_check,
                          symmetry_residual)
from .discretization import (BallPlus, CutoffBump, ExteriorBallPlus, Field, GaussianBump, Product,
                             build_grid, library, mc_integral, sample, spec_from_dict,
                             write_field_csv)
from .exponents import ExponentConfig, ExponentError, as_real, is_conformal, solve_r, validate_primal
from .extremal import power_iterate
from .operators import duality_gap, rayleigh
from .sobolev import representation_check

SCHEMA_VERSION = 1
SUITES = ("duality", "kelvin", "scaling", "symmetry", "representation", "hardy", "hyperbolic")

_ALLOWED = {
    "schema_version": None,
    "exponents": {"n", "lambda", "alpha", "beta", "p", "r"},
    "grid": {"x_extent", "t_max", "nx", "nt", "grading_g"},
    "init": None,
    "solver": {"max_iter", "tol", "polish", "translate", "recenter"},
    "checks": {"mc_samples", "n_random_fields", "kelvin_resolution", "representation_grid"},
    "seed": None,
}
_DEFAULT_GRID = {"x_extent": 4.0, "t_max": 4.0, "nx": 64, "nt": 64, "grading_g": 2.0}


class UsageError(Exception):
    """Malformed configuration or arguments (exit code 1)."""


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg) -> None:
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    for key, val in cfg.items():
        if key not in _ALLOWED:
            raise UsageError(f"unknown config key {key!r}")
        sub = _ALLOWED[key]
        if sub is not None:
            if not isinstance(val, dict):
                raise UsageError(f"config section {key!r} must be an object")
            extra = set(val) - sub
            if extra:
                raise UsageError(f"unknown keys in {key!r}: {sorted(extra)}")
    if "schema_version" in cfg and cfg["schema_version"] != SCHEMA_VERSION:
        raise UsageError(f"unsupported schema_version {cfg['schema_version']!r}")
    ex = cfg.get("exponents")
    if ex is None:
        raise UsageError("config needs an 'exponents' section")
    missing = {"n", "lambda", "alpha", "beta", "p"} - set(ex)
    if missing:
        raise UsageError(f"exponents section misses {sorted(missing)}")
    for k, v in ex.items():
        try:
            as_real(tuple(v) if isinstance(v, list) else v)
        except (ValueError, TypeError, ZeroDivisionError, ExponentError) as exc:
            raise UsageError(f"exponent {k!r} is not a number: {v!r}") from exc
    if not isinstance(ex["n"], int) or isinstance(ex["n"], bool):
        raise UsageError("n must be an integer")


def _num(v):
    return as_real(tuple(v) if isinstance(v, list) else v)


def exponent_config(cfg: dict) -> ExponentConfig:
    ex = cfg["exponents"]
    r = ex.get("r")
    return ExponentConfig.make(ex["n"], _num(ex["lambda"]), _num(ex["alpha"]), _num(ex["beta"]),
                               _num(ex["p"]), None if r is None else _num(r))


def grid_from(cfg: dict, n: int):
    spec = dict(_DEFAULT_GRID)
    spec.update(cfg.get("grid", {}))
    try:
        return build_grid(n, float(spec["x_extent"]), float(spec["t_max"]), int(spec["nx"]),
                          int(spec["nt"]), float(spec["grading_g"]))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad grid section: {exc}") from exc


def init_from(cfg: dict, n: int):
    if "init" in cfg:
        try:
            return spec_from_dict(cfg["init"])
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"bad init section: {exc}") from exc
    return GaussianBump((0.0,) * n + (1.0,), 1.0)


# ------------------------------------------------------------------ commands

def cmd_validate(cfg: dict, args) -> tuple[int, dict]:
    ex = cfg["exponents"]
    vals = {k: _num(v) for k, v in ex.items() if k != "n"}
    r = vals.get("r")
    if r is None:
        try:
            r = solve_r(ex["n"], vals["lambda"], vals["alpha"], vals["beta"], vals["p"])
        except ExponentError as exc:
            return 2, {"valid": False, "violations": [str(exc)], "attainment": "n/a", "notes": [],
                       "config": vals}
    rep = validate_primal(ex["n"], vals["lambda"], vals["alpha"], vals["beta"], vals["p"], r)
    return (0 if rep.valid else 2), rep.to_dict()


def cmd_bounds(cfg: dict, args) -> tuple[int, dict]:
    try:
        c = exponent_config(cfg)
        rep = bounds_report(c)
        h = hardy_constants(c)
    except ExponentError as exc:
        return 2, {"error": str(exc)}
    return 0, {"config": c.as_dict(), "bounds": rep.to_dict(), "hardy": h.to_dict(),
               "upper_over_d1": rep.upper / min(rep.d1, rep.d2)}


def cmd_estimate(cfg: dict, args) -> tuple[int, dict]:
    try:
        c = exponent_config(cfg)
        grid = grid_from(cfg, c.n)
        solver = cfg.get("solver", {})
        init = init_from(cfg, c.n)
        res = power_iterate(c, grid, init, int(solver.get("max_iter", 500)),
                            float(solver.get("tol", 1e-8)), polish=bool(solver.get("polish", True)),
                            translate=bool(solver.get("translate", True)),
                            recenter=bool(solver.get("recenter", True)))
        rep = bounds_report(c)
    except ExponentError as exc:
        return 2, {"error": str(exc)}
    lib = [rayleigh(sample(s, grid), c) for s in library(c.n)]
    out = {
        "config": c.as_dict(),
        "result": res.summary(),
        # uniqueness of extremals is open, so every run records where it started and landed
        "fixed_point": {"init": init.to_dict(), "center": list(symmetry_residual(res.f_star)[0]),
                        "checksum": checksum(res.f_star)},
        "sandwich": {"library_max": max(lib), "n_est": res.n_est, "upper": rep.upper,
                     "lower": rep.lower, "library_le_n_est": bool(max(lib) <= res.n_est * (1 + 1e-12)),
                     "n_est_le_upper_1.05": bool(res.n_est <= 1.05 * rep.upper)},
    }
    if args.out:
        stem = Path(args.out)
        res.write_trace(stem.with_suffix(".trace.csv"))
        write_field_csv(res.f_star, stem.with_suffix(".f_star.csv"))
        out["trace_csv"] = stem.with_suffix(".trace.csv").name
    return (0 if res.converged else 2), out


def _check_duality(c, grid, cfg, rng, workers):
    n_fields = int(cfg.get("checks", {}).get("n_random_fields", 10))
    gaps = []
    for _ in range(n_fields):
        f = Field(grid, rng.random(grid.shape) * sample(GaussianBump((0.0,) * c.n + (1.0,), 1.5), grid).values)
        gaps.append(abs(duality_gap(f, c)))
    return [record("duality", {"fields": n_fields}, max(gaps), 1e-10)]


def _check_kelvin(c, grid, cfg, rng, workers):
    m = int(cfg.get("checks", {}).get("kelvin_resolution", 32))
    if not is_conformal(c):
        return [record("kelvin", c.as_dict(), float("inf"), 0.02, {"error": "non-conformal exponents"})]
    fs, gs = default_test_pair(c.n)
    r = kelvin_check(fs, gs, c, grid, m)
    return [record("kelvin_functional", c.as_dict(), r.functional_discrepancy, 0.02, r.to_dict()),
            record("kelvin_norms", c.as_dict(), r.norm_discrepancy, 0.02)]


def _check_scaling(c, grid, cfg, rng, workers):
    fs, gs = default_test_pair(c.n)
    out = []
    for tau in (0.5, 2.0):
        for mode in ("adapted", "common"):
            r = scaling_check(fs, gs, tau, c, grid, mode)
            out.append(record(f"scaling_{mode}_tau{tau:g}", {"tau": tau, "mode": mode}, r.worst, 0.005,
                              r.to_dict()))
    return out


def _check_symmetry(c, grid, cfg, rng, workers):
    init = GaussianBump((1.0,) + (0.0,) * (c.n - 1) + (1.0,), 1.0)
    res = power_iterate(c, grid, init)
    centre, resid = symmetry_residual(res.f_star, c.p)
    mono = monotonicity_violation(res.f_star, centre)
    det = {"centre": list(centre), "n_est": res.n_est, "converged": res.converged}
    return [record("symmetry_residual", det, resid, 1e-3), record("monotonicity", det, mono, 1e-3)]


def _check_representation(c, grid, cfg, rng, workers):
    nx = int(cfg.get("checks", {}).get("representation_grid", 128))
    u = Product(GaussianBump((0.0, 2.0), 0.8), CutoffBump((0.0, 2.0), 1.5, 1.0))
    g2 = build_grid(1, 4.0, 4.0, nx, nx, 1.0)
    probes = rng.uniform([-0.8, 1.4], [0.8, 2.6], size=(10, 2))
    r = representation_check(u, probes, g2)
    far = representation_check(u, [(3.5, 0.5), (-3.5, 3.5)], g2)
    return [record("representation", {"probes": probes.tolist()}, r["max_error"], 0.01),
            record("representation_far", {}, far["max_error"], 1e-3)]


def hardy_mc_records(c, n_samples, seed, workers):
    """Monte Carlo of the four weight integrals against C_i R^{e_i} at R = 1."""
    h = hardy_constants(c)
    q, pp, dim = c.q, c.p_prime, c.n + 1
    R = 1.0

    def radius(pts):
        return np.sqrt(np.sum(pts * pts, axis=-1))

    cases = [
        (1, lambda x: x[:, -1] ** (-c.beta * q) * radius(x) ** (-c.lam * q), ExteriorBallPlus(R), c.beta * q),
        (2, lambda x: x[:, -1] ** (-c.alpha * pp), BallPlus(R), c.alpha * pp),
        (3, lambda x: x[:, -1] ** (-c.alpha * pp) * radius(x) ** (-c.lam * pp), ExteriorBallPlus(R),
         c.alpha * pp),
        (4, lambda x: x[:, -1] ** (-c.beta * q), BallPlus(R), c.beta * q),
    ]
    out = []
    for i, fn, region, sigma in cases:
        res = mc_integral(fn, region, dim, n_samples, seed + i, workers, t_exponent=max(sigma, 0.0))
        exact = h.value(i, R)
        z = abs(res.estimate - exact) / res.stderr if res.stderr > 0 else 0.0
        out.append(record(f"hardy_C{i}", {"R": R, "samples": n_samples}, z, 3.0,
                          {"estimate": res.estimate, "stderr": res.stderr, "exact": exact,
                           "heavy_tail": res.heavy_tail}))
    return out


def _check_hardy(c, grid, cfg, rng, workers, seed=0):
    n_samples = int(cfg.get("checks", {}).get("mc_samples", 200_000))
    return hardy_mc_records(c, n_samples, seed, workers)


def _check_hyperbolic(c, grid, cfg, rng, workers):
    fa, fb = forced_hyperbolic_weights(c.n, c.lam, c.p, c.r)
    if abs(fa - c.alpha) > 1e-12 or abs(fb - c.beta) > 1e-12:
        return [record("hyperbolic", c.as_dict(), float("inf"), 1e-10,
                       {"error": "weights differ from the forced values", "forced_alpha": fa,
                        "forced_beta": fb})]
    fs, gs = default_test_pair(c.n)
    r = hyperbolic_check(fs, gs, c, grid)
    return [record("hyperbolic", c.as_dict(), max(r.discrepancy, r.norm_discrepancy), 1e-10, r.to_dict())]


_CHECKS = {
    "duality": _check_duality, "kelvin": _check_kelvin, "scaling": _check_scaling,
    "symmetry": _check_symmetry, "representation": _check_representation,
    "hardy": _check_hardy, "hyperbolic": _check_hyperbolic,
}


def parse_suite(text: str | None) -> list[str]:
    if text is None:
        return list(SUITES)
    names = [s.strip() for s in text.split(",") if s.strip()]
    if not names:
        raise UsageError("empty suite")
    if names == ["all"]:
        return list(SUITES)
    bad = [s for s in names if s not in SUITES]
    if bad:
        raise UsageError(f"unknown suite names {bad}; choose from {list(SUITES)}")
    return names


def cmd_check(cfg: dict, args) -> tuple[int, dict]:
    names = parse_suite(args.suite)
    try:
        c = exponent_config(cfg)
    except ExponentError as exc:
        return 2, {"error": str(exc)}
    grid = grid_from(cfg, c.n)
    records = []
    for i, name in enumerate(names):
        rng = np.random.default_rng([args.seed, i])
        try:
            if name == "hardy":
                recs = _check_hardy(c, grid, cfg, rng, args.workers, seed=args.seed)
            else:
                recs = _CHECKS[name](c, grid, cfg, rng, args.workers)
        except (ExponentError, NotImplementedError, ValueError) as exc:
            recs = [record(name, {}, float("inf"), 0.0, {"error": str(exc)})]
        records.extend(recs)
    passed = all(r.passed for r in records)
    return (0 if passed else 2), {"config": c.as_dict(), "suite": names, "passed": passed,
                                  "checks": [r.to_dict() for r in records]}


COMMANDS = {"validate": cmd_validate, "bounds": cmd_bounds, "estimate": cmd_estimate, "check": cmd_check}


def _jsonable(obj):
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="steinweiss", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", help="write the JSON result here (default: stdout)")
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                    help="Monte Carlo worker threads; results do not depend on it")
    ap.add_argument("--seed", type=int, default=None,
                    help="RNG seed for check (default: the config seed, else 0)")
    ap.add_argument("--suite", help=f"comma-separated subset of {','.join(SUITES)} (check only)")
    return ap


def main(argv=None) -> int:
    level = os.environ.get("STEINWEISS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        if args.workers < 1:
            raise UsageError("workers must be positive")
        if args.suite is not None and args.command != "check":
            raise UsageError("--suite only applies to the check command")
        cfg = load_config(args.config)
        if args.seed is None:
            args.seed = cfg.get("seed", 0)
        if isinstance(args.seed, bool) or not isinstance(args.seed, int) or not 0 <= args.seed < 2 ** 64:
            raise UsageError("seed must be an unsigned 64-bit integer")
        code, payload = COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    doc = {"schema_version": SCHEMA_VERSION, "command": args.command, "result": _jsonable(payload)}
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    meta = {"schema_version": SCHEMA_VERSION, "version": __version__, "workers": args.workers,
            "seed": args.seed, "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat()}
    try:
        if args.out:
            Path(args.out).write_text(text)
            Path(args.out).with_suffix(".meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2))
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return 1
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
