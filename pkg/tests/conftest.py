"""Shared fixtures.  Expensive solves are session scoped so the acceptance
suite and the unit tests reuse the same converged extremals."""
from __future__ import annotations

import numpy as np
import pytest

from steinweiss.discretization import Field, GaussianBump, build_grid, sample
from steinweiss.exponents import ExponentConfig
from steinweiss.extremal import power_iterate

# criterion number -> list of (passed, message); filled by tests/test_acceptance.py
CRITERIA: dict[int, list] = {}


def report(k: int, passed: bool, message: str) -> None:
    line = f"{'PASS' if passed else 'FAIL'} criterion {k}: {message}"
    print(line)
    CRITERIA.setdefault(k, []).append((bool(passed), message))


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        parts = CRITERIA[k]
        ok = all(p for p, _ in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: "
                                    + " | ".join(m for _, m in parts))


@pytest.fixture(scope="session")
def baseline():
    return ExponentConfig.make(1, 1, 0.1, 0.1, 10 / 7, 10 / 7)


@pytest.fixture(scope="session")
def grid65():
    """Odd x-count: the node set is symmetric about x = 0."""
    return build_grid(1, 4.0, 4.0, 65, 64, 2.0)


def asymmetric_init(grid):
    """Two off-centre bumps of different size; no reflection symmetry in x."""
    a = sample(GaussianBump((0.7, 1.2), 0.6), grid).values
    b = sample(GaussianBump((-1.1, 0.5), 0.35), grid).values
    return Field(grid, a + 0.4 * b)


@pytest.fixture(scope="session")
def extremal65(baseline, grid65):
    return power_iterate(baseline, grid65, asymmetric_init(grid65), 500, 1e-8)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
