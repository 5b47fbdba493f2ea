import random
from fractions import Fraction
from pathlib import Path

import pytest

from wdvv_submanifolds.potential_field import MetricMatrix, Polynomial

FIXTURES = Path(__file__).parent / "fixtures"

A3_TERMS = {
    (2, 0, 1): Fraction(1, 2),
    (1, 2, 0): Fraction(1, 2),
    (0, 2, 2): Fraction(1, 4),
    (0, 0, 5): Fraction(1, 60),
}
GENERIC_BASE = (Fraction(3, 10), Fraction(-1, 5), Fraction(1, 4))


def a3_potential(eps=0) -> Polynomial:
    """Certified N = 3 WDVV solution, optionally plus eps * (u1 u2)^2."""
    return Polynomial(3, A3_TERMS) + Polynomial(3, {(2, 2, 0): Fraction(eps)})


def random_polynomial(rng: random.Random, dim: int, degree: int, terms: int = 6,
                      min_degree: int = 0) -> Polynomial:
    out = {}
    for _ in range(terms):
        total = rng.randint(min_degree, degree)
        exps = [0] * dim
        for _ in range(total):
            exps[rng.randrange(dim)] += 1
        out[tuple(exps)] = Fraction(rng.randint(-9, 9), rng.randint(1, 6))
    return Polynomial(dim, out)


def random_point(rng: random.Random, dim: int) -> tuple:
    return tuple(Fraction(rng.randint(-12, 12), rng.randint(1, 9)) for _ in range(dim))


def random_metric(rng: random.Random, n: int) -> MetricMatrix:
    while True:
        rows = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                rows[i][j] = rows[j][i] = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
        try:
            return MetricMatrix(rows, exact=True)
        except ValueError:
            continue


@pytest.fixture
def rng():
    return random.Random(20261019)


@pytest.fixture
def eta_anti():
    return MetricMatrix.antidiagonal(3)


@pytest.fixture
def phi_a3():
    return a3_potential()


@pytest.fixture
def phi_perturbed():
    return a3_potential(Fraction(1, 100))


@pytest.fixture
def phi_perturbed_tenth():
    return a3_potential(Fraction(1, 10))


# -- acceptance reporting ------------------------------------------------------


def pytest_configure(config):
    config.acceptance_lines = []


@pytest.fixture
def acceptance_log(request):
    """Record one PASS/FAIL line per acceptance criterion."""
    lines = request.config.acceptance_lines

    def log(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} | {detail}"
        lines.append(line)
        print(line)
        return ok

    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
