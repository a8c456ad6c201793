import random
from fractions import Fraction

import numpy as np
import pytest

from decomp.domain import Constraint, region
from decomp.expr import add, const, exp, log, mul, pow_, var
from decomp.latex import parse_problem

ROOT = __import__("pathlib").Path(__file__).resolve().parents[1]

FENCHEL_TEXT = r"x y \ll x\log x + e^y, x \ge 1, y \ge 0"
SPECTRAL_TEXT = (r"\sum_{d=0}^{\infty} \frac{2d+1}{2h^2\left(1+\frac{d(d+1)}{h^2}\right)"
            r"\left(1+\frac{d(d+1)}{h^2 m^2}\right)^2} \ll 1+\log(m^2), h \ge 1, m \ge 1")


@pytest.fixture(scope="session")
def fenchel():
    return parse_problem(FENCHEL_TEXT)


@pytest.fixture(scope="session")
def spectral():
    return parse_problem(SPECTRAL_TEXT)


@pytest.fixture(scope="session")
def corpus_dir():
    return ROOT / "corpus"


def random_expr(rng: random.Random, names=("x", "y"), depth=0):
    """Random expression over positive-variable domains (log-safe shapes)."""
    r = rng.random()
    if depth > 3 or r < 0.3:
        if rng.random() < 0.5:
            return var(rng.choice(names))
        return const(Fraction(rng.randint(1, 12), rng.randint(1, 6)))
    if r < 0.5:
        return add(random_expr(rng, names, depth + 1),
                   random_expr(rng, names, depth + 1))
    if r < 0.7:
        return mul(random_expr(rng, names, depth + 1),
                   random_expr(rng, names, depth + 1))
    if r < 0.8:
        p = rng.choice([Fraction(2), Fraction(3), Fraction(-1),
                        Fraction(-2), Fraction(1, 2)])
        return pow_(add(random_expr(rng, names, depth + 1), const(1)), p)
    if r < 0.9:
        return log(add(const(1), random_expr(rng, names, depth + 1)))
    return exp(mul(const(Fraction(rng.choice([-2, -1, 1]), 2)),
                   var(rng.choice(names))))


def positive_region(names=("x", "y")):
    return region(list(names), [Constraint(var(n), ">=", const(Fraction(1, 2)))
                                for n in names])


def random_assignment(rng: random.Random, names=("x", "y"), lo=0.5, hi=30.0):
    return {n: Fraction(rng.randint(int(lo * 8), int(hi * 8)), 8) for n in names}


@pytest.fixture
def np_rng():
    return np.random.default_rng(12345)
