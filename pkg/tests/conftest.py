import random
from fractions import Fraction

import pytest

from monotone_expander.discretize import discretize
from monotone_expander.family import build_family
from monotone_expander.forge import ForgeConfig, forge
from monotone_expander.sl2 import Mat2


def random_sl2(rng: random.Random, span=9) -> Mat2:
    """Random element of SL2(Q) with small numerators and denominators."""
    while True:
        a = Fraction(rng.randint(-span, span), rng.randint(1, span))
        b = Fraction(rng.randint(-span, span), rng.randint(1, span))
        c = Fraction(rng.randint(-span, span), rng.randint(1, span))
        if a != 0:
            return Mat2(a, b, c, (1 + b * c) / a)


@pytest.fixture(scope="session")
def sanov_forge():
    return forge(ForgeConfig(seed_mode="sanov_power", q=3, ell=8))


@pytest.fixture(scope="session")
def search_forge():
    return forge(ForgeConfig(seed_mode="paper_search", q=3, ell=8))


@pytest.fixture(scope="session")
def search_family(search_forge):
    return build_family(search_forge)


@pytest.fixture(scope="session")
def graph_cache(search_family):
    cache = {}

    def get(n):
        if n not in cache:
            cache[n] = discretize(search_family, n)
        return cache[n]

    return get


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
