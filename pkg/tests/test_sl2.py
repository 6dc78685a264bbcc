import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monotone_expander.errors import DeterminantError, PoleError
from monotone_expander.sl2 import (
    IDENTITY,
    INF,
    Mat2,
    det4,
    dist_sq,
    flip,
    inner4,
    mat_inv,
    mat_mul,
    mat_pow,
    mobius_apply,
    mobius_derivative,
    norm_sq,
    pole,
    trace,
)

small = st.fractions(min_value=-20, max_value=20, max_denominator=12)
nonzero = small.filter(lambda x: x != 0)


@st.composite
def sl2(draw):
    a = draw(nonzero)
    b = draw(small)
    c = draw(small)
    return Mat2(a, b, c, (1 + b * c) / a)


def laplace_det(rows):
    if len(rows) == 1:
        return rows[0][0]
    total = Fraction(0)
    for j, x in enumerate(rows[0]):
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        total += (-1) ** j * x * laplace_det(minor)
    return total


def test_determinant_enforced():
    with pytest.raises(DeterminantError):
        Mat2(1, 1, 1, 1)
    with pytest.raises(ValueError):
        Mat2(2, 0, 0, 1)


def test_text_round_trip_and_canonical_form():
    g = Mat2(Fraction(1, 2), 3, Fraction(-1, 3), 0)
    assert g.to_text() == "1/2 3/1 -1/3 0/1"
    assert Mat2.from_text(g.to_text()) == g
    assert Mat2.from_text("1/1 −2/1 0/1 1/1") == Mat2(1, -2, 0, 1)


def test_infinity_handling():
    g = Mat2(2, 1, 1, 1)
    assert mobius_apply(g, INF) == 2
    assert mobius_apply(g, pole(g)) is INF
    assert mobius_apply(Mat2(1, 5, 0, 1), INF) is INF
    assert pole(Mat2(1, 5, 0, 1)) is INF
    with pytest.raises(PoleError):
        mobius_derivative(g, -1)


def test_mat_pow_matches_repeated_product():
    g = Mat2(1, 2, 0, 1)
    assert mat_pow(g, 5) == Mat2(1, 10, 0, 1)
    assert mat_pow(g, -3) == Mat2(1, -6, 0, 1)
    assert mat_pow(g, 0) == IDENTITY


def test_denominator_is_lcm():
    assert Mat2(Fraction(1, 2), 0, Fraction(1, 3), 2).denominator() == 6


@settings(max_examples=200, deadline=None)
@given(sl2(), sl2(), small)
def test_action_is_functorial(g, h, x):
    assert mobius_apply(mat_mul(g, h), x) == mobius_apply(g, mobius_apply(h, x))


@settings(max_examples=200, deadline=None)
@given(sl2(), sl2(), small)
def test_chain_rule(g, h, x):
    hx = mobius_apply(h, x)
    if hx is INF or mobius_apply(g, hx) is INF:
        return
    lhs = mobius_derivative(mat_mul(g, h), x)
    assert lhs == mobius_derivative(g, hx) * mobius_derivative(h, x)


@settings(max_examples=200, deadline=None)
@given(sl2())
def test_inverse(g):
    assert mat_mul(g, mat_inv(g)) == IDENTITY
    assert mat_mul(mat_inv(g), g) == IDENTITY


@settings(max_examples=200, deadline=None)
@given(sl2(), sl2())
def test_trace_is_pairing_with_flip(g, h):
    assert trace(mat_mul(mat_inv(h), g)) == inner4(g, flip(h))


@settings(max_examples=100, deadline=None)
@given(sl2(), sl2(), sl2(), sl2())
def test_det4_matches_cofactor_expansion(g0, g1, g2, g3):
    rows = [list(g.entries) for g in (g0, g1, g2, g3)]
    assert det4(g0, g1, g2, g3) == laplace_det(rows)


def test_det4_zero_on_dependent_rows():
    g = Mat2(1, 1, 0, 1)
    assert det4(g, g, Mat2(2, 1, 1, 1), IDENTITY) == 0


@settings(max_examples=100, deadline=None)
@given(sl2(), sl2())
def test_distance_is_symmetric_and_exact(g, h):
    assert dist_sq(g, h) == dist_sq(h, g)
    assert dist_sq(g, g) == 0
    assert norm_sq(g) == dist_sq(g, Mat2._trusted(Fraction(0), Fraction(0), Fraction(0), Fraction(0)))


def test_derivative_at_random_points_is_positive():
    rng = random.Random(3)
    g = Mat2(3, 1, 2, 1)
    for _ in range(100):
        x = Fraction(rng.randint(-50, 50), rng.randint(1, 50))
        if x != -Fraction(1, 2):
            assert mobius_derivative(g, x) > 0
