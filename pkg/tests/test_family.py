from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monotone_expander.errors import EmptyInput, InvalidK, TooLarge
from monotone_expander.expansion import periodic_set
from monotone_expander.family import (
    Interval,
    IntervalSet,
    apply_family,
    balance_test,
    build_family,
    cell,
    cell_masses,
    default_K,
    deviation,
    expansion_ratio,
    shift_family,
    sup_deviation,
)
from monotone_expander.sl2 import Mat2

unit_frac = st.fractions(min_value=0, max_value=1, max_denominator=64)


@st.composite
def interval_sets(draw, max_parts=5):
    pts = draw(st.lists(unit_frac, min_size=2, max_size=2 * max_parts))
    pts = sorted(pts)
    return IntervalSet(Interval(pts[i], pts[i + 1]) for i in range(0, len(pts) - 1, 2))


def sampled_image_measure(fam, A, grid=200_000):
    """Fraction of grid points y with some map sending a point of A to y, via float inverses."""
    y = (np.arange(grid) + 0.5) / grid
    hit = np.zeros(grid, dtype=bool)
    parts = [(float(p.lo), float(p.hi)) for p in A]
    for m in fam.maps:
        lo, hi = float(m.domain.lo), float(m.domain.hi)
        if m.kind == "mobius":
            a, b, c, d = (float(v) for v in m.g.entries)
            with np.errstate(divide="ignore", invalid="ignore"):
                x = (d * y - b) / (-c * y + a)
        elif m.kind == "identity":
            x = y
        else:
            step = 1 / m.K if m.kind == "shift_plus" else -1 / m.K
            x = y - step
        inside = (x >= lo) & (x <= hi)
        member = np.zeros(grid, dtype=bool)
        for plo, phi in parts:
            member |= (x >= plo) & (x <= phi)
        hit |= inside & member
    return hit.mean()


@settings(max_examples=150, deadline=None)
@given(interval_sets(), interval_sets())
def test_inclusion_exclusion(A, B):
    assert A.union(B).measure == A.measure + B.measure - A.intersect(B).measure
    assert A.union(B).contains(A)


@settings(max_examples=100, deadline=None)
@given(interval_sets())
def test_json_round_trip(A):
    assert IntervalSet.from_json(A.to_json()) == A


def test_zero_length_pieces_dropped():
    assert len(IntervalSet([(0, 0), (Fraction(1, 2), Fraction(1, 2))])) == 0
    assert IntervalSet([(0, Fraction(1, 2)), (Fraction(1, 4), 1)]).measure == 1


def test_default_K():
    assert default_K(Fraction(1, 4)) == 16
    assert default_K(None) == 2
    assert default_K(100) == 2


def test_invalid_K():
    with pytest.raises(InvalidK):
        build_family([], 1)


def test_family_counts(search_forge, search_family):
    assert search_family.K == 16
    assert len(search_family.maps) == 17
    kinds = [m.kind for m in search_family.maps]
    assert kinds.count("identity") == 1 and kinds.count("shift_plus") == 1


def test_maps_keep_unit_interval(search_family):
    for m in search_family.maps:
        assert Fraction(0) <= m(m.domain.lo) <= m(m.domain.hi) <= Fraction(1)
        mid = (m.domain.lo + m.domain.hi) / 2
        assert m(m.domain.lo) < m(mid) < m(m.domain.hi)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 16), unit_frac, unit_frac)
def test_preimage_membership(search_family, idx, lo, hi):
    m = search_family.maps[idx]
    lo, hi = min(lo, hi), max(lo, hi)
    if lo == hi:
        return  # point targets are measure zero and dropped
    pre = m.preimage(Interval(lo, hi))
    for k in range(33):
        x = m.domain.lo + (m.domain.hi - m.domain.lo) * Fraction(k, 32)
        inside = lo <= m(x) <= hi
        assert inside == any(p.lo <= x <= p.hi for p in pre)


@settings(max_examples=25, deadline=None)
@given(interval_sets(max_parts=4).filter(lambda A: A.measure > Fraction(1, 32)))
def test_image_measure_matches_sampling(search_family, A):
    exact = float(apply_family(search_family, A).measure)
    assert abs(exact - sampled_image_measure(search_family, A)) < 1e-3


def test_ratio_fixtures(search_family):
    assert expansion_ratio(search_family, IntervalSet([(0, Fraction(1, 2))])) == Fraction(9, 8)
    assert expansion_ratio(search_family, periodic_set(16)) == 2


def test_ratio_guards(search_family):
    with pytest.raises(TooLarge) as exc:
        expansion_ratio(search_family, IntervalSet([(0, Fraction(3, 4))]))
    A = IntervalSet([(0, Fraction(3, 4))])
    assert exc.value.ratio == apply_family(search_family, A).measure / A.measure
    with pytest.raises(EmptyInput):
        expansion_ratio(search_family, IntervalSet())


def test_shift_family_only_shifts():
    fam = shift_family(4)
    A = IntervalSet([cell(2, 4)])
    assert apply_family(fam, A) == IntervalSet([(0, Fraction(3, 4))])


def test_deviation_exact_vs_dense_grid(search_family):
    dev = deviation(search_family, kinds=("mobius",))
    seen_slope = 0.0
    seen_shift = 0.0
    for m in search_family.mobius_maps():
        a, b, c, d = (float(v) for v in m.g.entries)
        x = np.linspace(float(m.domain.lo), float(m.domain.hi), 20001)
        seen_slope = max(seen_slope, np.max(np.abs(1 / (c * x + d) ** 2 - 1)))
        seen_shift = max(seen_shift, np.max(np.abs((a * x + b) / (c * x + d) - x)))
    assert seen_slope <= float(dev.sup_slope) + 1e-12
    assert seen_shift <= float(dev.sup_shift) + 1e-12
    assert float(dev.sup_slope) - seen_slope < 1e-6
    assert float(dev.sup_shift) - seen_shift < 1e-6
    shift, _ = sup_deviation(search_family)
    assert shift == Fraction(1, 16)


def test_balance_masses_sum(search_family):
    A = IntervalSet([(Fraction(1, 10), Fraction(3, 10)), (Fraction(1, 2), Fraction(13, 20))])
    masses = cell_masses(A, 16)
    assert sum(masses) == A.measure
    res = balance_test(A, 16, Fraction(1, 100))
    assert res.witness is not None


def test_balanced_periodic_set():
    res = balance_test(periodic_set(16), 16, Fraction(1, 100))
    assert res.balanced and res.balanced_bound_holds


def test_dead_map_is_dropped():
    far = Mat2(1, 5, 0, 1)  # x -> x + 5 misses [0, 1]
    with pytest.warns(UserWarning):
        fam = build_family([far], 4)
    assert all(m.kind != "mobius" for m in fam.maps)
