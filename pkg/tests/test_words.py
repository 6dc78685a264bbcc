import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monotone_expander.errors import BudgetExceeded
from monotone_expander.sl2 import IDENTITY, Mat2, mat_inv, mat_mul
from monotone_expander.words import (
    EMPTY,
    Letter,
    Word,
    build_W,
    concat_reduce,
    count_reduced,
    enumerate_reduced,
    freeness_certificate,
    identity_words,
    inverse,
    kesten_counts,
    kesten_limit,
    kesten_return_prob,
    power,
    word_budget,
    word_eval,
    WordEvaluator,
)

A = Mat2(1, 1, 0, 1)
B = Mat2(1, 0, 1, 1)
SANOV = (Mat2(1, 2, 0, 1), Mat2(1, 0, 2, 1))

reduced_codes = st.lists(st.integers(0, 3), max_size=12).map(
    lambda cs: Word.from_letters([Letter.from_code(c) for c in cs], reduce=True)
)


def brute_shortest_relation(gens, L):
    """Evaluate every reduced word by straight multiplication; first identity in shortlex order."""
    mats = []
    for g in gens:
        mats += [g, mat_inv(g)]
    for m in range(1, L + 1):
        for codes in itertools.product(range(len(mats)), repeat=m):
            if any(y == x ^ 1 for x, y in zip(codes, codes[1:])):
                continue
            P = IDENTITY
            for c in codes:
                P = mat_mul(P, mats[c])
            if P == IDENTITY:
                return codes
    return None


def test_letter_codes():
    assert Letter(0, 1).code == 0
    assert Letter(0, -1).code == 1
    assert Letter(1, 1).code == 2
    assert Letter.from_code(3) == Letter(1, -1)


def test_word_rejects_unreduced():
    with pytest.raises(ValueError):
        Word((0, 1))
    assert Word.from_letters([(0, 1), (0, -1), (1, 1)], reduce=True) == Word((2,))


def test_text_round_trip():
    w = Word((0, 3, 0))
    assert w.to_text() == "+0,-1,+0"
    assert Word.from_text("+0,−1,+0") == w
    assert Word.from_text("") == EMPTY


@given(reduced_codes, reduced_codes)
def test_concat_matches_evaluation(u, v):
    assert word_eval(concat_reduce(u, v), SANOV) == mat_mul(word_eval(u, SANOV), word_eval(v, SANOV))


@given(reduced_codes)
def test_inverse_word(w):
    assert concat_reduce(w, inverse(w)) == EMPTY
    assert word_eval(inverse(w), SANOV) == mat_inv(word_eval(w, SANOV))


def test_power():
    assert power(Word((0, 3)), 3) == Word((0, 3, 0, 3, 0, 3))
    assert power(Word((0, 3)), -1) == Word((2, 1))


@pytest.mark.parametrize("rank,length", [(1, 5), (2, 5), (3, 4)])
def test_count_matches_enumeration(rank, length):
    words = list(enumerate_reduced(rank, length))
    assert len(words) == count_reduced(rank, length)
    assert len(set(words)) == len(words)
    # shortlex order
    assert words == sorted(words, key=lambda w: (len(w), w.codes))


def test_enumeration_budget():
    with pytest.raises(BudgetExceeded):
        enumerate_reduced(2, 12, budget=1000)


def test_budget_env(monkeypatch):
    monkeypatch.setenv("MONOEXP_WORD_BUDGET", "123")
    assert word_budget() == 123
    assert word_budget(7) == 7


def test_build_W_shape():
    W = build_W(4)
    stems = [w for w in enumerate_reduced(2, 4, min_length=4) if w.codes[0] == 0 and w.codes[-1] == 2]
    assert len(W) == len(stems) == 7
    for w in W:
        assert len(w) == 8
        assert w.codes[0] == 0 and w.codes[3] == 2
        assert w.codes[:4] == w.codes[4:]
    assert W == sorted(W)


def test_evaluator_agrees_with_word_eval():
    ev = WordEvaluator(SANOV)
    for w in enumerate_reduced(2, 4):
        assert ev(w) == word_eval(w, SANOV)


@pytest.mark.parametrize("method", ["dfs", "split"])
def test_unipotent_pair_relation_matches_brute_force(method):
    expected = brute_shortest_relation((A, B), 6)
    cert = freeness_certificate((A, B), 6, method=method)
    assert not cert.passed
    assert cert.witness.codes == expected
    assert cert.witness.to_text() == "+0,+1,-0,+1,+0,-1"


@pytest.mark.parametrize("L", [5, 6, 7])
def test_routes_agree_on_sanov(L):
    d = freeness_certificate(SANOV, L, method="dfs")
    s = freeness_certificate(SANOV, L, method="split")
    assert d.passed and s.passed
    assert brute_shortest_relation(SANOV, min(L, 5)) is None


@pytest.mark.parametrize("L", [6, 7, 10])
def test_routes_agree_on_failing_pair(L):
    d = freeness_certificate((A, B), L, method="dfs")
    s = freeness_certificate((A, B), L, method="split")
    assert d.witness == s.witness


def test_torsion_found_for_finite_order():
    rot = Mat2(0, -1, 1, 0)
    cert = freeness_certificate((rot, A), 4)
    assert not cert.passed
    assert cert.witness == Word((0, 0, 0, 0)) or len(cert.witness) == 4


def test_identity_words_are_identities():
    ws = identity_words((A, B), 6)
    assert ws
    for w in ws:
        assert word_eval(w, (A, B)) == IDENTITY


def brute_return_count(k, t):
    count = 0
    for seq in itertools.product(range(2 * k), repeat=t):
        stack = []
        for c in seq:
            if stack and stack[-1] == c ^ 1:
                stack.pop()
            else:
                stack.append(c)
        count += not stack
    return count


@pytest.mark.parametrize("k,t", [(2, 2), (2, 4), (2, 6), (2, 8), (3, 4), (2, 7)])
def test_kesten_counts_match_brute_force(k, t):
    assert kesten_counts(k, t)[0] == brute_return_count(k, t)
    assert sum(kesten_counts(k, t)) == (2 * k) ** t


def test_kesten_return_prob_small():
    assert kesten_return_prob(2, 2) == Fraction(1, 4)
    assert kesten_limit(2) == pytest.approx(3**0.5 / 2)
    with pytest.raises(ValueError):
        kesten_return_prob(1, 4)
