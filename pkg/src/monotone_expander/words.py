"""Reduced words in a free group, their evaluation in SL2(Q), and freeness checks.

A letter is a generator index with a sign.  Internally a letter is packed into
a small integer code ``2 * index + (0 if sign > 0 else 1)``, so the inverse of
code ``x`` is ``x ^ 1`` and sorting codes sorts words lexicographically with
the order g0, g0^-1, g1, g1^-1, ...
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, NamedTuple, Sequence

from . import kernels
from .errors import BudgetExceeded
from .sl2 import IDENTITY, Mat2, mat_inv, mat_mul

DEFAULT_WORD_BUDGET = 10**7
BUDGET_ENV = "MONOEXP_WORD_BUDGET"

# primes below 2**62 for the modular relation search
SEARCH_PRIMES = (2**61 - 1, 2**60 - 93, 2**59 - 55)


def word_budget(override=None) -> int:
    """The node budget: explicit override, else $MONOEXP_WORD_BUDGET, else 10**7."""
    if override is not None:
        return int(override)
    env = os.environ.get(BUDGET_ENV)
    if env:
        return int(env)
    return DEFAULT_WORD_BUDGET


class Letter(NamedTuple):
    index: int
    sign: int

    @property
    def code(self) -> int:
        return 2 * self.index + (0 if self.sign > 0 else 1)

    @classmethod
    def from_code(cls, code: int) -> "Letter":
        return cls(code >> 1, -1 if code & 1 else 1)

    def __str__(self):
        return f"{'+' if self.sign > 0 else '-'}{self.index}"


@dataclass(frozen=True, order=True)
class Word:
    """A reduced word, stored as a tuple of letter codes.

    Construction rejects any adjacent pair ``x, x ^ 1``; use
    :func:`concat_reduce` or :meth:`from_letters` with ``reduce=True`` to
    build words that may need cancellation.
    """

    codes: tuple = field(default=())

    def __post_init__(self):
        codes = tuple(int(c) for c in self.codes)
        for c in codes:
            if c < 0:
                raise ValueError(f"negative letter code {c}")
        for x, y in zip(codes, codes[1:]):
            if y == x ^ 1:
                raise ValueError(f"word is not reduced at {Letter.from_code(x)},{Letter.from_code(y)}")
        object.__setattr__(self, "codes", codes)

    @classmethod
    def from_letters(cls, letters, reduce=False) -> "Word":
        codes = [Letter(*l).code for l in letters]
        if reduce:
            return cls(tuple(_free_reduce(codes)))
        return cls(tuple(codes))

    @property
    def letters(self) -> tuple:
        return tuple(Letter.from_code(c) for c in self.codes)

    def __len__(self):
        return len(self.codes)

    def __iter__(self):
        return iter(self.letters)

    def rank_needed(self) -> int:
        return max((c >> 1 for c in self.codes), default=-1) + 1

    def to_text(self) -> str:
        return ",".join(str(l) for l in self.letters)

    @classmethod
    def from_text(cls, text: str) -> "Word":
        text = text.strip()
        if not text:
            return cls(())
        letters = []
        for tok in text.split(","):
            tok = tok.strip().replace("−", "-")
            sign = -1 if tok.startswith("-") else 1
            letters.append(Letter(int(tok.lstrip("+-")), sign))
        return cls.from_letters(letters)

    def __str__(self):
        return self.to_text() or "<empty>"


EMPTY = Word(())


def _free_reduce(codes) -> list:
    out: list = []
    for c in codes:
        if out and out[-1] == c ^ 1:
            out.pop()
        else:
            out.append(c)
    return out


def concat_reduce(u: Word, v: Word) -> Word:
    """Free-group product: concatenate and cancel at the seam."""
    left = list(u.codes)
    right = v.codes
    i = 0
    while left and i < len(right) and left[-1] == right[i] ^ 1:
        left.pop()
        i += 1
    return Word(tuple(left) + right[i:])


def inverse(w: Word) -> Word:
    return Word(tuple(c ^ 1 for c in reversed(w.codes)))


def power(w: Word, k: int) -> Word:
    base = w if k >= 0 else inverse(w)
    out = EMPTY
    for _ in range(abs(k)):
        out = concat_reduce(out, base)
    return out


def count_reduced(rank: int, length: int, exact=False) -> int:
    """Number of reduced words of length <= ``length`` (or == with ``exact``)."""
    def exactly(m):
        return 1 if m == 0 else 2 * rank * (2 * rank - 1) ** (m - 1)

    if exact:
        return exactly(length)
    return sum(exactly(m) for m in range(length + 1))


def enumerate_reduced(rank: int, length: int, budget=None, min_length=0) -> Iterator[Word]:
    """All reduced words of length ``min_length..length``, shortest first, lexicographic within a length."""
    if rank < 1:
        raise ValueError("rank must be at least 1")
    if length < 0:
        raise ValueError("length must be non-negative")
    cap = word_budget(budget)
    needed = count_reduced(rank, length) - (count_reduced(rank, min_length - 1) if min_length > 0 else 0)
    if needed > cap:
        raise BudgetExceeded(f"{needed} words exceed the budget of {cap}", needed=needed, budget=cap)
    return _enumerate(rank, length, min_length)


def _enumerate(rank, length, min_length):
    nl = 2 * rank
    layer = [()]
    for m in range(length + 1):
        if m >= min_length:
            for codes in layer:
                yield Word(codes)
        if m == length:
            break
        layer = [w + (x,) for w in layer for x in range(nl) if not w or x != w[-1] ^ 1]


def build_W(ell: int, budget=None) -> list:
    """Squares of reduced length-``ell`` words over two generators that start with g0 and end with g1.

    Returned sorted lexicographically.  Such a square is itself reduced
    because the last letter g1 cannot cancel the first letter g0.
    """
    if ell < 2:
        raise ValueError("ell must be at least 2")
    cap = word_budget(budget)
    # interior letters: at most 3**(ell - 2) branches
    estimate = 3 ** (ell - 2)
    if estimate > cap:
        raise BudgetExceeded(f"about {estimate} words exceed the budget of {cap}", needed=estimate, budget=cap)
    first, last = 0, 2
    stems = [(first,)]
    for _ in range(ell - 2):
        stems = [s + (x,) for s in stems for x in range(4) if x != s[-1] ^ 1]
    words = [s + (last,) for s in stems if last != s[-1] ^ 1]
    return sorted(Word(w + w) for w in words)


def _letter_images(assignment) -> list:
    if isinstance(assignment, Mapping):
        rank = max(assignment) + 1
        gens = [assignment.get(i) for i in range(rank)]
    else:
        gens = list(assignment)
    images = []
    for g in gens:
        if g is None:
            images.extend([None, None])
        else:
            images.extend([g, mat_inv(g)])
    return images


def word_eval(w: Word, assignment) -> Mat2:
    """Ordered product of the letter images; ``assignment`` maps generator index to Mat2."""
    images = _letter_images(assignment)
    out = IDENTITY
    for c in w.codes:
        if c >= len(images) or images[c] is None:
            raise KeyError(f"no matrix assigned to generator {c >> 1}")
        out = mat_mul(out, images[c])
    return out


class WordEvaluator:
    """Evaluates many words against a fixed assignment, caching prefixes."""

    def __init__(self, assignment):
        self.images = _letter_images(assignment)
        self._cache = {(): IDENTITY}

    def __call__(self, w) -> Mat2:
        codes = w.codes if isinstance(w, Word) else tuple(w)
        hit = self._cache.get(codes)
        if hit is not None:
            return hit
        value = mat_mul(self(codes[:-1]), self.images[codes[-1]])
        self._cache[codes] = value
        return value


# ---------------------------------------------------------------------------
# freeness


@dataclass(frozen=True)
class FreenessCertificate:
    passed: bool
    depth: int
    witness: Word | None = None
    nodes: int = 0
    method: str = ""

    def __bool__(self):
        return self.passed

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "depth": self.depth,
            "witness": None if self.witness is None else self.witness.to_text(),
            "nodes": self.nodes,
            "method": self.method,
        }


def _reduce_mod(x: Fraction, p: int):
    if x.denominator % p == 0:
        return None
    return x.numerator % p * pow(x.denominator, -1, p) % p


def _modular_letters(gens, p):
    letters = []
    for g in gens:
        for m in (g, mat_inv(g)):
            row = [_reduce_mod(x, p) for x in m.entries]
            if None in row:
                return None
            letters.append(tuple(row))
    return letters


def _is_identity(w: Word, gens) -> bool:
    return word_eval(w, gens) == IDENTITY


def _exact_search(gens, max_len, budget, min_len=1, shortest=True, limit=1000):
    """Same traversal as the modular kernel but with exact matrices."""
    images = _letter_images(gens)
    nl = len(images)
    found = []
    nodes = 0
    cur_max = max_len
    prods = [IDENTITY]
    word: list = []

    def visit(depth):
        nonlocal nodes, cur_max
        for x in range(nl):
            if depth >= cur_max:
                return False
            if word and x == word[-1] ^ 1:
                continue
            m = mat_mul(prods[-1], images[x])
            nodes += 1
            if 0 <= budget < nodes:
                return True
            word.append(x)
            if m == IDENTITY and depth + 1 >= min_len:
                if shortest and (not found or depth + 1 < len(found[0])):
                    found.clear()
                    cur_max = depth + 1
                if len(found) < limit:
                    found.append(list(word))
            prods.append(m)
            if visit(depth + 1):
                return True
            prods.pop()
            word.pop()
        return False

    exhausted = visit(0)
    return found, nodes, exhausted


def _split_search(gens, L, cap):
    """Relations of length <= L from coincidences among words of length <= ceil(L/2).

    Any relation w of length m <= L factors as x y with |x| = ceil(m/2) and
    |y| = floor(m/2); then x and y^-1 are distinct reduced words with the same
    value.  Conversely two distinct words u, v with equal values give the
    nontrivial relation u v^-1.  So grouping the short words by value finds
    every relation of length <= L, including all the shortest ones.
    """
    half = (L + 1) // 2
    rank = len(gens)
    needed = count_reduced(rank, half)
    if needed > cap:
        raise BudgetExceeded(f"{needed} half-length words exceed the budget of {cap}", needed=needed, budget=cap)
    ev = WordEvaluator(gens)
    groups: dict = {}
    for w in _enumerate(rank, half, 0):
        groups.setdefault(ev(w), []).append(w)
    best = None
    for members in groups.values():
        if len(members) < 2:
            continue
        for u, v in itertools.combinations(members, 2):
            for x, y in ((u, v), (v, u)):
                r = concat_reduce(x, inverse(y))
                if 0 < len(r) <= L and (best is None or (len(r), r.codes) < (len(best), best.codes)):
                    best = r
    return best, needed


def freeness_certificate(gens: Sequence[Mat2], L: int, budget=None, method="auto") -> FreenessCertificate:
    """Check that no nonempty reduced word of length <= L in ``gens`` equals I.

    Two independent routes:

    ``"dfs"``: every reduced word up to length L is screened modulo a large
    prime by the kernel; modular hits are re-evaluated exactly.
    ``"split"``: words up to length ceil(L/2) are evaluated exactly and
    grouped by value (see :func:`_split_search`).

    ``"auto"`` uses the DFS when its word count fits the budget.  Either way
    a failure carries the lexicographically least shortest relation.
    """
    gens = list(gens)
    if not gens:
        raise ValueError("need at least one generator")
    if L < 1:
        raise ValueError("L must be at least 1")
    cap = word_budget(budget)
    if method == "auto":
        method = "dfs" if count_reduced(len(gens), L) <= cap else "split"
    if method == "split":
        witness, nodes = _split_search(gens, L, cap)
        if witness is not None:
            assert _is_identity(witness, gens)
        return FreenessCertificate(witness is None, L, witness, nodes, "split-exact")
    if method != "dfs":
        raise ValueError(f"unknown method {method!r}")
    for p in SEARCH_PRIMES:
        letters = _modular_letters(gens, p)
        if letters is not None:
            break
    else:
        letters = None

    if letters is not None:
        cands, nodes, exhausted = kernels.relation_candidates(letters, p, L, 1, True, 1000, cap)
        if exhausted:
            raise BudgetExceeded(f"freeness search to depth {L} exceeded {cap} nodes", needed=None, budget=cap)
        cands = sorted((Word(tuple(c)) for c in cands), key=lambda w: (len(w), w.codes))
        if cands:
            shortest = len(cands[0])
            for w in cands:
                if len(w) == shortest and _is_identity(w, gens):
                    return FreenessCertificate(False, L, w, nodes, f"modular-{kernels.BACKEND}+exact")
        else:
            return FreenessCertificate(True, L, None, nodes, f"modular-{kernels.BACKEND}")

    # no usable prime, or every shortest modular hit was spurious
    found, nodes, exhausted = _exact_search(gens, L, cap)
    if exhausted:
        raise BudgetExceeded(f"freeness search to depth {L} exceeded {cap} nodes", needed=None, budget=cap)
    if found:
        witness = min((Word(tuple(f)) for f in found), key=lambda w: (len(w), w.codes))
        return FreenessCertificate(False, L, witness, nodes, "exact")
    return FreenessCertificate(True, L, None, nodes, "exact")


def identity_words(gens: Sequence[Mat2], length: int, limit=100000, budget=None) -> list:
    """All reduced words of exactly ``length`` letters that evaluate to I (exactly verified)."""
    gens = list(gens)
    cap = word_budget(budget)
    for p in SEARCH_PRIMES:
        letters = _modular_letters(gens, p)
        if letters is not None:
            break
    else:
        found, _, exhausted = _exact_search(gens, length, cap, min_len=length, shortest=False, limit=limit)
        if exhausted:
            raise BudgetExceeded("identity word search exceeded budget", budget=cap)
        return [Word(tuple(f)) for f in found if len(f) == length]
    cands, _, exhausted = kernels.relation_candidates(letters, p, length, length, False, limit, cap)
    if exhausted:
        raise BudgetExceeded("identity word search exceeded budget", budget=cap)
    return [w for w in (Word(tuple(c)) for c in cands) if _is_identity(w, gens)]


# ---------------------------------------------------------------------------
# simple random walk on a free group


def kesten_counts(rank_k: int, t: int) -> list:
    """Number of length-t letter sequences ending at each distance from the origin.

    Entry m counts walks whose reduced word has length m; the entries sum to
    (2k)**t.
    """
    if rank_k < 1:
        raise ValueError("rank must be at least 1")
    if t < 0:
        raise ValueError("t must be non-negative")
    forward = 2 * rank_k - 1
    counts = [1]
    for _ in range(t):
        nxt = [0] * (len(counts) + 1)
        for m, c in enumerate(counts):
            if not c:
                continue
            if m == 0:
                nxt[1] += 2 * rank_k * c
            else:
                nxt[m - 1] += c
                nxt[m + 1] += forward * c
        counts = nxt
    return counts


def kesten_distribution(rank_k: int, t: int) -> list:
    total = (2 * rank_k) ** t
    return [Fraction(c, total) for c in kesten_counts(rank_k, t)]


def kesten_return_prob(rank_k: int, t: int) -> Fraction:
    """Exact probability that the simple random walk on F_k is back at e after t steps."""
    if rank_k < 2:
        raise ValueError("rank must be at least 2")
    return Fraction(kesten_counts(rank_k, t)[0], (2 * rank_k) ** t)


def kesten_limit(rank_k: int) -> float:
    return math.sqrt(2 * rank_k - 1) / rank_k


def kesten_root(rank_k: int, t: int) -> float:
    """p_t(e, e) ** (1 / t), computed through logarithms of the exact fraction."""
    p = kesten_return_prob(rank_k, t)
    if p == 0:
        return 0.0
    return math.exp((math.log(p.numerator) - math.log(p.denominator)) / t)
