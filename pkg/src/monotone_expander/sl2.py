"""Exact arithmetic in SL2(Q).

Scalars are :class:`fractions.Fraction` throughout; nothing in this module
touches floating point.  The projective point at infinity is the singleton
:data:`INF`, so the Mobius action is total on Q ∪ {∞}.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Union

from .errors import DeterminantError, PoleError

__all__ = [
    "INF",
    "Mat2",
    "IDENTITY",
    "mat_mul",
    "mat_inv",
    "mat_pow",
    "dist_sq",
    "norm_sq",
    "pole",
    "mobius_apply",
    "mobius_derivative",
    "trace",
    "flip",
    "inner4",
    "det4",
    "format_fraction",
    "parse_fraction",
]


class _Infinity:
    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()
ExtendedRational = Union[Fraction, _Infinity]


def _frac(x) -> Fraction:
    return x if type(x) is Fraction else Fraction(x)


@dataclass(frozen=True, slots=True)
class Mat2:
    """A 2x2 rational matrix of determinant 1, entries row-major."""

    a: Fraction
    b: Fraction
    c: Fraction
    d: Fraction

    def __post_init__(self):
        a, b, c, d = (_frac(x) for x in (self.a, self.b, self.c, self.d))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)
        det = a * d - b * c
        if det != 1:
            raise DeterminantError(f"determinant is {det}, expected 1")

    @classmethod
    def _trusted(cls, a, b, c, d) -> "Mat2":
        # products and inverses of SL2 elements; skips the determinant check
        m = object.__new__(cls)
        object.__setattr__(m, "a", a)
        object.__setattr__(m, "b", b)
        object.__setattr__(m, "c", c)
        object.__setattr__(m, "d", d)
        return m

    @property
    def entries(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.a, self.b, self.c, self.d)

    def __iter__(self):
        return iter(self.entries)

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return mat_mul(self, other)

    def inverse(self) -> "Mat2":
        return mat_inv(self)

    def denominator(self) -> int:
        """Least common denominator of the four entries."""
        return lcm(*(x.denominator for x in self.entries))

    def to_text(self) -> str:
        """Canonical ``"a/b a/b a/b a/b"`` form (always with a slash)."""
        return " ".join(format_fraction(x) for x in self.entries)

    @classmethod
    def from_text(cls, text: str) -> "Mat2":
        parts = text.split()
        if len(parts) != 4:
            raise ValueError(f"expected four fractions, got {text!r}")
        return cls(*(parse_fraction(p) for p in parts))

    def __str__(self):
        return f"[[{self.a}, {self.b}], [{self.c}, {self.d}]]"


def format_fraction(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def parse_fraction(text: str) -> Fraction:
    return Fraction(text.replace("−", "-"))


IDENTITY = Mat2(1, 0, 0, 1)


def mat_mul(g: Mat2, h: Mat2) -> Mat2:
    return Mat2._trusted(
        g.a * h.a + g.b * h.c,
        g.a * h.b + g.b * h.d,
        g.c * h.a + g.d * h.c,
        g.c * h.b + g.d * h.d,
    )


def mat_inv(g: Mat2) -> Mat2:
    return Mat2._trusted(g.d, -g.b, -g.c, g.a)


def mat_pow(g: Mat2, k: int) -> Mat2:
    """g**k by repeated squaring; negative k uses the inverse."""
    if k < 0:
        g, k = mat_inv(g), -k
    result = IDENTITY
    while k:
        if k & 1:
            result = mat_mul(result, g)
        g = mat_mul(g, g)
        k >>= 1
    return result


def dist_sq(g: Mat2, h: Mat2) -> Fraction:
    """Squared entrywise L2 distance between two matrices."""
    return (g.a - h.a) ** 2 + (g.b - h.b) ** 2 + (g.c - h.c) ** 2 + (g.d - h.d) ** 2


def norm_sq(g: Mat2) -> Fraction:
    """Squared Frobenius norm (the entrywise L2 norm of g as a vector in R^4)."""
    return g.a * g.a + g.b * g.b + g.c * g.c + g.d * g.d


def mobius_apply(g: Mat2, x: ExtendedRational) -> ExtendedRational:
    """x -> (ax + b) / (cx + d) on the projective line."""
    if x is INF:
        return INF if g.c == 0 else g.a / g.c
    x = _frac(x)
    den = g.c * x + g.d
    if den == 0:
        return INF
    return (g.a * x + g.b) / den


def pole(g: Mat2) -> ExtendedRational:
    """The point sent to infinity, -d/c (INF when c = 0)."""
    return INF if g.c == 0 else -g.d / g.c


def mobius_derivative(g: Mat2, x) -> Fraction:
    """1 / (cx + d)^2; raises PoleError at x = -d/c."""
    den = g.c * _frac(x) + g.d
    if den == 0:
        raise PoleError(f"{x} is the pole of {g}")
    return 1 / (den * den)


def trace(g: Mat2) -> Fraction:
    return g.a + g.d


def flip(g: Mat2) -> Mat2:
    """[[d, -c], [-b, a]], chosen so that Tr(h^-1 g) = inner4(g, flip(h))."""
    return Mat2._trusted(g.d, -g.c, -g.b, g.a)


def inner4(g: Mat2, h: Mat2) -> Fraction:
    return g.a * h.a + g.b * h.b + g.c * h.c + g.d * h.d


def det4(g0: Mat2, g1: Mat2, g2: Mat2, g3: Mat2) -> Fraction:
    """Determinant of the 4x4 matrix whose rows are the four matrices flattened."""
    rows = [g.entries for g in (g0, g1, g2, g3)]
    total = Fraction(0)
    for perm in itertools.permutations(range(4)):
        inversions = sum(1 for i, j in itertools.combinations(range(4), 2) if perm[i] > perm[j])
        term = rows[0][perm[0]] * rows[1][perm[1]] * rows[2][perm[2]] * rows[3][perm[3]]
        total += -term if inversions & 1 else term
    return total
