"""Maps of [0, 1]: Mobius maps of a generator set, two shifts and the identity.

All quantities are exact :class:`~fractions.Fraction` values.  A map's domain
is the part of [0, 1] that it sends into [0, 1]; on that domain every map is
strictly increasing, so the image of an interval is the interval between the
images of its endpoints.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .errors import EmptyInput, InvalidK, TooLarge
from .sl2 import INF, Mat2, mat_inv, mobius_apply, mobius_derivative

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True, order=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo, hi = Fraction(self.lo), Fraction(self.hi)
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def intersect(self, other: "Interval") -> "Interval | None":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo <= hi else None

    def to_json(self) -> list:
        return [str(self.lo), str(self.hi)]


UNIT = Interval(ZERO, ONE)


class IntervalSet:
    """A finite union of closed intervals, kept sorted with overlaps merged.

    Zero-length pieces are discarded: sets are compared up to measure zero.
    """

    __slots__ = ("parts",)

    def __init__(self, parts: Iterable = ()):
        ivs = sorted(p if isinstance(p, Interval) else Interval(*p) for p in parts)
        merged: list = []
        for iv in ivs:
            if iv.lo == iv.hi:
                continue
            if merged and iv.lo <= merged[-1].hi:
                if iv.hi > merged[-1].hi:
                    merged[-1] = Interval(merged[-1].lo, iv.hi)
            else:
                merged.append(iv)
        self.parts = tuple(merged)

    @property
    def measure(self) -> Fraction:
        return sum((p.length for p in self.parts), ZERO)

    def __bool__(self):
        return bool(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)

    def __eq__(self, other):
        return isinstance(other, IntervalSet) and self.parts == other.parts

    def __hash__(self):
        return hash(self.parts)

    def __repr__(self):
        return "IntervalSet(" + ", ".join(f"[{p.lo}, {p.hi}]" for p in self.parts) + ")"

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.parts + other.parts)

    def intersect_interval(self, iv: Interval) -> "IntervalSet":
        return IntervalSet(x for x in (p.intersect(iv) for p in self.parts) if x is not None)

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        i = j = 0
        a, b = self.parts, other.parts
        while i < len(a) and j < len(b):
            x = a[i].intersect(b[j])
            if x is not None:
                out.append(x)
            if a[i].hi < b[j].hi:
                i += 1
            else:
                j += 1
        return IntervalSet(out)

    def contains(self, other: "IntervalSet") -> bool:
        """True when ``other`` is a subset up to measure zero."""
        return self.intersect(other).measure == other.measure

    def to_json(self) -> list:
        return [p.to_json() for p in self.parts]

    @classmethod
    def from_json(cls, doc) -> "IntervalSet":
        return cls(Interval(Fraction(lo), Fraction(hi)) for lo, hi in doc)


def cell(k: int, K: int) -> Interval:
    """I(k) = [(k - 1)/K, k/K], for k = 1..K."""
    return Interval(Fraction(k - 1, K), Fraction(k, K))


@dataclass(frozen=True)
class PiecewiseMap:
    kind: str  # "mobius", "shift_plus", "shift_minus" or "identity"
    domain: Interval
    g: Mat2 | None = None
    K: int | None = None
    source: int | None = None  # index into gens + inverses, for mobius maps

    def __call__(self, x) -> Fraction:
        x = Fraction(x)
        if self.kind == "identity":
            return x
        if self.kind == "shift_plus":
            return x + Fraction(1, self.K)
        if self.kind == "shift_minus":
            return x - Fraction(1, self.K)
        return mobius_apply(self.g, x)

    def derivative(self, x) -> Fraction:
        if self.kind == "mobius":
            return mobius_derivative(self.g, x)
        return ONE

    def image(self, iv: Interval) -> Interval | None:
        """Image of ``iv`` intersected with the domain (None if that has no length)."""
        part = iv.intersect(self.domain)
        if part is None or part.lo == part.hi:
            return None
        return Interval(self(part.lo), self(part.hi))

    def preimage(self, iv: Interval) -> IntervalSet:
        """The part of the domain that lands in ``iv``."""
        if self.kind == "mobius":
            pieces = _arc_preimage(self.g, iv.lo, iv.hi)
        else:
            step = ZERO if self.kind == "identity" else Fraction(1, self.K)
            if self.kind == "shift_minus":
                step = -step
            pieces = [Interval(iv.lo - step, iv.hi - step)]
        return IntervalSet(x for x in (p.intersect(self.domain) for p in pieces) if x is not None)

    def describe(self) -> dict:
        out = {"kind": self.kind, "domain": self.domain.to_json()}
        if self.g is not None:
            out["g"] = self.g.to_text()
        if self.K is not None:
            out["K"] = self.K
        if self.source is not None:
            out["source"] = self.source
        return out


@dataclass(frozen=True)
class MapFamily:
    maps: tuple
    epsilon: Fraction | None
    K: int

    def __len__(self):
        return len(self.maps)

    def mobius_maps(self) -> list:
        return [m for m in self.maps if m.kind == "mobius"]

    def describe(self) -> dict:
        return {
            "K": self.K,
            "epsilon": None if self.epsilon is None else str(self.epsilon),
            "maps": [m.describe() for m in self.maps],
        }


def default_K(epsilon) -> int:
    """Smallest power of two that is at least 4/epsilon, and at least 2."""
    if epsilon is None:
        return 2
    target = 4 / Fraction(epsilon)
    K = 2
    while K < target:
        K *= 2
    return K


def _arc_preimage(g: Mat2, lo: Fraction, hi: Fraction) -> list:
    # g preserves the orientation of the projective line, so the preimage of
    # [lo, hi] is the arc running upward from g^-1(lo) to g^-1(hi); it may
    # wrap through infinity and then meets [0, 1] in up to two pieces
    inv = mat_inv(g)
    u, v = mobius_apply(inv, lo), mobius_apply(inv, hi)
    if u is INF:
        arcs = [(None, v)]
    elif v is INF:
        arcs = [(u, None)]
    elif u <= v:
        arcs = [(u, v)]
    else:
        arcs = [(u, None), (None, v)]
    pieces = []
    for a, b in arcs:
        a = ZERO if a is None else max(a, ZERO)
        b = ONE if b is None else min(b, ONE)
        if a < b:
            pieces.append(Interval(a, b))
    return sorted(pieces)


def mobius_domains(g: Mat2) -> list:
    """Pieces of [0, 1] (of positive length) that g sends into [0, 1]."""
    return _arc_preimage(g, ZERO, ONE)


def build_family(gens, K: int | None = None, epsilon=None) -> MapFamily:
    """The maps of ``gens`` and their inverses, plus x +- 1/K and the identity.

    ``gens`` is a GeneratorSet or a plain sequence of Mat2.  Maps whose domain
    has no length are dropped with a warning.
    """
    if hasattr(gens, "gens"):
        epsilon = gens.epsilon if epsilon is None else epsilon
        gens = gens.gens
    gens = list(gens)
    if K is None:
        K = default_K(epsilon)
    if not isinstance(K, int) or K < 2:
        raise InvalidK(f"K must be an integer >= 2, got {K!r}")
    maps = []
    elements = list(gens) + [mat_inv(g) for g in gens]
    for idx, g in enumerate(elements):
        pieces = mobius_domains(g)
        if not pieces:
            warnings.warn(f"map {g.to_text()} sends no subinterval of [0,1] into [0,1]; dropped", stacklevel=2)
        for dom in pieces:
            maps.append(PiecewiseMap("mobius", dom, g=g, source=idx))
    step = Fraction(1, K)
    maps.append(PiecewiseMap("shift_plus", Interval(ZERO, 1 - step), K=K))
    maps.append(PiecewiseMap("shift_minus", Interval(step, ONE), K=K))
    maps.append(PiecewiseMap("identity", UNIT))
    return MapFamily(tuple(maps), None if epsilon is None else Fraction(epsilon), K)


def shift_family(K: int, include_identity=True) -> MapFamily:
    return build_family([], K) if include_identity else MapFamily(build_family([], K).maps[:2], None, K)


def apply_family(fam: MapFamily, A: IntervalSet) -> IntervalSet:
    """Union over the family of the images of A."""
    images = []
    for m in fam.maps:
        for part in A:
            im = m.image(part)
            if im is not None:
                images.append(im)
    return IntervalSet(images)


def expansion_ratio(fam: MapFamily, A: IntervalSet, strict=True) -> Fraction:
    """|Psi(A)| / |A|.

    Sets with |A| > 1/2 raise TooLarge (with the ratio attached) when
    ``strict``; otherwise the ratio is returned as is.
    """
    mA = A.measure
    if mA == 0:
        raise EmptyInput("A has measure zero")
    ratio = apply_family(fam, A).measure / mA
    if strict and mA > Fraction(1, 2):
        raise TooLarge(f"|A| = {mA} exceeds 1/2", ratio=ratio)
    return ratio


@dataclass(frozen=True)
class Deviation:
    sup_shift: Fraction  # sup |psi(x) - x|
    sup_slope: Fraction  # sup |psi'(x) - 1|
    min_signed_shift: Fraction  # inf (psi(x) - x), negative values break one-sidedness
    max_signed_shift: Fraction
    min_slope: Fraction
    max_slope: Fraction

    def to_dict(self) -> dict:
        return {k: str(v) for k, v in self.__dict__.items()}


def _map_extremes(m: PiecewiseMap):
    lo, hi = m.domain.lo, m.domain.hi
    if m.kind != "mobius":
        s = m(lo) - lo
        return s, s, ONE, ONE
    g = m.g
    points = [lo, hi]
    if g.c != 0:
        # psi'(x) = 1 exactly where cx + d = +-1
        for sgn in (1, -1):
            x = (sgn - g.d) / g.c
            if lo < x < hi:
                points.append(x)
    shifts = [m(x) - x for x in points]
    slopes = [m.derivative(lo), m.derivative(hi)]  # psi' is monotone on the domain
    return min(shifts), max(shifts), min(slopes), max(slopes)


def deviation(fam: MapFamily, kinds=None) -> Deviation:
    """Exact extremes of psi(x) - x and psi'(x) over the maps (optionally only some kinds).

    psi(x) - x has critical points only where psi'(x) = 1, i.e. cx + d = +-1,
    which are rational, so no approximation is involved.
    """
    lo_s = hi_s = ZERO
    lo_d = hi_d = ONE
    for m in fam.maps:
        if kinds is not None and m.kind not in kinds:
            continue
        a, b, c, d = _map_extremes(m)
        lo_s, hi_s = min(lo_s, a), max(hi_s, b)
        lo_d, hi_d = min(lo_d, c), max(hi_d, d)
    return Deviation(max(-lo_s, hi_s), max(1 - lo_d, hi_d - 1), lo_s, hi_s, lo_d, hi_d)


def sup_deviation(fam: MapFamily) -> tuple:
    """(sup |psi(x) - x|, sup |psi'(x) - 1|) over all maps and their domains, exactly."""
    dev = deviation(fam)
    return dev.sup_shift, dev.sup_slope


@dataclass(frozen=True)
class BalanceResult:
    witness: int | None  # first k with a large jump between I(k) and I(k+1)
    masses: tuple  # |A ∩ I(k)| for k = 1..K
    sigma: Fraction
    balanced_bound_holds: bool | None  # the |K m_k - |A|| < sigma K^2 |A| check when balanced

    @property
    def balanced(self) -> bool:
        return self.witness is None

    def to_dict(self) -> dict:
        return {
            "witness": self.witness,
            "masses": [str(m) for m in self.masses],
            "sigma": str(self.sigma),
            "balanced_bound_holds": self.balanced_bound_holds,
        }


def cell_masses(A: IntervalSet, K: int) -> tuple:
    return tuple(A.intersect_interval(cell(k, K)).measure for k in range(1, K + 1))


def balance_test(A: IntervalSet, K: int, sigma) -> BalanceResult:
    """Look for k with | |A ∩ I(k+1)| - |A ∩ I(k)| | >= sigma |A|."""
    if K < 2:
        raise InvalidK("K must be at least 2")
    sigma = Fraction(sigma)
    mA = A.measure
    if mA == 0:
        raise EmptyInput("A has measure zero")
    masses = cell_masses(A, K)
    for k in range(1, K):
        if abs(masses[k] - masses[k - 1]) >= sigma * mA:
            return BalanceResult(k, masses, sigma, None)
    bound = all(abs(K * m - mA) < sigma * K * K * mA for m in masses)
    return BalanceResult(None, masses, sigma, bound)


