"""Forging a small-norm generator set from a free seed pair.

Pipeline: seed pair -> word set W (squares of length-ell words) -> bucket W
into a grid fine enough that each cell fits in one small ball -> take the
densest cell's lexicographically least word w0 -> translate the ball back to
the identity by w0^-1.  Everything is exact rational arithmetic.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

from .errors import BudgetExceeded, NoCollision, NoPairFound
from .sl2 import IDENTITY, Mat2, dist_sq, mat_inv, mat_mul, mat_pow, norm_sq
from .words import (
    FreenessCertificate,
    Word,
    WordEvaluator,
    build_W,
    count_reduced,
    enumerate_reduced,
    freeness_certificate,
    word_budget,
)

SEED_MODES = ("sanov_power", "paper_search")

# dyadic exponents tried when epsilon is chosen automatically
AUTO_EPSILON_RANGE = range(-60, 121)


@dataclass(frozen=True)
class ForgeConfig:
    q: int = 3
    ell: int = 8
    epsilon: object = "auto"  # Fraction, "auto" (dyadic ladder) or "all" (ball holds every word)
    seed_mode: str = "sanov_power"
    freeness_depth: int = 8
    word_budget: int | None = None
    search_length: int = 6  # longest seed word tried by paper_search
    min_cell: int = 3  # densest-cell size required by epsilon="auto"

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be at least 1")
        if self.ell < 2:
            raise ValueError("ell must be at least 2")
        if self.seed_mode not in SEED_MODES:
            raise ValueError(f"seed_mode must be one of {SEED_MODES}")
        if self.epsilon not in ("auto", "all"):
            eps = Fraction(self.epsilon)
            if eps <= 0:
                raise ValueError("epsilon must be positive")
            object.__setattr__(self, "epsilon", eps)

    def to_dict(self) -> dict:
        eps = self.epsilon if isinstance(self.epsilon, str) else str(self.epsilon)
        return {
            "q": self.q,
            "ell": self.ell,
            "epsilon": eps,
            "seed_mode": self.seed_mode,
            "freeness_depth": self.freeness_depth,
            "word_budget": self.word_budget,
            "search_length": self.search_length,
            "min_cell": self.min_cell,
        }


def unipotent_pair(q: int) -> tuple:
    """h1 = [[1, 1/q], [0, 1]] and h2 = [[1, 0], [1/q, 1]]."""
    return Mat2(1, Fraction(1, q), 0, 1), Mat2(1, 0, Fraction(1, q), 1)


@dataclass(frozen=True)
class SeedInfo:
    pair: tuple
    mode: str
    q: int
    words: tuple  # the pair as words in h1, h2 (codes 0..3)
    word_length: int  # longest of the two, in letters h1^+-1, h2^+-1
    certificate: FreenessCertificate | None = None
    rigorous: bool = False
    tested_pairs: int = 0

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "q": self.q,
            "pair": [g.to_text() for g in self.pair],
            "words": [Word(w).to_text() for w in self.words],
            "word_length": self.word_length,
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "rigorous": self.rigorous,
            "tested_pairs": self.tested_pairs,
        }


def seed_info(mode: str, q: int, freeness_depth=8, search_length=6, budget=None) -> SeedInfo:
    if q < 1:
        raise ValueError("q must be at least 1")
    if mode == "sanov_power":
        h1, h2 = unipotent_pair(q)
        pair = (mat_pow(h1, 2 * q), mat_pow(h2, 2 * q))
        words = ((0,) * (2 * q), (2,) * (2 * q))
        return SeedInfo(pair, mode, q, words, 2 * q, None, rigorous=True)
    if mode == "paper_search":
        return _search_seed(q, freeness_depth, search_length, budget)
    raise ValueError(f"unknown seed mode {mode!r}")


def seed_pair(mode: str, q: int, freeness_depth=8, search_length=6, budget=None) -> tuple:
    return seed_info(mode, q, freeness_depth, search_length, budget).pair


def _search_seed(q, depth, search_length, budget):
    # distinct non-identity elements reachable by short words in h1, h2, in
    # order of distance to I, then word length, then lexicographic word
    h1, h2 = unipotent_pair(q)
    cap = word_budget(budget)
    if count_reduced(2, search_length) > cap:
        raise BudgetExceeded("seed search words exceed budget", needed=count_reduced(2, search_length), budget=cap)
    ev = WordEvaluator([h1, h2])
    first_word: dict = {}
    for w in enumerate_reduced(2, search_length, budget=cap, min_length=1):
        m = ev(w)
        if m != IDENTITY and m not in first_word:
            first_word[m] = w.codes
    ranked = sorted(first_word.items(), key=lambda kv: (dist_sq(kv[0], IDENTITY), len(kv[1]), kv[1]))
    tested = 0
    spent = 0
    for i in range(len(ranked)):
        for j in range(i):
            tested += 1
            gj, wj = ranked[j]
            gi, wi = ranked[i]
            cert = freeness_certificate([gj, gi], depth, budget=cap - spent)
            spent += cert.nodes
            if cert.passed:
                return SeedInfo((gj, gi), "paper_search", q, (wj, wi), max(len(wj), len(wi)), cert,
                                rigorous=False, tested_pairs=tested)
            if spent >= cap:
                raise NoPairFound(f"budget of {cap} nodes spent after {tested} pairs")
    raise NoPairFound(f"no pair among words of length <= {search_length} passed depth {depth}")


@dataclass
class GeneratorSet:
    gens: list
    Q: int
    epsilon: Fraction  # target radius used for the ball
    epsilon_achieved: Fraction  # max dist_sq(g, I), a squared quantity
    w0: Mat2
    w0_word: Word
    source_words: list  # W-words whose translates give gens, same order
    seed: SeedInfo
    config: ForgeConfig
    norm_bound: int  # N used for the ball radius
    norm_entrywise: int
    norm_operator_bound: Fraction
    W_size: int
    cell_size: int
    certificates: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "q": self.config.q,
            "ell": self.config.ell,
            "epsilon": str(self.epsilon),
            "epsilon_achieved": str(self.epsilon_achieved),
            "w0": self.w0.to_text(),
            "w0_word": self.w0_word.to_text(),
            "Q": self.Q,
            "gens": [g.to_text() for g in self.gens],
            "source_words": [w.to_text() for w in self.source_words],
            "seed": self.seed.to_dict(),
            "config": self.config.to_dict(),
            "N": self.norm_bound,
            "N_entrywise": self.norm_entrywise,
            "N_operator_bound": str(self.norm_operator_bound),
            "W_size": self.W_size,
            "cell_size": self.cell_size,
            "certificates": self.certificates,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GeneratorSet":
        """Rebuild from :meth:`to_dict` output."""
        cfg_doc = dict(doc["config"])
        config = ForgeConfig(**cfg_doc)
        seed_doc = doc["seed"]
        seed = SeedInfo(
            tuple(Mat2.from_text(t) for t in seed_doc["pair"]),
            seed_doc["mode"],
            seed_doc["q"],
            tuple(Word.from_text(t).codes for t in seed_doc["words"]),
            seed_doc["word_length"],
            _certificate_from_dict(seed_doc.get("certificate")),
            seed_doc["rigorous"],
            seed_doc.get("tested_pairs", 0),
        )
        return cls(
            gens=[Mat2.from_text(t) for t in doc["gens"]],
            Q=int(doc["Q"]),
            epsilon=Fraction(doc["epsilon"]),
            epsilon_achieved=Fraction(doc["epsilon_achieved"]),
            w0=Mat2.from_text(doc["w0"]),
            w0_word=Word.from_text(doc["w0_word"]),
            source_words=[Word.from_text(t) for t in doc["source_words"]],
            seed=seed,
            config=config,
            norm_bound=int(doc["N"]),
            norm_entrywise=int(doc["N_entrywise"]),
            norm_operator_bound=Fraction(doc["N_operator_bound"]),
            W_size=int(doc["W_size"]),
            cell_size=int(doc["cell_size"]),
            certificates=dict(doc.get("certificates", {})),
        )


def _certificate_from_dict(doc):
    if doc is None:
        return None
    witness = None if doc["witness"] is None else Word.from_text(doc["witness"])
    return FreenessCertificate(doc["passed"], doc["depth"], witness, doc["nodes"], doc["method"])


def _ceil_sqrt(x: Fraction) -> int:
    n = math.isqrt(math.ceil(x))
    return n if n * n >= x else n + 1


def _densest_cell(items, side):
    # items: list of (word, matrix) sorted by word; exact floor cell indices
    cells = defaultdict(list)
    for w, m in items:
        cells[tuple(math.floor(x / side) for x in m.entries)].append((w, m))
    # bigger is better; ties go to the cell holding the lexicographically least word
    best = min(cells.values(), key=lambda members: (-len(members), members[0][0].codes))
    return best


def forge(config: ForgeConfig) -> GeneratorSet:
    seed = seed_info(config.seed_mode, config.q, config.freeness_depth, config.search_length, config.word_budget)
    words = build_W(config.ell, budget=config.word_budget)
    ev = WordEvaluator(list(seed.pair))
    items = [(w, ev(w)) for w in words]

    # dedupe by matrix, keeping the least word
    seen = {}
    for w, m in items:
        seen.setdefault(m, w)
    items = sorted(((w, m) for m, w in seen.items()), key=lambda t: t[0].codes)

    n_entry = _ceil_sqrt(max(norm_sq(m) for _, m in items))
    op_bound = (1 + Fraction(1, config.q)) ** (2 * seed.word_length * config.ell)
    N = min(n_entry, math.ceil(op_bound))

    if config.epsilon == "auto":
        for j in AUTO_EPSILON_RANGE:
            eps = Fraction(2) ** j
            cell = _densest_cell(items, eps / (2 * N))
            if len(cell) >= config.min_cell:
                break
        else:
            raise NoCollision(f"no dyadic epsilon up to 2**{AUTO_EPSILON_RANGE[-1]} gives {config.min_cell} words in a cell")
    elif config.epsilon == "all":
        eps = Fraction(2 * N * N)
        cell = _densest_cell(items, eps / (2 * N))
    else:
        eps = config.epsilon
        cell = _densest_cell(items, eps / (2 * N))

    w0_word, w0 = cell[0]
    w0_inv = mat_inv(w0)
    ball = [(w, m) for w, m in items if dist_sq(m, w0) * N * N <= eps * eps]
    gens, sources = [], []
    for w, m in ball:
        g = mat_mul(w0_inv, m)
        if g == IDENTITY:
            continue
        gens.append(g)
        sources.append(w)
    if not gens:
        raise NoCollision(
            f"the ball of radius {eps}/{N} around w0 holds only w0; try a larger ell or epsilon"
        )
    for g in gens:
        # ||1 - g|| <= N ||w0 - w0 g|| <= eps, re-checked exactly
        if dist_sq(g, IDENTITY) > eps * eps:
            raise AssertionError(f"{g} is farther than {eps} from the identity")

    Q = lcm(*(g.denominator() for g in gens))
    return GeneratorSet(
        gens=gens,
        Q=Q,
        epsilon=eps,
        epsilon_achieved=max(dist_sq(g, IDENTITY) for g in gens),
        w0=w0,
        w0_word=w0_word,
        source_words=sources,
        seed=seed,
        config=config,
        norm_bound=N,
        norm_entrywise=n_entry,
        norm_operator_bound=op_bound,
        W_size=len(words),
        cell_size=len(cell),
    )


# ---------------------------------------------------------------------------
# property checks


def _log_ratio(num, den):
    try:
        if num <= 0 or den <= 0 or den == 1:
            return None
        return math.log(num) / math.log(den)
    except (ValueError, ZeroDivisionError):
        return None


def _closest_pair(points):
    """Exact minimum squared distance among distinct integer 4-vectors.

    An upper bound comes from neighbours in each coordinate sort order; a sweep
    along the first coordinate then checks every pair that could beat it.
    """
    if len(points) < 2:
        return None, None
    best = None
    best_pair = None

    def consider(i, j):
        nonlocal best, best_pair
        p, r = points[i], points[j]
        d = (p[0] - r[0]) ** 2 + (p[1] - r[1]) ** 2 + (p[2] - r[2]) ** 2 + (p[3] - r[3]) ** 2
        pair = (min(i, j), max(i, j))
        if best is None or (d, pair) < (best, best_pair):
            best, best_pair = d, pair

    idx = range(len(points))
    for k in (1, 2, 3, 0):
        order = sorted(idx, key=lambda i: points[i][k])
        for a, b in zip(order, order[1:]):
            consider(a, b)
    xs = [points[i][0] for i in order]
    for pos, i in enumerate(order):
        x = xs[pos]
        for nxt in range(pos + 1, len(order)):
            gap = xs[nxt] - x
            if gap * gap > best:
                break
            consider(i, order[nxt])
    return best, best_pair


def _scaled_gens(gens, Q):
    out = []
    for g in gens:
        for m in (g, mat_inv(g)):
            row = [x * Q for x in m.entries]
            if any(v.denominator != 1 for v in row):
                return None
            out.append(tuple(v.numerator for v in row))
    return out


def separation(gens, Q: int, k: int, budget=None) -> dict:
    """Minimum distance between distinct elements given by words of length <= k.

    Matrices are carried as integer 4-tuples scaled by Q**k, so the whole
    computation is exact integer arithmetic.
    """
    cap = word_budget(budget)
    rank = len(gens)
    needed = count_reduced(rank, k)
    if needed > cap:
        raise BudgetExceeded(f"{needed} words of length <= {k} exceed the budget", needed=needed, budget=cap)
    letters = _scaled_gens(gens, Q)
    weak = Fraction(1, Q ** (2 * k)) ** 2  # dist >= Q^(-2k)
    grid_form = Fraction(1, Q ** (2 * k))  # dist >= Q^(-k)
    base = {"k": k, "bound_dist_sq": str(weak), "grid_form_dist_sq": str(grid_form)}
    if letters is None:
        return dict(base, passed=False, grid_form_holds=False, reason="generators are not on the 1/Q grid",
                    elements=None, word_collisions=None, min_dist_sq=None, closest_words=None,
                    measured_exponent=None)

    # layer by layer: (point scaled by Q**len, last letter); rescale to Q**k at the end
    first_index: dict = {}
    points = []
    words_at = []
    collisions = 0
    layer = [((1, 0, 0, 1), -1, ())]
    for length in range(k + 1):
        lift = Q ** (k - length)
        for pt, _, w in layer:
            key = (pt[0] * lift, pt[1] * lift, pt[2] * lift, pt[3] * lift) if lift != 1 else pt
            if key in first_index:
                collisions += 1
                continue
            first_index[key] = len(points)
            points.append(key)
            words_at.append(w)
        if length == k:
            break
        nxt = []
        for (a, b, c, d), last, w in layer:
            for x, (e, f, g, h) in enumerate(letters):
                if last >= 0 and x == last ^ 1:
                    continue
                nxt.append(((a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h), x, w + (x,)))
        layer = nxt
    del first_index
    best, pair = _closest_pair(points)
    scale = Q**k
    min_dist_sq = None if best is None else Fraction(best, scale * scale)
    measured = None
    if min_dist_sq is not None and Q > 1:
        measured = -0.5 * (math.log(min_dist_sq.numerator) - math.log(min_dist_sq.denominator)) / (k * math.log(Q))
    return dict(
        base,
        elements=len(points),
        word_collisions=collisions,
        min_dist_sq=None if min_dist_sq is None else str(min_dist_sq),
        closest_words=None if pair is None else [Word(words_at[pair[0]]).to_text(), Word(words_at[pair[1]]).to_text()],
        passed=min_dist_sq is None or min_dist_sq >= weak,
        grid_form_holds=min_dist_sq is None or min_dist_sq >= grid_form,
        measured_exponent=measured,
    )


def verify_properties(gs: GeneratorSet, k_max: int, freeness_depth=None, budget=None) -> dict:
    """Exact checks of the five generator-set properties plus word separation.

    Returns a JSON-ready report; ``report["passed"]`` is the conjunction of
    the asserted checks (P3, P4, P5 and separation).
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    gens = gs.gens
    depth = gs.config.freeness_depth if freeness_depth is None else freeness_depth
    eps = gs.epsilon
    report: dict = {}

    report["P1"] = {
        "Q": gs.Q,
        "epsilon": str(eps),
        "exponent_logQ_over_log_inv_epsilon": _log_ratio(gs.Q, 1 / eps) if eps < 1 else None,
    }
    report["P2"] = {
        "size": len(gens),
        "exponent_logQ_over_log_size": _log_ratio(gs.Q, len(gens)),
    }

    cert = freeness_certificate(gens, depth, budget=budget)
    report["P3"] = dict(cert.to_dict(), rigorous_seed=gs.seed.rigorous)

    bad4 = [i for i, g in enumerate(gens) if any((x * gs.Q).denominator != 1 for x in g.entries)]
    # w0^-1 w has 4 ell seed letters, each a product of word_length unipotents with denominator q
    ref_Q = gs.config.q ** (4 * gs.seed.word_length * gs.config.ell)
    report["P4"] = {
        "passed": not bad4,
        "Q": gs.Q,
        "offending": [gens[i].to_text() for i in bad4],
        "offending_index": bad4,
        "reference_Q": str(ref_Q),
        "divides_reference_Q": ref_Q % gs.Q == 0,
    }

    bad5 = [i for i, g in enumerate(gens) if dist_sq(g, IDENTITY) > eps * eps]
    report["P5"] = {
        "passed": not bad5,
        "epsilon_sq": str(eps * eps),
        "max_dist_sq": str(max(dist_sq(g, IDENTITY) for g in gens)) if gens else "0",
        "offending": [gens[i].to_text() for i in bad5],
        "offending_index": bad5,
    }

    sep = [separation(gens, gs.Q, k, budget=budget) for k in range(1, k_max + 1)]
    report["separation"] = sep
    report["passed"] = bool(
        cert.passed and not bad4 and not bad5 and all(s["passed"] for s in sep)
    )
    report["failed"] = [
        name
        for name, ok in (
            ("P3", cert.passed),
            ("P4", not bad4),
            ("P5", not bad5),
            ("separation", all(s["passed"] for s in sep)),
        )
        if not ok
    ]
    return report
