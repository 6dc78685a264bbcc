"""Expansion measurements: exhaustive vertex expansion, spectral gap,
continuous expansion over a corpus of test sets, and subspace growth over F_p.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np
from scipy import sparse

from . import kernels
from .discretize import LayeredBipartiteGraph
from .errors import BadDimension, BadPrime, NoConvergence, TooLarge
from .family import (
    Interval,
    IntervalSet,
    MapFamily,
    apply_family,
    balance_test,
    cell,
    expansion_ratio,
    shift_family,
)

EXACT_CAP = 24


@dataclass
class ExpansionReport:
    n: int
    method: str
    min_ratio: object = None  # Fraction when exact, float otherwise
    argmin_set: tuple | None = None
    sigma2: float | None = None
    seed: int | None = None
    tolerance: float | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        ratio = self.min_ratio
        return {
            "n": self.n,
            "method": self.method,
            "min_ratio": str(ratio) if isinstance(ratio, Fraction) else ratio,
            "min_ratio_float": None if ratio is None else float(ratio),
            "argmin_set": None if self.argmin_set is None else list(self.argmin_set),
            "sigma2": self.sigma2,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "details": self.details,
        }


# ---------------------------------------------------------------------------
# exhaustive


def vertex_expansion_exact(g: LayeredBipartiteGraph, cap: int = EXACT_CAP) -> ExpansionReport:
    """min |N(A)| / |A| over nonempty left sets with |A| <= n/2, by enumeration."""
    if g.n > cap:
        raise TooLarge(f"n = {g.n} exceeds the exhaustive cap of {cap}")
    max_size = g.n // 2
    if max_size < 1:
        raise TooLarge("n must be at least 2")
    num, den, mask, visited = kernels.min_vertex_expansion(g.neighbour_masks(), max_size)
    witness = tuple(i for i in range(g.n) if mask >> i & 1)
    return ExpansionReport(
        n=g.n,
        method="exhaustive",
        min_ratio=Fraction(num, den),
        argmin_set=witness,
        tolerance=0.0,
        details={"subsets": visited, "expected_subsets": sum(comb(g.n, k) for k in range(1, max_size + 1)),
                 "backend": kernels.BACKEND},
    )


# ---------------------------------------------------------------------------
# spectral


def normalized_biadjacency(g_or_matrix):
    """Degree-normalised biadjacency with isolated vertices removed.

    Returns (Bn, left degrees, right degrees); Bn = D_R^-1/2 B D_L^-1/2 where
    B counts parallel edges.
    """
    B = g_or_matrix.biadjacency() if isinstance(g_or_matrix, LayeredBipartiteGraph) else sparse.csr_matrix(g_or_matrix)
    B = sparse.csr_matrix(B, dtype=np.float64)
    dR = np.asarray(B.sum(axis=1)).ravel()
    dL = np.asarray(B.sum(axis=0)).ravel()
    keepR = np.flatnonzero(dR > 0)
    keepL = np.flatnonzero(dL > 0)
    B = B[keepR][:, keepL]
    dR, dL = dR[keepR], dL[keepL]
    Bn = sparse.diags(1 / np.sqrt(dR)) @ B @ sparse.diags(1 / np.sqrt(dL))
    return sparse.csr_matrix(Bn), dL, dR


@dataclass
class SpectralResult:
    sigma2: float
    residual: float
    iterations: int
    tolerance: float
    block: int
    left_degree_min: float
    right_degree_max: float
    left_volume: float

    def tanner_ratio(self, size: int) -> float:
        """Lower bound on |N(A)|/|A| for every left set of the given size.

        From Cauchy-Schwarz, vol N(A) >= vol A / (s^2 + (1 - s^2) vol A / vol L);
        the right side increases with vol A >= d_min |A|, and |N(A)| >= vol N(A) / d_max.
        """
        s2 = self.sigma2 * self.sigma2
        volA = self.left_degree_min * size
        return volA / (self.right_degree_max * (s2 + (1 - s2) * volA / self.left_volume)) / size

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def spectral_analysis(g, tol: float = 1e-9, max_iter: int = 200000, block: int = 4, seed: int = 0) -> SpectralResult:
    """Second singular value of the normalised biadjacency.

    Block power iteration on Bn^T Bn with the known top singular vector
    (square roots of the left degrees) projected out, followed by
    Rayleigh-Ritz on the block.  Stops when the residual of the leading Ritz
    pair is at most ``tol``.
    """
    Bn, dL, dR = normalized_biadjacency(g)
    m = Bn.shape[1]
    n_left = g.n if isinstance(g, LayeredBipartiteGraph) else np.shape(g)[1]
    top = np.sqrt(dL)
    top /= np.linalg.norm(top)
    # an isolated left vertex has no neighbours at all, which voids the Tanner bound
    stats = dict(tolerance=tol, left_degree_min=float(dL.min()) if m == n_left else 0.0,
                 right_degree_max=float(dR.max()), left_volume=float(dL.sum()))
    if m <= 1:
        return SpectralResult(0.0, 0.0, 0, block=0, **stats)
    block = max(1, min(block, m - 1))
    BnT = sparse.csr_matrix(Bn.T)

    def apply(X):
        X = X - np.outer(top, top @ X)
        Y = BnT @ (Bn @ X)
        return Y - np.outer(top, top @ Y)

    rng = np.random.Generator(np.random.Philox(seed))
    X, _ = np.linalg.qr(apply(rng.standard_normal((m, block))))
    residual = np.inf
    for it in range(1, max_iter + 1):
        Y = apply(X)
        H = X.T @ Y
        vals, vecs = np.linalg.eigh((H + H.T) / 2)
        lead = vals[-1]
        x = X @ vecs[:, -1]
        residual = float(np.linalg.norm(Y @ vecs[:, -1] - lead * x))
        if residual <= tol:
            return SpectralResult(float(np.sqrt(max(lead, 0.0))), residual, it, block=block, **stats)
        X, _ = np.linalg.qr(Y)
    raise NoConvergence(f"no convergence after {max_iter} iterations (residual {residual:.3g})", residual=residual)


def spectral_gap(g, tol: float = 1e-9, max_iter: int = 200000, seed: int = 0) -> float:
    return spectral_analysis(g, tol=tol, max_iter=max_iter, seed=seed).sigma2


def spectral_report(g: LayeredBipartiteGraph, tol: float = 1e-9, seed: int = 0) -> ExpansionReport:
    res = spectral_analysis(g, tol=tol, seed=seed)
    worst = max(1, g.n // 2)
    return ExpansionReport(
        n=g.n,
        method="spectral",
        sigma2=res.sigma2,
        seed=seed,
        tolerance=tol,
        details=dict(res.to_dict(), tanner_ratio_bound=res.tanner_ratio(worst), tanner_is_bound=True),
    )


# ---------------------------------------------------------------------------
# continuous expansion on test sets


def _rand_fraction(rng, lo, hi, den):
    a = int(lo * den)
    b = int(hi * den)
    return Fraction(rng.randint(a, max(a, b)), den)


def cantor_set(level: int, keep=(Fraction(0), Fraction(1, 3), Fraction(2, 3), Fraction(1))) -> IntervalSet:
    """Iterate 'keep [k0, k1] and [k2, k3] of every piece' starting from [0, 1]."""
    parts = [Interval(0, 1)]
    a, b, c, d = keep
    for _ in range(level):
        nxt = []
        for p in parts:
            w = p.length
            nxt.append(Interval(p.lo + a * w, p.lo + b * w))
            nxt.append(Interval(p.lo + c * w, p.lo + d * w))
        parts = nxt
    return IntervalSet(parts)


def periodic_set(period: int, offset=Fraction(0)) -> IntervalSet:
    """First half of every cell of width 1/period, shifted by ``offset`` cells (mod 1)."""
    parts = []
    for k in range(period):
        lo = (k + offset) / period
        hi = lo + Fraction(1, 2 * period)
        for a, b in ((lo, hi), (lo - 1, hi - 1)):
            a, b = max(a, Fraction(0)), min(b, Fraction(1))
            if a < b:
                parts.append(Interval(a, b))
    return IntervalSet(parts)


def builtin_corpus(fam: MapFamily, count: int = 200, seed: int = 0) -> list:
    """(kind, IntervalSet) pairs, all of measure in (0, 1/2]."""
    rng = random.Random(seed)
    K = fam.K
    out = []
    for k in sorted(set(int(round(x)) for x in np.linspace(1, K, min(K, 32)))):
        out.append(("cell", IntervalSet([cell(k, K)])))
    third = Fraction(1, 3)
    for level in range(2, 8):
        out.append(("cantor-thirds", cantor_set(level, (0, third, 2 * third, 1))))
    for level in range(1, 7):
        out.append(("cantor-quarters", cantor_set(level, (0, Fraction(1, 4), Fraction(3, 4), 1))))
    for period in sorted({max(1, K // 2), K, 2 * K}):
        out.append(("periodic", periodic_set(period)))
        out.append(("periodic", periodic_set(period, Fraction(1, 4))))
    mobius = fam.mobius_maps()
    attempts = 0
    pre_target = 40
    made = 0
    while mobius and made < pre_target and attempts < 10 * pre_target:
        attempts += 1
        m = mobius[attempts % len(mobius)]
        length = _rand_fraction(rng, Fraction(1, 50), Fraction(1, 4), 1000)
        start = _rand_fraction(rng, 0, 1 - length, 1000)
        A = m.preimage(Interval(start, start + length))
        if A and A.measure <= Fraction(1, 2):
            out.append(("preimage", A))
            made += 1
    while len(out) < count:
        pieces = rng.randint(1, 20)
        den = rng.choice((64, 1000, 1024, 997))
        parts = []
        for _ in range(pieces):
            length = _rand_fraction(rng, Fraction(1, den), Fraction(1, 2 * pieces), den)
            start = _rand_fraction(rng, 0, 1 - length, den)
            parts.append(Interval(start, start + length))
        A = IntervalSet(parts)
        if A and A.measure <= Fraction(1, 2):
            out.append(("random", A))
    return out[:count]


def continuous_corpus_test(fam: MapFamily, corpus=None, sigma=Fraction(1, 100), seed: int = 0) -> dict:
    """Exact expansion ratios over the corpus, plus the shift/balance dichotomy per set.

    For each set, either some adjacent pair of cells carries masses differing by
    at least sigma |A| (then the three maps x, x + 1/K, x - 1/K alone must
    expand by 1 + sigma, which is checked), or the set is sigma-balanced.
    """
    if corpus is None:
        corpus = builtin_corpus(fam, seed=seed)
    shifts = shift_family(fam.K)
    sigma = Fraction(sigma)
    rows = []
    for idx, item in enumerate(corpus):
        kind, A = item if isinstance(item, tuple) else ("given", item)
        ratio = expansion_ratio(fam, A, strict=False)
        bal = balance_test(A, fam.K, sigma)
        row = {"index": idx, "kind": kind, "measure": A.measure, "ratio": ratio, "witness": bal.witness}
        if bal.witness is not None:
            row["shift_ratio"] = expansion_ratio(shifts, A, strict=False)
            row["dichotomy"] = row["shift_ratio"] >= 1 + sigma
        else:
            row["shift_ratio"] = None
            row["dichotomy"] = bool(bal.balanced_bound_holds)
        rows.append(row)
    worst = min(rows, key=lambda r: (r["ratio"], r["index"])) if rows else None
    return {
        "count": len(rows),
        "K": fam.K,
        "sigma": sigma,
        "min_ratio": None if worst is None else worst["ratio"],
        "argmin": None if worst is None else worst["index"],
        "argmin_kind": None if worst is None else worst["kind"],
        "witnessed": sum(r["witness"] is not None for r in rows),
        "balanced": sum(r["witness"] is None for r in rows),
        "dichotomy_holds": all(r["dichotomy"] for r in rows),
        "rows": rows,
    }


# ---------------------------------------------------------------------------
# subspace growth over F_p


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    f = 2
    while f * f <= p:
        if p % f == 0:
            return False
        f += 1
    return True


def rank_mod_p(A, p: int) -> int:
    """Rank over F_p by Gaussian elimination (entries reduced mod p first)."""
    M = np.array(A, dtype=np.int64) % p
    if M.shape[0] > M.shape[1]:
        M = M.T.copy()
    rows, cols = M.shape
    rank = 0
    for c in range(cols):
        if rank == rows:
            break
        nz = np.flatnonzero(M[rank:, c])
        if nz.size == 0:
            continue
        piv = rank + nz[0]
        if piv != rank:
            M[[rank, piv]] = M[[piv, rank]]
        inv = pow(int(M[rank, c]), -1, p)
        M[rank] = M[rank] * inv % p
        below = M[rank + 1:, c].copy()
        if below.any():
            M[rank + 1:] = (M[rank + 1:] - np.outer(below, M[rank])) % p
        rank += 1
    return rank


def span_dimension(mats, basis, p: int) -> int:
    """dim of the span of M_i V over all i, V spanned by the columns of ``basis``."""
    V = np.asarray(basis, dtype=np.int64) % p
    images = [np.asarray(M, dtype=np.int64) @ V % p for M in mats]
    return rank_mod_p(np.hstack(images), p)


def subspace_dimension_test(mats, p: int, D: int, trials: int, seed: int = 0) -> dict:
    """Growth of random D-dimensional subspaces of F_p^n under the matrices."""
    if not (is_prime(p) and p <= 2**16):
        raise BadPrime(f"{p} is not a prime at most 2**16")
    mats = [np.asarray(M) for M in mats]
    if not mats:
        raise BadDimension("no matrices")
    n = mats[0].shape[0]
    if not 1 <= D <= n // 2:
        raise BadDimension(f"D = {D} must lie in 1..{n // 2}")
    children = np.random.SeedSequence(seed).spawn(trials)
    dims, resamples = [], 0
    for child in children:
        rng = np.random.Generator(np.random.Philox(child))
        while True:
            V = rng.integers(0, p, size=(n, D), dtype=np.int64)
            if rank_mod_p(V, p) == D:
                break
            resamples += 1
        dims.append(span_dimension(mats, V, p))
    growth = [Fraction(d, D) for d in dims]
    return {
        "n": n,
        "p": p,
        "D": D,
        "trials": trials,
        "seed": seed,
        "matrices": len(mats),
        "dims": dims,
        "min_growth": min(growth),
        "mean_growth": sum(growth, Fraction(0)) / len(growth),
        "max_growth": max(growth),
        "resamples": resamples,
        "upper_limit": min(Fraction(len(mats)), Fraction(n, D)),
    }
