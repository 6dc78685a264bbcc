"""Growth experiments at resolution delta, in double precision.

Matrices of SL2(R) are stored as rows of an (m, 4) float array in row-major
order (a, b, c, d); distances are Euclidean in R^4.  Exact inputs (Mat2)
cross into floats through :func:`as_float_array`, which checks the
determinant.  Random sampling uses Philox streams so results are reproducible
from (seed, budget).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import BudgetExceeded, DegenerateProbes, DeterminantError
from .sl2 import Mat2, det4, flip, mat_inv, mat_mul

DET_TOL = 1e-9


def _rng(seed):
    return np.random.Generator(np.random.Philox(seed))


def as_float_array(mats) -> np.ndarray:
    """(m, 4) float array from Mat2 values or 4-sequences; checks |det - 1| <= 1e-9."""
    if isinstance(mats, np.ndarray):
        arr = np.array(mats, dtype=np.float64).reshape(-1, 4)
    else:
        rows = []
        for m in mats:
            if isinstance(m, Mat2):
                rows.append([float(x) for x in m.entries])
            else:
                rows.append([float(x) for x in m])
        arr = np.array(rows, dtype=np.float64).reshape(-1, 4)
    det = arr[:, 0] * arr[:, 3] - arr[:, 1] * arr[:, 2]
    bad = np.flatnonzero(np.abs(det - 1) > DET_TOL)
    if bad.size:
        raise DeterminantError(f"row {bad[0]} has determinant {det[bad[0]]!r}")
    return arr


def float_mul(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Row-wise 2x2 products of two (m, 4) arrays."""
    a, b, c, d = X.T
    e, f, g, h = Y.T
    return np.stack([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h], axis=1)


def float_inv(X: np.ndarray) -> np.ndarray:
    return X[:, [3, 1, 2, 0]] * np.array([1.0, -1.0, -1.0, 1.0])


def symmetrize(X: np.ndarray) -> np.ndarray:
    """X together with its inverses, exact duplicates removed (first occurrence order)."""
    both = np.vstack([X, float_inv(X)])
    _, idx = np.unique(both, axis=0, return_index=True)
    return both[np.sort(idx)]


# ---------------------------------------------------------------------------
# covering numbers


def covering_number(S, delta: float, shuffle_seed=None) -> tuple:
    """(lower, upper) bounds on the number of delta-balls needed to cover S.

    upper: size of a greedy delta-net (its centres cover S);
    lower: size of a greedy 2*delta-net, whose centres are pairwise more than
    2*delta apart and so need distinct balls.

    The greedy pass visits points in the given order, or in a Philox-shuffled
    order when ``shuffle_seed`` is set.  Net sizes depend on the visiting
    order, so sets that are to be compared should use the same policy.
    """
    X = np.asarray(S, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if len(X) == 0:
        return 0, 0
    if shuffle_seed is not None:
        X = X[_rng(shuffle_seed).permutation(len(X))]
    upper = len(kernels.greedy_net(X, delta)[0])
    lower = len(kernels.greedy_net(X, 2 * delta)[0])
    return lower, upper


def cover_count_1d(values, delta: float) -> int:
    """Exact minimum number of closed delta-balls covering a finite set of reals."""
    v = np.unique(np.asarray(values, dtype=np.float64))
    # relative slack so that points exactly 2*delta apart are not split by rounding
    reach = 2 * delta * (1 + 1e-9)
    count, i, n = 0, 0, len(v)
    while i < n:
        count += 1
        i = int(np.searchsorted(v, v[i] + reach, side="right"))
    return count


# ---------------------------------------------------------------------------
# product growth


def rotation_net(delta: float) -> np.ndarray:
    """Rotations [[cos t, -sin t], [sin t, cos t]] with angle step delta / sqrt(2).

    Two rotations by angles differing by t are 2 sqrt(2) |sin(t/2)| apart, so
    consecutive points are at most delta apart: a delta-net of the compact
    subgroup SO(2).
    """
    step = delta / math.sqrt(2)
    t = np.arange(0.0, 2 * math.pi, step)
    c, s = np.cos(t), np.sin(t)
    return np.stack([c, -s, s, c], axis=1)


def diagonal_segment(delta: float, length: float = 1.0) -> np.ndarray:
    """diag(e^t, e^-t) for |t| <= length/2 with step delta/2 (a piece of a one-parameter subgroup)."""
    t = np.arange(-length / 2, length / 2 + 1e-15, delta / 2)
    z = np.zeros_like(t)
    return np.stack([np.exp(t), z, z, np.exp(-t)], axis=1)


def _chao1(assign: np.ndarray) -> tuple:
    counts = np.bincount(np.unique(assign, return_inverse=True)[1])
    f1 = int(np.sum(counts == 1))
    f2 = int(np.sum(counts == 2))
    extra = f1 * f1 / (2 * f2) if f2 > 0 else f1 * (f1 - 1) / 2
    return f1, f2, extra


def product_growth(A, delta: float, sample_budget: int = 10**6, seed: int = 0, rho_ladder=None) -> dict:
    """Compare covering numbers of A (symmetrised) and of AAA at scale delta.

    AAA is enumerated when |A|^3 fits in the budget; otherwise ``sample_budget``
    uniform triples are drawn and the net size is corrected for unseen cells
    with the Chao1 estimator.  The exponent is
    log(N(AAA) / N(A)) / log(1/delta), computed from the upper (net) counts.
    Both nets are built in a shuffled visiting order, so a structured A and
    a sampled AAA are measured the same way.
    """
    X = symmetrize(as_float_array(A))
    m = len(X)
    lowA, upA = covering_number(X, delta, shuffle_seed=seed)
    if m**3 <= sample_budget:
        AA = float_mul(np.repeat(X, m, axis=0), np.tile(X, (m, 1)))
        AAA = float_mul(np.repeat(AA, m, axis=0), np.tile(X, (len(AA), 1)))
        mode, samples = "exact", len(AAA)
        lowP, upP = covering_number(AAA, delta, shuffle_seed=seed)
        estimate = float(upP)
        f1 = f2 = 0
    else:
        if sample_budget < 1:
            raise BudgetExceeded("sample budget must be positive", needed=m**3, budget=sample_budget)
        rng = _rng(seed)
        idx = rng.integers(0, m, size=(sample_budget, 3))
        AAA = float_mul(float_mul(X[idx[:, 0]], X[idx[:, 1]]), X[idx[:, 2]])
        mode, samples = "sampled", sample_budget
        AAA = AAA[_rng(seed + 1).permutation(len(AAA))]
        centers, assign = kernels.greedy_net(AAA, delta)
        upP = len(centers)
        lowP = len(kernels.greedy_net(AAA, 2 * delta)[0])
        f1, f2, extra = _chao1(assign)
        estimate = upP + extra
    scale = math.log(1 / delta)
    exponent = math.log(estimate / upA) / scale
    report = {
        "delta": delta,
        "size": m,
        "N_A": [lowA, upA],
        "N_AAA": [lowP, upP],
        "N_AAA_estimate": estimate,
        "mode": mode,
        "samples": samples,
        "seed": seed,
        "chao1": {"f1": f1, "f2": f2},
        "exponent": exponent,
        "exponent_lower": math.log(max(lowP, 1) / upA) / scale,
    }
    if rho_ladder is None:
        rho_ladder = [delta * 2**j for j in range(0, 6)]
    report["separated_subsets"] = [
        {"rho": rho, "size": len(kernels.greedy_net(X, rho)[0])} for rho in rho_ladder
    ]
    return report


# ---------------------------------------------------------------------------
# flatness of random products


def _letters(gens) -> np.ndarray:
    X = as_float_array(gens)
    return np.vstack([X, float_inv(X)])


def _walk(gens, ell, samples, seed) -> np.ndarray:
    L = _letters(gens)
    rng = _rng(seed)
    idx = rng.integers(0, len(L), size=(samples, ell))
    P = L[idx[:, 0]]
    for t in range(1, ell):
        P = float_mul(P, L[idx[:, t]])
    return P


def flatness_sample(gens, ell: int, delta: float, samples: int = 10**5, seed: int = 0) -> dict:
    """Largest cell frequency of ell-step products, per unit of cell volume delta^3."""
    if ell < 1:
        raise ValueError("ell must be at least 1")
    if hasattr(gens, "gens"):
        gens = gens.gens
    P = _walk(gens, ell, samples, seed)
    cells = np.floor(P / delta).astype(np.int64)
    _, counts = np.unique(cells, axis=0, return_counts=True)
    top = int(counts.max())
    frac = top / samples
    volume = delta**3
    return {
        "ell": ell,
        "delta": delta,
        "samples": samples,
        "seed": seed,
        "max_cell_count": top,
        "value": frac / volume,
        "stderr": math.sqrt(frac * (1 - frac) / samples) / volume,
        "occupied_cells": int(len(counts)),
    }


def flatness(gens, ell: int, delta: float, samples: int = 10**5, seed: int = 0) -> float:
    return flatness_sample(gens, ell, delta, samples, seed)["value"]


def flatness_series(gens, ells=(1, 2, 4, 8, 16), delta: float = 1e-3, samples: int = 10**5, seed: int = 0) -> dict:
    """Flatness at several walk lengths; checks it never rises by more than 3 standard errors."""
    points = [flatness_sample(gens, ell, delta, samples, seed + i) for i, ell in enumerate(ells)]
    steps = []
    for a, b in zip(points, points[1:]):
        slack = 3 * math.hypot(a["stderr"], b["stderr"])
        steps.append({"from": a["ell"], "to": b["ell"], "rise": b["value"] - a["value"], "slack": slack,
                      "ok": b["value"] <= a["value"] + slack})
    return {"points": points, "steps": steps, "non_increasing": all(s["ok"] for s in steps)}


# ---------------------------------------------------------------------------
# traces


def trace_set_growth(A, probes, delta: float) -> dict:
    """Covering numbers of the trace sets Tr(g_i^-1 A) = <A, flip(g_i)> for four probes.

    The probes must be linearly independent in R^4 (checked exactly).
    """
    probes = list(probes)
    if len(probes) != 4:
        raise ValueError("need exactly four probes")
    d4 = det4(*probes)
    if d4 == 0:
        raise DegenerateProbes("the probes are linearly dependent (det4 = 0)")
    X = as_float_array(A)
    flips = as_float_array([flip(g) for g in probes])
    traces = X @ flips.T  # column i holds <a, flip(g_i)>
    sizes = [cover_count_1d(traces[:, i], delta) for i in range(4)]
    lowA, upA = covering_number(X, delta)
    best = max(itertools.combinations(range(4), 3), key=lambda c: math.prod(sizes[i] for i in c))
    best_product = math.prod(sizes[i] for i in best)
    return {
        "delta": delta,
        "det4": str(d4),
        "trace_covering": sizes,
        "best_triple": list(best),
        "best_product": best_product,
        "N_A": [lowA, upA],
        "margin": best_product / upA,
        "margin_exponent": math.log(best_product / upA) / math.log(1 / delta),
    }


@dataclass(frozen=True)
class IdentityCheck:
    passed: bool
    lhs: Fraction
    rhs: Fraction


def trace_identity_check(x, y, g: Mat2) -> IdentityCheck:
    """Tr(diag(x,1/x) g diag(y,1/y) g) against a^2 xy + d^2/(xy) + bc (x/y + y/x), exactly."""
    x, y = Fraction(x), Fraction(y)
    if x == 0 or y == 0:
        raise ValueError("x and y must be nonzero")
    Dx = Mat2(x, 0, 0, 1 / x)
    Dy = Mat2(y, 0, 0, 1 / y)
    P = mat_mul(mat_mul(mat_mul(Dx, g), Dy), g)
    lhs = P.a + P.d
    rhs = g.a**2 * x * y + g.d**2 / (x * y) + g.b * g.c * (x / y + y / x)
    return IdentityCheck(lhs == rhs, lhs, rhs)


def trace_inner_check(gi: Mat2, g: Mat2) -> bool:
    """Tr(gi^-1 g) == <g, flip(gi)>, exactly."""
    from .sl2 import inner4, trace

    return trace(mat_mul(mat_inv(gi), g)) == inner4(g, flip(gi))


# ---------------------------------------------------------------------------
# scalar sets


def _four_fold(S: np.ndarray, count: int | None, rng) -> np.ndarray:
    if count is None:
        S2 = np.multiply.outer(S, S).ravel()
        return np.multiply.outer(S2, S2).ravel()
    idx = rng.integers(0, len(S), size=(count, 4))
    return S[idx].prod(axis=1)


def amplification_set(S, gamma: float, lam: float, delta: float, sample_budget: int = 10**6, seed: int = 0) -> int:
    return amplification_report(S, gamma, lam, delta, sample_budget, seed)["covering"]


def amplification_report(S, gamma: float, lam: float, delta: float, sample_budget: int = 10**6, seed: int = 0) -> dict:
    """Covering number of {xy + gamma/(xy) + lam (x/y + y/x) : x, y in S_(4)}.

    S is symmetrised (S ∪ 1/S).  S_(4) holds 4-fold products; the pairs are
    enumerated when |S|^8 fits the budget and sampled otherwise.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    S = np.unique(np.asarray(S, dtype=np.float64))
    if np.any(S <= 0):
        raise ValueError("S must be positive")
    S = np.unique(np.concatenate([S, 1 / S]))
    rng = _rng(seed)
    m = len(S)
    if m**8 <= sample_budget:
        S4 = np.unique(_four_fold(S, None, rng))
        x = np.repeat(S4, len(S4))
        y = np.tile(S4, len(S4))
        mode = "exact"
    else:
        x = _four_fold(S, sample_budget, rng)
        y = _four_fold(S, sample_budget, rng)
        mode = "sampled"
    D = x * y + gamma / (x * y) + lam * (x / y + y / x)
    cov = cover_count_1d(D, delta)
    return {
        "size": m,
        "covering": cov,
        "ratio": cov / m,
        "mode": mode,
        "pairs": int(len(D)),
        "seed": seed,
        "gamma": gamma,
        "lambda": lam,
        "delta": delta,
    }


def sum_product(A, delta: float) -> tuple:
    """(N_delta(A + A), N_delta(A * A)) over all pairs."""
    A = np.unique(np.asarray(A, dtype=np.float64))
    sums = np.add.outer(A, A).ravel()
    prods = np.multiply.outer(A, A).ravel()
    return cover_count_1d(sums, delta), cover_count_1d(prods, delta)


def random_separated_set(size: int, delta: float, lo: float = 0.5, hi: float = 2.0, seed: int = 0) -> np.ndarray:
    """``size`` distinct points of the grid lo + 1.5 * delta * k inside [lo, hi]."""
    step = 1.5 * delta
    slots = int((hi - lo) / step) + 1
    if size > slots:
        raise ValueError(f"only {slots} separated slots in [{lo}, {hi}]")
    k = _rng(seed).choice(slots, size=size, replace=False)
    return np.sort(lo + step * k)
