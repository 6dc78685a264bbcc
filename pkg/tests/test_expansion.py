import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monotone_expander.discretize import LayeredBipartiteGraph, dimension_matrices, discretize
from monotone_expander.errors import BadDimension, BadPrime, TooLarge
from monotone_expander.expansion import (
    builtin_corpus,
    cantor_set,
    continuous_corpus_test,
    rank_mod_p,
    spectral_analysis,
    spectral_gap,
    subspace_dimension_test,
    vertex_expansion_exact,
)
from monotone_expander.family import build_family


def random_layered_graph(n, layers, rng):
    """Random graph made of strictly increasing partial maps."""
    out = []
    for _ in range(layers):
        k = rng.randint(1, n)
        src = sorted(rng.sample(range(n), k))
        dst = sorted(rng.sample(range(n), k))
        out.append(list(zip(src, dst)))
    return LayeredBipartiteGraph.from_layers(n, out)


def brute_min_expansion(g):
    nbrs = [set() for _ in range(g.n)]
    for i, j in g.edge_set():
        nbrs[i].add(j)
    best = None
    for size in range(1, g.n // 2 + 1):
        for A in itertools.combinations(range(g.n), size):
            r = Fraction(len(set().union(*(nbrs[i] for i in A))), size)
            if best is None or r < best:
                best = r
    return best


def dense_sigma2(g):
    B = g.biadjacency().toarray()
    dL, dR = B.sum(axis=0), B.sum(axis=1)
    keepL, keepR = dL > 0, dR > 0
    B = B[np.ix_(keepR, keepL)]
    Bn = B / np.sqrt(np.outer(dR[keepR], dL[keepL]))
    s = np.linalg.svd(Bn, compute_uv=False)
    return s[1] if len(s) > 1 else 0.0


def circulant(n):
    shift = [(i, i + 1) for i in range(n - 1)]
    return LayeredBipartiteGraph.from_layers(n, [[(i, i) for i in range(n)], shift, [(n - 1, 0)]])


@pytest.mark.parametrize("seed", range(8))
def test_exhaustive_matches_subset_enumeration(seed):
    rng = random.Random(seed)
    g = random_layered_graph(rng.randint(4, 12), rng.randint(1, 4), rng)
    rep = vertex_expansion_exact(g)
    assert rep.min_ratio == brute_min_expansion(g)
    nbrs = {i: {j for a, j in g.edge_set() if a == i} for i in range(g.n)}
    witness = rep.argmin_set
    assert Fraction(len(set().union(*(nbrs[i] for i in witness))), len(witness)) == rep.min_ratio


def test_forged_graph_n10(search_family):
    g = discretize(search_family, 10)
    rep = vertex_expansion_exact(g)
    assert rep.min_ratio == brute_min_expansion(g) == Fraction(6, 5)


def test_exhaustive_cap(graph_cache):
    with pytest.raises(TooLarge):
        vertex_expansion_exact(graph_cache(64))


@pytest.mark.parametrize("seed", range(5))
def test_spectral_matches_dense_svd(seed):
    rng = random.Random(100 + seed)
    g = random_layered_graph(rng.randint(20, 60), rng.randint(3, 6), rng)
    assert spectral_gap(g) == pytest.approx(dense_sigma2(g), abs=1e-6)


def test_spectral_forged_64(graph_cache):
    g = graph_cache(64)
    assert spectral_gap(g) == pytest.approx(dense_sigma2(g), abs=1e-7)


def test_circulant_fixture():
    assert spectral_gap(circulant(64)) == pytest.approx(math.cos(math.pi / 64), abs=1e-6)
    assert dense_sigma2(circulant(64)) == pytest.approx(math.cos(math.pi / 64), abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_tanner_bound_below_exact(seed):
    rng = random.Random(200 + seed)
    g = random_layered_graph(rng.randint(6, 12), rng.randint(2, 5), rng)
    res = spectral_analysis(g)
    nbrs = [set() for _ in range(g.n)]
    for i, j in g.edge_set():
        nbrs[i].add(j)
    for size in range(1, g.n // 2 + 1):
        worst = min(len(set().union(*(nbrs[i] for i in A))) / size for A in itertools.combinations(range(g.n), size))
        assert res.tanner_ratio(size) <= worst + 1e-9


def test_corpus_shape(search_family):
    corpus = builtin_corpus(search_family)
    assert len(corpus) == 200
    assert all(0 < A.measure <= Fraction(1, 2) for _, A in corpus)
    kinds = {k for k, _ in corpus}
    assert {"cell", "cantor-thirds", "cantor-quarters", "periodic", "preimage", "random"} <= kinds
    assert builtin_corpus(search_family) == corpus


def test_cantor_measure():
    assert cantor_set(3).measure == Fraction(8, 27)


def test_corpus_dichotomy_rows(search_family):
    corpus = builtin_corpus(search_family, count=60)
    rep = continuous_corpus_test(search_family, corpus)
    assert rep["count"] == 60
    assert rep["witnessed"] + rep["balanced"] == 60
    for row in rep["rows"]:
        if row["witness"] is not None:
            assert row["shift_ratio"] >= 1 + rep["sigma"]


def xor_rank(M):
    basis = []
    for row in np.asarray(M) % 2:
        v = int("".join(str(int(x)) for x in row), 2)
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
    return len(basis)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_rank_mod_2_matches_xor_basis(r, c, seed):
    M = np.random.default_rng(seed).integers(0, 2, size=(r, c))
    assert rank_mod_p(M, 2) == xor_rank(M)


@pytest.mark.parametrize("p", [3, 5, 7, 101])
def test_rank_mod_p_matches_sympy(p):
    from sympy import GF
    from sympy.polys.matrices import DomainMatrix

    rng = np.random.default_rng(p)
    for _ in range(20):
        r, c = rng.integers(1, 9, size=2)
        M = rng.integers(0, p, size=(r, c))
        # make rank deficiency common
        if rng.random() < 0.5 and r > 1:
            M[-1] = (M[0] * 2 + M[-1] * 0) % p
        dm = DomainMatrix([[GF(p)(int(x)) for x in row] for row in M], (int(r), int(c)), GF(p))
        assert rank_mod_p(M, p) == dm.rank()


def test_dimension_growth_and_control(graph_cache):
    g = graph_cache(64)
    rep = subspace_dimension_test(dimension_matrices(g), 2, 16, 10, seed=1)
    assert rep["min_growth"] > 1
    ident = [np.eye(64, dtype=np.uint8)]
    ctrl = subspace_dimension_test(ident, 2, 16, 10, seed=1)
    assert ctrl["min_growth"] == ctrl["max_growth"] == 1


def test_dimension_guards():
    I = [np.eye(8, dtype=np.uint8)]
    with pytest.raises(BadPrime):
        subspace_dimension_test(I, 4, 2, 1)
    with pytest.raises(BadDimension):
        subspace_dimension_test(I, 2, 5, 1)
