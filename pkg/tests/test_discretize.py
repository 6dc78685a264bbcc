import csv
import io
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monotone_expander.discretize import (
    LayeredBipartiteGraph,
    PartialMonotoneMap,
    dimension_matrices,
    discretize,
    export,
    import_layered_json,
    map_relation,
    monotone_decompose,
)
from monotone_expander.errors import InvalidN, NotMonotoneRelation, UnknownFormat
from monotone_expander.family import shift_family


@st.composite
def staircase(draw):
    """A non-crossing relation: a monotone lattice path where each step may add an edge."""
    n = draw(st.integers(2, 30))
    i = j = 0
    edges = set()
    while i < n and j < n:
        edges.add((i, j))
        move = draw(st.sampled_from(["i", "j", "both"]))
        if move in ("i", "both"):
            i += 1
        if move in ("j", "both"):
            j += 1
    return n, sorted(edges)


@settings(max_examples=200, deadline=None)
@given(staircase())
def test_decomposition_is_exact_and_optimal(case):
    n, edges = case
    layers = monotone_decompose(edges, n)
    got = sorted(p for layer in layers for p in layer.pairs())
    assert got == edges
    for layer in layers:
        t = [j for _, j in layer.pairs()]
        assert all(a < b for a, b in zip(t, t[1:]))
    deg = {}
    for i, j in edges:
        deg[("L", i)] = deg.get(("L", i), 0) + 1
        deg[("R", j)] = deg.get(("R", j), 0) + 1
    assert len(layers) == max(deg.values())


def test_crossing_rejected():
    with pytest.raises(NotMonotoneRelation):
        monotone_decompose([(0, 1), (1, 0)], 2)


def test_partial_map_checks():
    with pytest.raises(ValueError):
        PartialMonotoneMap(3, (2, 1, None))
    with pytest.raises(ValueError):
        PartialMonotoneMap.from_pairs(3, [(0, 0), (0, 1)])


def test_relation_matches_float_overlap(search_family):
    n = 64
    for m in search_family.maps:
        rel = set(map_relation(m, n))
        lo, hi = float(m.domain.lo), float(m.domain.hi)
        for i in range(n):
            a, b = max(lo, i / n), min(hi, (i + 1) / n)
            if b - a <= 1e-12:
                assert not any(e[0] == i for e in rel)
                continue
            ya, yb = float(m(Fraction(a))), float(m(Fraction(b)))
            for j in range(n):
                overlap = min(yb, (j + 1) / n) - max(ya, j / n)
                if overlap > 1e-9:
                    assert (i, j) in rel
                elif overlap < -1e-9:
                    assert (i, j) not in rel


def test_shift_graph():
    g = discretize(shift_family(4), 8)
    # identity plus shifts by two cells
    assert g.edge_set() == {(i, j) for i in range(8) for j in range(8) if j - i in (-2, 0, 2)}


def test_invalid_n(search_family):
    with pytest.raises(InvalidN):
        discretize(search_family, 1)


def test_layer_bound_at_64(graph_cache):
    g = graph_cache(64)
    assert max(g.layers_per_map().values()) <= 3


def test_exports(graph_cache):
    g = graph_cache(64)
    rows = list(csv.reader(io.StringIO(export(g, "edge-csv").decode())))
    assert rows[0] == ["layer", "i", "j"]
    assert [tuple(map(int, r)) for r in rows[1:]] == g.edges()
    again = import_layered_json(export(g, "layered-json"))
    assert again == g
    assert export(again, "layered-json") == export(g, "layered-json")
    assert export(g, "dot").startswith(b"graph monotone {")
    mrows = export(g, "matrix-csv").decode().splitlines()
    assert len(mrows) == 1 + g.n * len(g.layers)
    with pytest.raises(UnknownFormat):
        export(g, "xml")


def test_layered_json_nulls():
    g = LayeredBipartiteGraph.from_layers(3, [[(0, 1)]])
    doc = json.loads(export(g, "layered-json"))
    assert doc["layers"] == [[1, None, None]]


def test_dimension_matrices(graph_cache):
    g = graph_cache(64)
    mats = dimension_matrices(g)
    total = sum(m.astype(np.int64) for m in mats)
    assert np.array_equal(total, g.biadjacency().toarray().astype(np.int64))
    sp = dimension_matrices(g, as_sparse=True)
    assert all(np.array_equal(a, b.toarray()) for a, b in zip(mats, sp))
