"""From a map family to a bipartite graph whose edges split into monotone layers.

[0, 1] is cut into n equal cells; left vertex i and right vertex j (both
0-based) are joined by a map when the image of cell i meets cell j in a set
of positive length.  Each map's relation is then split into partial maps that
are strictly increasing.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import sparse

from .errors import InvalidN, NotMonotoneRelation, UnknownFormat
from .family import MapFamily

FORMATS = ("edge-csv", "layered-json", "dot", "matrix-csv")


@dataclass(frozen=True)
class PartialMonotoneMap:
    """targets[i] is the image of i, or None; defined images strictly increase."""

    n: int
    targets: tuple

    def __post_init__(self):
        targets = tuple(None if t is None else int(t) for t in self.targets)
        if len(targets) != self.n:
            raise ValueError("targets must have length n")
        last = -1
        for t in targets:
            if t is None:
                continue
            if not 0 <= t < self.n:
                raise ValueError(f"target {t} out of range")
            if t <= last:
                raise ValueError("targets are not strictly increasing")
            last = t
        object.__setattr__(self, "targets", targets)

    @classmethod
    def from_pairs(cls, n: int, pairs) -> "PartialMonotoneMap":
        targets = [None] * n
        for i, j in pairs:
            if targets[i] is not None:
                raise ValueError(f"vertex {i} mapped twice")
            targets[i] = j
        return cls(n, tuple(targets))

    def pairs(self) -> list:
        return [(i, t) for i, t in enumerate(self.targets) if t is not None]

    def __len__(self):
        return sum(t is not None for t in self.targets)


@dataclass(frozen=True)
class LayeredBipartiteGraph:
    n: int
    layers: tuple
    provenance: tuple = ()  # (map index, layer rank within that map) per layer

    def edges(self) -> list:
        """(layer, i, j) triples sorted lexicographically."""
        return sorted((r, i, j) for r, layer in enumerate(self.layers) for i, j in layer.pairs())

    def edge_set(self) -> set:
        return {(i, j) for layer in self.layers for i, j in layer.pairs()}

    def layers_per_map(self) -> dict:
        counts: dict = {}
        for m, _ in self.provenance:
            counts[m] = counts.get(m, 0) + 1
        return counts

    def degrees(self) -> tuple:
        left = np.zeros(self.n, dtype=np.int64)
        right = np.zeros(self.n, dtype=np.int64)
        for layer in self.layers:
            for i, j in layer.pairs():
                left[i] += 1
                right[j] += 1
        return left, right

    def biadjacency(self) -> sparse.csr_matrix:
        """n x n sparse matrix, rows are right vertices; parallel edges add up."""
        rows, cols = [], []
        for layer in self.layers:
            for i, j in layer.pairs():
                rows.append(j)
                cols.append(i)
        data = np.ones(len(rows), dtype=np.float64)
        return sparse.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def neighbour_masks(self) -> list:
        masks = [0] * self.n
        for layer in self.layers:
            for i, j in layer.pairs():
                masks[i] |= 1 << j
        return masks

    @classmethod
    def from_relation(cls, n: int, relation, tag=0) -> "LayeredBipartiteGraph":
        layers = monotone_decompose(relation, n)
        return cls(n, tuple(layers), tuple((tag, r) for r in range(len(layers))))

    @classmethod
    def from_layers(cls, n: int, layer_pairs, provenance=None) -> "LayeredBipartiteGraph":
        layers = tuple(PartialMonotoneMap.from_pairs(n, p) for p in layer_pairs)
        prov = tuple(provenance) if provenance is not None else tuple((r, 0) for r in range(len(layers)))
        return cls(n, layers, prov)


def cell_images(m, n: int) -> list:
    """(i, ylo, yhi) for every cell i whose overlap with the domain has positive length."""
    lo, hi = m.domain.lo, m.domain.hi
    out = []
    first = max(0, math.floor(lo * n))
    last = min(n - 1, math.ceil(hi * n) - 1)
    prev_x = None
    prev_y = None
    for i in range(first, last + 1):
        a = max(lo, Fraction(i, n))
        b = min(hi, Fraction(i + 1, n))
        if a >= b:
            continue
        ya = prev_y if prev_x == a else m(a)
        yb = m(b)
        prev_x, prev_y = b, yb
        out.append((i, ya, yb))
    return out


def map_relation(m, n: int) -> list:
    """Edges (i, j) with |m(cell i) ∩ cell j| > 0."""
    edges = []
    for i, ya, yb in cell_images(m, n):
        j0 = max(0, math.floor(ya * n))
        j1 = min(n, math.ceil(yb * n))
        for j in range(j0, j1):
            # ya < yb, so every cell j in this range meets [ya, yb] in positive length
            edges.append((i, j))
    return edges


def monotone_decompose(relation, n: int | None = None) -> list:
    """Split a non-crossing relation into the fewest strictly increasing partial maps.

    Edges are taken in order of i, and for equal i by decreasing j; each goes
    to the layer whose last target is the largest one below j (a new layer if
    none).  For a non-crossing relation this uses exactly max-degree layers,
    which is optimal since edges sharing an endpoint need distinct layers.
    Layers come back sorted by their edge lists.
    """
    edges = sorted(set((int(i), int(j)) for i, j in relation), key=lambda e: (e[0], -e[1]))
    if n is None:
        n = 1 + max((max(i, j) for i, j in edges), default=-1)
    # crossing check: some i < i' with max target of i above min target of i'
    by_i: dict = {}
    for i, j in edges:
        lo, hi = by_i.get(i, (j, j))
        by_i[i] = (min(lo, j), max(hi, j))
    running_max = -1
    for i in sorted(by_i):
        lo, hi = by_i[i]
        if lo < running_max:
            raise NotMonotoneRelation(f"edges from vertex {i} cross an earlier edge")
        running_max = max(running_max, hi)

    tails: list = []  # last target of each open layer, ascending
    owners: list = []  # layer id for each entry of tails
    layers: list = []
    for i, j in edges:
        pos = bisect.bisect_left(tails, j) - 1
        if pos < 0:
            layers.append([(i, j)])
            tails.insert(0, j)
            owners.insert(0, len(layers) - 1)
        else:
            layers[owners[pos]].append((i, j))
            tails[pos] = j
    layers.sort()
    return [PartialMonotoneMap.from_pairs(n, layer) for layer in layers]


def discretize(fam: MapFamily, n: int) -> LayeredBipartiteGraph:
    if not isinstance(n, int) or n < 2:
        raise InvalidN(f"n must be an integer >= 2, got {n!r}")
    layers, prov = [], []
    for idx, m in enumerate(fam.maps):
        rel = map_relation(m, n)
        for r, layer in enumerate(monotone_decompose(rel, n)):
            layers.append(layer)
            prov.append((idx, r))
    return LayeredBipartiteGraph(n, tuple(layers), tuple(prov))


def dimension_matrices(g: LayeredBipartiteGraph, as_sparse=False) -> list:
    """One 0-1 matrix per layer with M[j, i] = 1 when the layer sends i to j."""
    out = []
    for layer in g.layers:
        pairs = layer.pairs()
        rows = [j for _, j in pairs]
        cols = [i for i, _ in pairs]
        if as_sparse:
            out.append(sparse.csr_matrix((np.ones(len(pairs), dtype=np.uint8), (rows, cols)), shape=(g.n, g.n)))
        else:
            M = np.zeros((g.n, g.n), dtype=np.uint8)
            M[rows, cols] = 1
            out.append(M)
    return out


# ---------------------------------------------------------------------------
# serialisation


def _layered_doc(g: LayeredBipartiteGraph) -> dict:
    return {
        "n": g.n,
        "layers": [list(layer.targets) for layer in g.layers],
        "provenance": [list(p) for p in g.provenance],
    }


def export(g: LayeredBipartiteGraph, fmt: str) -> bytes:
    if fmt == "edge-csv":
        lines = ["layer,i,j"] + [f"{r},{i},{j}" for r, i, j in g.edges()]
        return ("\n".join(lines) + "\n").encode()
    if fmt == "layered-json":
        return (json.dumps(_layered_doc(g), sort_keys=True, separators=(",", ":")) + "\n").encode()
    if fmt == "dot":
        lines = ["graph monotone {", "  rankdir=LR;"]
        lines.append("  { rank=same; " + " ".join(f"L{i};" for i in range(g.n)) + " }")
        lines.append("  { rank=same; " + " ".join(f"R{j};" for j in range(g.n)) + " }")
        for r, i, j in g.edges():
            lines.append(f'  L{i} -- R{j} [label="{r}"];')
        lines.append("}")
        return ("\n".join(lines) + "\n").encode()
    if fmt == "matrix-csv":
        header = "layer,row," + ",".join(f"c{i}" for i in range(g.n))
        lines = [header]
        for r, M in enumerate(dimension_matrices(g, as_sparse=True)):
            dense = M.toarray()
            for j in range(g.n):
                lines.append(f"{r},{j}," + ",".join(str(int(v)) for v in dense[j]))
        return ("\n".join(lines) + "\n").encode()
    raise UnknownFormat(f"unknown format {fmt!r}; expected one of {FORMATS}")


def import_layered_json(data) -> LayeredBipartiteGraph:
    doc = json.loads(data)
    n = int(doc["n"])
    layers = tuple(PartialMonotoneMap(n, tuple(t)) for t in doc["layers"])
    prov = tuple(tuple(p) for p in doc.get("provenance", []))
    return LayeredBipartiteGraph(n, layers, prov)
