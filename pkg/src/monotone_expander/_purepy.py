"""Pure-Python versions of the hot loops.

These define the semantics; ``_kernels.pyx`` must agree with them exactly
(same visiting order, same tie-breaking).  ``kernels.py`` picks one of the two
at import time.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def relation_candidates(letters, modulus, max_len, min_len=1, shortest=True, limit=1000, budget=-1):
    """Depth-first search for reduced words that are congruent to I mod ``modulus``.

    ``letters`` is a list of 4-tuples (row-major 2x2 matrices reduced mod
    ``modulus``); letter ``x`` has inverse ``x ^ 1``.  Words are visited in
    lexicographic order of their letter codes.

    In ``shortest`` mode the search depth shrinks to the length of the best
    candidate found so far, and up to ``limit`` candidates of that length are
    kept.  Otherwise every candidate with ``min_len <= len <= max_len`` is kept
    (up to ``limit``).

    Returns ``(candidates, nodes, exhausted)``; ``exhausted`` is True when the
    node budget ran out before the search finished.
    """
    p = modulus
    nl = len(letters)
    found = []
    nodes = 0
    best_len = max_len + 1
    at_best = 0
    cur_max = max_len
    # stack of (product, word, next choice)
    prods = [(1, 0, 0, 1)]
    word = []
    choice = [0]
    depth = 0
    while depth >= 0:
        x = choice[depth]
        if depth >= cur_max or x >= nl:
            depth -= 1
            if depth >= 0:
                word.pop()
                prods.pop()
                choice.pop()
            continue
        choice[depth] = x + 1
        if depth > 0 and x == (word[-1] ^ 1):
            continue
        a, b, c, d = prods[depth]
        e, f, g, h = letters[x]
        m = ((a * e + b * g) % p, (a * f + b * h) % p, (c * e + d * g) % p, (c * f + d * h) % p)
        nodes += 1
        if 0 <= budget < nodes:
            return found, nodes, True
        d1 = depth + 1
        if m == (1, 0, 0, 1) and d1 >= min_len:
            if shortest:
                if d1 < best_len:
                    best_len = d1
                    cur_max = d1
                    at_best = 1
                    found.append(word + [x])
                elif at_best < limit:
                    at_best += 1
                    found.append(word + [x])
            elif len(found) < limit:
                found.append(word + [x])
        word.append(x)
        prods.append(m)
        choice.append(0)
        depth = d1
    return found, nodes, False


def min_vertex_expansion(nbr_masks, max_size):
    """Minimise popcount(N(A)) / |A| over nonempty A with |A| <= max_size.

    ``nbr_masks[i]`` is the bitmask of right neighbours of left vertex ``i``.
    Subsets are visited depth-first in lexicographic order of their sorted
    elements; the first minimiser wins.  Returns ``(num, den, set_mask, visited)``.
    """
    n = len(nbr_masks)
    best_num, best_den, best_set = -1, 1, 0
    visited = 0
    nxt = [0] * (max_size + 2)
    orm = [0] * (max_size + 2)
    setm = [0] * (max_size + 2)
    depth = 0
    while depth >= 0:
        e = nxt[depth]
        if e >= n or depth >= max_size:
            depth -= 1
            continue
        nxt[depth] = e + 1
        o = orm[depth] | nbr_masks[e]
        s = setm[depth] | (1 << e)
        size = depth + 1
        cnt = o.bit_count() if hasattr(o, "bit_count") else bin(o).count("1")
        visited += 1
        if best_num < 0 or cnt * best_den < best_num * size:
            best_num, best_den, best_set = cnt, size, s
        depth += 1
        nxt[depth] = e + 1
        orm[depth] = o
        setm[depth] = s
    return best_num, best_den, best_set, visited


def greedy_net(points, radius):
    """Greedy net: a point becomes a centre unless some centre is within ``radius``.

    Returns ``(centers, assign)`` where ``assign[i]`` is the smallest-index
    centre within ``radius`` of point ``i`` (a centre is assigned to itself).
    Uses a hash grid of side ``radius``.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    m, dim = pts.shape
    r2 = radius * radius
    rows = pts.tolist()
    offsets = list(itertools.product((-1, 0, 1), repeat=dim))
    table: dict[tuple, list[int]] = {}
    centers = []
    assign = np.empty(m, dtype=np.int64)
    for i, row in enumerate(rows):
        cell = tuple(math.floor(v / radius) for v in row)
        found = -1
        for off in offsets:
            bucket = table.get(tuple(c + o for c, o in zip(cell, off)))
            if bucket is None:
                continue
            for j in bucket:
                other = rows[j]
                d2 = 0.0
                for k in range(dim):
                    t = row[k] - other[k]
                    d2 += t * t
                if d2 <= r2 and (found < 0 or j < found):
                    found = j
        if found < 0:
            centers.append(i)
            table.setdefault(cell, []).append(i)
            assign[i] = i
        else:
            assign[i] = found
    return np.asarray(centers, dtype=np.int64), assign
