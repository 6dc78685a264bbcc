# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled hot loops.  Semantics are defined by ``_purepy.py``."""

from libc.stdint cimport uint64_t, int64_t
from libc.math cimport floor
from libcpp.vector cimport vector
from libcpp.unordered_map cimport unordered_map
from cython.operator cimport dereference

import numpy as np

cdef extern from *:
    """
    static inline unsigned long long me_mulmod(unsigned long long a, unsigned long long b,
                                               unsigned long long m) {
        return (unsigned long long)(((unsigned __int128)a * b) % m);
    }
    static inline int me_popcount(unsigned long long x) { return __builtin_popcountll(x); }
    static inline unsigned long long me_mix(unsigned long long h, long long v) {
        h ^= (unsigned long long)v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h ^= h >> 31;
        h *= 0xbf58476d1ce4e5b9ULL;
        return h;
    }
    """
    uint64_t me_mulmod(uint64_t a, uint64_t b, uint64_t m) nogil
    int me_popcount(uint64_t x) nogil
    uint64_t me_mix(uint64_t h, int64_t v) nogil


cdef inline uint64_t _addmod(uint64_t a, uint64_t b, uint64_t m) nogil:
    cdef uint64_t s = a + b
    if s >= m or s < a:
        s -= m
    return s


def relation_candidates(letters, uint64_t modulus, int max_len, int min_len=1,
                        bint shortest=True, Py_ssize_t limit=1000, long long budget=-1):
    cdef Py_ssize_t nl = len(letters)
    if modulus >= (<uint64_t>1) << 62:
        raise ValueError("modulus must be below 2**62")
    cdef vector[uint64_t] L = vector[uint64_t](nl * 4)
    cdef Py_ssize_t i, k
    for i in range(nl):
        for k in range(4):
            L[i * 4 + k] = <uint64_t>(letters[i][k])
    cdef vector[uint64_t] prod = vector[uint64_t]((max_len + 1) * 4)
    cdef vector[int] word = vector[int](max_len + 1)
    cdef vector[int] choice = vector[int](max_len + 1)
    prod[0] = 1; prod[1] = 0; prod[2] = 0; prod[3] = 1
    choice[0] = 0
    cdef int depth = 0, d1, x, cur_max = max_len, best_len = max_len + 1
    cdef Py_ssize_t at_best = 0
    cdef long long nodes = 0
    cdef uint64_t a, b, c, d, e, f, g, h, p = modulus
    cdef uint64_t* P
    cdef uint64_t* Q
    found = []
    while depth >= 0:
        x = choice[depth]
        if depth >= cur_max or x >= nl:
            depth -= 1
            continue
        choice[depth] = x + 1
        if depth > 0 and x == (word[depth - 1] ^ 1):
            continue
        word[depth] = x
        P = &prod[depth * 4]
        Q = &prod[(depth + 1) * 4]
        a = P[0]; b = P[1]; c = P[2]; d = P[3]
        e = L[x * 4]; f = L[x * 4 + 1]; g = L[x * 4 + 2]; h = L[x * 4 + 3]
        Q[0] = _addmod(me_mulmod(a, e, p), me_mulmod(b, g, p), p)
        Q[1] = _addmod(me_mulmod(a, f, p), me_mulmod(b, h, p), p)
        Q[2] = _addmod(me_mulmod(c, e, p), me_mulmod(d, g, p), p)
        Q[3] = _addmod(me_mulmod(c, f, p), me_mulmod(d, h, p), p)
        nodes += 1
        if budget >= 0 and nodes > budget:
            return found, nodes, True
        d1 = depth + 1
        if Q[0] == 1 and Q[1] == 0 and Q[2] == 0 and Q[3] == 1 and d1 >= min_len:
            if shortest:
                if d1 < best_len:
                    best_len = d1
                    cur_max = d1
                    at_best = 1
                    found.append([word[k] for k in range(d1)])
                elif at_best < limit:
                    at_best += 1
                    found.append([word[k] for k in range(d1)])
            elif len(found) < limit:
                found.append([word[k] for k in range(d1)])
        depth = d1
        choice[depth] = 0
    return found, nodes, False


def min_vertex_expansion(nbr_masks, int max_size):
    cdef int n = len(nbr_masks)
    if n > 63:
        raise ValueError("at most 63 vertices")
    cdef vector[uint64_t] M = vector[uint64_t](n)
    cdef int i
    for i in range(n):
        M[i] = <uint64_t>nbr_masks[i]
    cdef vector[int] nxt = vector[int](max_size + 2)
    cdef vector[uint64_t] orm = vector[uint64_t](max_size + 2)
    cdef vector[uint64_t] setm = vector[uint64_t](max_size + 2)
    cdef long long best_num = -1, best_den = 1, visited = 0
    cdef uint64_t best_set = 0, o, s
    cdef int depth = 0, e, size, cnt
    with nogil:
        while depth >= 0:
            e = nxt[depth]
            if e >= n or depth >= max_size:
                depth -= 1
                continue
            nxt[depth] = e + 1
            o = orm[depth] | M[e]
            s = setm[depth] | ((<uint64_t>1) << e)
            size = depth + 1
            cnt = me_popcount(o)
            visited += 1
            if best_num < 0 or cnt * best_den < best_num * size:
                best_num = cnt
                best_den = size
                best_set = s
            depth += 1
            nxt[depth] = e + 1
            orm[depth] = o
            setm[depth] = s
    return best_num, best_den, best_set, visited


def greedy_net(points, double radius):
    cdef double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t m = pts.shape[0], dim = pts.shape[1]
    if dim > 8:
        raise ValueError("dimension must be at most 8")
    cdef double r2 = radius * radius, t, d2
    cdef unordered_map[uint64_t, vector[Py_ssize_t]] table
    cdef vector[Py_ssize_t] centers
    assign_arr = np.empty(m, dtype=np.int64)
    cdef int64_t[::1] assign = assign_arr
    cdef int64_t cell[8]
    cdef int64_t nb[8]
    cdef Py_ssize_t i, j, k, off, n_off = 1, rem, found, idx
    cdef uint64_t hkey
    cdef unordered_map[uint64_t, vector[Py_ssize_t]].iterator it
    for k in range(dim):
        n_off *= 3
    with nogil:
        for i in range(m):
            for k in range(dim):
                cell[k] = <int64_t>floor(pts[i, k] / radius)
            found = -1
            for off in range(n_off):
                rem = off
                hkey = 0
                # same offset order as itertools.product((-1, 0, 1), repeat=dim)
                for k in range(dim - 1, -1, -1):
                    nb[k] = cell[k] + (rem % 3) - 1
                    rem = rem // 3
                for k in range(dim):
                    hkey = me_mix(hkey, nb[k])
                it = table.find(hkey)
                if it == table.end():
                    continue
                for idx in range(<Py_ssize_t>dereference(it).second.size()):
                    j = dereference(it).second[idx]
                    d2 = 0.0
                    for k in range(dim):
                        t = pts[i, k] - pts[j, k]
                        d2 += t * t
                    if d2 <= r2 and (found < 0 or j < found):
                        found = j
            if found < 0:
                centers.push_back(i)
                hkey = 0
                for k in range(dim):
                    hkey = me_mix(hkey, cell[k])
                table[hkey].push_back(i)
                assign[i] = i
            else:
                assign[i] = found
    return np.asarray([centers[k] for k in range(<Py_ssize_t>centers.size())], dtype=np.int64), assign_arr


