"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Each kernel runs on the same input under both backends; the outputs are
compared before any timing is reported.
"""

import argparse
import json
import sys
import time

import numpy as np

from monotone_expander import kernels
from monotone_expander.discretize import discretize
from monotone_expander.family import shift_family
from monotone_expander.growth import rotation_net
from monotone_expander.words import SEARCH_PRIMES, _modular_letters
from monotone_expander.sl2 import Mat2


def _relation_case():
    a = Mat2(1, 2, 0, 1)
    b = Mat2(1, 0, 2, 1)
    letters = _modular_letters([a, b], SEARCH_PRIMES[0])
    return (letters, SEARCH_PRIMES[0], 11), {"shortest": False, "limit": 10}


def _expansion_case():
    g = discretize(shift_family(8), 20)
    return (g.neighbour_masks(), 8), {}


def _net_case():
    pts = rotation_net(2e-4)
    rng = np.random.Generator(np.random.Philox(1))
    pts = pts[rng.permutation(len(pts))]
    return (pts, 2e-3), {}


CASES = {
    "relation_candidates": _relation_case,
    "min_vertex_expansion": _expansion_case,
    "greedy_net": _net_case,
}


def _same(x, y):
    if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
        return np.array_equal(np.asarray(x), np.asarray(y))
    if isinstance(x, (tuple, list)) and isinstance(y, (tuple, list)):
        return len(x) == len(y) and all(_same(u, v) for u, v in zip(x, y))
    return x == y


def bench(repeat=3):
    try:
        compiled = kernels.backend("compiled")
    except ImportError:
        print("compiled kernels not built; run `pip install -e . --no-build-isolation`", file=sys.stderr)
        compiled = None
    python = kernels.backend("python")
    rows = []
    for name, make in CASES.items():
        args, kw = make()
        row = {"kernel": name}
        outs = {}
        for label, mod in (("python", python), ("compiled", compiled)):
            if mod is None:
                continue
            fn = getattr(mod, name)
            best = float("inf")
            for _ in range(repeat):
                t0 = time.perf_counter()
                outs[label] = fn(*args, **kw)
                best = min(best, time.perf_counter() - t0)
            row[label + "_s"] = best
        if len(outs) == 2:
            row["agree"] = _same(outs["python"], outs["compiled"])
            row["speedup"] = row["python_s"] / row["compiled_s"]
        rows.append(row)
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json")
    a = ap.parse_args()
    rows = bench(a.repeat)
    print(f"{'kernel':22s} {'python s':>10s} {'compiled s':>11s} {'speedup':>8s}  agree")
    for r in rows:
        print(f"{r['kernel']:22s} {r.get('python_s', float('nan')):10.4f} {r.get('compiled_s', float('nan')):11.4f}"
              f" {r.get('speedup', float('nan')):8.1f}  {r.get('agree', '-')}")
    if a.json:
        with open(a.json, "w") as fh:
            json.dump(rows, fh, indent=1, sort_keys=True)
    if any(r.get("agree") is False for r in rows):
        sys.exit(1)


if __name__ == "__main__":
    main()
