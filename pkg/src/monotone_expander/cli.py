"""Command line entry point: ``monoexp <command> [options]``.

Every command writes one JSON report (sorted keys) that embeds the full
configuration used.  Reports go to ``--out`` or to
``<outdir>/<command>-<hash>.json`` where the hash is taken over the
configuration, so reruns land on the same name and nothing is overwritten
with different content.

Exit codes: 0 ok, 1 a check failed, 2 usage or input error, 3 budget exhausted.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BudgetExceeded, MonotoneExpanderError, NoCollision
from .sl2 import IDENTITY, Mat2, mat_mul

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3

SEED_ALIASES = {"sanov": "sanov_power", "sanov_power": "sanov_power", "search": "paper_search",
                "paper_search": "paper_search"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (set, frozenset, tuple)):
        return list(x)
    if hasattr(x, "to_dict"):
        return x.to_dict()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=1, default=_jsonable) + "\n"


def _log(msg):
    print(msg, file=sys.stderr)


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not JSON: {exc}")


def _load_gens(path):
    from .forge import GeneratorSet

    doc = _load_json(path)
    if "result" in doc and isinstance(doc["result"], dict) and "gens" in doc["result"]:
        doc = doc["result"]
    if "config" in doc and "seed" in doc:
        return GeneratorSet.from_dict(doc)
    if "gens" in doc:
        return [Mat2.from_text(t) for t in doc["gens"]]
    raise UsageError(f"{path} holds no generator set")


def _gens_list(gs):
    return gs.gens if hasattr(gs, "gens") else list(gs)


def _load_graph(path):
    from .discretize import import_layered_json

    raw = Path(path).read_bytes() if Path(path).exists() else None
    if raw is None:
        raise UsageError(f"no such file: {path}")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not JSON: {exc}")
    if "result" in doc and "graph" in doc["result"]:
        raw = json.dumps(doc["result"]["graph"], sort_keys=True, separators=(",", ":")).encode()
    return import_layered_json(raw)


def _fraction(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a fraction: {text!r}")


def _int_list(text):
    return [int(t) for t in str(text).split(",") if t.strip()]


def _float_list(text):
    return [float(t) for t in str(text).split(",") if t.strip()]


# ---------------------------------------------------------------------------
# commands; each returns (result dict, exit code)


def cmd_forge(a):
    from .forge import ForgeConfig, forge, verify_properties

    seed = SEED_ALIASES.get(a.seed)
    if seed is None:
        raise UsageError(f"unknown seed {a.seed!r}")
    eps = a.epsilon if a.epsilon in ("auto", "all") else _fraction(a.epsilon)
    cfg = ForgeConfig(q=a.q, ell=a.ell, epsilon=eps, seed_mode=seed, freeness_depth=a.depth,
                      word_budget=a.budget, search_length=a.search_length, min_cell=a.min_cell)
    try:
        gs = forge(cfg)
    except NoCollision as exc:
        _log(f"forge: {exc}")
        return {"status": "no-collision", "message": str(exc)}, EXIT_FAIL
    code = EXIT_OK
    if a.k_max:
        report = verify_properties(gs, a.k_max, budget=a.budget)
        gs.certificates = report
        if not report["passed"]:
            code = EXIT_FAIL
    _log(f"forge: |G| = {len(gs.gens)}, |W| = {gs.W_size}, epsilon = {gs.epsilon}, Q = {gs.Q}")
    return gs.to_dict(), code


def cmd_verify(a):
    from .forge import GeneratorSet, verify_properties

    gs = _load_gens(a.gens)
    if not isinstance(gs, GeneratorSet):
        raise UsageError("verify needs a full generator set as written by 'forge'")
    report = verify_properties(gs, a.k_max, freeness_depth=a.depth, budget=a.budget)
    if report["failed"]:
        _log("verify: failed " + ", ".join(report["failed"]))
    else:
        _log("verify: all checks passed")
    return report, EXIT_OK if report["passed"] else EXIT_FAIL


def _family(a):
    from .family import build_family

    if a.gens:
        gs = _load_gens(a.gens)
        eps = gs.epsilon if hasattr(gs, "epsilon") else None
        return build_family(_gens_list(gs), a.K, epsilon=eps)
    if a.K is None:
        raise UsageError("give --gens or --K")
    return build_family([], a.K)


def cmd_expand(a):
    from .expansion import builtin_corpus, continuous_corpus_test
    from .family import IntervalSet, deviation

    fam = _family(a)
    if a.sets:
        doc = _load_json(a.sets)
        corpus = [("given", IntervalSet.from_json(s)) for s in doc]
    else:
        corpus = builtin_corpus(fam, count=a.count, seed=a.seed)
    rep = continuous_corpus_test(fam, corpus, sigma=_fraction(a.sigma))
    rep["deviation"] = deviation(fam).to_dict()
    rep["deviation_mobius"] = deviation(fam, kinds=("mobius",)).to_dict()
    rep["family"] = fam.describe()
    # exact per-set values can carry thousands of digits; floats are enough here
    rep["rows"] = [{k: float(v) if isinstance(v, Fraction) else v for k, v in r.items()} for r in rep["rows"]]
    ok = rep["min_ratio"] is not None and rep["min_ratio"] > 1 and rep["dichotomy_holds"]
    _log(f"expand: min ratio {float(rep['min_ratio']):.6f} over {rep['count']} sets")
    return rep, EXIT_OK if ok or not a.require_expansion else EXIT_FAIL


def cmd_build_graph(a):
    from .discretize import discretize, export

    fam = _family(a)
    g = discretize(fam, a.n)
    per_map = g.layers_per_map()
    left, right = g.degrees()
    result = {
        "n": g.n,
        "K": fam.K,
        "layers": len(g.layers),
        "max_layers_per_map": max(per_map.values()) if per_map else 0,
        "max_left_degree": int(left.max()),
        "max_right_degree": int(right.max()),
        "edges": int(sum(len(layer) for layer in g.layers)),
        "graph": json.loads(export(g, "layered-json")),
    }
    for fmt in a.format or []:
        path = Path(a.outdir) / f"graph-n{g.n}.{fmt.replace('-', '.')}"
        _write_new(path, export(g, fmt))
        result.setdefault("exports", []).append(str(path))
    _log(f"build-graph: n = {g.n}, {len(g.layers)} layers")
    return result, EXIT_OK


def cmd_measure(a):
    from .discretize import dimension_matrices
    from .expansion import spectral_report, subspace_dimension_test, vertex_expansion_exact

    g = _load_graph(a.graph)
    if not (a.exact or a.spectral or a.dimension):
        raise UsageError("choose at least one of --exact, --spectral, --dimension")
    methods = [m for m, on in (("exhaustive", a.exact), ("spectral", a.spectral), ("dimension", a.dimension)) if on]
    result = {"n": g.n, "method": methods, "seed": a.seed, "tolerance": a.tol if a.spectral else 0.0}
    if a.exact:
        result["exact"] = vertex_expansion_exact(g).to_dict()
    if a.spectral:
        result["spectral"] = spectral_report(g, tol=a.tol, seed=a.seed).to_dict()
        result["sigma2"] = result["spectral"]["sigma2"]
    if a.dimension:
        rep = subspace_dimension_test(dimension_matrices(g), a.p, a.D, a.trials, seed=a.seed)
        rep.pop("dims")
        result["dimension"] = rep
    return result, EXIT_OK


def cmd_walk(a):
    from .words import kesten_limit, kesten_return_prob, kesten_root

    rows = []
    for t in a.t:
        rows.append({"t": t, "p_return": kesten_return_prob(a.k, t), "root": kesten_root(a.k, t)})
    limit = kesten_limit(a.k)
    even = [r for r in rows if r["t"] % 2 == 0 and r["t"] > 0]
    gaps = [abs(r["root"] - limit) for r in even]
    monotone = all(x >= y for x, y in zip(gaps, gaps[1:]))
    last = even[-1]["root"] / limit - 1 if even else None
    result = {"k": a.k, "rows": rows, "limit": limit, "relative_error_last": last, "monotone_approach": monotone}
    ok = monotone and (last is None or abs(last) <= a.rtol)
    return result, EXIT_OK if ok else EXIT_FAIL


def cmd_growth(a):
    result, code = _growth(a)
    result.setdefault("seed", a.seed)
    result["budgets"] = {"samples": a.samples, "points": a.points}
    return result, code


def _growth(a):
    from . import growth
    from .words import WordEvaluator, enumerate_reduced

    exp = a.experiment
    if exp == "product":
        if a.source == "rotation":
            A = growth.rotation_net(a.delta)
        elif a.source == "diagonal":
            A = growth.diagonal_segment(a.delta)
        else:
            if not a.gens:
                raise UsageError("--source forged needs --gens")
            gens = _gens_list(_load_gens(a.gens))
            ev = WordEvaluator(gens)
            A = [ev(w) for w in enumerate_reduced(len(gens), a.word_length)]
        return growth.product_growth(A, a.delta, sample_budget=a.samples, seed=a.seed), EXIT_OK
    if exp == "flatness":
        if not a.gens:
            raise UsageError("flatness needs --gens")
        gens = _gens_list(_load_gens(a.gens))
        rep = growth.flatness_series(gens, tuple(a.ells), a.delta, a.samples, a.seed)
        return rep, EXIT_OK if rep["non_increasing"] else EXIT_FAIL
    if exp == "trace":
        if not a.gens:
            raise UsageError("trace needs --gens")
        gens = _gens_list(_load_gens(a.gens))
        if len(gens) < 2:
            raise UsageError("trace needs at least two generators")
        probes = [IDENTITY, gens[0], gens[1], mat_mul(gens[0], gens[1])]
        A = growth._walk(gens, a.word_length, a.points, a.seed)
        return growth.trace_set_growth(A, probes, a.delta), EXIT_OK
    if exp == "amplification":
        S = growth.random_separated_set(a.points, a.delta, seed=a.seed)
        return growth.amplification_report(S, a.gamma, a.lam, a.delta, a.samples, a.seed), EXIT_OK
    if exp == "sum-product":
        if a.set == "interval":
            A = np.arange(0, 1 + a.delta / 2, a.delta)
        else:
            A = np.arange(1, a.points + 1) / a.points
        sums, prods = growth.sum_product(A, a.delta)
        base = growth.cover_count_1d(A, a.delta)
        return {"set": a.set, "delta": a.delta, "N_A": base, "N_sum": sums, "N_product": prods}, EXIT_OK
    if exp == "identity":
        import random

        rng = random.Random(a.seed)
        fails = []
        for _ in range(a.points):
            g = _random_mat(rng)
            x = Fraction(rng.choice([-1, 1]) * rng.randint(1, 50), rng.randint(1, 50))
            y = Fraction(rng.choice([-1, 1]) * rng.randint(1, 50), rng.randint(1, 50))
            chk = growth.trace_identity_check(x, y, g)
            if not chk.passed:
                fails.append({"x": x, "y": y, "g": g.to_text()})
        return {"cases": a.points, "failures": fails}, EXIT_OK if not fails else EXIT_FAIL
    raise UsageError(f"unknown experiment {exp!r}")


def _random_mat(rng):
    while True:
        a = Fraction(rng.randint(-9, 9), rng.randint(1, 9))
        b = Fraction(rng.randint(-9, 9), rng.randint(1, 9))
        c = Fraction(rng.randint(-9, 9), rng.randint(1, 9))
        if a != 0:
            return Mat2(a, b, c, (1 + b * c) / a)


def cmd_export(a):
    from .discretize import export

    g = _load_graph(a.graph)
    data = export(g, a.format)
    if a.target == "-":
        try:
            sys.stdout.write(data.decode())
            sys.stdout.flush()
        except BrokenPipeError:
            pass
        return None, EXIT_OK
    _write_new(Path(a.target), data)
    return {"written": a.target, "format": a.format, "bytes": len(data)}, EXIT_OK


COMMANDS = {
    "forge": cmd_forge,
    "expand": cmd_expand,
    "build-graph": cmd_build_graph,
    "measure": cmd_measure,
    "walk": cmd_walk,
    "growth": cmd_growth,
    "export": cmd_export,
    "verify": cmd_verify,
}


def build_parser():
    p = _Parser(prog="monoexp", description="Monotone expanders from Mobius maps of SL2(Q).")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--config", help="INI file with one section per command; flags override it")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--out", help="report path (default: OUTDIR/<command>-<hash>.json)")
        sp.add_argument("--outdir", default="runs")
        sp.add_argument("--budget", type=int, default=None, help="word/node budget (else $MONOEXP_WORD_BUDGET)")
        sp.add_argument("--stdout", action="store_true", help="print the report instead of writing it")

    s = sub.add_parser("forge", help="forge a generator set")
    s.add_argument("--seed", default="sanov", help="sanov or search")
    s.add_argument("--q", type=int, default=3)
    s.add_argument("--ell", type=int, default=8)
    s.add_argument("--epsilon", default="auto", help="fraction, 'auto' or 'all'")
    s.add_argument("--depth", type=int, default=8, help="freeness depth for the seed search")
    s.add_argument("--search-length", type=int, default=6)
    s.add_argument("--min-cell", type=int, default=3)
    s.add_argument("--k-max", type=int, default=0, help="also run the property checks up to this word length")
    common(s)

    s = sub.add_parser("verify", help="check the properties of a forged set")
    s.add_argument("--gens", required=True)
    s.add_argument("--k-max", type=int, default=2)
    s.add_argument("--depth", type=int, default=None)
    common(s)

    def family_args(sp):
        sp.add_argument("--gens", help="forge report or generator set JSON")
        sp.add_argument("--K", type=int, default=None)

    s = sub.add_parser("expand", help="continuous expansion over interval sets")
    family_args(s)
    s.add_argument("--sets", help="JSON list of interval sets ([[lo, hi], ...] per set)")
    s.add_argument("--count", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--sigma", default="1/100")
    s.add_argument("--require-expansion", action="store_true", help="exit 1 unless every ratio exceeds 1")
    common(s)

    s = sub.add_parser("build-graph", help="discretise a family into a layered graph")
    family_args(s)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--format", action="append", choices=["edge-csv", "layered-json", "dot", "matrix-csv"])
    common(s)

    s = sub.add_parser("measure", help="expansion of a layered graph")
    s.add_argument("--graph", required=True, help="build-graph report or layered-json file")
    s.add_argument("--exact", action="store_true")
    s.add_argument("--spectral", action="store_true")
    s.add_argument("--dimension", action="store_true")
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--p", type=int, default=2)
    s.add_argument("--D", type=int, default=16)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    common(s)

    s = sub.add_parser("walk", help="return probabilities of the simple random walk on F_k")
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--t", type=_int_list, default=[50, 100, 200, 500])
    s.add_argument("--rtol", type=float, default=0.05)
    common(s)

    s = sub.add_parser("growth", help="growth experiments at scale delta")
    s.add_argument("--experiment", required=True,
                   choices=["product", "flatness", "trace", "amplification", "sum-product", "identity"])
    s.add_argument("--gens")
    s.add_argument("--source", default="forged", choices=["forged", "rotation", "diagonal"])
    s.add_argument("--set", default="interval", choices=["interval", "progression"])
    s.add_argument("--delta", type=float, default=1e-3)
    s.add_argument("--samples", type=int, default=10**5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--word-length", type=int, default=2)
    s.add_argument("--ells", type=_int_list, default=[1, 2, 4, 8, 16])
    s.add_argument("--points", type=int, default=100)
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--lam", type=float, default=0.5)
    common(s)

    s = sub.add_parser("export", help="convert a layered graph to another format")
    s.add_argument("--graph", required=True)
    s.add_argument("--format", required=True, choices=["edge-csv", "layered-json", "dot", "matrix-csv"])
    s.add_argument("--target", default="-", help="output file, '-' for standard output")
    common(s)
    return p


def _apply_config(parser, argv):
    """Prepend options from the INI section of the chosen command; command-line flags win."""
    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return argv
    cp = configparser.ConfigParser()
    if not cp.read(known.config):
        raise UsageError(f"cannot read config {known.config}")
    command = next((x for x in rest if x in COMMANDS), None)
    if command is None or not cp.has_section(command):
        return rest
    pos = rest.index(command)
    extra = []
    for key, value in cp.items(command):
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "yes", "on"):
            extra.append(flag)
        elif value.lower() in ("false", "no", "off"):
            continue
        else:
            extra.extend([flag, value])
    # argparse keeps the last value, so the file's values go first
    return rest[: pos + 1] + extra + rest[pos + 1:]


def _config_doc(args) -> dict:
    skip = {"out", "outdir", "stdout", "config", "func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _write_new(path: Path, data: bytes) -> Path:
    """Write ``data`` unless a file with different content already sits there."""
    path.parent.mkdir(parents=True, exist_ok=True)
    candidate = path
    n = 1
    while candidate.exists():
        if candidate.read_bytes() == data:
            return candidate
        candidate = path.with_name(f"{path.stem}-{n}{path.suffix}")
        n += 1
    candidate.write_bytes(data)
    return candidate


def run(argv=None) -> int:
    if hasattr(sys, "set_int_max_str_digits"):
        sys.set_int_max_str_digits(0)
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        _log(f"monoexp: {exc}")
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    config = _config_doc(args)
    try:
        result, code = COMMANDS[args.command](args)
    except UsageError as exc:
        _log(f"monoexp {args.command}: {exc}")
        return EXIT_USAGE
    except BudgetExceeded as exc:
        _log(f"monoexp {args.command}: budget exhausted: {exc}")
        return EXIT_BUDGET
    except (MonotoneExpanderError, ValueError) as exc:
        _log(f"monoexp {args.command}: {exc}")
        return EXIT_USAGE
    if result is None:
        return code
    doc = {"command": args.command, "config": config, "result": result, "exit_code": code, "version": __version__}
    text = dumps(doc)
    if args.stdout:
        sys.stdout.write(text)
        return code
    if args.out:
        path = Path(args.out)
    else:
        digest = hashlib.sha256(json.dumps(config, sort_keys=True, default=_jsonable).encode()).hexdigest()[:12]
        path = Path(args.outdir) / f"{args.command}-{digest}.json"
    written = _write_new(path, text.encode())
    print(written)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
