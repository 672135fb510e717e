"""Command-line front end: constructions, pipelines, verification runs."""
from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass
from pathlib import Path

import click

from . import ordinal as O
from .collapse import (CollapseMap, FiniteWop, GreedyTheta, InconsistentExtension,
                       brute_force_collapse_exists, check_bh, naive_fixpoint, synthesize_collapse)
from .epsterm import (OMEGA_T, ZERO_T, Eps, FiniteBase, SearchTreeBase, Sum, eps_add, eps_compare,
                      eps_omega_pow, eps_star, eps_validate, o_interpret, parse_term, subtract,
                      sym_compare, to_text, unembed)
from .hfset import EMPTY, hf, parse_formula, parse_sexpr, parse_set, set_to_sexpr, to_sexpr
from .lhier import build_stages
from .ordinal import ONE, OMEGA, ZERO, Ord
from .proofcode import (BASIC_CUT_RANK, C, Basic, CodeSystem, E, code_to_sexpr, kp_axiom_proof,
                        node_summary, truth_proof)
from .searchtree import SearchTree, WitnessScanExhausted, dump_node, kb_compare

GOLDEN = Path(__file__).resolve().parents[2] / "tests" / "golden"
DEFAULT_U = hf(EMPTY, hf(EMPTY))
AXIOM_PROOFS = tuple(range(11))  # equality .. collection[2,0]


class UnknownSuite(KeyError):
    pass


class ConfigError(ValueError):
    pass


# ordinals and wops as s-expressions:  7 | w | (cnf (exp coeff) ...)

def ord_from_tree(tree) -> Ord:
    if tree == "w":
        return OMEGA
    if isinstance(tree, str):
        return Ord.nat(int(tree))
    if not tree or tree[0] != "cnf":
        raise ValueError(f"not an ordinal: {tree!r}")
    out = ZERO
    for e, c in tree[1:]:
        out = out + Ord(((ord_from_tree(e), int(c)),))
    return out


def ord_to_sexpr(a: Ord) -> str:
    if a.is_finite():
        return str(a.to_int())
    return "(cnf " + " ".join(f"({ord_to_sexpr(e)} {c})" for e, c in a.terms) + ")"


def read_wop(text: str) -> FiniteWop:
    """(wop (name rank) ...) with elements in ascending order."""
    tree = parse_sexpr(text)
    if not tree or tree[0] != "wop":
        raise ValueError("expected (wop ...)")
    return FiniteWop([e for e, _ in tree[1:]], [ord_from_tree(r) for _, r in tree[1:]])


def read_map(text: str) -> CollapseMap:
    tree = parse_sexpr(text)
    if not tree or tree[0] != "collapse":
        raise ValueError("expected (collapse ...)")
    return CollapseMap({e: ord_from_tree(v) for e, v in tree[1:]})


def map_to_sexpr(T: FiniteWop, theta: CollapseMap) -> str:
    return "(collapse " + " ".join(f"({e} {ord_to_sexpr(theta[e])})" for e in T.elements) + ")"


# configuration

@dataclass
class PipelineConfig:
    u_file: str | None = None
    n: int = 2
    alpha: int = 2
    iterations: int = 6
    walks: int = 200
    walk_depth: int = 8
    bfs_depth: int = 3
    fuel: int = 10_000
    seed: int = 0
    out: str | None = None

    def validate(self):
        if not 1 <= self.n <= 4:
            raise ConfigError("stage depth must be between 1 and 4")
        if not 0 < self.alpha <= self.n:
            raise ConfigError("alpha must be positive and at most the stage depth")
        if self.iterations < BASIC_CUT_RANK - 2:
            raise ConfigError(f"need at least {BASIC_CUT_RANK - 2} elimination steps for cut rank 2")

    def universe(self):
        u = DEFAULT_U if self.u_file is None else parse_set(Path(self.u_file).read_text())
        return build_stages(u, n=self.n)


def make_system(cfg: PipelineConfig) -> CodeSystem:
    return CodeSystem(SearchTree(cfg.universe(), cfg.alpha))


def _verdict_lines(system, stage, P, cfg):
    lines = []
    for path in system.sample_paths(P, cfg.bfs_depth, cfg.walks, cfg.walk_depth, cfg.seed):
        try:
            node = system.interpret(P, path)
            nr = system.check_local(node.code, cfg.fuel)
        except WitnessScanExhausted:
            continue
        row = node_summary(system, node)
        lines.append({"stage": stage, "path": row["path"], "rule": row["rule"],
                      "height": row["height"], "verdicts": dict(sorted(nr.verdicts.items()))})
    lines.sort(key=lambda r: (len(r["path"]), r["path"]))
    return lines


def root_summary(system: CodeSystem, P) -> dict:
    h0, h1 = system.h_pair(P)
    return {"sequent": sorted(to_sexpr(f) for f in system.label(P)),
            "height": to_text(system.height(P), system.base), "d": system.cut_rank(P),
            "h": [to_text(h0, system.base), O.to_str(h1)]}


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Basic, then E iterated, then C_W with the greedy oracle; verdicts per sampled node."""
    cfg.validate()
    system = make_system(cfg)
    basic = Basic(())
    elim = basic
    for _ in range(cfg.iterations):
        elim = E(elim)
    coll = C(OMEGA_T, elim)
    stages = (("basic", basic), ("eliminated", elim), ("collapsed", coll))
    for _ in range(50):
        try:
            reports = [system.verify(P, cfg.bfs_depth, cfg.walks, cfg.walk_depth, cfg.seed, cfg.fuel)
                       for _, P in stages]
            lines = [ln for name, P in stages for ln in _verdict_lines(system, name, P, cfg)]
            break
        except InconsistentExtension:
            system.restart_oracle()
    else:
        raise RuntimeError("oracle did not settle")
    roots = {name: root_summary(system, P) for name, P in stages}
    oracle = system.theta
    query = eps_add(OMEGA_T, eps_omega_pow(system.height(elim)), system.base)
    failures = sum(r.fails() for r in reports)
    summary = {
        "roots": roots,
        "collapsed_root_ordinal": O.to_str(unembed(system.height(coll))),
        "collapse_query": to_text(query, system.base),
        "oracle_value": O.to_str(oracle.get(query)),
        "oracle_size": len(oracle.map.values),
        "oracle_violations": len(oracle.check()),
        "counts": {name: r.counts for (name, _), r in zip(stages, reports)},
        "nodes": {name: r.nodes for (name, _), r in zip(stages, reports)},
        "max_cut_height": {name: r.max_cut_height for (name, _), r in zip(stages, reports)},
        "ref_seen": {name: r.has_ref for (name, _), r in zip(stages, reports)},
        "below_omega": {name: r.all_below_omega for (name, _), r in zip(stages, reports)},
        "failures": failures,
        "status": 1 if failures or oracle.check() else 0,
    }
    return {"summary": summary, "lines": lines}


# suites

def _rand_ord(rng: random.Random, depth: int = 2) -> Ord:
    if depth == 0 or rng.random() < 0.4:
        return Ord.nat(rng.randrange(4))
    out = ZERO
    for _ in range(rng.randrange(1, 3)):
        out = out + Ord(((_rand_ord(rng, depth - 1), rng.randrange(1, 3)),))
    return out


def suite_ordinal_laws(seed: int = 0, trials: int = 300) -> dict:
    rng = random.Random(seed)
    bad = []
    for _ in range(trials):
        a, b, c = (_rand_ord(rng) for _ in range(3))
        if (a + b) + c != a + (b + c):
            bad.append(("assoc", a, b, c))
        if b < c and not a + b < a + c:
            bad.append(("left-strict", a, b, c))
        if b < c and not O.omega_pow(b) < O.omega_pow(c):
            bad.append(("exp", b, c))
        if sum((a < b, a == b, b < a)) != 1:
            bad.append(("trichotomy", a, b))
        if O.parse(O.to_str(a)) != a:
            bad.append(("roundtrip", a))
    return {"checked": trials, "failures": len(bad), "status": 1 if bad else 0}


def random_eps_term(rng: random.Random, elems, depth: int = 2, base=None):
    r = rng.random()
    if depth == 0 or r < 0.2:
        return ZERO_T if rng.random() < 0.3 else Eps(rng.choice(elems))
    if r < 0.3:
        return Eps(rng.choice(elems))
    exps = {random_eps_term(rng, elems, depth - 1, base) for _ in range(rng.randrange(1, 3))}
    exps = sorted(exps, key=_cmp_key(base), reverse=True)
    pairs = tuple((e, Ord.nat(rng.randrange(1, 4))) for e in exps)
    if len(pairs) == 1 and isinstance(pairs[0][0], Eps) and pairs[0][1] == ONE:
        return pairs[0][0]
    return Sum(pairs)


def _cmp_key(base):
    from functools import cmp_to_key
    return cmp_to_key(lambda a, b: eps_compare(a, b, base))


def suite_eps_laws(seed: int = 0, trials: int = 300) -> dict:
    rng = random.Random(seed)
    elems = list(range(6))
    base = FiniteBase(elems, [0, 0, 1, 1, 2, 3])
    bad = []
    cmp = lambda x, y: eps_compare(x, y, base)  # noqa: E731
    add = lambda x, y: eps_add(x, y, base)  # noqa: E731
    literal_holds = 0
    for _ in range(trials):
        s, t, r = (random_eps_term(rng, elems, 2, base) for _ in range(3))
        if not eps_validate(s, None, base):
            bad.append(("valid", s))
        c1, c2, c3 = cmp(s, t), cmp(t, r), cmp(s, r)
        if c1 < 0 and c2 < 0 and c3 >= 0:
            bad.append(("transitive", s, t, r))
        if cmp(t, s) != -c1:
            bad.append(("antisymmetric", s, t))
        ref = sym_compare(o_interpret(s, lambda x: Ord.nat(x), 0, 1), o_interpret(t, lambda x: Ord.nat(x), 0, 1))
        if ref != c1:
            bad.append(("interpretation", s, t))
        ws, wt = eps_omega_pow(s), eps_omega_pow(t)
        if cmp(s, ws) > 0 or (c1 < 0 and cmp(ws, wt) >= 0):
            bad.append(("i", s, t))
        if c2 < 0 and (cmp(add(s, t), add(s, r)) >= 0 or cmp(add(t, s), add(r, s)) > 0):
            bad.append(("ii", s, t, r))
        literal_holds += add(s, add(t, r)) == add(add(s, r), t)
        if add(s, add(t, r)) != add(add(s, t), r):
            bad.append(("associativity", s, t, r))
        if cmp(s, wt) < 0 and add(s, wt) != wt:
            bad.append(("iv", s, t))
        lo, hi = (s, t) if c1 <= 0 else (t, s)
        if add(lo, subtract(lo, hi, base)) != hi:
            bad.append(("v", lo, hi))
        if eps_star(add(s, t), base) > O.omax(eps_star(s, base), eps_star(t, base)):
            bad.append(("star-add", s, t))
        if eps_star(ws, base) > eps_star(s, base):
            bad.append(("star-exp", s))
    return {"checked": trials, "failures": len(bad), "literal_reorder_holds": literal_holds,
            "status": 1 if bad else 0}


def example_wop(naturals: int = 10):
    """beta < w*2 (a finite sample) plus a top element of rank 0."""
    betas = [Ord.nat(i) for i in range(naturals)] + [OMEGA + Ord.nat(i) for i in range(naturals)]
    return FiniteWop(betas + ["top"], betas + [ZERO])


def random_wop(rng: random.Random, size: int) -> FiniteWop:
    ranks = [Ord.nat(rng.randrange(size + 1)) if rng.random() < 0.8 else OMEGA for _ in range(size)]
    return FiniteWop([f"e{i}" for i in range(size)], ranks)


def suite_collapse(seed: int = 0, trials: int = 200) -> dict:
    rng = random.Random(seed)
    bad = []
    T = example_wop()
    good = {b: b + ONE for b in T.elements if b != "top"}
    bound = OMEGA + OMEGA
    if check_bh(T, CollapseMap({**good, "top": OMEGA}), bound):
        bad.append("example rejected")
    for m in range(10):
        if not check_bh(T, CollapseMap({**good, "top": Ord.nat(m)}), bound):
            bad.append(f"perturbation {m} accepted")
    for _ in range(trials):
        W = random_wop(rng, rng.randrange(1, 8))
        theta = synthesize_collapse(W)
        if check_bh(W, theta) or theta.values != naive_fixpoint(W).values:
            bad.append(("synth", W))
    grid = [Ord.nat(i) for i in range(10)]
    for size in range(1, 5):
        for ranks in itertools.product(range(3), repeat=size):
            W = FiniteWop(list(range(size)), list(ranks))
            found = brute_force_collapse_exists(W, Ord.nat(10), grid)
            synth = synthesize_collapse(W)
            fits = all(v < Ord.nat(10) for v in synth.values.values())
            if (found is not None) != fits:
                bad.append(("brute", ranks))
    return {"failures": len(bad), "status": 1 if bad else 0, "detail": [str(b) for b in bad[:5]]}


def golden_lines(n: int, depth: int = 4) -> list[str]:
    S = build_stages(DEFAULT_U, n=n)
    tree = SearchTree(S, n)
    out = []
    for path in tree.nodes(depth):
        out.append(json.dumps({"path": [set_to_sexpr(a.set) for a in path],
                               "label": [to_sexpr(f) for f in tree.label(path)]}))
    return sorted(out)


def suite_search_tree_golden(seed: int = 0) -> dict:
    diffs = {}
    for n in (1, 2):
        want = sorted((GOLDEN / f"search_tree_n{n}_d4.jsonl").read_text().splitlines())
        got = golden_lines(n)
        diffs[n] = len(set(want) ^ set(got))
    return {"diffs": diffs, "status": 1 if any(diffs.values()) else 0}


def suite_codes_local(seed: int = 0, fuel: int = 10_000) -> dict:
    cfg = PipelineConfig(seed=seed, fuel=fuel)
    system = make_system(cfg)
    codes = [("basic", Basic(()))] + [(f"axiom-{k}", kp_axiom_proof(k)) for k in AXIOM_PROOFS]
    elim = Basic(())
    for _ in range(cfg.iterations):
        elim = E(elim)
    codes += [("eliminated", elim), ("collapsed", C(OMEGA_T, elim))]
    out, status = {}, 0
    for name, P in codes:
        rep = system.verify(P, cfg.bfs_depth, cfg.walks, cfg.walk_depth, seed, fuel)
        out[name] = {"nodes": rep.nodes, "fail": rep.fails(), "unknown": round(rep.unknown_rate(), 4)}
        if rep.fails() or rep.unknown_rate() >= 0.02:
            status = 1
    return {"codes": out, "status": status}


def suite_pipeline(seed: int = 0, fuel: int = 10_000) -> dict:
    return run_pipeline(PipelineConfig(seed=seed, fuel=fuel))["summary"]


SUITES = {
    "ordinal-laws": lambda seed, fuel: suite_ordinal_laws(seed),
    "eps-laws": lambda seed, fuel: suite_eps_laws(seed),
    "collapse": lambda seed, fuel: suite_collapse(seed),
    "search-tree-golden": lambda seed, fuel: suite_search_tree_golden(seed),
    "codes-local": suite_codes_local,
    "pipeline": suite_pipeline,
}


def run_suite(name: str, seed: int = 0, fuel: int = 10_000) -> tuple[int, dict]:
    if name not in SUITES:
        raise UnknownSuite(name)
    summary = SUITES[name](seed, fuel)
    return summary["status"], summary


# click surface

def _emit(obj, as_json: bool):
    if as_json:
        click.echo(json.dumps(obj, sort_keys=True, default=str))
    elif isinstance(obj, dict):
        for k, v in obj.items():
            click.echo(f"{k}: {v}")
    else:
        click.echo(obj)


class _Group(click.Group):
    """Exit status 2 for any error raised by a subcommand."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (click.exceptions.Exit, click.ClickException, click.exceptions.Abort):
            raise
        except Exception as exc:  # noqa: BLE001
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            ctx.exit(2)


@click.group(cls=_Group)
def main():
    """Search trees, eps-terms, collapses and proof codes at desk scale."""


@main.command("search-tree")
@click.option("--u", "u_file", type=click.Path(exists=True), default=None, help="file with the base set")
@click.option("--n", "stages", default=2, show_default=True, help="stage depth")
@click.option("--alpha", default=2, show_default=True)
@click.option("--depth", default=4, show_default=True, help="tree depth")
@click.option("--dump", is_flag=True, help="print every node")
@click.option("--json", "as_json", is_flag=True)
def search_tree_cmd(u_file, stages, alpha, depth, dump, as_json):
    cfg = PipelineConfig(u_file=u_file, n=stages, alpha=alpha)
    tree = SearchTree(cfg.universe(), alpha)
    paths = sorted(tree.nodes(depth), key=_cmp_tree_key(tree))
    if dump:
        for p in paths:
            if as_json:
                node = tree.node(p)
                _emit({"path": [set_to_sexpr(a.set) for a in p], "label": [to_sexpr(f) for f in node.label],
                       "redex": node.redex}, True)
            else:
                click.echo(dump_node(tree, p))
    for p, q in zip(paths, paths[1:]):
        if not as_json:
            continue
        _emit({"kb": [[set_to_sexpr(a.set) for a in p], [set_to_sexpr(a.set) for a in q]],
               "cmp": kb_compare(p, q, tree.S)}, True)
    _emit({"nodes": len(paths), "depth": depth}, as_json)


def _cmp_tree_key(tree):
    from functools import cmp_to_key
    return cmp_to_key(lambda a, b: kb_compare(a, b, tree.S))


def _default_base():
    return SearchTreeBase(SearchTree(build_stages(DEFAULT_U, n=2), 2))


@main.command("eps")
@click.argument("op", type=click.Choice(["compare", "add", "star"]))
@click.argument("terms", nargs=-1, required=True)
@click.option("--json", "as_json", is_flag=True)
def eps_cmd(op, terms, as_json):
    base = _default_base()
    ts = [parse_term(t, base) for t in terms]
    if op == "compare":
        result = eps_compare(ts[0], ts[1], base)
    elif op == "add":
        result = to_text(eps_add(ts[0], ts[1], base), base)
    else:
        result = O.to_str(eps_star(ts[0], base))
    _emit({"op": op, "result": result}, as_json)


@main.command("collapse")
@click.argument("op", type=click.Choice(["check", "synth", "oracle"]))
@click.argument("file", type=click.Path(exists=True))
@click.option("--map", "map_file", type=click.Path(exists=True), default=None)
@click.option("--bound", default=None, help="ordinal bound, e.g. 20 or (cnf (1 2))")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def collapse_cmd(ctx, op, file, map_file, bound, as_json):
    text = Path(file).read_text()
    if op == "oracle":
        base = _default_base()
        theta = GreedyTheta(base)
        for line in text.splitlines():
            if line.strip():
                v = theta(parse_term(line, base))
                _emit({"term": line.strip(), "value": O.to_str(v)}, as_json)
        bad = theta.check()
        _emit({"assigned": len(theta.map.values), "violations": len(bad)}, as_json)
        ctx.exit(1 if bad else 0)
    T = read_wop(text)
    if op == "synth":
        theta = synthesize_collapse(T)
        click.echo(map_to_sexpr(T, theta))
        ctx.exit(0)
    if map_file is None:
        raise click.UsageError("check needs --map")
    theta = read_map(Path(map_file).read_text())
    lim = None if bound is None else ord_from_tree(parse_sexpr(bound) if bound.startswith("(") else bound)
    bad = check_bh(T, theta, lim)
    for v in bad:
        _emit({"clause": v.clause, "s": str(v.s), "t": None if v.t is None else str(v.t)}, as_json)
    _emit({"violations": len(bad)}, as_json)
    ctx.exit(1 if bad else 0)


def read_code(text: str):
    """(basic) | (axiom k) | (truth <formula>) | (E <code>) | (C <code>), C meaning C_W."""
    return _code_from_tree(parse_sexpr(text), text)


def _code_from_tree(tree, text):
    head = tree[0] if isinstance(tree, list) and tree else tree
    if head == "basic":
        return Basic(tuple())
    if head == "axiom":
        return kp_axiom_proof(int(tree[1]))
    if head == "truth":
        inner = text[text.index("truth") + len("truth"):text.rindex(")")]
        return truth_proof(parse_formula(inner.strip()))
    if head == "E":
        return E(_code_from_tree(tree[1], text))
    if head == "C":
        return C(OMEGA_T, _code_from_tree(tree[1], text))
    raise ValueError(f"unknown code constructor {head!r}")


@main.group("codes")
def codes_group():
    """Proof-code checks."""


@codes_group.command("check")
@click.option("--code", "code_file", type=click.Path(exists=True), required=True)
@click.option("--depth", default=3, show_default=True, help="breadth-exhaustive depth")
@click.option("--walks", default=200, show_default=True)
@click.option("--walk-depth", default=8, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--fuel", default=10_000, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def codes_check(ctx, code_file, depth, walks, walk_depth, seed, fuel, as_json):
    cfg = PipelineConfig(walks=walks, walk_depth=walk_depth, bfs_depth=depth, seed=seed, fuel=fuel)
    system = make_system(cfg)
    P = read_code(Path(code_file).read_text())
    rep = system.verify(P, depth, walks, walk_depth, seed, fuel)
    if as_json:
        for line in _verdict_lines(system, "code", P, cfg):
            _emit(line, True)
    _emit({"code": code_to_sexpr(P), "nodes": rep.nodes, "fail": rep.fails(),
           "unknown": round(rep.unknown_rate(), 4), "root": root_summary(system, P)}, as_json)
    ctx.exit(1 if rep.fails() else 0)


@main.command("pipeline")
@click.option("--u", "u_file", type=click.Path(exists=True), default=None)
@click.option("--n", "stages", default=2, show_default=True)
@click.option("--alpha", default=2, show_default=True)
@click.option("--iterations", default=6, show_default=True)
@click.option("--walks", default=200, show_default=True)
@click.option("--depth", "walk_depth", default=8, show_default=True, help="walk depth")
@click.option("--seed", default=0, show_default=True)
@click.option("--fuel", default=10_000, show_default=True)
@click.option("--out", default=None, type=click.Path(), help="write the JSON-lines report here")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def pipeline_cmd(ctx, u_file, stages, alpha, iterations, walks, walk_depth, seed, fuel, out, as_json):
    cfg = PipelineConfig(u_file=u_file, n=stages, alpha=alpha, iterations=iterations, walks=walks,
                         walk_depth=walk_depth, seed=seed, fuel=fuel, out=out)
    report = run_pipeline(cfg)
    lines = [json.dumps(ln, sort_keys=True) for ln in report["lines"]]
    lines.append(json.dumps(report["summary"], sort_keys=True, default=str))
    if out:
        Path(out).write_text("\n".join(lines) + "\n")
    if as_json:
        click.echo("\n".join(lines))
    else:
        s = report["summary"]
        for name, root in s["roots"].items():
            click.echo(f"{name}: sequent={root['sequent']} height={root['height']} d={root['d']} h={root['h']}")
        click.echo(f"collapsed root ordinal: {s['collapsed_root_ordinal']}")
        click.echo(f"nodes: {s['nodes']}  failures: {s['failures']}  oracle: {s['oracle_size']} terms, "
                   f"{s['oracle_violations']} violations")
    ctx.exit(report["summary"]["status"])


@main.command("suite")
@click.argument("name")
@click.option("--seed", default=0, show_default=True)
@click.option("--fuel", default=10_000, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def suite_cmd(ctx, name, seed, fuel, as_json):
    status, summary = run_suite(name, seed, fuel)
    _emit(summary, as_json)
    ctx.exit(status)


if __name__ == "__main__":
    main()
