"""Command-line front end: every subcommand prints one JSON report line.

Exit codes: 0 success (and audited property holds), 1 the audited property
fails or a search is inconclusive, 2 usage or input errors.  Randomized
subcommands either take --seed or record the seed they generated, so every
run is reproducible; with --no-timestamp the output is byte-identical across
repeats of the same command line.
"""

import argparse
import json
import math
import random
import sys
from datetime import datetime, timezone
from fractions import Fraction

from . import __version__, entropy, graphs, homsearch, rules, simulate

SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


def _jsonable(x):
    if isinstance(x, Fraction):
        return {"exact": str(x), "float": float(x)}
    if isinstance(x, float) and math.isinf(x):
        return "Infinite"
    if isinstance(x, bytes):
        return x.hex()
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _emit(args, payload, out_lines):
    envelope = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": args.command_echo,
        "payload": _jsonable(payload),
    }
    if not args.no_timestamp:
        envelope["timestamp"] = datetime.now(timezone.utc).isoformat()
    line = json.dumps(envelope, sort_keys=True, separators=(",", ":"))
    print(line)
    out_lines.append(line)


def _load_target(spec):
    try:
        return graphs.named_graph(spec)
    except graphs.UnknownName:
        pass
    try:
        return graphs.read_graph(spec)
    except OSError as exc:
        raise UsageError(f"--target {spec!r} is neither a named graph nor a readable file: {exc}")


def _load_rule(spec, args):
    if spec.startswith("builtin:"):
        parts = spec.split(":")
        name = parts[1]
        d = args.d if getattr(args, "d", None) else 3
        if name == "max_seed_independent":
            return rules.builtin_rule("max_seed_independent", d=d)
        if name == "constant":
            if len(parts) < 3:
                raise UsageError("builtin:constant needs a label, e.g. builtin:constant:0")
            label = rules._parse_label(parts[2])
            out = None
            if getattr(args, "alphabet", None):
                out = tuple(rules._parse_label(x) for x in args.alphabet.split(","))
            elif getattr(args, "target", None):
                out = tuple(range(_load_target(args.target).n))
            return rules.builtin_rule("constant", label=label, d=d, output_alphabet=out)
        raise UsageError(f"unknown builtin rule {name!r}")
    try:
        return rules.load_rule(spec)
    except OSError as exc:
        raise UsageError(f"cannot read rule file {spec!r}: {exc}")


def _seed_of(args, payload):
    if args.seed is not None:
        payload["seed"] = args.seed
        return args.seed
    seed = random.SystemRandom().randrange(1 << 63)
    payload["seed"] = seed
    return seed


def _dist_payload(dist):
    out = {"labels": list(dist.labels), "p": {}}
    for a, x in zip(dist.labels, dist.p):
        out["p"][str(a)] = _jsonable(x)
    return out


def _pair_payload(pair):
    return {
        f"{a},{b}": _jsonable(x) for (a, b), x in sorted(pair.probs.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1])))
    }


# ---------------------------------------------------------------------------
# subcommand handlers: return (payload, exit_code)


def _cmd_graph_gen(args):
    if not args.out:
        raise UsageError("graph gen writes a graph file; give --out <path>")
    payload = {}
    seed = _seed_of(args, payload)
    G = graphs.random_regular(args.n, args.d, seed)
    graphs.write_graph(G, args.out)
    payload.update({"n": G.n, "d": args.d, "m": G.m, "path": args.out})
    return payload, 0


def _cmd_graph_profile(args):
    G = _load_target(args.target)
    p = graphs.profile(G)
    return {
        "target": args.target,
        "n": G.n,
        "m": G.m,
        "girth": p.girth,
        "regular_degree": p.regular_degree,
        "bipartite": p.bipartite,
        "connected": p.connected,
    }, 0


def _cmd_graph_invariants(args):
    G = _load_target(args.target)
    alpha, chi = graphs.exact_invariants(G)
    return {
        "target": args.target,
        "independence_number": alpha,
        "chromatic_number": chi,
    }, 0


def _rule_summary(rule):
    return {
        "d": rule.d,
        "t": rule.t,
        "model": str(rule.model),
        "output_alphabet": list(rule.output_alphabet),
        "table_size": len(rule.table),
    }


def _cmd_rule_make(args):
    if args.name == "constant":
        if args.label is None:
            raise UsageError("rule make --name constant needs --label")
        out = tuple(rules._parse_label(x) for x in args.alphabet.split(",")) if args.alphabet else None
        rule = rules.builtin_rule(
            "constant", label=rules._parse_label(args.label), d=args.d, output_alphabet=out
        )
    elif args.name == "max_seed_independent":
        rule = rules.builtin_rule("max_seed_independent", d=args.d)
    else:
        raise UsageError(
            "rule make supports constant and max_seed_independent; table rules come from files"
        )
    if args.out:
        rules.save_rule(rule, args.out)
    payload = _rule_summary(rule)
    if args.out:
        payload["path"] = args.out
    return payload, 0


def _cmd_rule_random(args):
    model = rules.SeedModel.parse(args.model)
    if not args.alphabet:
        raise UsageError("rule random needs --alphabet, e.g. --alphabet a,b,c")
    out = tuple(rules._parse_label(x) for x in args.alphabet.split(","))
    payload = {}
    seed = _seed_of(args, payload)
    rule = rules.random_rule(args.d, args.t, model, out, seed)
    if args.out:
        rules.save_rule(rule, args.out)
        payload["path"] = args.out
    payload.update(_rule_summary(rule))
    return payload, 0


def _cmd_rule_show(args):
    rule = _load_rule(args.rule, args)
    payload = _rule_summary(rule)
    payload["table"] = {code.hex(): str(rule.table[code]) for code in sorted(rule.table)}
    return payload, 0


def _marginals_for(args, rule):
    if args.exact:
        return entropy.exact_marginals(rule), "exact"
    if not args.samples:
        raise UsageError("give --exact or --samples N")
    seed = args.seed if args.seed is not None else 0
    vertex, pair = entropy.mc_marginals(rule, args.samples, seed)
    return (vertex, pair), f"mc:{args.samples}"


def _cmd_entropy_exact(args):
    rule = _load_rule(args.rule, args)
    vertex, pair = entropy.exact_marginals(rule)
    res = entropy.audit(vertex, pair)
    return {
        "vertex": _dist_payload(vertex),
        "pair": _pair_payload(pair),
        "h_vertex": res.report.h_vertex,
        "h_edge": res.report.h_edge,
        "h_nbr_given_vertex": res.report.h_nbr_given_vertex,
    }, 0


def _cmd_entropy_mc(args):
    rule = _load_rule(args.rule, args)
    if not args.samples:
        raise UsageError("entropy mc needs --samples")
    payload = {}
    seed = _seed_of(args, payload)
    vertex, pair = entropy.mc_marginals(rule, args.samples, seed)
    res = entropy.audit(vertex, pair)
    payload.update(
        {
            "samples": args.samples,
            "vertex": _dist_payload(vertex),
            "pair": _pair_payload(pair),
            "h_vertex": res.report.h_vertex,
            "h_edge": res.report.h_edge,
            "h_nbr_given_vertex": res.report.h_nbr_given_vertex,
        }
    )
    return payload, 0


def _cmd_entropy_audit(args):
    rule = _load_rule(args.rule, args)
    (vertex, pair), _mode = _marginals_for(args, rule)
    H = _load_target(args.target) if args.target else None
    res = entropy.audit(vertex, pair, r=args.r, H=H)
    return res.to_json_dict(), 0 if res.all_passed() else 1


def _cmd_entropy_constant(args):
    if args.r is None or args.c0 is None:
        raise UsageError("entropy constant needs --r and --c0")
    return {"C": entropy.min_girth_constant(args.r, args.c0)}, 0


def _cmd_entropy_tail(args):
    if args.C is None or args.c0 is None:
        raise UsageError("entropy tail needs --C and --c0")
    if args.probs:
        masses = [Fraction(x) for x in args.probs.split(",")]
        dist = entropy.LabelDistribution(
            tuple(range(len(masses))), tuple(masses), entropy.EXACT
        )
    elif args.rule:
        rule = _load_rule(args.rule, args)
        dist, _ = entropy.exact_marginals(rule)
    else:
        raise UsageError("entropy tail needs --probs or --rule")
    sel = entropy.tail_select(dist, args.C, args.c0)
    return sel.to_json_dict(), 0


def _cmd_hom_check(args):
    rule = _load_rule(args.rule, args)
    H = _load_target(args.target)
    res = homsearch.is_homomorphism_rule(
        rule, H, samples=args.samples or 100_000, rng_seed=args.seed or 0
    )
    payload = {
        "passed": res.passed,
        "exact": res.exact,
        "verdict": res.verdict,
        "witness": None
        if res.witness is None
        else {
            "config": _jsonable(res.witness.config),
            "outputs": list(res.witness.outputs),
            "non_edge": list(res.witness.non_edge),
        },
    }
    return payload, 0 if res.passed else 1


def _cmd_hom_search(args):
    H = _load_target(args.target)
    model = rules.SeedModel.parse(args.model)
    budget = homsearch.SearchBudget(
        max_rules=args.max_rules, rng_seed=args.seed or 0
    )
    out = homsearch.search(H, args.d, args.t, model, budget=budget)
    return out.to_json_dict(), 0 if out.kind != "BudgetExceeded" else 1


def _cmd_hom_certificate(args):
    H = _load_target(args.target)
    model = rules.SeedModel.parse(args.model)
    if model.kind != "alphabet":
        raise UsageError("the constant-seed certificate applies to alphabet models")
    cert = homsearch.alphabet_impossibility_certificate(H, args.d, args.t, model.q)
    return {
        "d": cert.d,
        "t": cert.t,
        "q": cert.q,
        "config": list(cert.config),
        "reasoning": list(cert.reasoning),
    }, 0


def _cmd_sim_run(args):
    rule = _load_rule(args.rule, args)
    if not args.graph:
        raise UsageError("sim run needs --graph <name|path>")
    G = _load_target(args.graph)
    H = _load_target(args.target) if args.target else None
    payload = {}
    seed = _seed_of(args, payload)
    labeling, report = simulate.run_on_graph(rule, G, seed, target=H)
    if args.labels_out:
        with open(args.labels_out, "w", encoding="ascii") as fh:
            for v in sorted(labeling):
                fh.write(f"{v} {labeling[v]}\n")
        payload["labels_path"] = args.labels_out
    payload.update(report.to_json_dict())
    return payload, 0


def _cmd_sim_pipeline(args):
    rule = _load_rule(args.rule, args)
    H = _load_target(args.target)
    if args.c0 is None or args.C is None:
        raise UsageError("sim pipeline needs --c0 and --C")
    if args.exact or not args.samples:
        report = simulate.theorem_pipeline(rule, H, args.c0, args.C)
    else:
        report = simulate.theorem_pipeline(
            rule, H, args.c0, args.C, mode="mc", samples=args.samples, rng_seed=args.seed or 0
        )
    refuted = report.classification.startswith("refuted")
    return report.to_json_dict(), 0 if refuted else 1


# ---------------------------------------------------------------------------
# parser


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="fiidlab",
        description="local rules on regular trees: marginals, entropy audits, "
        "homomorphism search, and finite-graph emulation",
    )
    parser.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
    parser.add_argument("--threads", type=int, default=None, help="worker cap (module internals)")
    top = parser.add_subparsers(dest="group", required=True)

    def common(p, *names):
        if "seed" in names:
            p.add_argument("--seed", type=int, default=None, help="master rng seed (u64)")
        if "target" in names:
            p.add_argument("--target", default=None, help="named graph or graph file path")
        if "rule" in names:
            p.add_argument("--rule", required=True, help="builtin:<name> or rule file path")
        if "dt" in names:
            p.add_argument("--d", type=int, default=3)
            p.add_argument("--t", type=int, default=1)
        if "model" in names:
            p.add_argument("--model", required=True, help="alphabet:q | rank | hybrid:q")
        if "out" in names:
            p.add_argument("--out", default=None, help="output file path")

    graph = top.add_parser("graph", help="graph construction and invariants").add_subparsers(
        dest="sub", required=True
    )
    g = graph.add_parser("gen", help="random regular graph to a file")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    common(g, "seed", "out")
    g.set_defaults(func=_cmd_graph_gen)
    g = graph.add_parser("profile", help="girth, regularity, bipartiteness, connectivity")
    g.add_argument("--target", required=True)
    g.set_defaults(func=_cmd_graph_profile)
    g = graph.add_parser("invariants", help="exact independence and chromatic numbers")
    g.add_argument("--target", required=True)
    g.set_defaults(func=_cmd_graph_invariants)

    rule = top.add_parser("rule", help="rule construction and inspection").add_subparsers(
        dest="sub", required=True
    )
    r = rule.add_parser("make", help="a built-in rule, optionally saved to a file")
    r.add_argument("--name", required=True)
    r.add_argument("--label", default=None)
    r.add_argument("--alphabet", default=None, help="comma-separated output labels")
    r.add_argument("--d", type=int, default=3)
    common(r, "out")
    r.set_defaults(func=_cmd_rule_make)
    r = rule.add_parser("random", help="uniform random rule table")
    common(r, "dt", "model", "seed", "out")
    r.add_argument("--alphabet", required=True, help="comma-separated output labels")
    r.set_defaults(func=_cmd_rule_random)
    r = rule.add_parser("show", help="rule header and table")
    common(r, "rule")
    r.add_argument("--d", type=int, default=3)
    r.set_defaults(func=_cmd_rule_show)

    entg = top.add_parser("entropy", help="marginals, entropies, audits").add_subparsers(
        dest="sub", required=True
    )
    e = entg.add_parser("exact", help="exact marginals and entropies of a rule")
    common(e, "rule")
    e.add_argument("--d", type=int, default=3)
    e.set_defaults(func=_cmd_entropy_exact)
    e = entg.add_parser("mc", help="Monte Carlo marginals of a rule")
    common(e, "rule", "seed")
    e.add_argument("--d", type=int, default=3)
    e.add_argument("--samples", type=int, required=True)
    e.set_defaults(func=_cmd_entropy_mc)
    e = entg.add_parser("audit", help="entropy inequality audit (exit 1 on failure)")
    common(e, "rule", "seed", "target")
    e.add_argument("--d", type=int, default=3)
    e.add_argument("--exact", action="store_true")
    e.add_argument("--samples", type=int, default=None)
    e.add_argument("--r", type=int, default=None, help="target regularity for the caps")
    e.set_defaults(func=_cmd_entropy_audit)
    e = entg.add_parser("constant", help="least integer above r^(3/c0)")
    e.add_argument("--r", type=int, required=True)
    e.add_argument("--c0", required=True)
    e.set_defaults(func=_cmd_entropy_constant)
    e = entg.add_parser("tail", help="top C-1 labels, tail mass and entropy")
    e.add_argument("--rule", default=None)
    e.add_argument("--probs", default=None, help="comma-separated masses, e.g. 1/4,1/4,1/2")
    e.add_argument("--C", type=int, default=None)
    e.add_argument("--c0", default=None)
    e.add_argument("--d", type=int, default=3)
    e.set_defaults(func=_cmd_entropy_tail)

    hom = top.add_parser("hom", help="homomorphism rule checks and search").add_subparsers(
        dest="sub", required=True
    )
    h = hom.add_parser("check", help="is the rule a homomorphism rule into the target")
    common(h, "rule", "seed")
    h.add_argument("--target", required=True)
    h.add_argument("--d", type=int, default=3)
    h.add_argument("--samples", type=int, default=None)
    h.set_defaults(func=_cmd_hom_check)
    h = hom.add_parser("search", help="scan a whole rule class against the target")
    h.add_argument("--target", required=True)
    common(h, "dt", "model", "seed")
    h.add_argument("--max-rules", type=int, default=1_000_000)
    h.set_defaults(func=_cmd_hom_search)
    h = hom.add_parser("certificate", help="constant-seed impossibility certificate")
    h.add_argument("--target", required=True)
    common(h, "dt", "model")
    h.set_defaults(func=_cmd_hom_certificate)

    sim = top.add_parser("sim", help="emulation and the refutation pipeline").add_subparsers(
        dest="sub", required=True
    )
    s = sim.add_parser("run", help="run a rule on a finite graph")
    common(s, "rule", "seed", "target")
    s.add_argument("--graph", required=True, help="substrate graph (name or path)")
    s.add_argument("--d", type=int, default=3)
    s.add_argument("--labels-out", default=None, help="write 'vertex label' lines here")
    s.set_defaults(func=_cmd_sim_run)
    s = sim.add_parser("pipeline", help="five-step refutation chain (exit 1 when inconclusive)")
    common(s, "rule", "seed")
    s.add_argument("--target", required=True)
    s.add_argument("--d", type=int, default=3)
    s.add_argument("--c0", default=None)
    s.add_argument("--C", type=int, default=None)
    s.add_argument("--exact", action="store_true")
    s.add_argument("--samples", type=int, default=None)
    s.set_defaults(func=_cmd_sim_pipeline)

    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    args.command_echo = argv
    out_lines = []
    try:
        payload, code = args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (
        graphs.GraphError,
        rules.RuleError,
        entropy.EntropyError,
        simulate.DegreeMismatch,
        ValueError,
    ) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    _emit(args, payload, out_lines)
    return code


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
