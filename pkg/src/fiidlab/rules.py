"""Equivariant finite-radius rules on the d-regular tree.

A rule reads the seed data in the radius-t ball around a vertex and emits a
label.  Equivariance is enforced structurally: the rule table is keyed by a
canonical encoding of the seed-labeled rooted ball, so any two balls related
by a root-fixing automorphism (a permutation of sibling subtrees) look
identical to the rule.

Raw balls are nested tuples ``(label, (child, child, ...))``: the root has d
children, every deeper internal vertex has d-1, and leaves sit at depth t.
Seed models:

* alphabet:q  -- labels are tags in 0..q-1, i.i.d. uniform;
* rank        -- labels are distinct comparable seeds; only their relative
                 order within the ball matters (canonicalization replaces
                 them with ranks 1..ball_size);
* hybrid:q    -- labels are (seed, tag) pairs, combining both.
"""

import random
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, combinations_with_replacement, product
from math import factorial

ALPHABET_ENUM_BUDGET = 10_000_000
RANK_BALL_LIMIT = 10


class RuleError(Exception):
    """Base class for rule construction and evaluation errors."""


class MalformedBall(RuleError):
    pass


class BudgetExceeded(RuleError):
    pass


class UnknownName(RuleError):
    pass


class IncompleteTable(RuleError):
    pass


# ---------------------------------------------------------------------------
# seed models


@dataclass(frozen=True)
class SeedModel:
    kind: str
    q: int | None = None

    def __post_init__(self):
        if self.kind not in ("alphabet", "rank", "hybrid"):
            raise ValueError(f"unknown seed model kind {self.kind!r}")
        if self.kind == "rank":
            if self.q is not None:
                raise ValueError("rank model takes no alphabet size")
        else:
            if not isinstance(self.q, int) or not 2 <= self.q <= 256:
                raise ValueError(f"alphabet size must be an int in 2..256, got {self.q!r}")

    def __str__(self):
        return self.kind if self.kind == "rank" else f"{self.kind}:{self.q}"

    @classmethod
    def parse(cls, token):
        token = str(token).strip()
        if token == "rank":
            return cls("rank")
        for kind in ("alphabet", "hybrid"):
            if token.startswith(kind + ":"):
                return cls(kind, int(token[len(kind) + 1:]))
        raise ValueError(f"cannot parse seed model {token!r}")


def alphabet(q):
    return SeedModel("alphabet", q)


def rank():
    return SeedModel("rank")


def hybrid(q):
    return SeedModel("hybrid", q)


# ---------------------------------------------------------------------------
# ball geometry


def subtree_size(d, depth):
    """Vertices in a depth-`depth` subtree whose internal vertices have d-1 children."""
    size = 1
    for _ in range(depth):
        size = 1 + (d - 1) * size
    return size


def ball_size(d, t):
    """Vertices in the radius-t ball of the d-regular tree."""
    if t == 0:
        return 1
    return 1 + d * subtree_size(d, t - 1)


def _subtree_aut(d, depth):
    if depth == 0:
        return 1
    return factorial(d - 1) * _subtree_aut(d, depth - 1) ** (d - 1)


def ball_aut_order(d, t):
    """Order of the root-fixing automorphism group of the radius-t ball."""
    if t == 0:
        return 1
    return factorial(d) * _subtree_aut(d, t - 1) ** d


def rank_ball_count(d, t):
    """Number of canonical rank balls: orderings up to ball automorphisms."""
    return factorial(ball_size(d, t)) // ball_aut_order(d, t)


def _check_shape(raw, d, t):
    def sub(node, depth, branching):
        if (
            not isinstance(node, tuple)
            or len(node) != 2
            or not isinstance(node[1], tuple)
        ):
            raise MalformedBall(f"ball node must be (label, children), got {node!r}")
        want = branching if depth > 0 else 0
        if len(node[1]) != want:
            raise MalformedBall(
                f"node at remaining depth {depth} has {len(node[1])} children, expected {want}"
            )
        for c in node[1]:
            sub(c, depth - 1, d - 1)

    sub(raw, t, d)


# ---------------------------------------------------------------------------
# canonical encoding


@dataclass(frozen=True)
class CanonicalBall:
    """Orbit representative of a seed-labeled rooted ball.

    ``labels`` is the sibling-sorted nested tuple; ``code`` is its preorder
    byte string (one byte per label component), which is what rule tables
    are keyed by.
    """

    d: int
    t: int
    model: SeedModel
    labels: tuple
    code: bytes


def _label_bytes(label, kind):
    if kind == "hybrid":
        return bytes((label[0], label[1]))
    return bytes((label,))


def _canon_node(node, kind):
    label, children = node
    parts = sorted(_canon_node(c, kind) for c in children)
    code = _label_bytes(label, kind) + b"".join(p[0] for p in parts)
    return code, (label, tuple(p[1] for p in parts))


def _rank_relabel(raw, kind):
    """Replace seeds by their rank 1..ball_size within the ball."""
    seeds = []

    def collect(node):
        label = node[0]
        seeds.append(label[0] if kind == "hybrid" else label)
        for c in node[1]:
            collect(c)

    collect(raw)
    try:
        ordered = sorted(seeds)
    except TypeError as exc:
        raise MalformedBall(f"seeds are not mutually comparable: {exc}") from exc
    if any(a == b for a, b in zip(ordered, ordered[1:])):
        raise MalformedBall("tied seeds in rank-model ball")
    rank_of = {s: i + 1 for i, s in enumerate(ordered)}

    def rebuild(node):
        label, children = node
        if kind == "hybrid":
            new = (rank_of[label[0]], label[1])
        else:
            new = rank_of[label]
        return (new, tuple(rebuild(c) for c in children))

    return rebuild(raw)


def canonicalize(raw, d, t, model):
    """Canonical form of a raw seed-labeled ball.

    Sibling subtrees are recursively sorted by their own code, and rank-model
    seeds are first replaced by the induced ranking restricted to the ball.
    Idempotent, and constant on orbits of root-fixing ball automorphisms.
    """
    _check_shape(raw, d, t)
    kind = model.kind
    if kind == "alphabet":
        work = raw
        _validate_tags(raw, model.q)
    elif kind == "rank":
        work = _rank_relabel(raw, kind)
    else:
        _validate_hybrid_tags(raw, model.q)
        work = _rank_relabel(raw, kind)
    code, labels = _canon_node(work, kind)
    return CanonicalBall(d=d, t=t, model=model, labels=labels, code=code)


def _validate_tags(node, q):
    label = node[0]
    if not isinstance(label, int) or not 0 <= label < q:
        raise MalformedBall(f"alphabet tag {label!r} outside 0..{q - 1}")
    for c in node[1]:
        _validate_tags(c, q)


def _validate_hybrid_tags(node, q):
    label = node[0]
    if not isinstance(label, tuple) or len(label) != 2:
        raise MalformedBall(f"hybrid label must be (seed, tag), got {label!r}")
    if not isinstance(label[1], int) or not 0 <= label[1] < q:
        raise MalformedBall(f"hybrid tag {label[1]!r} outside 0..{q - 1}")
    for c in node[1]:
        _validate_hybrid_tags(c, q)


# ---------------------------------------------------------------------------
# enumeration of canonical balls, with orbit sizes


def check_enumeration_budget(d, t, model):
    B = ball_size(d, t)
    if model.kind == "alphabet":
        if model.q**B > ALPHABET_ENUM_BUDGET:
            raise BudgetExceeded(
                f"alphabet enumeration needs q^{B} = {model.q**B} > {ALPHABET_ENUM_BUDGET}"
            )
    elif model.kind == "rank":
        if B > RANK_BALL_LIMIT:
            raise BudgetExceeded(f"rank ball size {B} exceeds limit {RANK_BALL_LIMIT}")
    else:
        if B > RANK_BALL_LIMIT:
            raise BudgetExceeded(f"hybrid ball size {B} exceeds limit {RANK_BALL_LIMIT}")
        count = rank_ball_count(d, t) * model.q**B
        if count > ALPHABET_ENUM_BUDGET:
            raise BudgetExceeded(
                f"hybrid enumeration needs {count} > {ALPHABET_ENUM_BUDGET} balls"
            )


@lru_cache(maxsize=None)
def _alphabet_subtree_types(d, depth, q):
    """Canonical subtrees of the given depth: list of (code, node, count)."""
    if depth == 0:
        return [(bytes((a,)), (a, ()), 1) for a in range(q)]
    prev = _alphabet_subtree_types(d, depth - 1, q)
    out = []
    for a in range(q):
        for combo in combinations_with_replacement(prev, d - 1):
            out.append(_assemble(a, combo, d - 1, "alphabet"))
    out.sort(key=lambda item: item[0])
    return out


def _assemble(root_label, combo, slots, kind):
    """Node from a root label and a nondecreasing tuple of child types."""
    mult = {}
    for item in combo:
        mult[item[0]] = mult.get(item[0], 0) + 1
    arrangements = factorial(slots)
    count = arrangements
    for mcount in mult.values():
        count //= factorial(mcount)
    for item in combo:
        count *= item[2]
    node = (root_label, tuple(item[1] for item in combo))
    code = _label_bytes(root_label, kind) + b"".join(item[0] for item in combo)
    return (code, node, count)


def _enumerate_alphabet(d, t, q):
    if t == 0:
        return [(bytes((a,)), (a, ()), 1) for a in range(q)]
    sub = _alphabet_subtree_types(d, t - 1, q)
    out = []
    for a in range(q):
        for combo in combinations_with_replacement(sub, d):
            out.append(_assemble(a, combo, d, "alphabet"))
    out.sort(key=lambda item: item[0])
    return out


def _block_partitions(elems, size):
    """Unordered partitions of `elems` into blocks of equal `size`,
    generated by anchoring the smallest remaining element."""
    if not elems:
        yield ()
        return
    first, rest = elems[0], elems[1:]
    for others in combinations(rest, size - 1):
        block = (first,) + others
        chosen = set(others)
        remaining = tuple(e for e in rest if e not in chosen)
        for tail in _block_partitions(remaining, size):
            yield (block,) + tail


def _rank_subtree_assignments(ranks, d, depth):
    """All canonical (code, node) subtrees over exactly the given rank set."""
    if depth == 0:
        r = ranks[0]
        return [(bytes((r,)), (r, ()))]
    out = []
    block = subtree_size(d, depth - 1)
    for root_rank in ranks:
        rest = tuple(r for r in ranks if r != root_rank)
        for blocks in _block_partitions(rest, block):
            for parts in product(
                *(_rank_subtree_assignments(b, d, depth - 1) for b in blocks)
            ):
                parts = sorted(parts)
                code = bytes((root_rank,)) + b"".join(p[0] for p in parts)
                node = (root_rank, tuple(p[1] for p in parts))
                out.append((code, node))
    return out


def _enumerate_rank(d, t):
    B = ball_size(d, t)
    aut = ball_aut_order(d, t)
    if t == 0:
        return [(bytes((1,)), (1, ()), 1)]
    out = []
    block = subtree_size(d, t - 1)
    all_ranks = tuple(range(1, B + 1))
    for root_rank in all_ranks:
        rest = tuple(r for r in all_ranks if r != root_rank)
        for blocks in _block_partitions(rest, block):
            for parts in product(
                *(_rank_subtree_assignments(b, d, t - 1) for b in blocks)
            ):
                parts = sorted(parts)
                code = bytes((root_rank,)) + b"".join(p[0] for p in parts)
                node = (root_rank, tuple(p[1] for p in parts))
                out.append((code, node, aut))
    out.sort(key=lambda item: item[0])
    return out


def _attach_tags(node, tags):
    """Rebuild a rank node with (rank, tag) labels, consuming tags preorder."""
    it = iter(tags)

    def rebuild(n):
        label, children = n
        return ((label, next(it)), tuple(rebuild(c) for c in children))

    return rebuild(node)


def _enumerate_hybrid(d, t, q):
    B = ball_size(d, t)
    aut = ball_aut_order(d, t)
    out = []
    for _, rnode, _ in _enumerate_rank(d, t):
        for tags in product(range(q), repeat=B):
            node = _attach_tags(rnode, tags)
            code, labels = _canon_node(node, "hybrid")
            out.append((code, labels, aut))
    out.sort(key=lambda item: item[0])
    return out


_ENUM_CACHE = {}


def enumerate_canonical_balls_weighted(d, t, model):
    """All canonical balls with orbit sizes: list of (CanonicalBall, count, total).

    ``count`` is the number of raw seed configurations in the orbit and
    ``total`` the size of the raw configuration space, so count/total is the
    probability of the orbit under the seed model.
    """
    key = (d, t, model)
    if key in _ENUM_CACHE:
        return _ENUM_CACHE[key]
    check_enumeration_budget(d, t, model)
    B = ball_size(d, t)
    if model.kind == "alphabet":
        raw = _enumerate_alphabet(d, t, model.q)
        total = model.q**B
    elif model.kind == "rank":
        raw = _enumerate_rank(d, t)
        total = factorial(B)
    else:
        raw = _enumerate_hybrid(d, t, model.q)
        total = factorial(B) * model.q**B
    balls = [
        (CanonicalBall(d=d, t=t, model=model, labels=node, code=code), count, total)
        for code, node, count in raw
    ]
    assert sum(c for _, c, _ in balls) == total
    _ENUM_CACHE[key] = balls
    return balls


def enumerate_canonical_balls(d, t, model):
    """One representative per orbit of root-fixing ball automorphisms,
    sorted by canonical code."""
    return [b for b, _, _ in enumerate_canonical_balls_weighted(d, t, model)]


@lru_cache(maxsize=None)
def _code_set(d, t, model):
    return frozenset(b.code for b in enumerate_canonical_balls(d, t, model))


# ---------------------------------------------------------------------------
# rules


@dataclass(frozen=True)
class LocalRule:
    """Total mapping from canonical balls of (d, t, model) to output labels."""

    d: int
    t: int
    model: SeedModel
    output_alphabet: tuple
    table: dict

    def label_for_code(self, code):
        return self.table[code]


def make_rule(d, t, model, output_alphabet, table):
    """Validated LocalRule; the table must cover every canonical ball."""
    alpha = tuple(output_alphabet)
    if len(alpha) != len(set(alpha)) or not alpha:
        raise ValueError("output alphabet must be nonempty without repeats")
    for label in alpha:
        text = str(label)
        if not text or any(ch.isspace() or ch == "," for ch in text):
            raise ValueError(f"label {label!r} not serializable (space or comma)")
    codes = _code_set(d, t, model)
    missing = codes - table.keys()
    if missing:
        raise IncompleteTable(
            f"table covers {len(table)} of {len(codes)} canonical balls"
        )
    extra = table.keys() - codes
    if extra:
        raise ValueError(f"table has {len(extra)} entries for unknown balls")
    bad = {v for v in table.values() if v not in set(alpha)}
    if bad:
        raise ValueError(f"table outputs {bad} outside the output alphabet")
    return LocalRule(d=d, t=t, model=model, output_alphabet=alpha, table=dict(table))


def evaluate(rule, raw):
    """Output of the rule at the root of a raw seed-labeled ball."""
    ball = canonicalize(raw, rule.d, rule.t, rule.model)
    try:
        return rule.table[ball.code]
    except KeyError as exc:  # unreachable for validated rules
        raise MalformedBall(f"ball {ball.code.hex()} not in rule table") from exc


def builtin_rule(name, **params):
    """Built-in rules: constant, max_seed_independent, rank_table, alphabet_table."""
    if name == "constant":
        label = params["label"]
        d = params.get("d", 3)
        out = tuple(params.get("output_alphabet") or (label,))
        balls = enumerate_canonical_balls(d, 0, rank())
        return make_rule(d, 0, rank(), out, {b.code: label for b in balls})
    if name == "max_seed_independent":
        d = params.get("d", 3)
        balls = enumerate_canonical_balls(d, 1, rank())
        top = d + 1
        table = {b.code: ("IN" if b.labels[0] == top else "OUT") for b in balls}
        return make_rule(d, 1, rank(), ("IN", "OUT"), table)
    if name == "rank_table":
        d, t = params["d"], params["t"]
        table = dict(params["table"])
        out = params.get("output_alphabet")
        if out is None:
            out = tuple(sorted(set(table.values()), key=str))
        return make_rule(d, t, rank(), out, table)
    if name == "alphabet_table":
        d, t, q = params["d"], params["t"], params["q"]
        table = dict(params["table"])
        out = params.get("output_alphabet")
        if out is None:
            out = tuple(sorted(set(table.values()), key=str))
        return make_rule(d, t, alphabet(q), out, table)
    raise UnknownName(f"unknown builtin rule {name!r}")


def random_rule(d, t, model, output_alphabet, rng_seed):
    """Independent uniform output per canonical ball; deterministic per seed."""
    balls = enumerate_canonical_balls(d, t, model)
    rng = random.Random(rng_seed)
    alpha = tuple(output_alphabet)
    table = {b.code: alpha[rng.randrange(len(alpha))] for b in balls}
    return make_rule(d, t, model, alpha, table)


def recode_outputs(rule, mapping, output_alphabet=None):
    """New rule with output labels pushed through `mapping`."""
    table = {code: mapping[label] for code, label in rule.table.items()}
    out = tuple(output_alphabet) if output_alphabet is not None else tuple(
        dict.fromkeys(mapping[label] for label in rule.output_alphabet)
    )
    return make_rule(rule.d, rule.t, rule.model, out, table)


# ---------------------------------------------------------------------------
# rule serialization: header "d t model output_alphabet", then
# "<canonical_code_hex> <label>" lines, sorted by code


def _parse_label(text):
    stripped = text[1:] if text.startswith("-") else text
    return int(text) if stripped.isdigit() else text


def rule_to_text(rule):
    header = f"{rule.d} {rule.t} {rule.model} {','.join(str(x) for x in rule.output_alphabet)}"
    lines = [header]
    lines.extend(f"{code.hex()} {rule.table[code]}" for code in sorted(rule.table))
    return "\n".join(lines) + "\n"


def rule_from_text(text):
    rows = [ln for ln in text.splitlines() if ln.strip()]
    if not rows:
        raise ValueError("empty rule file")
    head = rows[0].split()
    if len(head) != 4:
        raise ValueError(f"bad rule header {rows[0]!r}")
    d, t = int(head[0]), int(head[1])
    model = SeedModel.parse(head[2])
    out = tuple(_parse_label(x) for x in head[3].split(","))
    table = {}
    for ln in rows[1:]:
        code_hex, label = ln.split()
        table[bytes.fromhex(code_hex)] = _parse_label(label)
    return make_rule(d, t, model, out, table)


def save_rule(rule, path):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(rule_to_text(rule))


def load_rule(path):
    with open(path, "r", encoding="ascii") as fh:
        return rule_from_text(fh.read())


# ---------------------------------------------------------------------------
# edge balls: the union of the two endpoint balls of a fixed tree edge.
# Vertex ids are assigned u=0, v=1, then u-side subtrees preorder, then
# v-side subtrees preorder; a configuration is a flat tuple over these ids.


@dataclass(frozen=True)
class EdgeBallLayout:
    d: int
    t: int
    size: int
    u_template: tuple
    v_template: tuple
    u_ids: tuple
    v_ids: tuple
    shared_ids: tuple
    u_only_ids: tuple
    v_only_ids: tuple


def _truncate(template, depth):
    if depth < 0:
        return None
    idx, children = template
    if depth == 0:
        return (idx, ())
    kept = tuple(_truncate(c, depth - 1) for c in children)
    return (idx, tuple(c for c in kept if c is not None))


def _flatten_ids(template, out):
    out.append(template[0])
    for c in template[1]:
        _flatten_ids(c, out)


@lru_cache(maxsize=None)
def edge_ball_layout(d, t):
    counter = [2]

    def build(depth):
        idx = counter[0]
        counter[0] += 1
        if depth == 0:
            return (idx, ())
        return (idx, tuple(build(depth - 1) for _ in range(d - 1)))

    u_subs = tuple(build(t - 1) for _ in range(d - 1)) if t >= 1 else ()
    v_subs = tuple(build(t - 1) for _ in range(d - 1)) if t >= 1 else ()

    if t == 0:
        u_template = (0, ())
        v_template = (1, ())
    else:
        v_as_child = (1, tuple(
            c for c in (_truncate(s, t - 2) for s in v_subs) if c is not None
        ))
        u_as_child = (0, tuple(
            c for c in (_truncate(s, t - 2) for s in u_subs) if c is not None
        ))
        u_template = (0, (v_as_child,) + u_subs)
        v_template = (1, (u_as_child,) + v_subs)

    u_ids, v_ids = [], []
    _flatten_ids(u_template, u_ids)
    _flatten_ids(v_template, v_ids)
    shared = sorted(set(u_ids) & set(v_ids))
    return EdgeBallLayout(
        d=d,
        t=t,
        size=counter[0],
        u_template=u_template,
        v_template=v_template,
        u_ids=tuple(u_ids),
        v_ids=tuple(v_ids),
        shared_ids=tuple(shared),
        u_only_ids=tuple(sorted(set(u_ids) - set(v_ids))),
        v_only_ids=tuple(sorted(set(v_ids) - set(u_ids))),
    )


def fill_ball(template, config):
    """Raw ball from an id template and a flat configuration vector."""
    idx, children = template
    return (config[idx], tuple(fill_ball(c, config) for c in children))


def edge_configs(layout, model):
    """All edge-ball seed configurations in lexicographic order.

    alphabet: tag tuples; rank: rank tuples (permutations of 1..size);
    hybrid: ((rank, tag), ...) tuples, ranks major.
    """
    from itertools import permutations

    if model.kind == "alphabet":
        yield from product(range(model.q), repeat=layout.size)
    elif model.kind == "rank":
        yield from permutations(range(1, layout.size + 1))
    else:
        for ranks in permutations(range(1, layout.size + 1)):
            for tags in product(range(model.q), repeat=layout.size):
                yield tuple(zip(ranks, tags))


def edge_config_count(layout, model):
    if model.kind == "alphabet":
        return model.q**layout.size
    if model.kind == "rank":
        return factorial(layout.size)
    return factorial(layout.size) * model.q**layout.size


def check_edge_budget(d, t, model):
    """Feasibility of exact edge-ball enumeration for (d, t, model)."""
    layout = edge_ball_layout(d, t)
    if model.kind == "alphabet":
        if model.q**layout.size > ALPHABET_ENUM_BUDGET:
            raise BudgetExceeded(
                f"alphabet edge ball needs q^{layout.size} > {ALPHABET_ENUM_BUDGET}"
            )
    else:
        if layout.size > RANK_BALL_LIMIT:
            raise BudgetExceeded(
                f"edge ball size {layout.size} exceeds rank limit {RANK_BALL_LIMIT}"
            )
        if (
            model.kind == "hybrid"
            and factorial(layout.size) * model.q**layout.size > ALPHABET_ENUM_BUDGET
        ):
            raise BudgetExceeded("hybrid edge ball enumeration over budget")
    return layout


def endpoint_codes(layout, model, config):
    """Canonical codes of the two endpoint balls under a configuration."""
    cu = canonicalize(fill_ball(layout.u_template, config), layout.d, layout.t, model)
    cv = canonicalize(fill_ball(layout.v_template, config), layout.d, layout.t, model)
    return cu.code, cv.code


@dataclass(frozen=True)
class EdgePairTable:
    """Exact joint law of the two endpoint canonical balls across an edge.

    ``counts`` maps (code_u, code_v) to the number of configurations
    realizing it; ``order`` lists the pairs by first lexicographic
    occurrence, with a representative configuration each.
    """

    d: int
    t: int
    model: SeedModel
    total: int
    counts: dict
    order: tuple  # ((position, code_u, code_v, config), ...) sorted by position


_PAIR_CACHE = {}


def edge_pair_table(d, t, model):
    key = (d, t, model)
    if key in _PAIR_CACHE:
        return _PAIR_CACHE[key]
    layout = check_edge_budget(d, t, model)
    counts = {}
    first = {}
    total = 0
    for pos, config in enumerate(edge_configs(layout, model)):
        pair = endpoint_codes(layout, model, config)
        counts[pair] = counts.get(pair, 0) + 1
        if pair not in first:
            first[pair] = (pos, config)
        total += 1
    order = tuple(
        sorted((pos, pair[0], pair[1], cfg) for pair, (pos, cfg) in first.items())
    )
    table = EdgePairTable(d=d, t=t, model=model, total=total, counts=counts, order=order)
    _PAIR_CACHE[key] = table
    return table
