"""Label marginals of a rule on the d-regular tree and entropy audits.

Exact marginals are computed in rational arithmetic by weighted enumeration
of seed configurations: the vertex law over the radius-t ball of a vertex,
the pair law over the edge ball (the union of the two endpoint balls).  The
pair law exploits that, conditioned on the seeds both endpoints can see, the
two outputs are independent.  Monte Carlo marginals are plug-in empirical
laws from i.i.d. edge-ball samples, deterministic per seed via fixed-size
blocks with derived substreams.

All entropies are in nats.
"""

import hashlib
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from . import rules
from .rules import BudgetExceeded  # noqa: F401  (re-raised from enumeration)


class EntropyError(Exception):
    pass


class InvalidDistribution(EntropyError):
    pass


class InconsistentMarginals(EntropyError):
    pass


class CTooLarge(EntropyError):
    pass


class Overflow(EntropyError):
    pass


# ---------------------------------------------------------------------------
# distributions


@dataclass(frozen=True)
class Provenance:
    kind: str  # "exact" | "monte_carlo"
    n_samples: int | None = None


EXACT = Provenance("exact")


def monte_carlo(n_samples):
    return Provenance("monte_carlo", n_samples)


@dataclass(frozen=True)
class LabelDistribution:
    """Law of the output label at a random vertex."""

    labels: tuple
    p: tuple
    provenance: Provenance

    def __post_init__(self):
        if len(self.labels) != len(self.p) or not self.labels:
            raise InvalidDistribution("labels and masses must align and be nonempty")
        if any(x < 0 for x in self.p):
            raise InvalidDistribution("negative mass")
        total = sum(self.p)
        if self.provenance.kind == "exact":
            if total != 1:
                raise InvalidDistribution(f"exact masses sum to {total}, not 1")
        elif abs(total - 1) > 1e-9:
            raise InvalidDistribution(f"masses sum to {total}, off by > 1e-9")

    def mass(self, label):
        return self.p[self.labels.index(label)]

    def as_float_dict(self):
        return {a: float(x) for a, x in zip(self.labels, self.p)}


@dataclass(frozen=True)
class PairDistribution:
    """Exchangeable law of the ordered label pair across a fixed tree edge.

    ``probs`` maps ordered pairs to masses; absent pairs have mass zero.
    """

    labels: tuple
    probs: dict
    provenance: Provenance

    def __post_init__(self):
        universe = set(self.labels)
        for (a, b), x in self.probs.items():
            if a not in universe or b not in universe:
                raise InvalidDistribution(f"pair ({a!r}, {b!r}) outside the alphabet")
            if x < 0:
                raise InvalidDistribution("negative mass")
            if self.probs.get((b, a), 0) != x:
                raise InvalidDistribution(f"not exchangeable at ({a!r}, {b!r})")
        total = sum(self.probs.values())
        if self.provenance.kind == "exact":
            if total != 1:
                raise InvalidDistribution(f"exact masses sum to {total}, not 1")
        elif abs(total - 1) > 1e-9:
            raise InvalidDistribution(f"masses sum to {total}, off by > 1e-9")

    def mass(self, a, b):
        return self.probs.get((a, b), 0)

    def support(self):
        return frozenset(k for k, x in self.probs.items() if x > 0)

    def marginal(self):
        sums = {a: 0 for a in self.labels}
        for (a, _), x in self.probs.items():
            sums[a] += x
        return LabelDistribution(
            labels=self.labels,
            p=tuple(sums[a] for a in self.labels),
            provenance=self.provenance,
        )


def uniform_distribution(labels):
    k = len(labels)
    return LabelDistribution(tuple(labels), tuple(Fraction(1, k) for _ in range(k)), EXACT)


def point_mass(labels, label):
    return LabelDistribution(
        tuple(labels),
        tuple(Fraction(1) if a == label else Fraction(0) for a in labels),
        EXACT,
    )


def pair_from_edge_weights(H, weights, provenance=EXACT):
    """Exchangeable pair law supported on the edges of H from per-edge weights."""
    total = sum(weights.values()) * 2
    probs = {}
    for (u, v), w in weights.items():
        if not H.has_edge(u, v):
            raise InvalidDistribution(f"({u}, {v}) is not an edge of the target")
        probs[(u, v)] = probs.get((u, v), 0) + Fraction(w, total)
        probs[(v, u)] = probs.get((v, u), 0) + Fraction(w, total)
    return PairDistribution(tuple(range(H.n)), probs, provenance)


# ---------------------------------------------------------------------------
# entropies


def entropy(dist):
    """Shannon entropy -sum p ln p in nats, with 0 ln 0 = 0."""
    return -sum(float(x) * math.log(float(x)) for x in dist.p if x > 0)


def joint_entropy(pair):
    return -sum(float(x) * math.log(float(x)) for x in pair.probs.values() if x > 0)


def conditional_entropy(pair):
    """h(X|Y) for (X, Y) distributed as the pair law, via the defining sum."""
    my = {}
    for (_, b), x in pair.probs.items():
        my[b] = my.get(b, 0) + x
    h = 0.0
    for (_, b), x in pair.probs.items():
        if x > 0:
            h -= float(x) * math.log(float(x) / float(my[b]))
    return h


def entropy_sigma(dist, n_samples):
    """Delta-method standard error of the plug-in entropy estimate."""
    h = entropy(dist)
    second = sum(float(x) * math.log(float(x)) ** 2 for x in dist.p if x > 0)
    var = max(second - h * h, 0.0)
    return math.sqrt(var / n_samples)


def total_variation(d1, d2):
    labels = set(d1.labels) | set(d2.labels)
    f1, f2 = d1.as_float_dict(), d2.as_float_dict()
    return 0.5 * sum(abs(f1.get(a, 0.0) - f2.get(a, 0.0)) for a in labels)


# ---------------------------------------------------------------------------
# exact marginals


def _exact_vertex_law(rule):
    weighted = rules.enumerate_canonical_balls_weighted(rule.d, rule.t, rule.model)
    sums = {a: 0 for a in rule.output_alphabet}
    total = weighted[0][2]
    for ball, count, _ in weighted:
        sums[rule.table[ball.code]] += count
    return LabelDistribution(
        labels=rule.output_alphabet,
        p=tuple(Fraction(sums[a], total) for a in rule.output_alphabet),
        provenance=EXACT,
    )


_ALPHA_EDGE_CACHE = {}


def _alphabet_edge_structure(d, t, q):
    """Per shared-seed configuration, the canonical-code counts of each
    endpoint ball over its private seeds.  Rule-independent, cached."""
    key = (d, t, q)
    if key in _ALPHA_EDGE_CACHE:
        return _ALPHA_EDGE_CACHE[key]
    layout = rules.edge_ball_layout(d, t)
    model = rules.alphabet(q)
    rules.check_edge_budget(d, t, model)
    shared, u_only, v_only = layout.shared_ids, layout.u_only_ids, layout.v_only_ids
    config = [0] * layout.size
    rows = []
    for shared_cfg in product(range(q), repeat=len(shared)):
        for idx, tag in zip(shared, shared_cfg):
            config[idx] = tag
        counts_u = {}
        for side_cfg in product(range(q), repeat=len(u_only)):
            for idx, tag in zip(u_only, side_cfg):
                config[idx] = tag
            code = rules.canonicalize(
                rules.fill_ball(layout.u_template, config), d, t, model
            ).code
            counts_u[code] = counts_u.get(code, 0) + 1
        counts_v = {}
        for side_cfg in product(range(q), repeat=len(v_only)):
            for idx, tag in zip(v_only, side_cfg):
                config[idx] = tag
            code = rules.canonicalize(
                rules.fill_ball(layout.v_template, config), d, t, model
            ).code
            counts_v[code] = counts_v.get(code, 0) + 1
        rows.append((counts_u, counts_v))
    result = (layout, rows, q ** len(u_only), q ** len(v_only))
    _ALPHA_EDGE_CACHE[key] = result
    return result


def _exact_pair_law_alphabet(rule):
    layout, rows, side_u, side_v = _alphabet_edge_structure(
        rule.d, rule.t, rule.model.q
    )
    q = rule.model.q
    table = rule.table
    acc = {}
    for counts_u, counts_v in rows:
        lu = {}
        for code, c in counts_u.items():
            a = table[code]
            lu[a] = lu.get(a, 0) + c
        lv = {}
        for code, c in counts_v.items():
            b = table[code]
            lv[b] = lv.get(b, 0) + c
        for a, cu in lu.items():
            for b, cv in lv.items():
                acc[(a, b)] = acc.get((a, b), 0) + cu * cv
    denom = q ** len(layout.shared_ids) * side_u * side_v
    probs = {k: Fraction(v, denom) for k, v in acc.items()}
    return PairDistribution(rule.output_alphabet, probs, EXACT)


def _exact_pair_law_ordered(rule):
    pt = rules.edge_pair_table(rule.d, rule.t, rule.model)
    acc = {}
    for (cu, cv), c in pt.counts.items():
        key = (rule.table[cu], rule.table[cv])
        acc[key] = acc.get(key, 0) + c
    probs = {k: Fraction(v, pt.total) for k, v in acc.items()}
    return PairDistribution(rule.output_alphabet, probs, EXACT)


def exact_marginals(rule):
    """Exact (LabelDistribution, PairDistribution) of a rule, rational arithmetic."""
    vertex = _exact_vertex_law(rule)
    if rule.model.kind == "alphabet":
        pair = _exact_pair_law_alphabet(rule)
    else:
        pair = _exact_pair_law_ordered(rule)
    return vertex, pair


# ---------------------------------------------------------------------------
# Monte Carlo marginals


_MC_BLOCK = 1 << 16


def _block_seed(rng_seed, block_index):
    digest = hashlib.sha256(f"{rng_seed}:{block_index}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


def _mc_pair_counts_rank_t1(rule, n, rng):
    """Fast path: only the root's rank in its closed ball matters at t=1."""
    d = rule.d
    B = d + 1
    label_by_rank = {}
    for ball in rules.enumerate_canonical_balls(d, 1, rule.model):
        label_by_rank[ball.labels[0]] = rule.table[ball.code]
    counts = {}
    uniform = rng.random
    for _ in range(n):
        seeds = [uniform() for _ in range(2 * d)]
        su, sv = seeds[0], seeds[1]
        ru = 1 + (sv < su) + sum(seeds[i] < su for i in range(2, d + 1))
        rv = 1 + (su < sv) + sum(seeds[i] < sv for i in range(d + 1, 2 * d))
        key = (ru, rv)
        counts[key] = counts.get(key, 0) + 1
    out = {}
    for (ru, rv), c in counts.items():
        key = (label_by_rank[ru], label_by_rank[rv])
        out[key] = out.get(key, 0) + c
    return out


def _mc_pair_counts_generic(rule, n, rng):
    layout = rules.edge_ball_layout(rule.d, rule.t)
    model = rule.model
    counts = {}
    size = layout.size
    for _ in range(n):
        if model.kind == "alphabet":
            config = [rng.randrange(model.q) for _ in range(size)]
        elif model.kind == "rank":
            config = [rng.random() for _ in range(size)]
        else:
            config = [(rng.random(), rng.randrange(model.q)) for _ in range(size)]
        cu, cv = rules.endpoint_codes(layout, model, config)
        key = (rule.table[cu], rule.table[cv])
        counts[key] = counts.get(key, 0) + 1
    return counts


def mc_marginals(rule, n_samples, rng_seed):
    """Plug-in empirical laws from n_samples edge-ball configurations.

    Samples are drawn in fixed-size blocks whose seeds derive from the
    master seed, so merged counts do not depend on evaluation order.  The
    pair law is symmetrized and the vertex law is its marginal, which keeps
    the two exactly consistent.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    fast = rule.model.kind == "rank" and rule.t == 1
    counts = {}
    done = 0
    block_index = 0
    while done < n_samples:
        n = min(_MC_BLOCK, n_samples - done)
        rng = random.Random(_block_seed(rng_seed, block_index))
        block = (
            _mc_pair_counts_rank_t1(rule, n, rng)
            if fast
            else _mc_pair_counts_generic(rule, n, rng)
        )
        for k, c in block.items():
            counts[k] = counts.get(k, 0) + c
        done += n
        block_index += 1
    denom = 2 * n_samples
    probs = {}
    for (a, b), c in counts.items():
        sym = c + counts.get((b, a), 0)
        if sym:
            probs[(a, b)] = sym / denom
            probs[(b, a)] = sym / denom
    pair = PairDistribution(rule.output_alphabet, probs, monte_carlo(n_samples))
    vertex = pair.marginal()
    return vertex, pair


# ---------------------------------------------------------------------------
# the inequality audit


@dataclass(frozen=True)
class EntropyReport:
    h_vertex: float
    h_edge: float
    h_nbr_given_vertex: float
    slack_edge_vertex: float
    r: int | None


@dataclass(frozen=True)
class Verdict:
    check: str
    passed: bool
    margin: float


@dataclass(frozen=True)
class AuditResult:
    report: EntropyReport
    verdicts: tuple
    provenance: Provenance

    def all_passed(self):
        return all(v.passed for v in self.verdicts)

    def to_json_dict(self):
        return {
            "h_vertex": self.report.h_vertex,
            "h_edge": self.report.h_edge,
            "h_nbr_given_vertex": self.report.h_nbr_given_vertex,
            "slack_edge_vertex": self.report.slack_edge_vertex,
            "r": self.report.r,
            "verdicts": [
                {"check": v.check, "pass": v.passed, "margin": v.margin}
                for v in self.verdicts
            ],
            "provenance": {
                "kind": self.provenance.kind,
                "n_samples": self.provenance.n_samples,
            },
        }


def _consistency_tolerance(vertex, pair):
    ns = [
        p.n_samples
        for p in (vertex.provenance, pair.provenance)
        if p.kind == "monte_carlo"
    ]
    if not ns:
        return 0
    # 3 sigma with sigma <= 0.5/sqrt(n) per cell
    return 1.5 / math.sqrt(min(ns)) + 1e-9


def audit(vertex, pair, r=None, H=None):
    """Entropy report plus verdicts.

    Checks, in order: (a) the edge law dominates 4/3 of the vertex entropy;
    (b) when a target graph is given, the pair support lies inside its edge
    set; (c) when the support check passes and a regularity r is known, the
    neighbor entropy is at most ln r and the vertex entropy at most 3 ln r.
    Tolerance is 1e-9 for exact laws and 3 sigma for Monte Carlo ones.
    """
    tol_mc = _consistency_tolerance(vertex, pair)
    marg = pair.marginal().as_float_dict()
    vert = vertex.as_float_dict()
    for a in set(marg) | set(vert):
        if abs(marg.get(a, 0.0) - vert.get(a, 0.0)) > max(tol_mc, 1e-12):
            raise InconsistentMarginals(
                f"pair marginal and vertex law differ at {a!r}: "
                f"{marg.get(a, 0.0)} vs {vert.get(a, 0.0)}"
            )

    h_v = entropy(vertex)
    h_e = joint_entropy(pair)
    h_n = conditional_entropy(pair)

    if H is not None and r is None:
        degs = {len(adj) for adj in H.adjacency}
        r = degs.pop() if len(degs) == 1 else None

    mc = vertex.provenance.kind == "monte_carlo" or pair.provenance.kind == "monte_carlo"
    if mc:
        n = min(
            p.n_samples
            for p in (vertex.provenance, pair.provenance)
            if p.kind == "monte_carlo"
        )
        tol = 3 * (entropy_sigma(vertex, n) + entropy_sigma(pair.marginal(), n)) + 1e-9
    else:
        tol = 1e-9

    slack = h_e - (4.0 / 3.0) * h_v
    verdicts = [Verdict("edge_vertex", slack >= -tol, slack)]

    support_ok = None
    if H is not None:
        bad_mass = sum(
            float(x)
            for (a, b), x in pair.probs.items()
            if x > 0
            and not (
                isinstance(a, int)
                and isinstance(b, int)
                and 0 <= a < H.n
                and 0 <= b < H.n
                and H.has_edge(a, b)
            )
        )
        support_ok = bad_mass == 0
        verdicts.append(Verdict("support_in_target", support_ok, -bad_mass))

    if r is not None and (support_ok or (H is None)):
        verdicts.append(
            Verdict("nbr_entropy_cap", h_n <= math.log(r) + tol, math.log(r) - h_n)
        )
        verdicts.append(
            Verdict(
                "vertex_entropy_cap",
                h_v <= 3 * math.log(r) + tol,
                3 * math.log(r) - h_v,
            )
        )

    report = EntropyReport(
        h_vertex=h_v,
        h_edge=h_e,
        h_nbr_given_vertex=h_n,
        slack_edge_vertex=slack,
        r=r,
    )
    prov = (
        vertex.provenance
        if vertex.provenance.kind == "monte_carlo"
        else pair.provenance
    )
    return AuditResult(report=report, verdicts=tuple(verdicts), provenance=prov)


# ---------------------------------------------------------------------------
# the girth constant


_OVERFLOW_BIT_CAP = 8_000_000


def c0_fraction(c0):
    """c0 as an exact fraction.  Floats go through their shortest decimal
    repr, so 0.089 means 89/1000, not the binary float it parses to."""
    if isinstance(c0, Fraction):
        frac = c0
    elif isinstance(c0, float):
        frac = Fraction(repr(c0))
    elif isinstance(c0, str):
        frac = Fraction(c0)
    else:
        raise ValueError(f"cannot interpret c0 of type {type(c0).__name__}")
    if not 0 < frac < 1:
        raise ValueError(f"c0 must lie strictly between 0 and 1, got {frac}")
    return frac


def min_girth_constant(r, c0):
    """Least integer strictly greater than r**(3/c0), in exact arithmetic.

    With c0 = p/q in lowest terms the answer is 1 + max{n : n**p <= r**(3q)},
    found by binary search over big integers.
    """
    if not isinstance(r, int) or r < 2:
        raise ValueError(f"regularity r must be an integer >= 2, got {r!r}")
    frac = c0_fraction(c0)
    p, q = frac.numerator, frac.denominator
    bits = 3 * q * max(r.bit_length(), 1)
    if bits > _OVERFLOW_BIT_CAP:
        raise Overflow(
            f"r^(3q) needs about {bits} bits with c0 = {frac}; "
            "give c0 with a smaller denominator"
        )
    R = r ** (3 * q)
    hi = 1 << (R.bit_length() // p + 2)
    lo = 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if mid**p <= R:
            lo = mid
        else:
            hi = mid - 1
    return lo + 1


# ---------------------------------------------------------------------------
# tail selection (the large-preimage argument)


@dataclass(frozen=True)
class TailSelection:
    selected: tuple
    selected_mass: object
    outside_mass: object
    tail_entropy: float
    triggered: bool
    min_selected_mass: object
    max_outside_mass: object
    outside_at_most_inv_C: bool
    entropy_floor: float
    c0_floor: float
    floor_holds: bool
    verdict: str

    def to_json_dict(self):
        def num(x):
            return {"exact": str(x), "float": float(x)} if isinstance(x, Fraction) else float(x)

        return {
            "selected": list(self.selected),
            "selected_mass": num(self.selected_mass),
            "outside_mass": num(self.outside_mass),
            "tail_entropy": self.tail_entropy,
            "triggered": self.triggered,
            "min_selected_mass": num(self.min_selected_mass),
            "max_outside_mass": num(self.max_outside_mass),
            "outside_at_most_inv_C": self.outside_at_most_inv_C,
            "entropy_floor": self.entropy_floor,
            "c0_floor": self.c0_floor,
            "floor_holds": self.floor_holds,
            "verdict": self.verdict,
        }


def tail_select(dist, C, c0):
    """Top C-1 labels by mass, the leftover tail, and the implication chain.

    Selection ties break toward the smaller label index, so reports are
    deterministic.  When the tail mass reaches c0 the tail entropy is
    bounded below by outside_mass * ln C, which needs every outside mass to
    be at most 1/C; both links are computed and reported, not assumed.
    """
    if not isinstance(C, int) or C < 2:
        raise ValueError(f"C must be an integer >= 2, got {C!r}")
    if C - 1 >= len(dist.labels):
        raise CTooLarge(
            f"C - 1 = {C - 1} >= {len(dist.labels)} labels: the whole alphabet "
            "would be selected and the tail is empty"
        )
    order = sorted(range(len(dist.labels)), key=lambda i: (-dist.p[i], i))
    chosen = sorted(order[: C - 1])
    rest = sorted(order[C - 1:])
    selected_mass = sum(dist.p[i] for i in chosen)
    outside_mass = 1 - selected_mass
    tail_entropy = -sum(
        float(dist.p[i]) * math.log(float(dist.p[i])) for i in rest if dist.p[i] > 0
    )
    min_sel = min((dist.p[i] for i in chosen), default=0)
    max_out = max((dist.p[i] for i in rest), default=0)
    inv_C = Fraction(1, C)
    bounded = max_out <= inv_C
    triggered = outside_mass >= c0_fraction(c0)
    entropy_floor = float(outside_mass) * math.log(C)
    c0_floor = float(c0_fraction(c0)) * math.log(C)
    floor_holds = tail_entropy >= entropy_floor - 1e-12
    if not triggered:
        verdict = "tail hypothesis not triggered: outside mass below c0"
    elif bounded and floor_holds:
        verdict = (
            "tail entropy at least outside_mass * ln C, hence at least c0 * ln C"
        )
    else:
        verdict = "implication chain incomplete (see computed bounds)"
    return TailSelection(
        selected=tuple(dist.labels[i] for i in chosen),
        selected_mass=selected_mass,
        outside_mass=outside_mass,
        tail_entropy=tail_entropy,
        triggered=triggered,
        min_selected_mass=min_sel,
        max_outside_mass=max_out,
        outside_at_most_inv_C=bounded,
        entropy_floor=entropy_floor,
        c0_floor=c0_floor,
        floor_holds=floor_holds,
        verdict=verdict,
    )
