"""Search for homomorphism rules into a finite target graph.

A rule is a homomorphism rule when, for every seed configuration of the
edge ball, the two endpoint outputs form an edge of the target.  The checker
scans configurations exactly when the space fits the budget and falls back
to sampled falsification otherwise; the search enumerates whole rule tables
in mixed-radix order over the canonical balls.

Finite-alphabet seeds admit a shortcut: on the all-equal-tags configuration
both endpoints see identical canonical balls, so every rule colors some
edge monochromatically and no rule maps into a loopless target.  The
certificate for that argument is replayable against any candidate rule.

Every exhaustion result is relative to the searched finite-radius class;
outcome reports carry that caveat verbatim.
"""

import random
from dataclasses import dataclass, field

from . import rules
from .rules import BudgetExceeded


def class_caveat(d, t, model):
    return (
        f"exhaustion covers only finite-radius rules with d={d}, t={t}, "
        f"model={model}; rules of larger radius or other seed models are not excluded"
    )


@dataclass(frozen=True)
class ViolationWitness:
    """An edge-ball seed configuration on which a rule outputs a non-edge."""

    d: int
    t: int
    model: rules.SeedModel
    config: tuple
    outputs: tuple
    non_edge: tuple


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    exact: bool
    samples_checked: int | None
    witness: ViolationWitness | None

    @property
    def verdict(self):
        if not self.passed:
            return "violation found"
        if self.exact:
            return "homomorphism rule (exact scan)"
        return f"no violation found in {self.samples_checked} samples"


def _witness_from_config(rule, layout, config, outputs):
    return ViolationWitness(
        d=rule.d,
        t=rule.t,
        model=rule.model,
        config=tuple(config),
        outputs=tuple(outputs),
        non_edge=tuple(outputs),
    )


def _require_target_alphabet(rule, H):
    if set(rule.output_alphabet) != set(range(H.n)):
        raise ValueError(
            "rule output alphabet must equal the target vertex set 0..n-1"
        )


def _random_config(layout, model, rng):
    size = layout.size
    if model.kind == "alphabet":
        return tuple(rng.randrange(model.q) for _ in range(size))
    if model.kind == "rank":
        ranks = list(range(1, size + 1))
        rng.shuffle(ranks)
        return tuple(ranks)
    ranks = list(range(1, size + 1))
    rng.shuffle(ranks)
    return tuple((r, rng.randrange(model.q)) for r in ranks)


def is_homomorphism_rule(rule, H, samples=100_000, rng_seed=0):
    """Exact edge-ball scan in lexicographic order, or sampled falsification.

    Returns a CheckResult; a failed exact scan carries the lexicographically
    first violating configuration as witness.
    """
    _require_target_alphabet(rule, H)
    layout = rules.edge_ball_layout(rule.d, rule.t)
    try:
        rules.check_edge_budget(rule.d, rule.t, rule.model)
        exact = True
    except BudgetExceeded:
        exact = False
    if exact:
        for config in rules.edge_configs(layout, rule.model):
            cu, cv = rules.endpoint_codes(layout, rule.model, config)
            x, y = rule.table[cu], rule.table[cv]
            if not H.has_edge(x, y):
                return CheckResult(
                    passed=False,
                    exact=True,
                    samples_checked=None,
                    witness=_witness_from_config(rule, layout, config, (x, y)),
                )
        return CheckResult(passed=True, exact=True, samples_checked=None, witness=None)
    rng = random.Random(rng_seed)
    for _ in range(samples):
        config = _random_config(layout, rule.model, rng)
        cu, cv = rules.endpoint_codes(layout, rule.model, config)
        x, y = rule.table[cu], rule.table[cv]
        if not H.has_edge(x, y):
            return CheckResult(
                passed=False,
                exact=False,
                samples_checked=None,
                witness=_witness_from_config(rule, layout, config, (x, y)),
            )
    return CheckResult(passed=True, exact=False, samples_checked=samples, witness=None)


def replay_witness(rule, H, witness):
    """True when re-evaluating the rule on the witness reproduces the
    stored violating pair."""
    layout = rules.edge_ball_layout(witness.d, witness.t)
    cu, cv = rules.endpoint_codes(layout, witness.model, witness.config)
    x, y = rule.table[cu], rule.table[cv]
    return (x, y) == witness.outputs and not H.has_edge(x, y)


# ---------------------------------------------------------------------------
# the constant-seed collapse certificate


@dataclass(frozen=True)
class ConstantSeedCertificate:
    d: int
    t: int
    q: int
    config: tuple
    reasoning: tuple


def alphabet_impossibility_certificate(H, d, t, q):
    """Certificate that no alphabet-model rule is a homomorphism rule into a
    loopless target: the all-zero-tags edge-ball configuration."""
    if any(H.has_edge(v, v) for v in range(H.n)):
        raise ValueError("target must be loopless")
    layout = rules.edge_ball_layout(d, t)
    return ConstantSeedCertificate(
        d=d,
        t=t,
        q=q,
        config=tuple(0 for _ in range(layout.size)),
        reasoning=(
            "all tags equal, so the two endpoint balls have identical canonical codes",
            "equal canonical codes force equal outputs at both endpoints",
            "the target has no loops, so the monochromatic pair is not an edge",
        ),
    )


def replay_certificate(cert, rule, H):
    """Run the certificate configuration against a candidate alphabet rule;
    returns the resulting ViolationWitness."""
    if rule.model != rules.alphabet(cert.q) or (rule.d, rule.t) != (cert.d, cert.t):
        raise ValueError("rule does not match the certificate class")
    layout = rules.edge_ball_layout(cert.d, cert.t)
    cu, cv = rules.endpoint_codes(layout, rule.model, cert.config)
    x, y = rule.table[cu], rule.table[cv]
    if x != y or H.has_edge(x, y):
        raise AssertionError("certificate replay did not produce a monochromatic non-edge")
    return ViolationWitness(
        d=cert.d,
        t=cert.t,
        model=rule.model,
        config=cert.config,
        outputs=(x, y),
        non_edge=(x, y),
    )


# ---------------------------------------------------------------------------
# exhaustive search over rule tables


@dataclass
class SearchBudget:
    max_rules: int = 1_000_000
    witness_cap: int = 1000
    rng_seed: int = 0


@dataclass
class SearchOutcome:
    kind: str  # Found | ExhaustedNone | ImpossibleByConstantSeeds | BudgetExceeded
    rules_examined: int
    rule: object = None
    witnesses: list = field(default_factory=list)  # (rule_index, ViolationWitness)
    caveat: str = ""
    resume_cursor: int | None = None
    certificate: ConstantSeedCertificate | None = None

    def to_json_dict(self, witness_limit=10):
        sample = [
            {
                "rule_index": idx,
                "config": [list(c) if isinstance(c, tuple) else c for c in w.config],
                "outputs": list(w.outputs),
                "non_edge": list(w.non_edge),
            }
            for idx, w in self.witnesses[:witness_limit]
        ]
        return {
            "kind": self.kind,
            "rules_examined": self.rules_examined,
            "witnesses_stored": len(self.witnesses),
            "witness_sample": sample,
            "class_caveat": self.caveat,
            "resume_cursor": self.resume_cursor,
            "certificate": None
            if self.certificate is None
            else {
                "d": self.certificate.d,
                "t": self.certificate.t,
                "q": self.certificate.q,
                "config": list(self.certificate.config),
                "reasoning": list(self.certificate.reasoning),
            },
        }


def rule_table_at(balls, output_alphabet, index):
    """Rule table number `index` in mixed-radix order: ball 0 (smallest
    canonical code) is the most significant digit."""
    L = len(output_alphabet)
    digits = []
    x = index
    for _ in balls:
        digits.append(x % L)
        x //= L
    if x:
        raise ValueError(f"rule index {index} out of range")
    digits.reverse()
    return {b.code: output_alphabet[digit] for b, digit in zip(balls, digits)}


def rule_at_cursor(d, t, model, output_alphabet, index):
    balls = rules.enumerate_canonical_balls(d, t, model)
    table = rule_table_at(balls, tuple(output_alphabet), index)
    return rules.make_rule(d, t, model, tuple(output_alphabet), table)


def search(H, d, t, model, budget=None, force_enumeration=False):
    """Scan the whole rule class for a homomorphism rule into H.

    Alphabet-model classes against loopless targets short-circuit to
    ImpossibleByConstantSeeds without enumeration (disable with
    force_enumeration to exercise the generic scan).  Refuted rules each
    get a witness; a reservoir sample of them is kept, and any rule's
    witness is reconstructible from its index via `rule_at_cursor`.
    """
    budget = budget or SearchBudget()
    caveat = class_caveat(d, t, model)
    loopless = not any(H.has_edge(v, v) for v in range(H.n))

    if model.kind == "alphabet" and loopless and not force_enumeration:
        cert = alphabet_impossibility_certificate(H, d, t, model.q)
        return SearchOutcome(
            kind="ImpossibleByConstantSeeds",
            rules_examined=0,
            caveat=caveat,
            certificate=cert,
        )

    try:
        balls = rules.enumerate_canonical_balls(d, t, model)
        pair_table = rules.edge_pair_table(d, t, model)
    except BudgetExceeded:
        return SearchOutcome(
            kind="BudgetExceeded",
            rules_examined=0,
            caveat=caveat,
            resume_cursor=0,
        )

    labels = tuple(range(H.n))
    L = len(labels)
    total = L ** len(balls)
    if total > budget.max_rules:
        return SearchOutcome(
            kind="BudgetExceeded",
            rules_examined=0,
            caveat=caveat,
            resume_cursor=0,
        )

    ball_index = {b.code: i for i, b in enumerate(balls)}
    # pair entries by first lexicographic occurrence; scanning them in this
    # order makes the first violating entry the lexicographically first
    # violating configuration
    entries = [
        (ball_index[cu], ball_index[cv], cfg) for _, cu, cv, cfg in pair_table.order
    ]

    rng = random.Random(budget.rng_seed)
    witnesses = []
    refuted = 0
    k = len(balls)
    layout = rules.edge_ball_layout(d, t)
    for index in range(total):
        x = index
        digits = [0] * k
        for j in range(k - 1, -1, -1):
            digits[j] = x % L
            x //= L
        outputs = [labels[digit] for digit in digits]
        witness = None
        for iu, iv, cfg in entries:
            a, b = outputs[iu], outputs[iv]
            if not H.has_edge(a, b):
                witness = ViolationWitness(
                    d=d,
                    t=t,
                    model=model,
                    config=cfg,
                    outputs=(a, b),
                    non_edge=(a, b),
                )
                break
        if witness is None:
            rule = rule_at_cursor(d, t, model, labels, index)
            check = is_homomorphism_rule(rule, H)
            if check.passed:
                return SearchOutcome(
                    kind="Found",
                    rules_examined=index + 1,
                    rule=rule,
                    witnesses=witnesses,
                    caveat=caveat,
                )
            witness = check.witness
        # reservoir sample of refuted rules, deterministic per budget seed
        refuted += 1
        if len(witnesses) < budget.witness_cap:
            witnesses.append((index, witness))
        else:
            j = rng.randrange(refuted)
            if j < budget.witness_cap:
                witnesses[j] = (index, witness)

    return SearchOutcome(
        kind="ExhaustedNone",
        rules_examined=total,
        witnesses=witnesses,
        caveat=caveat,
    )
