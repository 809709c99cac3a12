import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fiidlab import entropy, graphs, rules
from fiidlab.entropy import EXACT, LabelDistribution, PairDistribution


def dist(*masses, labels=None):
    labels = labels or tuple(range(len(masses)))
    return LabelDistribution(tuple(labels), tuple(Fraction(m) for m in masses), EXACT)


def random_edge_law(H, seed):
    rng = random.Random(seed)
    weights = {e: rng.randrange(1, 1000) for e in H.edges()}
    return entropy.pair_from_edge_weights(H, weights)


class TestEntropy:
    def test_uniform_five(self):
        assert entropy.entropy(dist(*([Fraction(1, 5)] * 5))) == pytest.approx(
            math.log(5), abs=1e-12
        )

    def test_point_mass(self):
        assert entropy.entropy(dist(1, 0, 0)) == 0.0

    def test_half_quarter_quarter(self):
        value = entropy.entropy(dist(Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)))
        assert value == pytest.approx(1.5 * math.log(2), abs=1e-12)

    def test_invalid(self):
        with pytest.raises(entropy.InvalidDistribution):
            dist(Fraction(1, 2), Fraction(1, 4))
        with pytest.raises(entropy.InvalidDistribution):
            dist(Fraction(3, 2), Fraction(-1, 2))

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.integers(0, 1000), min_size=1, max_size=8))
    def test_bounds(self, weights):
        total = sum(weights)
        if total == 0:
            return
        d = dist(*(Fraction(w, total) for w in weights))
        h = entropy.entropy(d)
        support = sum(1 for w in weights if w)
        assert -1e-12 <= h <= math.log(support) + 1e-12


class TestConditionalEntropy:
    def test_independent_fair(self):
        probs = {(a, b): Fraction(1, 4) for a in (0, 1) for b in (0, 1)}
        pair = PairDistribution((0, 1), probs, EXACT)
        assert entropy.conditional_entropy(pair) == pytest.approx(math.log(2), abs=1e-12)

    def test_diagonal(self):
        probs = {(0, 0): Fraction(1, 2), (1, 1): Fraction(1, 2)}
        pair = PairDistribution((0, 1), probs, EXACT)
        assert entropy.conditional_entropy(pair) == pytest.approx(0.0, abs=1e-12)

    def test_chain_identity(self):
        rng = random.Random(8)
        for _ in range(20):
            w = {}
            for a in range(3):
                for b in range(a, 3):
                    x = Fraction(rng.randrange(0, 9))
                    w[(a, b)] = x
                    w[(b, a)] = x
            total = sum(w.values())
            if total == 0:
                continue
            probs = {k: v / total for k, v in w.items() if v}
            pair = PairDistribution((0, 1, 2), probs, EXACT)
            resid = (
                entropy.joint_entropy(pair)
                - entropy.entropy(pair.marginal())
                - entropy.conditional_entropy(pair)
            )
            assert abs(resid) < 1e-12

    def test_exchangeability_enforced(self):
        with pytest.raises(entropy.InvalidDistribution):
            PairDistribution((0, 1), {(0, 1): Fraction(1)}, EXACT)


class TestExactMarginals:
    def test_max_seed_vertex_law(self):
        rule = rules.builtin_rule("max_seed_independent", d=3)
        vertex, _ = entropy.exact_marginals(rule)
        assert vertex.labels == ("IN", "OUT")
        assert vertex.p == (Fraction(1, 4), Fraction(3, 4))

    def test_max_seed_pair_law(self):
        rule = rules.builtin_rule("max_seed_independent", d=3)
        _, pair = entropy.exact_marginals(rule)
        assert pair.mass("IN", "IN") == 0
        assert pair.mass("IN", "OUT") == Fraction(1, 4)
        assert pair.mass("OUT", "IN") == Fraction(1, 4)
        assert pair.mass("OUT", "OUT") == Fraction(1, 2)

    def test_constant_rule(self):
        rule = rules.builtin_rule("constant", label="v0", output_alphabet=("v0", "v1"))
        vertex, pair = entropy.exact_marginals(rule)
        assert vertex.mass("v0") == 1
        assert pair.mass("v0", "v0") == 1

    def test_exchangeable_and_consistent_across_models(self):
        cases = [
            rules.random_rule(3, 1, rules.alphabet(2), (0, 1, 2), 21),
            rules.random_rule(3, 2, rules.alphabet(2), ("a", "b"), 22),
            rules.random_rule(3, 1, rules.rank(), (0, 1, 2, 3), 23),
            rules.random_rule(3, 1, rules.hybrid(2), ("x", "y"), 24),
            rules.random_rule(3, 0, rules.alphabet(3), (0, 1), 25),
        ]
        for rule in cases:
            vertex, pair = entropy.exact_marginals(rule)
            for (a, b), x in pair.probs.items():
                assert pair.probs[(b, a)] == x
            assert pair.marginal().p == vertex.p  # exact rational equality

    def test_rank_t2_pair_over_budget(self):
        rule = rules.random_rule(3, 2, rules.rank(), (0, 1), 3)
        with pytest.raises(entropy.BudgetExceeded):
            entropy.exact_marginals(rule)


class TestMonteCarlo:
    def test_matches_exact_within_tv(self):
        rule = rules.builtin_rule("max_seed_independent", d=3)
        exact_v, _ = entropy.exact_marginals(rule)
        mc_v, _ = entropy.mc_marginals(rule, 10**6, 20240808)
        assert abs(mc_v.as_float_dict()["IN"] - 0.25) < 0.005
        assert entropy.total_variation(mc_v, exact_v) < 0.005

    def test_constant_rule_point_mass(self):
        rule = rules.builtin_rule("constant", label=0, output_alphabet=(0, 1))
        vertex, pair = entropy.mc_marginals(rule, 500, 1)
        assert vertex.as_float_dict()[0] == 1.0
        assert pair.mass(0, 0) == 1.0

    def test_deterministic(self):
        rule = rules.builtin_rule("max_seed_independent", d=3)
        a = entropy.mc_marginals(rule, 5000, 99)
        b = entropy.mc_marginals(rule, 5000, 99)
        assert a[0] == b[0] and a[1].probs == b[1].probs

    def test_tv_decreases_with_samples(self):
        rule = rules.builtin_rule("max_seed_independent", d=3)
        exact_v, _ = entropy.exact_marginals(rule)
        tvs = [
            entropy.total_variation(entropy.mc_marginals(rule, 10**k, 11)[0], exact_v)
            for k in (3, 4, 5, 6)
        ]
        assert all(a > b for a, b in zip(tvs, tvs[1:]))
        assert tvs[-1] < 0.01

    def test_generic_path_alphabet(self):
        rule = rules.random_rule(3, 1, rules.alphabet(2), (0, 1, 2), 4)
        exact_v, _ = entropy.exact_marginals(rule)
        mc_v, mc_p = entropy.mc_marginals(rule, 40_000, 5)
        assert entropy.total_variation(mc_v, exact_v) < 0.02
        for (a, b), x in mc_p.probs.items():
            assert mc_p.probs[(b, a)] == x


class TestAudit:
    def test_max_seed_numbers(self):
        rule = rules.builtin_rule("max_seed_independent", d=3)
        vertex, pair = entropy.exact_marginals(rule)
        res = entropy.audit(vertex, pair, r=3)
        assert res.report.h_vertex == pytest.approx(0.562335, abs=1e-6)
        assert res.report.h_edge == pytest.approx(1.039721, abs=1e-6)
        assert res.report.slack_edge_vertex == pytest.approx(0.289941, abs=1e-6)
        assert res.all_passed()

    def test_constant_boundary(self):
        rule = rules.builtin_rule("constant", label=0, output_alphabet=(0, 1))
        vertex, pair = entropy.exact_marginals(rule)
        res = entropy.audit(vertex, pair)
        edge_vertex = res.verdicts[0]
        assert edge_vertex.check == "edge_vertex" and edge_vertex.passed

    def test_c5_uniform_edge_law_boundary(self):
        C5 = graphs.named_graph("C5")
        weights = {e: 1 for e in C5.edges()}
        pair = entropy.pair_from_edge_weights(C5, weights)
        res = entropy.audit(pair.marginal(), pair, H=C5)
        by_check = {v.check: v for v in res.verdicts}
        assert by_check["support_in_target"].passed
        assert by_check["nbr_entropy_cap"].passed
        assert entropy.conditional_entropy(pair) == pytest.approx(math.log(2), abs=1e-9)

    def test_support_violation_detected(self):
        C5 = graphs.named_graph("C5")
        probs = {(0, 0): Fraction(1)}
        pair = PairDistribution(tuple(range(5)), probs, EXACT)
        res = entropy.audit(pair.marginal(), pair, H=C5)
        by_check = {v.check: v for v in res.verdicts}
        assert not by_check["support_in_target"].passed
        assert "nbr_entropy_cap" not in by_check

    def test_inconsistent_marginals(self):
        vertex = dist(Fraction(1, 2), Fraction(1, 2))
        probs = {(0, 0): Fraction(1)}
        pair = PairDistribution((0, 1), probs, EXACT)
        with pytest.raises(entropy.InconsistentMarginals):
            entropy.audit(vertex, pair)

    def test_chain_rule_on_exact_laws(self):
        for seed in range(6):
            rule = rules.random_rule(3, 1, rules.rank(), (0, 1, 2), 300 + seed)
            vertex, pair = entropy.exact_marginals(rule)
            res = entropy.audit(vertex, pair)
            resid = (
                res.report.h_edge
                - res.report.h_vertex
                - res.report.h_nbr_given_vertex
            )
            assert abs(resid) < 1e-9

    def test_edge_supported_laws_nbr_cap(self):
        for name, r in (("C5", 2), ("Petersen", 3), ("Heawood", 3)):
            H = graphs.named_graph(name)
            for seed in range(5):
                pair = random_edge_law(H, seed)
                res = entropy.audit(pair.marginal(), pair, H=H)
                by_check = {v.check: v for v in res.verdicts}
                assert by_check["nbr_entropy_cap"].margin >= -1e-9


class TestMinGirthConstant:
    def test_examples(self):
        assert entropy.min_girth_constant(3, 0.3) == 59050
        assert entropy.min_girth_constant(2, 0.75) == 17

    def test_big_integer_path(self):
        value = entropy.min_girth_constant(3, 0.089)
        # strictly above 3^(3000/89): check the defining inequalities
        assert (value - 1) ** 89 <= 3**3000 < value**89

    def test_string_and_fraction_inputs(self):
        assert entropy.min_girth_constant(3, "0.3") == 59050
        assert entropy.min_girth_constant(3, Fraction(3, 10)) == 59050

    def test_validation(self):
        with pytest.raises(ValueError):
            entropy.min_girth_constant(1, 0.5)
        with pytest.raises(ValueError):
            entropy.min_girth_constant(3, 1.5)

    def test_overflow_reported(self):
        with pytest.raises(entropy.Overflow):
            entropy.min_girth_constant(3, Fraction(1, 10**7))


class TestTailSelect:
    def test_uniform_four(self):
        sel = entropy.tail_select(dist(*([Fraction(1, 4)] * 4)), 3, 0.5)
        assert sel.selected == (0, 1)
        assert sel.outside_mass == Fraction(1, 2)
        assert sel.tail_entropy == pytest.approx(0.5 * math.log(4), abs=1e-12)
        assert sel.triggered and sel.floor_holds
        assert sel.c0_floor == pytest.approx(0.5 * math.log(3), abs=1e-12)

    def test_point_mass_not_triggered(self):
        sel = entropy.tail_select(dist(1, 0), 2, 0.5)
        assert sel.outside_mass == 0 and not sel.triggered
        assert "not triggered" in sel.verdict

    def test_uniform_hundred(self):
        sel = entropy.tail_select(dist(*([Fraction(1, 100)] * 100)), 11, 0.5)
        assert sel.outside_mass == Fraction(9, 10)
        assert sel.tail_entropy == pytest.approx(0.9 * math.log(100), abs=1e-12)

    def test_ties_break_by_index(self):
        sel = entropy.tail_select(
            dist(Fraction(1, 4), Fraction(1, 4), Fraction(1, 4), Fraction(1, 4),
                 labels=("w", "x", "y", "z")),
            3,
            0.1,
        )
        assert sel.selected == ("w", "x")

    def test_c_too_large(self):
        with pytest.raises(entropy.CTooLarge):
            entropy.tail_select(dist(Fraction(1, 2), Fraction(1, 2)), 3, 0.1)

    def test_outside_never_exceeds_inv_c(self):
        rng = random.Random(4)
        for _ in range(50):
            k = rng.randrange(3, 9)
            weights = [rng.randrange(1, 50) for _ in range(k)]
            total = sum(weights)
            d = dist(*(Fraction(w, total) for w in weights))
            C = rng.randrange(2, k + 1)
            sel = entropy.tail_select(d, C, 0.3)
            assert sel.outside_at_most_inv_C

    def test_tail_entropy_matches_direct_sum(self):
        rng = random.Random(5)
        for _ in range(30):
            k = rng.randrange(3, 10)
            weights = [rng.randrange(0, 50) for _ in range(k)]
            if sum(weights) == 0:
                continue
            total = sum(weights)
            d = dist(*(Fraction(w, total) for w in weights))
            C = rng.randrange(2, k + 1)
            sel = entropy.tail_select(d, C, 0.3)
            outside = [a for a in d.labels if a not in set(sel.selected)]
            direct = -sum(
                float(d.mass(a)) * math.log(float(d.mass(a)))
                for a in outside
                if d.mass(a) > 0
            )
            assert abs(sel.tail_entropy - direct) < 1e-12
