import json
import math
from fractions import Fraction

import pytest

from fiidlab import entropy, graphs, rules, simulate


MAX_SEED = rules.builtin_rule("max_seed_independent", d=3)
PETERSEN = graphs.named_graph("Petersen")
HEAWOOD = graphs.named_graph("Heawood")


def heawood_uniform_edge_law():
    weights = {e: 1 for e in HEAWOOD.edges()}
    pair = entropy.pair_from_edge_weights(HEAWOOD, weights)
    return pair.marginal(), pair


class TestRunOnGraph:
    def test_constant_rule_covers_everything(self):
        rule = rules.builtin_rule("constant", label=0, output_alphabet=(0, 1))
        G = graphs.named_graph("C5")
        labeling, report = simulate.run_on_graph(rule, G, 3)
        assert report.covered_fraction == 1.0
        assert len(labeling) == 5
        assert report.histogram == {0: 5}

    def test_triangle_vertices_uncovered(self):
        # K4 minus an edge: every vertex lies on a 3-cycle
        G = graphs.build_graph(4, [(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
        labeling, report = simulate.run_on_graph(MAX_SEED, G, 3)
        assert report.covered == 0 and labeling == {}

    def test_degree_mismatch(self):
        G = graphs.build_graph(5, [(0, i) for i in range(1, 5)])
        with pytest.raises(simulate.DegreeMismatch):
            simulate.run_on_graph(MAX_SEED, G, 1)

    def test_max_seed_on_random_regular(self):
        G = graphs.random_regular(10_000, 3, 11)
        labeling, report = simulate.run_on_graph(MAX_SEED, G, 5)
        stats = report.independent_set
        assert abs(stats["fraction"] - 0.25) < 0.01
        assert stats["adjacent_in_in"] == 0
        assert report.covered_fraction > 0.99
        # the independent set really is independent
        for u, w in G.edges():
            assert not (labeling.get(u) == "IN" and labeling.get(w) == "IN")

    def test_deterministic(self):
        G = graphs.random_regular(500, 3, 2)
        a_lab, a_rep = simulate.run_on_graph(MAX_SEED, G, 7)
        b_lab, b_rep = simulate.run_on_graph(MAX_SEED, G, 7)
        assert a_lab == b_lab
        assert json.dumps(a_rep.to_json_dict()) == json.dumps(b_rep.to_json_dict())

    def test_tree_marginal_agreement(self):
        G = graphs.random_regular(10_000, 3, 13)
        _, report = simulate.run_on_graph(MAX_SEED, G, 17)
        exact_v, _ = entropy.exact_marginals(MAX_SEED)
        empirical = {
            k: v / report.covered for k, v in report.histogram.items()
        }
        tv = 0.5 * sum(
            abs(empirical.get(a, 0.0) - float(exact_v.mass(a))) for a in ("IN", "OUT")
        )
        assert tv < 0.02

    def test_violation_stats_against_target(self):
        recoded = rules.recode_outputs(
            MAX_SEED, {"IN": 0, "OUT": 1}, output_alphabet=tuple(range(10))
        )
        G = graphs.random_regular(2000, 3, 3)
        _, report = simulate.run_on_graph(recoded, G, 9, target=PETERSEN)
        assert report.covered_edges > 0
        # (OUT, OUT) edges recode to the non-edge (1, 1), about half of them
        assert 0.3 < report.violating_edge_fraction < 0.7

    def test_alphabet_rule_runs(self):
        rule = rules.random_rule(3, 1, rules.alphabet(2), ("a", "b"), 6)
        G = graphs.random_regular(500, 3, 4)
        labeling, report = simulate.run_on_graph(rule, G, 8)
        assert report.covered == len(labeling) > 0
        assert set(report.histogram) <= {"a", "b"}

    def test_seed_collisions_counted(self):
        G = graphs.random_regular(100, 3, 5)
        _, report = simulate.run_on_graph(MAX_SEED, G, 6)
        assert report.seed_collisions == 0  # 64-bit doubles, 100 draws


class TestPipeline:
    def test_constant_rule_refuted_at_support(self):
        rule = rules.builtin_rule("constant", label=0, output_alphabet=tuple(range(10)))
        report = simulate.theorem_pipeline(rule, PETERSEN, 0.089, 5)
        assert report.classification == "refuted at step 1: not a homomorphism (support)"
        assert report.step(1).passed is False
        assert (0, 0) in report.step(1).data["violating_pairs"]

    def test_recoded_max_seed_refuted_at_support(self):
        recoded = rules.recode_outputs(
            MAX_SEED, {"IN": 0, "OUT": 1}, output_alphabet=tuple(range(10))
        )
        report = simulate.theorem_pipeline(recoded, PETERSEN, 0.089, 5)
        assert report.step(1).passed is False
        assert report.step(1).data["violating_mass"] == pytest.approx(0.5, abs=1e-12)
        assert report.classification.startswith("refuted at step 1")

    def test_heawood_synthetic_inconclusive_branch(self):
        vertex, pair = heawood_uniform_edge_law()
        report = simulate.pipeline_from_laws(vertex, pair, HEAWOOD, 0.089, 5)
        assert report.step(1).passed and report.step(2).passed
        assert report.step(2).data["h_vertex"] == pytest.approx(math.log(14), abs=1e-9)
        assert report.step(3).data["outside_mass"] == Fraction(10, 14)
        assert report.step(3).passed is False  # outside mass far above c0
        assert report.step(4).passed and report.step(4).data["guaranteed_by_girth"]
        assert report.step(5).data["domain_mass"] == Fraction(4, 14)
        assert report.step(5).passed is False
        assert report.classification == "no refutation at these parameters"
        assert report.hypothesis_weakened  # C=5 is far below the girth constant

    def test_pipeline_coherence_domain_mass(self):
        vertex, pair = heawood_uniform_edge_law()
        report = simulate.pipeline_from_laws(vertex, pair, HEAWOOD, 0.089, 5)
        S = report.step(3).data["selected"]
        assert report.step(5).data["domain_mass"] == sum(vertex.mass(a) for a in S)

    def test_refuted_when_domain_large(self):
        # inject a law concentrated on a single Heawood edge: S captures all
        # mass, H[S] is acyclic, and the 2-coloring bound bites
        probs = {(0, 1): Fraction(1, 2), (1, 0): Fraction(1, 2)}
        pair = entropy.PairDistribution(tuple(range(14)), probs, entropy.EXACT)
        report = simulate.pipeline_from_laws(pair.marginal(), pair, HEAWOOD, 0.089, 5)
        assert report.step(1).passed
        assert report.step(5).passed
        assert report.classification.startswith("refuted at step 5")

    def test_rank_rules_always_fail_step_one(self):
        for seed in range(5):
            rule = rules.random_rule(3, 1, rules.rank(), tuple(range(5)), 40 + seed)
            report = simulate.theorem_pipeline(
                rule, graphs.named_graph("C5"), 0.089, 3
            )
            assert report.classification.startswith("refuted at step 1")

    def test_mc_mode(self):
        recoded = rules.recode_outputs(
            MAX_SEED, {"IN": 0, "OUT": 1}, output_alphabet=tuple(range(10))
        )
        report = simulate.theorem_pipeline(
            recoded, PETERSEN, 0.089, 5, mode="mc", samples=20_000, rng_seed=3
        )
        assert report.marginal_mode == "mc:20000"
        assert report.classification.startswith("refuted at step 1")

    def test_requires_regular_target(self):
        path = graphs.build_graph(3, [(0, 1), (1, 2)])
        rule = rules.builtin_rule("constant", label=0, output_alphabet=(0, 1, 2))
        with pytest.raises(ValueError):
            simulate.theorem_pipeline(rule, path, 0.089, 2)

    def test_alphabet_must_match_target(self):
        with pytest.raises(ValueError):
            simulate.theorem_pipeline(MAX_SEED, PETERSEN, 0.089, 5)

    def test_json_round_trip(self):
        vertex, pair = heawood_uniform_edge_law()
        report = simulate.pipeline_from_laws(vertex, pair, HEAWOOD, 0.089, 5)
        payload = json.loads(json.dumps(report.to_json_dict()))
        assert payload["classification"] == report.classification
        assert payload["steps"][2]["data"]["outside_mass"]["exact"] == "5/7"
