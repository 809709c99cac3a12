import random
from itertools import combinations

import pytest

from fiidlab import graphs
from fiidlab.graphs import INFINITE


def brute_alpha(G):
    """Exhaustive maximum independent set for tiny graphs."""
    best = 0
    for size in range(G.n, -1, -1):
        if size <= best:
            break
        for sub in combinations(range(G.n), size):
            if all(not G.has_edge(u, v) for u, v in combinations(sub, 2)):
                best = size
                break
    return best


def brute_chi(G):
    """Exhaustive chromatic number for tiny graphs."""
    if G.n == 0:
        return 0
    if G.m == 0:
        return 1
    for k in range(1, G.n + 1):
        colors = [0] * G.n

        def rec(v):
            if v == G.n:
                return True
            for c in range(k):
                if all(colors[w] != c for w in G.adjacency[v] if w < v):
                    colors[v] = c
                    if rec(v + 1):
                        return True
            return False

        if rec(0):
            return k
    return G.n


def random_graph(n, p, seed):
    rng = random.Random(seed)
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return graphs.build_graph(n, edges)


class TestBuildGraph:
    def test_k2(self):
        G = graphs.build_graph(2, [(0, 1)])
        assert G.n == 2 and G.m == 1 and G.has_edge(0, 1)

    def test_c5(self):
        G = graphs.build_graph(5, [(i, (i + 1) % 5) for i in range(5)])
        assert G.m == 5
        assert all(G.degree(v) == 2 for v in range(5))

    def test_loop_rejected(self):
        with pytest.raises(graphs.LoopEdge):
            graphs.build_graph(3, [(0, 0)])

    def test_duplicate_rejected(self):
        with pytest.raises(graphs.DuplicateEdge):
            graphs.build_graph(3, [(0, 1), (1, 0)])

    def test_out_of_range(self):
        with pytest.raises(graphs.VertexOutOfRange):
            graphs.build_graph(2, [(0, 2)])

    def test_adjacency_sorted_symmetric(self):
        G = graphs.build_graph(4, [(2, 0), (3, 0), (1, 3)])
        assert G.adjacency[0] == (2, 3)
        for u in range(4):
            for w in G.adjacency[u]:
                assert u in G.adjacency[w]


class TestProfile:
    def test_c5(self):
        p = graphs.profile(graphs.named_graph("C5"))
        assert p.girth == 5 and p.regular_degree == 2 and not p.bipartite

    def test_path(self):
        P4 = graphs.build_graph(4, [(0, 1), (1, 2), (2, 3)])
        p = graphs.profile(P4)
        assert p.girth == INFINITE and p.bipartite and p.connected

    def test_heawood_brute_force_confirms(self):
        H = graphs.named_graph("Heawood")
        p = graphs.profile(H)
        assert p.girth == 6 and p.regular_degree == 3
        assert graphs.girth_by_enumeration(H, max_len=7) == 6

    def test_girth_matches_enumeration_on_random_corpus(self):
        for seed in range(30):
            G = random_graph(seed % 6 + 7, 0.25, seed)
            assert graphs.girth(G) == graphs.girth_by_enumeration(G)

    def test_bipartite_implies_even_or_infinite_girth(self):
        for seed in range(40):
            G = random_graph(8, 0.3, 1000 + seed)
            p = graphs.profile(G)
            if p.bipartite:
                assert p.girth == INFINITE or p.girth % 2 == 0


class TestNamedGraphs:
    def test_c5(self):
        G = graphs.named_graph("C5")
        assert G.n == 5 and graphs.girth(G) == 5

    def test_petersen(self):
        G = graphs.named_graph("Petersen")
        p = graphs.profile(G)
        assert G.n == 10 and p.regular_degree == 3 and p.girth == 5
        assert graphs.girth_by_enumeration(G, max_len=6) == 5

    def test_mcgee(self):
        G = graphs.named_graph("McGee")
        p = graphs.profile(G)
        assert G.n == 24 and p.regular_degree == 3 and p.girth == 7
        assert graphs.girth_by_enumeration(G, max_len=8) == 7

    def test_unknown(self):
        with pytest.raises(graphs.UnknownName):
            graphs.named_graph("Kneser")

    def test_case_insensitive(self):
        assert graphs.named_graph("petersen").n == 10


def on_short_cycle(G, v, L):
    """Exact test for a cycle of length <= L through v, by path DFS."""
    adj = G.adjacency
    on_path = {v}

    def dfs(x, edges):
        if edges >= 2 and v in adj[x]:
            return True
        if edges == L - 1:
            return False
        for w in adj[x]:
            if w not in on_path:
                on_path.add(w)
                if dfs(w, edges + 1):
                    return True
                on_path.remove(w)
        return False

    return dfs(v, 0)


class TestRandomRegular:
    def test_shape(self):
        G = graphs.random_regular(100, 3, 7)
        assert G.m == 150
        assert all(G.degree(v) == 3 for v in range(100))

    def test_parity(self):
        with pytest.raises(graphs.ParityError):
            graphs.random_regular(5, 3, 1)

    def test_deterministic(self):
        a = graphs.random_regular(60, 3, 42)
        b = graphs.random_regular(60, 3, 42)
        assert a == b
        c = graphs.random_regular(60, 3, 43)
        assert a != c

    def test_short_cycle_fraction_small(self):
        # vertices on a cycle of length <= 6 are rare at n = 10^4
        for seed in (1, 2, 3):
            G = graphs.random_regular(10_000, 3, seed)
            hits = sum(1 for v in range(G.n) if on_short_cycle(G, v, 6))
            assert hits / G.n < 0.02


class TestInducedTwoColoring:
    def test_path_in_c5(self):
        col = graphs.induced_two_coloring(graphs.named_graph("C5"), {0, 1, 2})
        assert col == {0: "A", 1: "B", 2: "A"}

    def test_whole_cycle_fails(self):
        with pytest.raises(graphs.InducedCycle) as exc:
            graphs.induced_two_coloring(graphs.named_graph("C5"), range(5))
        cycle = exc.value.cycle
        assert len(cycle) == 5 and set(cycle) == set(range(5))

    def test_all_small_subsets_of_petersen(self):
        # any 4 vertices sit below the girth, so the induced graph is a forest
        G = graphs.named_graph("Petersen")
        for sub in combinations(range(10), 4):
            col = graphs.induced_two_coloring(G, sub)
            assert set(col) == set(sub)
            for u, v in combinations(sub, 2):
                if G.has_edge(u, v):
                    assert col[u] != col[v]

    def test_below_girth_subsets_acyclic(self):
        for seed in range(10):
            G = random_graph(9, 0.3, 77 + seed)
            g = graphs.girth(G)
            if g == INFINITE or g > 6:
                continue
            for sub in combinations(range(G.n), int(g) - 1):
                graphs.induced_two_coloring(G, sub)  # must not raise


class TestExactInvariants:
    def test_c5(self):
        assert graphs.exact_invariants(graphs.named_graph("C5")) == (2, 3)

    def test_k4(self):
        assert graphs.exact_invariants(graphs.named_graph("K4")) == (1, 4)

    def test_petersen(self):
        G = graphs.named_graph("Petersen")
        assert graphs.exact_invariants(G) == (4, 3)
        assert brute_alpha(G) == 4

    def test_too_large(self):
        G = graphs.build_graph(41, [])
        with pytest.raises(graphs.TooLarge):
            graphs.exact_invariants(G)

    def test_against_brute_force(self):
        for seed in range(12):
            G = random_graph(9, 0.35, 500 + seed)
            alpha, chi = graphs.exact_invariants(G)
            assert alpha == brute_alpha(G)
            assert chi == brute_chi(G)
            assert chi * alpha >= G.n  # chi >= n / alpha


class TestFileFormat:
    def test_round_trip(self, tmp_path):
        G = graphs.named_graph("Petersen")
        path = tmp_path / "p.graph"
        graphs.write_graph(G, path)
        assert graphs.read_graph(path) == G

    def test_sorted_output(self, tmp_path):
        G = graphs.build_graph(4, [(3, 2), (1, 0), (0, 2)])
        text = graphs.graph_to_text(G)
        assert text == "4 3\n0 1\n0 2\n2 3\n"

    def test_bad_header(self):
        with pytest.raises(ValueError):
            graphs.graph_from_text("3\n0 1\n")
