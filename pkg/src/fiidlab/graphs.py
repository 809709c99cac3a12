"""Finite simple graphs: construction, structural invariants, generators,
forest 2-colorings, and exact small-graph independence/chromatic numbers.

Vertices are the integers 0..n-1.  Graphs are immutable after construction
and safe to share between threads.  The girth of a forest is ``math.inf``,
never a sentinel integer, so comparisons against cycle-length thresholds
behave correctly.
"""

import math
import random
from collections import deque
from dataclasses import dataclass
from functools import cached_property

INFINITE = math.inf

EXACT_INVARIANT_MAX_N = 40


class GraphError(Exception):
    """Base class for graph construction and query errors."""


class LoopEdge(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class VertexOutOfRange(GraphError):
    pass


class ParityError(GraphError):
    pass


class RetryBudgetExceeded(GraphError):
    pass


class UnknownName(GraphError):
    pass


class TooLarge(GraphError):
    pass


class InducedCycle(GraphError):
    """Raised when a supposedly acyclic induced subgraph contains a cycle."""

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__(f"induced subgraph contains a cycle: {self.cycle}")


@dataclass(frozen=True)
class FiniteGraph:
    """Simple undirected graph with sorted per-vertex neighbor tuples."""

    n: int
    adjacency: tuple
    m: int

    def degree(self, v):
        return len(self.adjacency[v])

    def neighbors(self, v):
        return self.adjacency[v]

    def max_degree(self):
        return max((len(a) for a in self.adjacency), default=0)

    def edges(self):
        """Yield edges as (u, v) with u < v, lexicographically sorted."""
        for u in range(self.n):
            for w in self.adjacency[u]:
                if w > u:
                    yield (u, w)

    @cached_property
    def edge_set(self):
        # both orientations, so has_edge is a single set lookup
        return frozenset(
            (u, w) for u in range(self.n) for w in self.adjacency[u]
        )

    def has_edge(self, u, v):
        return (u, v) in self.edge_set


def build_graph(n, edges):
    """Build a FiniteGraph from an edge list; duplicates and loops are errors."""
    if n < 0:
        raise VertexOutOfRange(f"negative vertex count {n}")
    adj = [[] for _ in range(n)]
    seen = set()
    for u, v in edges:
        if not (0 <= u < n) or not (0 <= v < n):
            raise VertexOutOfRange(f"edge ({u}, {v}) outside 0..{n - 1}")
        if u == v:
            raise LoopEdge(f"loop at vertex {u}")
        key = (u, v) if u < v else (v, u)
        if key in seen:
            raise DuplicateEdge(f"edge {key} given twice")
        seen.add(key)
        adj[u].append(v)
        adj[v].append(u)
    return FiniteGraph(
        n=n,
        adjacency=tuple(tuple(sorted(a)) for a in adj),
        m=len(seen),
    )


# ---------------------------------------------------------------------------
# text format: line 1 "n m", then m lines "u v", sorted lexicographically


def graph_to_text(G):
    lines = [f"{G.n} {G.m}"]
    lines.extend(f"{u} {v}" for u, v in G.edges())
    return "\n".join(lines) + "\n"


def graph_from_text(text):
    rows = [ln for ln in text.splitlines() if ln.strip()]
    if not rows:
        raise ValueError("empty graph file")
    head = rows[0].split()
    if len(head) != 2:
        raise ValueError(f"bad header {rows[0]!r}, expected 'n m'")
    n, m = int(head[0]), int(head[1])
    if len(rows) - 1 != m:
        raise ValueError(f"header says m={m} but {len(rows) - 1} edge lines found")
    edges = []
    for ln in rows[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"bad edge line {ln!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return build_graph(n, edges)


def write_graph(G, path):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(graph_to_text(G))


def read_graph(path):
    with open(path, "r", encoding="ascii") as fh:
        return graph_from_text(fh.read())


# ---------------------------------------------------------------------------
# named graphs (canonical numberings documented in README)


def _complete(k):
    return build_graph(k, [(i, j) for i in range(k) for j in range(i + 1, k)])


def _cycle(k):
    return build_graph(k, [(i, (i + 1) % k) for i in range(k)])


def _petersen():
    # 0..4 outer cycle, 5..9 inner 5-cycle with step 2, spokes i -- i+5
    edges = []
    for i in range(5):
        edges.append((i, (i + 1) % 5))
        edges.append((i, i + 5))
        edges.append((5 + i, 5 + (i + 2) % 5))
    return build_graph(10, edges)


def _lcf(rotor, repeats):
    # Hamiltonian cycle 0..n-1 plus chords i -- i + rotor[i mod len(rotor)]
    n = len(rotor) * repeats
    pairs = {(i, (i + 1) % n) if i < (i + 1) % n else ((i + 1) % n, i) for i in range(n)}
    for i in range(n):
        j = (i + rotor[i % len(rotor)]) % n
        pairs.add((i, j) if i < j else (j, i))
    return build_graph(n, sorted(pairs))


_NAMED = {
    "K2": lambda: _complete(2),
    "K3": lambda: _complete(3),
    "K4": lambda: _complete(4),
    "C5": lambda: _cycle(5),
    "Petersen": _petersen,
    "Heawood": lambda: _lcf([5, -5], 7),
    "McGee": lambda: _lcf([12, 7, -7], 8),
}


def named_graph(name):
    """Return a standard graph by name with its fixed, documented numbering."""
    for key, builder in _NAMED.items():
        if key.lower() == str(name).lower():
            return builder()
    raise UnknownName(f"unknown graph name {name!r}, expected one of {sorted(_NAMED)}")


def named_graph_names():
    return tuple(_NAMED)


# ---------------------------------------------------------------------------
# structural profile


@dataclass(frozen=True)
class GraphProfile:
    girth: float
    regular_degree: int | None
    bipartite: bool
    connected: bool


def _two_color_components(G):
    """BFS 2-coloring attempt. Returns (bipartite, component_count)."""
    n = G.n
    color = [-1] * n
    bipartite = True
    components = 0
    for root in range(n):
        if color[root] != -1:
            continue
        components += 1
        color[root] = 0
        q = deque([root])
        while q:
            x = q.popleft()
            for w in G.adjacency[x]:
                if color[w] == -1:
                    color[w] = color[x] ^ 1
                    q.append(w)
                elif color[w] == color[x]:
                    bipartite = False
    return bipartite, components


def girth(G):
    """Exact girth via per-root truncated BFS; ``INFINITE`` for forests."""
    n = G.n
    if n == 0 or G.m == 0:
        return INFINITE
    _, components = _two_color_components(G)
    if G.m == n - components:
        return INFINITE
    best = n + 1
    dist = [0] * n
    par = [-1] * n
    seen = [0] * n
    stamp = 0
    adj = G.adjacency
    for root in range(n):
        stamp += 1
        seen[root] = stamp
        dist[root] = 0
        par[root] = -1
        q = deque([root])
        while q:
            x = q.popleft()
            dx = dist[x]
            # any further candidate from depth dx has length >= 2*dx
            if 2 * dx >= best:
                break
            for w in adj[x]:
                if seen[w] != stamp:
                    seen[w] = stamp
                    dist[w] = dx + 1
                    par[w] = x
                    q.append(w)
                elif w != par[x]:
                    c = dx + dist[w] + 1
                    if c < best:
                        best = c
    return best


def girth_by_enumeration(G, max_len=None):
    """Brute-force girth oracle: search for a simple cycle of each exact
    length starting from 3.  Independent of the BFS route; intended for
    cross-checks on small graphs."""
    n = G.n
    limit = min(max_len if max_len is not None else n, n)
    adj = G.adjacency
    for target in range(3, limit + 1):
        for s in range(n):
            on_path = {s}

            def dfs(v, depth):
                if depth == target:
                    return s in adj[v]
                for w in adj[v]:
                    if w > s and w not in on_path:
                        on_path.add(w)
                        if dfs(w, depth + 1):
                            return True
                        on_path.remove(w)
                return False

            if dfs(s, 1):
                return target
    return INFINITE


def profile(G):
    """Girth, regularity, bipartiteness, and connectivity of G."""
    bipartite, components = _two_color_components(G)
    degs = {len(a) for a in G.adjacency}
    regular = degs.pop() if len(degs) == 1 else None
    return GraphProfile(
        girth=girth(G),
        regular_degree=regular,
        bipartite=bipartite,
        connected=components <= 1,
    )


# ---------------------------------------------------------------------------
# random regular graphs (configuration model, whole-graph rejection)


def random_regular(n, d, rng_seed, max_attempts=2000):
    """Uniform-ish simple d-regular graph via stub pairing with rejection.

    The whole pairing is resampled whenever a loop or repeated edge shows
    up, so the result is always simple.  Deterministic per rng_seed.
    """
    if d < 0 or d >= n:
        raise ValueError(f"need 0 <= d < n, got d={d}, n={n}")
    if (n * d) % 2 != 0:
        raise ParityError(f"n*d = {n * d} is odd, no {d}-regular graph on {n} vertices")
    rng = random.Random(rng_seed)
    stubs_master = [v for v in range(n) for _ in range(d)]
    for _ in range(max_attempts):
        stubs = stubs_master[:]
        rng.shuffle(stubs)
        edges = set()
        ok = True
        it = iter(stubs)
        for u, v in zip(it, it):
            if u == v:
                ok = False
                break
            key = (u, v) if u < v else (v, u)
            if key in edges:
                ok = False
                break
            edges.add(key)
        if ok:
            return build_graph(n, sorted(edges))
    raise RetryBudgetExceeded(
        f"no simple pairing found in {max_attempts} attempts (n={n}, d={d})"
    )


# ---------------------------------------------------------------------------
# 2-coloring of acyclic induced subgraphs


def induced_two_coloring(G, S):
    """Proper 2-coloring {A, B} of G[S] when acyclic, else InducedCycle.

    Each component is BFS-alternated from its smallest vertex, which is
    colored "A"; the output is therefore deterministic.
    """
    members = sorted(set(S))
    for v in members:
        if not (0 <= v < G.n):
            raise VertexOutOfRange(f"vertex {v} outside 0..{G.n - 1}")
    in_S = set(members)
    colors = {}
    parent = {}
    for root in members:
        if root in colors:
            continue
        colors[root] = "A"
        parent[root] = -1
        q = deque([root])
        while q:
            x = q.popleft()
            nxt = "B" if colors[x] == "A" else "A"
            for w in G.adjacency[x]:
                if w not in in_S:
                    continue
                if w not in colors:
                    colors[w] = nxt
                    parent[w] = x
                    q.append(w)
                elif w != parent[x]:
                    raise InducedCycle(_witness_cycle(parent, x, w))
    return colors


def _witness_cycle(parent, x, y):
    """Cycle through the non-tree edge (x, y) using BFS parent pointers."""
    ax = [x]
    while parent[ax[-1]] != -1:
        ax.append(parent[ax[-1]])
    ay = [y]
    while parent[ay[-1]] != -1:
        ay.append(parent[ay[-1]])
    common = set(ax) & set(ay)
    ix = next(i for i, v in enumerate(ax) if v in common)
    iy = next(i for i, v in enumerate(ay) if v in common)
    # x .. lca .. y, closed by the edge y--x
    return ax[: ix + 1] + ay[:iy][::-1]


# ---------------------------------------------------------------------------
# exact independence and chromatic numbers (n <= 40)


def independence_number(G):
    """Exact maximum independent set size by branch and bound on bitmasks."""
    n = G.n
    if n > EXACT_INVARIANT_MAX_N:
        raise TooLarge(f"exact search capped at n={EXACT_INVARIANT_MAX_N}, got {n}")
    if n == 0:
        return 0
    nbr = [0] * n
    for v in range(n):
        for w in G.adjacency[v]:
            nbr[v] |= 1 << w

    # greedy warm start: repeatedly take a minimum-degree vertex
    avail = (1 << n) - 1
    best = 0
    while avail:
        v = min(
            (u for u in range(n) if avail >> u & 1),
            key=lambda u: (nbr[u] & avail).bit_count(),
        )
        best += 1
        avail &= ~(nbr[v] | (1 << v))

    def sparse_value(P):
        # exact value when every vertex has at most 2 neighbors inside P:
        # components are paths (ceil(k/2)) or cycles (floor(k/2))
        total = 0
        rest = P
        while rest:
            root = (rest & -rest).bit_length() - 1
            comp = 1 << root
            frontier = [root]
            k, e2 = 0, 0
            while frontier:
                x = frontier.pop()
                k += 1
                inside = nbr[x] & P
                e2 += inside.bit_count()
                new = inside & ~comp
                while new:
                    w = (new & -new).bit_length() - 1
                    comp |= 1 << w
                    new &= new - 1
                    frontier.append(w)
            total += k // 2 if e2 // 2 == k else (k + 1) // 2
            rest &= ~comp
        return total

    def expand(P, size):
        nonlocal best
        if size + P.bit_count() <= best:
            return
        if P == 0:
            best = max(best, size)
            return
        # pivot on maximum internal degree; if that is <= 2 close exactly
        pivot, pdeg = -1, -1
        scan = P
        while scan:
            v = (scan & -scan).bit_length() - 1
            scan &= scan - 1
            dv = (nbr[v] & P).bit_count()
            if dv > pdeg:
                pivot, pdeg = v, dv
        if pdeg <= 2:
            val = size + sparse_value(P)
            if val > best:
                best = val
            return
        expand(P & ~(nbr[pivot] | (1 << pivot)), size + 1)
        expand(P & ~(1 << pivot), size)

    expand((1 << n) - 1, 0)
    return best


def _greedy_clique(G):
    best = 0
    for start in range(G.n):
        clique = [start]
        for w in sorted(range(G.n), key=lambda u: -len(G.adjacency[u])):
            if w != start and all(G.has_edge(w, c) for c in clique):
                clique.append(w)
        best = max(best, len(clique))
    return best


def _greedy_coloring_bound(G):
    order = sorted(range(G.n), key=lambda u: -len(G.adjacency[u]))
    color = {}
    for v in order:
        used = {color[w] for w in G.adjacency[v] if w in color}
        c = 0
        while c in used:
            c += 1
        color[v] = c
    return max(color.values()) + 1 if color else 0


def _k_colorable(G, k):
    n = G.n
    color = [-1] * n

    def pick():
        # most saturated vertex, ties by degree then index
        chosen, key = -1, None
        for v in range(n):
            if color[v] != -1:
                continue
            sat = len({color[w] for w in G.adjacency[v] if color[w] != -1})
            cand = (-sat, -len(G.adjacency[v]), v)
            if key is None or cand < key:
                chosen, key = v, cand
        return chosen

    def rec(assigned, max_used):
        if assigned == n:
            return True
        v = pick()
        banned = {color[w] for w in G.adjacency[v] if color[w] != -1}
        for c in range(min(k, max_used + 2)):
            if c in banned:
                continue
            color[v] = c
            if rec(assigned + 1, max(max_used, c)):
                return True
            color[v] = -1
        return False

    return rec(0, -1)


def chromatic_number(G):
    """Exact chromatic number by iterated k-colorability search."""
    n = G.n
    if n > EXACT_INVARIANT_MAX_N:
        raise TooLarge(f"exact search capped at n={EXACT_INVARIANT_MAX_N}, got {n}")
    if n == 0:
        return 0
    if G.m == 0:
        return 1
    bipartite, _ = _two_color_components(G)
    if bipartite:
        return 2
    ub = _greedy_coloring_bound(G)
    lb = max(_greedy_clique(G), 3)
    for k in range(lb, ub):
        if _k_colorable(G, k):
            return k
    return ub


def exact_invariants(G):
    """Exact (independence_number, chromatic_number); TooLarge beyond n=40."""
    return independence_number(G), chromatic_number(G)
