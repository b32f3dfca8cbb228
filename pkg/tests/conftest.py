"""Shared fixtures and independent brute-force oracles.

The oracles here enumerate structures directly (DFS over simple paths,
subset checks for cuts, explicit response-vector sums) and deliberately
avoid the library's search code, so tests cross two independent routes.
"""

from __future__ import annotations

import itertools
import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from stprobe.graph import BeliefState, Certificate, EdgeState, GraphInstance
from stprobe.tree import all_response_vectors, run_policy


@pytest.fixture
def fig1() -> GraphInstance:
    """Three undirected edges: a directly s-t, b and c via x; p=0.5, B=3."""
    return GraphInstance(
        nodes=["s", "t", "x"],
        edges=[("a", "s", "t"), ("b", "s", "x"), ("c", "x", "t")],
        directed=False,
        source="s",
        target="t",
        p=0.5,
        budget=3,
    )


def make_fig1(p: float = 0.5, budget: int = 3) -> GraphInstance:
    return GraphInstance(
        nodes=["s", "t", "x"],
        edges=[("a", "s", "t"), ("b", "s", "x"), ("c", "x", "t")],
        directed=False,
        source="s",
        target="t",
        p=p,
        budget=budget,
    )


def enumerate_simple_paths(g: GraphInstance) -> list[tuple[str, ...]]:
    """All vertex-simple s->t paths as edge-id tuples, by DFS."""
    out: list[tuple[str, ...]] = []

    def dfs(node, visited, edges_so_far):
        if node == g.target:
            out.append(tuple(edges_so_far))
            return
        for e in g.out_edges(node):
            if g.directed and node != e.tail:
                continue
            nxt = e.other(node)
            if nxt in visited:
                continue
            dfs(nxt, visited | {nxt}, edges_so_far + [e.id])

    if g.source == g.target:
        return [()]
    dfs(g.source, {g.source}, [])
    return sorted(out)


def separates(g: GraphInstance, removed: frozenset[str]) -> bool:
    """True when deleting ``removed`` leaves no s->t path."""
    seen = {g.source}
    stack = [g.source]
    while stack:
        u = stack.pop()
        for e in g.out_edges(u):
            if e.id in removed:
                continue
            if g.directed and u != e.tail:
                continue
            v = e.other(u)
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return g.target not in seen


def enumerate_minimal_cuts(g: GraphInstance) -> list[frozenset[str]]:
    """All minimal s-t cuts by explicit subset enumeration."""
    ids = list(g.edge_ids)
    cuts: list[frozenset[str]] = []
    for r in range(len(ids) + 1):
        for combo in itertools.combinations(ids, r):
            cand = frozenset(combo)
            if not separates(g, cand):
                continue
            if any(existing <= cand for existing in cuts):
                continue
            cuts.append(cand)
    return cuts


def all_paths_certificates(g) -> list[Certificate]:
    return [Certificate("path", p) for p in enumerate_simple_paths(g)]


def all_cuts_certificates(g) -> list[Certificate]:
    return [Certificate("cut", tuple(sorted(c))) for c in enumerate_minimal_cuts(g)]


def vector_average_cost(policy, g: GraphInstance) -> float:
    """Oracle evaluator: explicit sum over all 2^(B-1) response vectors."""
    total = 0.0
    for vec in all_response_vectors(g.budget):
        result = run_policy(policy, g, vec)
        total += vec.probability(g.p) * result.queries
    return total


def random_instance(seed: int, max_edges: int = 10, require_connected: bool = True) -> GraphInstance:
    """Deterministic random instance; bumps the seed until connected."""
    while True:
        rng = random.Random(seed)
        n = rng.randint(2, 6)
        nodes = [f"n{i}" for i in range(n)]
        directed = rng.random() < 0.5
        pairs = []
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                if directed or i < j:
                    pairs.append((nodes[i], nodes[j]))
        m = rng.randint(1, min(max_edges, len(pairs)))
        chosen = rng.sample(pairs, m)
        edges = [(f"e{k:02d}", a, b) for k, (a, b) in enumerate(chosen)]
        source, target = rng.sample(nodes, 2)
        g = GraphInstance(
            nodes=nodes,
            edges=edges,
            directed=directed,
            source=source,
            target=target,
            p=0.5,
            budget=max(1, m),
        )
        if not require_connected or not g.degenerate:
            return g
        seed += 10_000


def random_belief(g: GraphInstance, rng: random.Random, max_reveals: int | None = None) -> BeliefState:
    """Random partial reveal of the instance's edges."""
    b = BeliefState.fresh()
    limit = len(g.edges) if max_reveals is None else max_reveals
    for e in g.edge_ids:
        if b.revealed_count >= limit:
            break
        roll = rng.random()
        if roll < 1 / 3:
            b = b.reveal(e, EdgeState.ON)
        elif roll < 2 / 3:
            b = b.reveal(e, EdgeState.OFF)
    return b
