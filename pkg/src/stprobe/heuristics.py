"""The query-policy catalogue.

Every policy exposes ``propose(g, belief, remaining) -> edge id | None``
and is a deterministic function of (graph, belief, seed).  Sample-backed
policies build their path/cut samples once per graph at the fresh state
and filter them against the current belief on every step.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .graph import (
    BeliefState,
    Certificate,
    EdgeState,
    GraphInstance,
    certificate_status,
    min_hidden_cut,
    min_hidden_path,
)

FROM_H1_TREE = "from-h1-tree"
FROM_K_EXCLUSION = "from-k-exclusion"

K_EXCLUSION_MAX_DEPTH = 6
K_EXCLUSION_CALL_CAP = 50_000


class HeuristicError(ValueError):
    pass


def h1_next(g: GraphInstance, b: BeliefState) -> str:
    """Query the hidden edge where the minimum-hidden path and cut meet."""
    status = certificate_status(g, b)
    if status.decided:
        raise HeuristicError("h1 called on a decided state")
    path = min_hidden_path(g, b)
    cut = min_hidden_cut(g, b)
    if path is None or cut is None:
        raise HeuristicError("h1 called on a decided state")
    meet = sorted(path[0].edge_set & cut[0].edge_set)
    hidden = [e for e in meet if b.is_hidden(e)]
    if not hidden:
        raise HeuristicError("path/cut intersection contains no hidden edge")
    return hidden[0]


class H1Policy:
    name = "h1"

    def __init__(self):
        self.events: list[str] = []

    def propose(self, g: GraphInstance, b: BeliefState, remaining: int) -> Optional[str]:
        return h1_next(g, b)


@dataclass(frozen=True)
class SampleSets:
    paths: tuple[Certificate, ...]
    cuts: tuple[Certificate, ...]
    provenance: dict

    def live_paths(self, b: BeliefState) -> list[Certificate]:
        return [q for q in self.paths if not (q.edge_set & b.off)]

    def live_cuts(self, b: BeliefState) -> list[Certificate]:
        return [c for c in self.cuts if not (c.edge_set & b.on)]


def _h1_tree_certificates(g, belief, depth, paths, cuts, seen_p, seen_c):
    if depth <= 0:
        return
    if certificate_status(g, belief).decided:
        return
    path = min_hidden_path(g, belief)
    cut = min_hidden_cut(g, belief)
    if path is None or cut is None:
        return
    for cert, seen, bucket in ((path[0], seen_p, paths), (cut[0], seen_c, cuts)):
        if cert.edge_set not in seen:
            seen.add(cert.edge_set)
            bucket.append(cert)
    meet = sorted(e for e in path[0].edge_set & cut[0].edge_set if belief.is_hidden(e))
    edge = meet[0]
    _h1_tree_certificates(g, belief.reveal(edge, EdgeState.ON), depth - 1, paths, cuts, seen_p, seen_c)
    _h1_tree_certificates(g, belief.reveal(edge, EdgeState.OFF), depth - 1, paths, cuts, seen_p, seen_c)


def _k_exclusion(g, base_belief, kind: str, target: int):
    """Alternative certificates found by banning edge subsets of found ones.

    For paths a banned edge acts Off; for cuts it acts On.  Levels ban 1,
    2, ... edges of the union of everything found so far, stopping at the
    target count (the starting certificate counts toward it).
    """
    if kind == "path":
        search = lambda banned: min_hidden_path(g, _ban(base_belief, banned, EdgeState.OFF))
    else:
        search = lambda banned: min_hidden_cut(g, _ban(base_belief, banned, EdgeState.ON))
    first = search(frozenset())
    if first is None:
        return []
    found = [first[0]]
    seen = {first[0].edge_set}
    calls = 0
    for k in range(1, K_EXCLUSION_MAX_DEPTH + 1):
        if len(found) >= target:
            break
        union = sorted({e for cert in found for e in cert.edges if base_belief.is_hidden(e)})
        if k > len(union):
            break
        for banned in itertools.combinations(union, k):
            if len(found) >= target or calls > K_EXCLUSION_CALL_CAP:
                break
            calls += 1
            result = search(frozenset(banned))
            if result is None:
                continue
            cert = result[0]
            if cert.edge_set not in seen:
                seen.add(cert.edge_set)
                found.append(cert)
    return found


def _ban(belief: BeliefState, banned: frozenset, as_state: EdgeState) -> BeliefState:
    b = belief
    for e in sorted(banned):
        if b.is_hidden(e):
            b = b.reveal(e, as_state)
    return b


def generate_samples(
    g: GraphInstance,
    horizon: int = 10,
    target: int = 100,
    belief: Optional[BeliefState] = None,
) -> SampleSets:
    """Union of the H1-tree certificates and the k-exclusion certificates."""
    belief = belief or BeliefState.fresh()
    tree_paths: list[Certificate] = []
    tree_cuts: list[Certificate] = []
    _h1_tree_certificates(g, belief, horizon, tree_paths, tree_cuts, set(), set())

    excl_paths = _k_exclusion(g, belief, "path", target)
    excl_cuts = _k_exclusion(g, belief, "cut", target)

    provenance: dict = {}
    paths: list[Certificate] = []
    cuts: list[Certificate] = []
    for cert in tree_paths + excl_paths:
        key = ("path", cert.edge_set)
        if key not in provenance:
            provenance[key] = FROM_H1_TREE if cert in tree_paths else FROM_K_EXCLUSION
            paths.append(cert)
    for cert in tree_cuts + excl_cuts:
        key = ("cut", cert.edge_set)
        if key not in provenance:
            provenance[key] = FROM_H1_TREE if cert in tree_cuts else FROM_K_EXCLUSION
            cuts.append(cert)
    return SampleSets(tuple(paths), tuple(cuts), provenance)


class _SampledPolicy:
    """Shared plumbing: per-graph sample cache, H1 fallback with a note."""

    def __init__(self, horizon: int = 10, target: int = 100, regenerate: bool = False):
        self.horizon = horizon
        self.target = target
        self.regenerate = regenerate
        self.events: list[str] = []
        self._cached: Optional[tuple[GraphInstance, SampleSets]] = None

    def samples_for(self, g: GraphInstance, b: BeliefState) -> SampleSets:
        if self.regenerate:
            return generate_samples(g, self.horizon, self.target, belief=b)
        if self._cached is None or self._cached[0] is not g:
            self._cached = (g, generate_samples(g, self.horizon, self.target))
        return self._cached[1]

    def fallback(self, g: GraphInstance, b: BeliefState, reason: str) -> str:
        self.events.append(f"fallback:h1:{reason}")
        return h1_next(g, b)


class H2Policy(_SampledPolicy):
    """Greedy certificate-frequency counting over live samples."""

    def __init__(self, variant: str = "both", **kw):
        super().__init__(**kw)
        if variant not in ("both", "path", "cut"):
            raise HeuristicError(f"unknown H2 variant {variant!r}")
        self.variant = variant
        self.name = f"h2-{variant}"

    def propose(self, g: GraphInstance, b: BeliefState, remaining: int) -> Optional[str]:
        samples = self.samples_for(g, b)
        pool: list[Certificate] = []
        if self.variant in ("both", "path"):
            pool.extend(samples.live_paths(b))
        if self.variant in ("both", "cut"):
            pool.extend(samples.live_cuts(b))
        counts: dict[str, int] = {}
        for cert in pool:
            for e in cert.edges:
                if b.is_hidden(e):
                    counts[e] = counts.get(e, 0) + 1
        if not counts:
            return self.fallback(g, b, "no-live-samples")
        best = max(counts.values())
        return min(e for e, n in counts.items() if n == best)


def minimum_hitting_set(sets: Sequence[frozenset[str]]) -> tuple[str, ...]:
    """Exact minimum hitting set, smallest (size, id-tuple) among optima."""
    sets = [s for s in sets if s]
    if not sets:
        return ()
    best: Optional[tuple[int, tuple[str, ...]]] = None

    def extend(chosen: tuple[str, ...], remaining: list[frozenset]) -> None:
        nonlocal best
        if best is not None and len(chosen) >= best[0]:
            return
        unhit = [s for s in remaining if not any(e in s for e in chosen)]
        if not unhit:
            key = (len(chosen), tuple(sorted(chosen)))
            if best is None or key < best:
                best = key
            return
        target = min(unhit, key=lambda s: (len(s), tuple(sorted(s))))
        for e in sorted(target):
            extend(chosen + (e,), unhit)

    extend((), list(sets))
    assert best is not None
    return best[1]


class MinSCPolicy(_SampledPolicy):
    """Minimum-set-cover style selection over live samples."""

    def __init__(self, variant: str = "both", **kw):
        super().__init__(**kw)
        if variant not in ("both", "path", "cut"):
            raise HeuristicError(f"unknown MinSC variant {variant!r}")
        self.variant = variant
        self.name = "minsc" if variant == "both" else f"minsc-{variant}"

    def propose(self, g: GraphInstance, b: BeliefState, remaining: int) -> Optional[str]:
        samples = self.samples_for(g, b)
        live_paths = [frozenset(e for e in q.edges if b.is_hidden(e)) for q in samples.live_paths(b)]
        live_cuts = [frozenset(e for e in c.edges if b.is_hidden(e)) for c in samples.live_cuts(b)]
        cover_paths = set(minimum_hitting_set(live_paths)) if live_paths else set()
        cover_cuts = set(minimum_hitting_set(live_cuts)) if live_cuts else set()
        if self.variant == "both":
            pool = cover_paths & cover_cuts
        elif self.variant == "path":
            cut = min_hidden_cut(g, b)
            pool = cover_paths & (cut[0].edge_set if cut else set())
        else:
            path = min_hidden_path(g, b)
            pool = cover_cuts & (path[0].edge_set if path else set())
        pool = {e for e in pool if b.is_hidden(e)}
        if not pool:
            return self.fallback(g, b, "empty-intersection")
        return min(pool)


class AdaptiveSubmodularPolicy(_SampledPolicy):
    """Minimize (paths alive if Off) x (cuts alive if On), over samples."""

    name = "adasub"

    def propose(self, g: GraphInstance, b: BeliefState, remaining: int) -> Optional[str]:
        samples = self.samples_for(g, b)
        live_paths = samples.live_paths(b)
        live_cuts = samples.live_cuts(b)
        paths_with: dict[str, int] = {}
        cuts_with: dict[str, int] = {}
        for q in live_paths:
            for e in q.edges:
                paths_with[e] = paths_with.get(e, 0) + 1
        for c in live_cuts:
            for e in c.edges:
                cuts_with[e] = cuts_with.get(e, 0) + 1
        best_edge = None
        best_score = None
        for e in g.edge_ids:
            if not b.is_hidden(e):
                continue
            score = (len(live_paths) - paths_with.get(e, 0)) * (
                len(live_cuts) - cuts_with.get(e, 0)
            )
            if best_score is None or score < best_score:
                best_edge, best_score = e, score
        if best_edge is None:
            return self.fallback(g, b, "no-hidden-edges")
        return best_edge


def action_space(g: GraphInstance, b: BeliefState, horizon: int) -> tuple[str, ...]:
    """Edges referenced by simulating H1 to the given depth from this state."""
    edges: set[str] = set()

    def sim(belief: BeliefState, depth: int) -> None:
        if depth <= 0 or certificate_status(g, belief).decided:
            return
        e = h1_next(g, belief)
        edges.add(e)
        sim(belief.reveal(e, EdgeState.ON), depth - 1)
        sim(belief.reveal(e, EdgeState.OFF), depth - 1)

    sim(b, horizon)
    return tuple(sorted(edges))


class TreeHorizonPolicy:
    """Re-solve exactly under a pretended small budget; play the root query."""

    def __init__(self, horizon: int, backend=None):
        if horizon < 1:
            raise HeuristicError("tree horizon must be >= 1")
        self.horizon = horizon
        self.backend = backend
        self.name = f"tree:{horizon}"
        self.events: list[str] = []

    def propose(self, g: GraphInstance, b: BeliefState, remaining: int) -> Optional[str]:
        from .exact import ExactConfig, solve

        effective = min(self.horizon, remaining)
        if effective < 1:
            return None
        config = ExactConfig(initial_structure="root", backend=self.backend)
        result = solve(g, config, belief=b, budget=effective)
        root_label = result.tree.labels[0]
        if root_label.kind != "query":
            return None
        return root_label.edge


class MCTSPolicy:
    """Epsilon-greedy Monte Carlo tree search over (belief, budget) states.

    Actions come from the H1-generated action space; rollouts follow H1;
    the reward is the negated total query count.  A fresh RNG is seeded
    per proposal, so the policy is a pure function of (graph, belief,
    seed).
    """

    def __init__(self, horizon: int, sims: int = 1000, epsilon: float = 0.2, seed: int = 0):
        if not 0.0 <= epsilon <= 1.0:
            raise HeuristicError("epsilon must be in [0, 1]")
        self.horizon = horizon
        self.sims = sims
        self.epsilon = epsilon
        self.seed = seed
        self.name = f"mcts:{horizon},{sims},{epsilon},{seed}"
        self.events: list[str] = []

    def propose(self, g: GraphInstance, b: BeliefState, remaining: int) -> Optional[str]:
        rng = random.Random(self.seed)
        root_actions = action_space(g, b, self.horizon)
        if not root_actions:
            return None

        stats: dict[tuple, dict[str, list[float]]] = {}
        action_cache: dict[tuple, tuple[str, ...]] = {}

        def state_key(belief: BeliefState, budget: int):
            return (belief.on, belief.off, budget)

        def actions_for(belief: BeliefState, budget: int, key) -> tuple[str, ...]:
            if key not in action_cache:
                action_cache[key] = action_space(g, belief, self.horizon)
            return action_cache[key]

        def pick(node_stats, actions) -> str:
            unvisited = [a for a in actions if a not in node_stats]
            if unvisited:
                return unvisited[0]
            if rng.random() < self.epsilon:
                return actions[rng.randrange(len(actions))]
            best = None
            best_mean = None
            for a in actions:
                total, visits = node_stats[a]
                mean = total / visits
                if best_mean is None or mean > best_mean:
                    best, best_mean = a, mean
            return best

        def rollout(belief: BeliefState, budget: int) -> int:
            queries = 0
            while budget > 0 and not certificate_status(g, belief).decided:
                e = h1_next(g, belief)
                queries += 1
                budget -= 1
                belief = belief.reveal(
                    e, EdgeState.ON if rng.random() < g.p else EdgeState.OFF
                )
            return queries

        for _ in range(self.sims):
            belief, budget = b, remaining
            trail: list[tuple[tuple, str]] = []
            queries = 0
            while True:
                if budget <= 0 or certificate_status(g, belief).decided:
                    break
                key = state_key(belief, budget)
                actions = actions_for(belief, budget, key)
                if not actions:
                    break
                node_stats = stats.get(key)
                if node_stats is None:
                    stats[key] = {}
                    e = pick(stats[key], actions)
                    trail.append((key, e))
                    queries += 1
                    budget -= 1
                    belief = belief.reveal(
                        e, EdgeState.ON if rng.random() < g.p else EdgeState.OFF
                    )
                    queries += rollout(belief, budget)
                    break
                e = pick(node_stats, actions)
                trail.append((key, e))
                queries += 1
                budget -= 1
                belief = belief.reveal(
                    e, EdgeState.ON if rng.random() < g.p else EdgeState.OFF
                )
            reward = float(-queries)
            for key, action in trail:
                entry = stats[key].get(action)
                if entry is None:
                    stats[key][action] = [reward, 1]
                else:
                    entry[0] += reward
                    entry[1] += 1

        root_stats = stats.get(state_key(b, remaining), {})
        visited = [(a, t / v) for a, (t, v) in root_stats.items()]
        if not visited:
            return root_actions[0]
        best_mean = max(mean for _, mean in visited)
        return min(a for a, mean in visited if mean == best_mean)


def parse_heuristic(spec: str):
    """Build a policy from the CLI grammar.

    ``h1 | h2-both | h2-path | h2-cut | minsc | minsc-path | minsc-cut |
    adasub | tree:<B'> | mcts:<B'>[,<sims>[,<eps>[,<seed>]]]``
    """
    spec = spec.strip().lower()
    if spec == "h1":
        return H1Policy()
    if spec in ("h2-both", "h2-path", "h2-cut"):
        return H2Policy(spec.split("-", 1)[1])
    if spec == "minsc":
        return MinSCPolicy("both")
    if spec in ("minsc-path", "minsc-cut"):
        return MinSCPolicy(spec.split("-", 1)[1])
    if spec == "adasub":
        return AdaptiveSubmodularPolicy()
    if spec.startswith("tree:"):
        return TreeHorizonPolicy(int(spec.split(":", 1)[1]))
    if spec.startswith("mcts:"):
        parts = spec.split(":", 1)[1].split(",")
        horizon = int(parts[0])
        sims = int(parts[1]) if len(parts) > 1 else 1000
        eps = float(parts[2]) if len(parts) > 2 else 0.2
        seed = int(parts[3]) if len(parts) > 3 else 0
        return MCTSPolicy(horizon, sims, eps, seed)
    raise HeuristicError(f"unknown heuristic spec {spec!r}")


CATALOGUE = (
    "h1",
    "h2-both",
    "h2-path",
    "h2-cut",
    "minsc",
    "minsc-path",
    "minsc-cut",
    "adasub",
)
