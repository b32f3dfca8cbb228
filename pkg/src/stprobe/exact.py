"""Exact algorithm: grow certificate sets and tree structure to optimality.

Each iteration solves the optimal correct labeling for the current
(structure, path set, cut set), then repairs whatever the solved tree
got wrong: a premature Done grows the certificate sets, an inconclusive
leaf grows the structure.  Costs never decrease across iterations, so
every intermediate cost is a certified lower bound on the optimum; when
nothing needs repair the tree is optimal.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .graph import (
    BeliefState,
    Certificate,
    GraphInstance,
    certificate_status,
    min_hidden_cut,
    min_hidden_path,
)
from .ip import SolverBackend, TreeSearchBackend, solve_optimal_tree
from .tree import (
    DONE,
    LABEL_DONE,
    LIMIT,
    QUERY,
    PolicyTree,
    TreeStructure,
)

OPTIMAL = "optimal"
LOWER_BOUND_ONLY = "lower_bound_only"

DEFAULT_MAX_ITERATIONS = 10_000
DEFAULT_TIME_BUDGET = 72 * 3600.0


@dataclass
class IterationReport:
    iteration: int
    cost: float
    n_paths: int
    n_cuts: int
    n_nodes: int
    elapsed_ms: float
    paths_added: int = 0
    cuts_added: int = 0
    nodes_expanded: int = 0

    def csv_line(self) -> str:
        return (
            f"{self.iteration},{self.cost!r},{self.n_paths},"
            f"{self.n_cuts},{self.n_nodes},{self.elapsed_ms:.1f}"
        )


CSV_HEADER = "iter,cost,|P|,|C|,|S|,ms"


@dataclass
class ExactState:
    """Live state of one solve: the growing sets and the best tree so far.

    ``best_cost`` never decreases across iterations; each value is a
    certified lower bound on the true optimum until convergence.
    """

    paths: list[Certificate] = field(default_factory=list)
    cuts: list[Certificate] = field(default_factory=list)
    structure: TreeStructure = field(default_factory=TreeStructure.root_only)
    best_tree: Optional[PolicyTree] = None
    best_cost: float = 0.0
    iteration: int = 0
    converged: bool = False


@dataclass
class ExactResult:
    status: str
    tree: Optional[PolicyTree]
    cost: float
    reports: list[IterationReport]
    paths: list[Certificate]
    cuts: list[Certificate]

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def grow_certificates(
    t: PolicyTree,
    g: GraphInstance,
    paths: list[Certificate],
    cuts: list[Certificate],
    base_belief: Optional[BeliefState] = None,
) -> tuple[list[Certificate], list[Certificate]]:
    """Repair premature Done claims; returns (added paths, added cuts).

    A first-time Done node that disproved every path in P without its
    Off edges forming a real cut witnesses a still-possible path, found
    by the minimum-hidden-path search under the node's belief; cuts are
    handled symmetrically.  A node that disproved both sides but holds
    neither real certificate contributes both.
    """
    path_sets = {c.edge_set for c in paths}
    cut_sets = {c.edge_set for c in cuts}
    added_paths: list[Certificate] = []
    added_cuts: list[Certificate] = []
    for node in t.first_done_nodes():
        belief = t.route_belief(node, base=base_belief)
        on, off = belief.on, belief.off
        disproved_paths = all(q.edge_set & off for q in paths)
        disproved_cuts = all(c.edge_set & on for c in cuts)
        status = certificate_status(g, belief)
        if disproved_paths and status.state != "cut":
            found = min_hidden_path(g, belief)
            if found is None:
                raise RuntimeError("inconsistent state: no path despite no cut")
            cert = found[0]
            if cert.edge_set not in path_sets:
                path_sets.add(cert.edge_set)
                added_paths.append(cert)
        if disproved_cuts and status.state != "path":
            found = min_hidden_cut(g, belief)
            if found is None:
                raise RuntimeError("inconsistent state: no cut despite no path")
            cert = found[0]
            if cert.edge_set not in cut_sets:
                cut_sets.add(cert.edge_set)
                added_cuts.append(cert)
    return added_paths, added_cuts


def grow_structure(
    t: PolicyTree, s: TreeStructure, budget: int
) -> tuple[TreeStructure, int]:
    """Attach children to every inconclusive leaf (query-labeled, depth < B)."""
    targets = [
        i
        for i in s.leaves()
        if t.labels[i].kind == QUERY and s.depth[i] < budget
    ]
    if not targets:
        return s, 0
    new_s, _ = s.with_children(targets)
    return new_s, len(targets)


def initial_structure(spec: str, budget: int) -> TreeStructure:
    """Parse an initial-structure spec: ``root`` or ``complete:<depth>``."""
    if spec == "root":
        return TreeStructure.root_only()
    if spec.startswith("complete:"):
        depth = int(spec.split(":", 1)[1])
        return TreeStructure.complete(min(depth, budget))
    raise ValueError(f"unknown initial structure spec {spec!r}")


@dataclass
class ExactConfig:
    initial_structure: str = "complete:4"
    backend: Optional[SolverBackend] = None
    time_budget: float = DEFAULT_TIME_BUDGET
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    on_report: Optional[Callable[[IterationReport], None]] = None


def solve(
    g: GraphInstance,
    config: Optional[ExactConfig] = None,
    belief: Optional[BeliefState] = None,
    budget: Optional[int] = None,
) -> ExactResult:
    """Run the full exact algorithm on ``g`` (optionally from a belief).

    Starts from one shortest path and one minimum cut, then alternates
    labeling solves with certificate/structure growth until converged.
    Returns status ``optimal`` with the optimal tree, or
    ``lower_bound_only`` with the last certified bound when the time or
    iteration budget runs out first.
    """
    config = config or ExactConfig()
    backend = config.backend or TreeSearchBackend()
    belief = belief or BeliefState.fresh()
    budget = g.budget if budget is None else budget

    status = certificate_status(g, belief)
    if status.decided or budget < 1:
        tree = PolicyTree(TreeStructure.root_only(), {0: LABEL_DONE}, g.p)
        return ExactResult(OPTIMAL, tree, 0.0, [], [], [])

    first_path = min_hidden_path(g, belief)
    first_cut = min_hidden_cut(g, belief)
    if first_path is None or first_cut is None:
        raise RuntimeError("open status must admit both a path and a cut")
    state = ExactState(
        paths=[first_path[0]],
        cuts=[first_cut[0]],
        structure=initial_structure(config.initial_structure, budget),
    )

    reports: list[IterationReport] = []
    started = time.monotonic()
    while state.iteration < config.max_iterations:
        if time.monotonic() - started > config.time_budget:
            break
        state.iteration += 1
        iter_start = time.monotonic()
        tree, cost = solve_optimal_tree(
            state.structure, state.paths, state.cuts, g.p, budget,
            backend=backend, base_belief=belief,
        )
        state.best_tree, state.best_cost = tree, cost
        added_paths, added_cuts = grow_certificates(
            tree, g, state.paths, state.cuts, base_belief=belief
        )
        new_structure, expanded = grow_structure(tree, state.structure, budget)
        report = IterationReport(
            iteration=state.iteration,
            cost=cost,
            n_paths=len(state.paths),
            n_cuts=len(state.cuts),
            n_nodes=len(state.structure),
            elapsed_ms=(time.monotonic() - iter_start) * 1000.0,
            paths_added=len(added_paths),
            cuts_added=len(added_cuts),
            nodes_expanded=expanded,
        )
        state.paths.extend(added_paths)
        state.cuts.extend(added_cuts)
        reports.append(report)
        if config.on_report is not None:
            config.on_report(report)
        if not added_paths and not added_cuts and not expanded:
            state.converged = True
            break
        state.structure = new_structure
    status = OPTIMAL if state.converged else LOWER_BOUND_ONLY
    return ExactResult(
        status, state.best_tree, state.best_cost, reports, state.paths, state.cuts
    )
