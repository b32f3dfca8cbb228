"""Optimal correct-tree labeling as a solver-neutral 0/1 program.

``build_ip`` emits the explicit linear encoding (variables ``v_<edge>_<node>``
and ``d_<node>``, named constraints, minimization objective) so the
instance can be exported, audited or handed to an external MILP solver.
The bundled backend ignores the matrix form and runs the specialized
tree search from ``stprobe.kernels`` on the structured metadata; an
optional scipy backend solves the matrix form directly and is used to
cross-check objectives.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .graph import BeliefState, Certificate
from .kernels import make_searcher
from .tree import (
    LEFT,
    RIGHT,
    ROOT,
    Label,
    LABEL_DONE,
    LABEL_LIMIT,
    PolicyTree,
    TreeStructure,
    expected_cost,
    node_reach_prob,
)

OBJECTIVE_TOL = 1e-9


class SolverError(RuntimeError):
    pass


def referenced_edges(paths, cuts) -> tuple[str, ...]:
    """Union of all edges referenced by the certificate sets, sorted by id."""
    ids: set[str] = set()
    for cert in list(paths) + list(cuts):
        ids.update(cert.edges)
    return tuple(sorted(ids))


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: dict[str, float]
    sense: str  # "=", ">=", "<="
    rhs: float


@dataclass
class IPInstance:
    variables: tuple[str, ...]
    objective: dict[str, float]
    constraints: list[Constraint]
    # structured metadata consumed by the bundled backend
    structure: TreeStructure = field(repr=False, default=None)
    paths: tuple[Certificate, ...] = ()
    cuts: tuple[Certificate, ...] = ()
    p: float = 0.5
    budget: int = 0
    edges: tuple[str, ...] = ()

    def check_assignment(self, assignment: dict[str, int]) -> None:
        for v in self.variables:
            if assignment.get(v, 0) not in (0, 1):
                raise SolverError(f"variable {v} not binary in solution")
        for c in self.constraints:
            total = sum(coef * assignment.get(v, 0) for v, coef in c.coeffs.items())
            ok = (
                abs(total - c.rhs) <= 1e-6
                if c.sense == "="
                else total >= c.rhs - 1e-6
                if c.sense == ">="
                else total <= c.rhs + 1e-6
            )
            if not ok:
                raise SolverError(f"constraint {c.name} violated: {total} {c.sense} {c.rhs}")

    def objective_value(self, assignment: dict[str, int]) -> float:
        return sum(coef * assignment.get(v, 0) for v, coef in self.objective.items())


def _hidden_restriction(edges: Sequence[str], base: Optional[BeliefState]) -> tuple[str, ...]:
    if base is None:
        return tuple(edges)
    return tuple(e for e in edges if base.is_hidden(e))


def build_ip(
    s: TreeStructure,
    paths,
    cuts,
    p: float,
    budget: int,
    base_belief: Optional[BeliefState] = None,
) -> IPInstance:
    """Encode the minimum-cost correct labeling of structure ``s``.

    Constraints follow the program described in the module docstring:
    label partition per node, Done inheritance, per-route edge uniqueness
    and first-time-Done disproof rows (cut rows at left children, path
    rows at right children; the root gets both families, each emitted
    only when the opposite certificate set is nonempty, so a Done root is
    exactly as feasible as one of the sets being empty).  Depth-B nodes
    drop the partition row and instead pin their query variables to zero,
    which is the limit-leaf encoding.  When a base belief is given,
    already-revealed edges are excluded from the variable set and from
    the disproof rows (their answers are fixed and cannot contribute).
    """
    paths = tuple(paths)
    cuts = tuple(cuts)
    edges = _hidden_restriction(referenced_edges(paths, cuts), base_belief)
    edge_set = set(edges)

    variables = []
    objective: dict[str, float] = {}
    for i in s.node_ids():
        prob_i = node_reach_prob(s, i, p)
        for e in edges:
            name = f"v_{e}_{i}"
            variables.append(name)
            objective[name] = prob_i
        variables.append(f"d_{i}")

    cons: list[Constraint] = []
    for i in s.node_ids():
        if s.depth[i] < budget:
            coeffs = {f"v_{e}_{i}": 1.0 for e in edges}
            coeffs[f"d_{i}"] = 1.0
            cons.append(Constraint(f"partition_{i}", coeffs, "=", 1.0))
        else:
            if edges:
                cons.append(
                    Constraint(f"limit_{i}", {f"v_{e}_{i}": 1.0 for e in edges}, "=", 0.0)
                )
    for i in s.node_ids():
        if i == ROOT:
            continue
        cons.append(
            Constraint(
                f"inherit_{i}",
                {f"d_{i}": 1.0, f"d_{s.parent[i]}": -1.0},
                ">=",
                0.0,
            )
        )
    for leaf in s.leaves():
        route = s.route(leaf)
        if len(route) < 2:
            continue
        for e in edges:
            cons.append(
                Constraint(
                    f"once_{leaf}_{e}",
                    {f"v_{e}_{j}": 1.0 for j in route},
                    "<=",
                    1.0,
                )
            )

    def on_positions(i: int) -> list[int]:
        route = s.route(i)
        return [s.parent[j] for j in route if s.side[j] == LEFT]

    def off_positions(i: int) -> list[int]:
        route = s.route(i)
        return [s.parent[j] for j in route if s.side[j] == RIGHT]

    def disproof_rows(i: int, certs, positions: list[int], tag: str):
        for k, cert in enumerate(certs):
            coeffs: dict[str, float] = {}
            for j in positions:
                for e in cert.edges:
                    if e in edge_set:
                        coeffs[f"v_{e}_{j}"] = coeffs.get(f"v_{e}_{j}", 0.0) + 1.0
            coeffs[f"d_{i}"] = coeffs.get(f"d_{i}", 0.0) - 1.0
            if i != ROOT:
                pd = f"d_{s.parent[i]}"
                coeffs[pd] = coeffs.get(pd, 0.0) + 1.0
            cons.append(Constraint(f"{tag}_{i}_{k}", coeffs, ">=", 0.0))

    for i in s.node_ids():
        if s.side[i] == LEFT:
            disproof_rows(i, cuts, on_positions(i), "cutproof")
        elif s.side[i] == RIGHT:
            disproof_rows(i, paths, off_positions(i), "pathproof")
        else:
            if paths and cuts:
                disproof_rows(i, cuts, [], "cutproof")
                disproof_rows(i, paths, [], "pathproof")

    return IPInstance(
        variables=tuple(variables),
        objective=objective,
        constraints=cons,
        structure=s,
        paths=paths,
        cuts=cuts,
        p=p,
        budget=budget,
        edges=edges,
    )


def export_lp(ip: IPInstance) -> str:
    """Deterministic LP-format text for golden files and external solvers."""
    lines = ["Minimize", " obj:"]
    terms = [f"{coef!r} {v}" for v, coef in ip.objective.items() if coef != 0.0]
    if not terms:
        terms = ["0"]
    lines[1] = " obj: " + " + ".join(terms)
    lines.append("Subject To")
    for c in ip.constraints:
        parts = []
        for v, coef in c.coeffs.items():
            if coef == 0.0:
                continue
            if not parts:
                parts.append(f"{coef!r} {v}" if coef != 1.0 else v)
            elif coef < 0:
                parts.append(f"- {(-coef)!r} {v}" if coef != -1.0 else f"- {v}")
            else:
                parts.append(f"+ {coef!r} {v}" if coef != 1.0 else f"+ {v}")
        if not parts:
            parts = ["0"]
        sense = {"=": "=", ">=": ">=", "<=": "<="}[c.sense]
        lines.append(f" {c.name}: {' '.join(parts)} {sense} {c.rhs!r}")
    lines.append("Binary")
    lines.append(" " + " ".join(ip.variables))
    lines.append("End")
    return "\n".join(lines) + "\n"


@dataclass
class IPSolution:
    objective: float
    assignment: dict[str, int]


class SolverBackend:
    """Solve an IPInstance to optimality; see concrete backends."""

    name = "abstract"

    def solve(self, ip: IPInstance) -> IPSolution:  # pragma: no cover - interface
        raise NotImplementedError


class TreeSearchBackend(SolverBackend):
    """Bundled exact search specialized to the tree-labeling structure.

    Returns the lexicographically smallest optimal labeling by
    (node id, label id), with labels ordered Done < Query(e) ascending
    by edge id < Limit.
    """

    name = "bundled"

    def solve(self, ip: IPInstance) -> IPSolution:
        labels = solve_tree_labeling(
            ip.structure, ip.paths, ip.cuts, ip.p, ip.budget, ip.edges
        )
        assignment = {v: 0 for v in ip.variables}
        for i, lab in labels.items():
            if lab.kind == "done":
                assignment[f"d_{i}"] = 1
            elif lab.kind == "query":
                assignment[f"v_{lab.edge}_{i}"] = 1
        return IPSolution(ip.objective_value(assignment), assignment)


class ScipyMilpBackend(SolverBackend):
    """External MILP cross-check via scipy.optimize.milp (HiGHS)."""

    name = "milp"

    def solve(self, ip: IPInstance) -> IPSolution:
        import numpy as np
        from scipy.optimize import Bounds, LinearConstraint, milp

        index = {v: k for k, v in enumerate(ip.variables)}
        n = len(ip.variables)
        c = np.zeros(n)
        for v, coef in ip.objective.items():
            c[index[v]] = coef
        rows, lo, hi = [], [], []
        for con in ip.constraints:
            row = np.zeros(n)
            for v, coef in con.coeffs.items():
                row[index[v]] = coef
            rows.append(row)
            if con.sense == "=":
                lo.append(con.rhs)
                hi.append(con.rhs)
            elif con.sense == ">=":
                lo.append(con.rhs)
                hi.append(np.inf)
            else:
                lo.append(-np.inf)
                hi.append(con.rhs)
        constraints = LinearConstraint(np.array(rows), np.array(lo), np.array(hi))
        res = milp(
            c,
            constraints=constraints,
            integrality=np.ones(n),
            bounds=Bounds(0, 1),
        )
        if res.status != 0:
            raise SolverError(f"milp backend failed with status {res.status}")
        assignment = {v: int(round(res.x[index[v]])) for v in ip.variables}
        return IPSolution(float(res.fun), assignment)


_BACKENDS = {"bundled": TreeSearchBackend, "milp": ScipyMilpBackend}


def get_backend(name: str) -> SolverBackend:
    try:
        return _BACKENDS[name]()
    except KeyError:
        raise SolverError(f"unknown backend {name!r}; choose from {sorted(_BACKENDS)}")


def _kernel_inputs(s: TreeStructure, paths, cuts, edges: Sequence[str]):
    edge_index = {e: k for k, e in enumerate(edges)}
    cut_masks, path_masks = [], []
    for cert in cuts:
        mask = 0
        for e in cert.edges:
            if e in edge_index:
                mask |= 1 << edge_index[e]
        cut_masks.append(mask)
    for cert in paths:
        mask = 0
        for e in cert.edges:
            if e in edge_index:
                mask |= 1 << edge_index[e]
        path_masks.append(mask)
    edge_cut_hits = [0] * len(edges)
    edge_path_hits = [0] * len(edges)
    for k, mask in enumerate(cut_masks):
        m = mask
        while m:
            e = (m & -m).bit_length() - 1
            edge_cut_hits[e] |= 1 << k
            m &= m - 1
    for k, mask in enumerate(path_masks):
        m = mask
        while m:
            e = (m & -m).bit_length() - 1
            edge_path_hits[e] |= 1 << k
            m &= m - 1
    return cut_masks, path_masks, edge_cut_hits, edge_path_hits


def solve_tree_labeling(
    s: TreeStructure,
    paths,
    cuts,
    p: float,
    budget: int,
    edges: Optional[Sequence[str]] = None,
) -> dict[int, Label]:
    """Run the kernel and reconstruct the lex-min optimal labeling.

    The searcher values states in normalized space (expected further
    queries given the node is reached); reconstruction walks the tree
    greedily, taking Done wherever legal and otherwise the smallest edge
    whose branch values reproduce the memoized optimum.
    """
    paths = tuple(paths)
    cuts = tuple(cuts)
    if edges is None:
        edges = referenced_edges(paths, cuts)
    edges = tuple(edges)
    cut_masks, path_masks, edge_cut_hits, edge_path_hits = _kernel_inputs(
        s, paths, cuts, edges
    )
    all_cuts = (1 << len(cut_masks)) - 1
    all_paths = (1 << len(path_masks)) - 1
    root_done_allowed = not paths or not cuts

    searcher = make_searcher(
        list(s.left),
        list(s.right),
        list(s.depth),
        list(s.side),
        budget,
        p,
        len(edges),
        cut_masks,
        path_masks,
        edge_cut_hits,
        edge_path_hits,
        root_done_allowed,
    )
    searcher.solve()

    labels: dict[int, Label] = {}

    def mark_done(node: int) -> None:
        labels[node] = LABEL_DONE
        for child in (s.left[node], s.right[node]):
            if child != -1:
                mark_done(child)

    def rebuild(node: int, on: int, off: int, hc: int, hp: int) -> None:
        live_c = all_cuts & ~hc
        live_p = all_paths & ~hp
        if searcher.done_allowed(node, live_c, live_p):
            mark_done(node)
            return
        if s.depth[node] == budget:
            labels[node] = LABEL_LIMIT
            return
        target = searcher.q(node, on, off, hc, hp)
        # scan candidates ascending by edge id; bounded child evaluations
        # mirror the search, so co-optimal candidates the search pruned are
        # re-valued exactly here and the first optimal edge wins
        line = target + 1e-9
        used = on | off
        seen: dict[tuple[int, int], int] = {}
        for e in range(len(edges)):
            if (used >> e) & 1:
                continue
            sig = (edge_cut_hits[e] & live_c, edge_path_hits[e] & live_p)
            if sig == (0, 0) or sig in seen:
                continue
            seen[sig] = e
        l, r = s.left[node], s.right[node]
        for e in sorted(seen.values()):
            bit = 1 << e
            if l != -1:
                lv = searcher.q(l, on | bit, off, hc | edge_cut_hits[e], hp,
                                (line - 1.0) / p)
                if not searcher.last_exact:
                    continue
                total = 1.0 + p * lv
            else:
                total = 1.0
            if total >= line:
                continue
            if r != -1:
                rv = searcher.q(r, on, off | bit, hc, hp | edge_path_hits[e],
                                (line - total) / (1.0 - p))
                if not searcher.last_exact:
                    continue
                total += (1.0 - p) * rv
            if abs(total - target) <= 1e-12:
                labels[node] = Label.query(edges[e])
                if l != -1:
                    rebuild(l, on | bit, off, hc | edge_cut_hits[e], hp)
                if r != -1:
                    rebuild(r, on, off | bit, hc, hp | edge_path_hits[e])
                return
        raise SolverError(f"reconstruction failed at node {node}")

    rebuild(ROOT, 0, 0, 0, 0)
    return labels


def solve_optimal_tree(
    s: TreeStructure,
    paths,
    cuts,
    p: float,
    budget: int,
    backend: Optional[SolverBackend] = None,
    base_belief: Optional[BeliefState] = None,
) -> tuple[PolicyTree, float]:
    """Build and solve the labeling program; return (tree, cost).

    The returned tree satisfies every constraint of the emitted program
    (checked), and its expected cost equals the backend objective within
    1e-9.
    """
    backend = backend or TreeSearchBackend()
    ip = build_ip(s, paths, cuts, p, budget, base_belief=base_belief)
    solution = backend.solve(ip)
    ip.check_assignment(solution.assignment)

    labels: dict[int, Label] = {}
    for i in s.node_ids():
        if solution.assignment.get(f"d_{i}", 0) == 1:
            labels[i] = LABEL_DONE
            continue
        chosen = [e for e in ip.edges if solution.assignment.get(f"v_{e}_{i}", 0) == 1]
        if len(chosen) == 1:
            labels[i] = Label.query(chosen[0])
        elif not chosen and s.depth[i] == budget:
            labels[i] = LABEL_LIMIT
        else:
            raise SolverError(f"backend produced no valid label for node {i}")
    tree = PolicyTree(s, labels, p)
    cost = expected_cost(tree)
    if abs(cost - solution.objective) > OBJECTIVE_TOL:
        raise SolverError(
            f"objective mismatch: tree cost {cost} vs backend {solution.objective}"
        )
    return tree, cost
