"""Policy-tree shapes, labels, costs, playback and Done-claim checking.

A policy tree is a binary adaptive plan: the left child follows an On
answer, the right child an Off answer.  Trees are immutable once built;
growth operations return new structures.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .graph import (
    BeliefState,
    Certificate,
    CertificateStatus,
    EdgeState,
    GraphError,
    GraphInstance,
    certificate_status,
)

ROOT = 0
LEFT, RIGHT = 1, 2  # child side codes; root is side 0


class TreeError(ValueError):
    pass


class TreeStructure:
    """Binary tree shape with stable node ids (creation order).

    Node 0 is the root.  ``side[i]`` records whether node i is a left
    child (On branch), right child (Off branch) or the root.
    """

    __slots__ = ("parent", "left", "right", "depth", "side")

    def __init__(self, parent=(-1,), left=(-1,), right=(-1,), depth=(0,), side=(0,)):
        self.parent = tuple(parent)
        self.left = tuple(left)
        self.right = tuple(right)
        self.depth = tuple(depth)
        self.side = tuple(side)
        if self.depth[ROOT] != 0 or self.parent[ROOT] != -1:
            raise TreeError("node 0 must be the root")

    @classmethod
    def root_only(cls) -> "TreeStructure":
        return cls()

    @classmethod
    def complete(cls, depth: int) -> "TreeStructure":
        """Complete binary tree; ``depth`` counts edges (depth 1 = 3 nodes)."""
        s = cls()
        for _ in range(depth):
            leaves = [i for i in s.node_ids() if s.is_leaf(i)]
            s, _ = s.with_children(leaves)
        return s

    def __len__(self) -> int:
        return len(self.parent)

    def node_ids(self) -> range:
        return range(len(self.parent))

    def is_leaf(self, i: int) -> bool:
        return self.left[i] == -1 and self.right[i] == -1

    def leaves(self) -> list[int]:
        return [i for i in self.node_ids() if self.is_leaf(i)]

    def route(self, i: int) -> list[int]:
        """Nodes from root to i, inclusive."""
        out = []
        while i != -1:
            out.append(i)
            i = self.parent[i]
        return out[::-1]

    def lnodes(self) -> list[int]:
        return [i for i in self.node_ids() if self.side[i] == LEFT]

    def rnodes(self) -> list[int]:
        return [i for i in self.node_ids() if self.side[i] == RIGHT]

    def turn_counts(self, i: int) -> tuple[int, int]:
        """(#left turns, #right turns) on the route to i."""
        lefts = rights = 0
        while i != -1:
            if self.side[i] == LEFT:
                lefts += 1
            elif self.side[i] == RIGHT:
                rights += 1
            i = self.parent[i]
        return lefts, rights

    def with_children(self, nodes: Iterable[int]) -> tuple["TreeStructure", list[int]]:
        """Attach two children to each listed leaf; returns (new tree, new ids)."""
        parent = list(self.parent)
        left = list(self.left)
        right = list(self.right)
        depth = list(self.depth)
        side = list(self.side)
        created = []
        for i in nodes:
            if not (left[i] == -1 and right[i] == -1):
                raise TreeError(f"node {i} already has children")
            for child_side in (LEFT, RIGHT):
                j = len(parent)
                parent.append(i)
                left.append(-1)
                right.append(-1)
                depth.append(depth[i] + 1)
                side.append(child_side)
                if child_side == LEFT:
                    left[i] = j
                else:
                    right[i] = j
                created.append(j)
        return TreeStructure(parent, left, right, depth, side), created

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TreeStructure)
            and self.parent == other.parent
            and self.left == other.left
            and self.right == other.right
        )

    def __hash__(self) -> int:
        return hash((self.parent, self.left, self.right))


def node_reach_prob(s: TreeStructure, node: int, p: float) -> float:
    """p^(left turns) * (1-p)^(right turns) along the route to ``node``."""
    if node < 0 or node >= len(s):
        raise TreeError(f"unknown node {node}")
    lefts, rights = s.turn_counts(node)
    return (p**lefts) * ((1.0 - p) ** rights)


QUERY = "query"
DONE = "done"
LIMIT = "limit"


@dataclass(frozen=True)
class Label:
    kind: str
    edge: Optional[str] = None

    @classmethod
    def query(cls, edge: str) -> "Label":
        return cls(QUERY, edge)


LABEL_DONE = Label(DONE)
LABEL_LIMIT = Label(LIMIT)


class PolicyTree:
    """A tree structure plus one label per node and the On-probability."""

    __slots__ = ("structure", "labels", "p")

    def __init__(self, structure: TreeStructure, labels: dict[int, Label], p: float):
        self.structure = structure
        self.labels = dict(labels)
        self.p = float(p)
        self._validate()

    def _validate(self) -> None:
        s = self.structure
        for i in s.node_ids():
            if i not in self.labels:
                raise TreeError(f"node {i} has no label")
            lab = self.labels[i]
            if lab.kind == QUERY:
                seen = set()
                for j in s.route(i):
                    lj = self.labels[j]
                    if lj.kind == QUERY:
                        if lj.edge in seen:
                            raise TreeError(f"edge {lj.edge!r} repeats on route to {i}")
                        seen.add(lj.edge)
            parent = s.parent[i]
            if parent != -1 and self.labels[parent].kind == DONE and lab.kind != DONE:
                raise TreeError(f"child {i} of a Done node must be Done")

    def label(self, i: int) -> Label:
        return self.labels[i]

    def query_nodes(self) -> list[int]:
        return [i for i in self.structure.node_ids() if self.labels[i].kind == QUERY]

    def first_done_nodes(self) -> list[int]:
        """Done nodes whose parent is not Done (or the Done root)."""
        s = self.structure
        out = []
        for i in s.node_ids():
            if self.labels[i].kind != DONE:
                continue
            parent = s.parent[i]
            if parent == -1 or self.labels[parent].kind != DONE:
                out.append(i)
        return out

    def route_belief(self, i: int, base: BeliefState | None = None) -> BeliefState:
        """Belief implied by the answers along the route to node i."""
        s = self.structure
        b = base or BeliefState.fresh()
        route = s.route(i)
        for idx in range(len(route) - 1):
            j, k = route[idx], route[idx + 1]
            lab = self.labels[j]
            if lab.kind != QUERY:
                continue
            b = b.reveal(lab.edge, EdgeState.ON if s.side[k] == LEFT else EdgeState.OFF)
        return b

    def canonical_pruned(self):
        """Nested-tuple form with Done subtrees collapsed, for equivalence checks."""

        def walk(i):
            lab = self.labels[i]
            if lab.kind == DONE:
                return ("done",)
            if lab.kind == LIMIT:
                return ("limit",)
            s = self.structure
            l = walk(s.left[i]) if s.left[i] != -1 else None
            r = walk(s.right[i]) if s.right[i] != -1 else None
            return ("query", lab.edge, l, r)

        return walk(ROOT)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PolicyTree)
            and self.p == other.p
            and self.canonical_pruned() == other.canonical_pruned()
        )

    def __hash__(self) -> int:
        return hash((self.p, self.canonical_pruned()))


def expected_cost(t: PolicyTree) -> float:
    """Sum of reach probabilities over query nodes, in node-id order.

    The fixed accumulation order keeps totals bit-identical across runs;
    at p = 0.5 every term is dyadic and the sum is exact.
    """
    total = 0.0
    for i in sorted(t.query_nodes()):
        total += node_reach_prob(t.structure, i, t.p)
    return total


def parse_tree(text: str) -> PolicyTree:
    """Parse the serialized form produced by :func:`serialize_tree`."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) != 2 or not lines[0].startswith("p="):
        raise TreeError("expected two lines: p=<prob> and the tree expression")
    p = float(lines[0][2:])
    expr = lines[1].strip()

    structure = TreeStructure.root_only()
    labels: dict[int, Label] = {}

    pos = 0

    def parse_node(i, depth):
        nonlocal pos, structure
        if expr.startswith("DONE", pos):
            pos += 4
            labels[i] = LABEL_DONE
        elif expr.startswith("LIMIT", pos):
            pos += 5
            labels[i] = LABEL_LIMIT
        elif expr.startswith("Q:", pos):
            pos += 2
            j = pos
            while j < len(expr) and expr[j] not in "(),":
                j += 1
            labels[i] = Label.query(expr[pos:j])
            pos = j
        else:
            raise TreeError(f"bad node at offset {pos}: {expr[pos:pos+10]!r}")
        if pos < len(expr) and expr[pos] == "(":
            pos += 1
            structure, (l, r) = structure.with_children([i])
            parse_node(l, depth + 1)
            if expr[pos] != ",":
                raise TreeError(f"expected ',' at offset {pos}")
            pos += 1
            parse_node(r, depth + 1)
            if expr[pos] != ")":
                raise TreeError(f"expected ')' at offset {pos}")
            pos += 1

    parse_node(ROOT, 0)
    if pos != len(expr):
        raise TreeError(f"trailing input at offset {pos}")
    return PolicyTree(structure, labels, p)


def serialize_tree(t: PolicyTree) -> str:
    """Two-line text form: ``p=<prob>`` then nodes as Q:<edge>|DONE|LIMIT
    with children in (left, right) order.  Round-trips bit-exactly."""

    def emit(i):
        lab = t.labels[i]
        if lab.kind == DONE:
            head = "DONE"
        elif lab.kind == LIMIT:
            head = "LIMIT"
        else:
            head = f"Q:{lab.edge}"
        s = t.structure
        if s.left[i] == -1 and s.right[i] == -1:
            return head
        return f"{head}({emit(s.left[i])},{emit(s.right[i])})"

    return f"p={t.p!r}\n{emit(ROOT)}\n"


@dataclass(frozen=True)
class ResponseVector:
    """Answers to the first B-1 queries; the B-th query needs no answer."""

    bits: tuple[EdgeState, ...]

    @classmethod
    def from_bools(cls, ons: Iterable[bool]) -> "ResponseVector":
        return cls(tuple(EdgeState.ON if x else EdgeState.OFF for x in ons))

    def probability(self, p: float) -> float:
        total = 1.0
        for bit in self.bits:
            total *= p if bit is EdgeState.ON else (1.0 - p)
        return total

    def __len__(self) -> int:
        return len(self.bits)


def all_response_vectors(budget: int):
    """All 2^(B-1) response vectors, ascending by On=1 bit pattern (bit 0 first)."""
    n = budget - 1
    for code in range(1 << n):
        yield ResponseVector.from_bools(bool((code >> k) & 1) for k in range(n))


@dataclass
class RunResult:
    queries: int
    outcome: str  # "path" | "cut" | "limit" | "open"
    transcript: list[tuple[str, Optional[EdgeState]]]
    certificate: Optional[Certificate] = None


class TreeStepper:
    """Adapter that plays a PolicyTree as a stepwise policy.

    The current position is recovered by walking labels against the
    belief, so proposing is a pure function of (graph, belief).
    """

    def __init__(self, tree: PolicyTree):
        self.tree = tree

    def propose(self, g: GraphInstance, b: BeliefState, remaining: int) -> Optional[str]:
        t, s = self.tree, self.tree.structure
        i = ROOT
        while True:
            lab = t.labels[i]
            if lab.kind != QUERY:
                return None
            state = b.state_of(lab.edge)
            if state is EdgeState.HIDDEN:
                return lab.edge
            nxt = s.left[i] if state is EdgeState.ON else s.right[i]
            if nxt == -1:
                return None  # inconclusive leaf: partial tree ran out of plan
            i = nxt


def run_policy(policy, g: GraphInstance, r: ResponseVector) -> RunResult:
    """Play a policy against a response vector.

    ``policy`` is anything with ``propose(g, belief, remaining) -> edge | None``
    or a PolicyTree (wrapped automatically).  Stops at the first real
    certificate, when the policy stops proposing, or after B queries; the
    B-th query consumes no answer bit.
    """
    if isinstance(policy, PolicyTree):
        policy = TreeStepper(policy)
    budget = g.budget
    if len(r) != budget - 1:
        raise TreeError(f"response vector must have length {budget - 1}, got {len(r)}")
    b = BeliefState.fresh()
    transcript: list[tuple[str, Optional[EdgeState]]] = []
    queries = 0
    status = certificate_status(g, b)
    while not status.decided:
        if queries == budget:
            return RunResult(queries, "limit", transcript)
        edge = policy.propose(g, b, budget - queries)
        if edge is None:
            return RunResult(queries, "open", transcript)
        if not b.is_hidden(edge):
            raise TreeError(f"policy proposed already-revealed edge {edge!r}")
        queries += 1
        if queries == budget:
            transcript.append((edge, None))
            return RunResult(queries, "limit", transcript)
        answer = r.bits[queries - 1]
        transcript.append((edge, answer))
        b = b.reveal(edge, answer)
        status = certificate_status(g, b)
    return RunResult(queries, status.state, transcript, status.certificate)


@dataclass(frozen=True)
class DoneViolation:
    node: int
    certificate: Certificate


def validate_done_claims(t: PolicyTree, paths, cuts) -> list[DoneViolation]:
    """Check every first-time Done node against the certificate sets.

    A first-time Done claim is valid when the On answers on its route hit
    every cut in ``cuts`` or the Off answers hit every path in ``paths``.
    Each violation names the node and an un-disproved certificate chosen
    from the side the node's branch direction claims.
    """
    paths = list(paths)
    cuts = list(cuts)
    s = t.structure
    violations = []
    for i in t.first_done_nodes():
        b = t.route_belief(i)
        on, off = b.on, b.off
        unhit_cuts = [c for c in cuts if not (c.edge_set & on)]
        unhit_paths = [q for q in paths if not (q.edge_set & off)]
        if not unhit_cuts or not unhit_paths:
            continue
        if s.side[i] == LEFT:
            violations.append(DoneViolation(i, unhit_cuts[0]))
        elif s.side[i] == RIGHT:
            violations.append(DoneViolation(i, unhit_paths[0]))
        else:
            violations.append(DoneViolation(i, unhit_paths[0] if unhit_paths else unhit_cuts[0]))
    return violations
