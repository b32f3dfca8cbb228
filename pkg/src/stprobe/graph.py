"""Graph model, edge belief states and certificate searches.

Everything downstream (the exact solver, the heuristics, the wizard) is
built on three operations defined here: deciding whether the revealed
edges already certify connectivity or disconnection, and finding the
s-t path / s-t cut with the fewest hidden edges.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence


class EdgeState(Enum):
    HIDDEN = "hidden"
    ON = "on"
    OFF = "off"


class GraphError(ValueError):
    """Invalid graph construction or inconsistent belief input."""


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str

    def other(self, node: str) -> str:
        return self.head if node == self.tail else self.tail


class GraphInstance:
    """Immutable problem instance: graph, endpoints, On-probability, budget.

    Edge ids are unique strings ordered by plain string comparison; all
    deterministic tie-breaks in the package refer to that order.  Parallel
    edges (same endpoint pair, same direction for directed graphs) are
    rejected unless ``allow_parallel`` is set, which internal callers may
    use for derived instances.
    """

    def __init__(
        self,
        nodes: Iterable[str],
        edges: Iterable[tuple[str, str, str]],
        *,
        directed: bool,
        source: str,
        target: str,
        p: float = 0.5,
        budget: int = 1,
        allow_parallel: bool = False,
    ):
        self.nodes = tuple(dict.fromkeys(str(n) for n in nodes))
        node_set = set(self.nodes)
        seen_ids: set[str] = set()
        seen_pairs: set[tuple[str, str]] = set()
        edge_list = []
        for eid, tail, head in edges:
            eid, tail, head = str(eid), str(tail), str(head)
            if eid in seen_ids:
                raise GraphError(f"duplicate edge id {eid!r}")
            seen_ids.add(eid)
            if tail not in node_set or head not in node_set:
                raise GraphError(f"edge {eid!r} references unknown node")
            pair = (tail, head) if directed else (min(tail, head), max(tail, head))
            if pair in seen_pairs and not allow_parallel:
                raise GraphError(f"parallel edge {eid!r} between {tail!r} and {head!r}")
            seen_pairs.add(pair)
            edge_list.append(Edge(eid, tail, head))
        edge_list.sort(key=lambda e: e.id)
        self.edges = tuple(edge_list)
        self.directed = bool(directed)
        self.source = str(source)
        self.target = str(target)
        if self.source not in node_set:
            raise GraphError(f"unknown source node {self.source!r}")
        if self.target not in node_set:
            raise GraphError(f"unknown target node {self.target!r}")
        if not 0.0 < p < 1.0:
            raise GraphError(f"p must be in (0,1), got {p}")
        self.p = float(p)
        if budget < 1 or budget > max(1, len(self.edges)):
            raise GraphError(f"budget must be in [1, |edges|], got {budget}")
        self.budget = int(budget)

        self._by_id = {e.id: e for e in self.edges}
        # adjacency in sorted-edge-id order; undirected edges appear on both sides
        self._adj: dict[str, list[Edge]] = {n: [] for n in self.nodes}
        for e in self.edges:
            self._adj[e.tail].append(e)
            if not self.directed:
                self._adj[e.head].append(e)

    @property
    def edge_ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.edges)

    def edge(self, eid: str) -> Edge:
        try:
            return self._by_id[eid]
        except KeyError:
            raise GraphError(f"unknown edge id {eid!r}") from None

    def out_edges(self, node: str) -> Sequence[Edge]:
        return self._adj[node]

    @property
    def degenerate(self) -> bool:
        """True when the instance decides itself before any query."""
        return self.source == self.target or not self._structurally_connected()

    def _structurally_connected(self) -> bool:
        return self.target in _reachable(self, excluded=frozenset())

    def replace(self, **kw) -> "GraphInstance":
        args = dict(
            nodes=self.nodes,
            edges=[(e.id, e.tail, e.head) for e in self.edges],
            directed=self.directed,
            source=self.source,
            target=self.target,
            p=self.p,
            budget=self.budget,
            allow_parallel=True,
        )
        args.update(kw)
        return GraphInstance(**args)


class BeliefState:
    """Immutable per-edge labels in {Hidden, On, Off}.

    Labels only move Hidden -> On or Hidden -> Off; ``reveal`` returns a
    new state and refuses to relabel a revealed edge.
    """

    __slots__ = ("on", "off")

    def __init__(self, on: frozenset[str] = frozenset(), off: frozenset[str] = frozenset()):
        if on & off:
            raise GraphError(f"edges both On and Off: {sorted(on & off)}")
        self.on = frozenset(on)
        self.off = frozenset(off)

    @classmethod
    def fresh(cls) -> "BeliefState":
        return cls()

    def state_of(self, eid: str) -> EdgeState:
        if eid in self.on:
            return EdgeState.ON
        if eid in self.off:
            return EdgeState.OFF
        return EdgeState.HIDDEN

    def is_hidden(self, eid: str) -> bool:
        return eid not in self.on and eid not in self.off

    def reveal(self, eid: str, state: EdgeState | str) -> "BeliefState":
        if isinstance(state, str):
            state = EdgeState(state.lower())
        if not self.is_hidden(eid):
            raise GraphError(f"edge {eid!r} already revealed")
        if state is EdgeState.ON:
            return BeliefState(self.on | {eid}, self.off)
        if state is EdgeState.OFF:
            return BeliefState(self.on, self.off | {eid})
        raise GraphError("reveal requires On or Off")

    @property
    def revealed_count(self) -> int:
        return len(self.on) + len(self.off)

    def check_consistent(self, g: GraphInstance) -> None:
        for eid in self.on | self.off:
            g.edge(eid)

    def __eq__(self, other) -> bool:
        return isinstance(other, BeliefState) and self.on == other.on and self.off == other.off

    def __hash__(self) -> int:
        return hash((self.on, self.off))

    def __repr__(self) -> str:
        return f"BeliefState(on={sorted(self.on)}, off={sorted(self.off)})"


PATH = "path"
CUT = "cut"


@dataclass(frozen=True)
class Certificate:
    """An edge set proving connectivity (path) or disconnection (cut)."""

    kind: str
    edges: tuple[str, ...]

    def __post_init__(self):
        if self.kind not in (PATH, CUT):
            raise GraphError(f"certificate kind must be path or cut, got {self.kind!r}")
        if self.kind == CUT:
            object.__setattr__(self, "edges", tuple(sorted(set(self.edges))))
        else:
            object.__setattr__(self, "edges", tuple(self.edges))

    @property
    def edge_set(self) -> frozenset[str]:
        return frozenset(self.edges)

    def __len__(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class CertificateStatus:
    state: str  # "path" | "cut" | "open"
    certificate: Optional[Certificate] = None

    @property
    def decided(self) -> bool:
        return self.state != "open"


OPEN_STATUS = CertificateStatus("open")


def _reachable(
    g: GraphInstance,
    excluded: frozenset[str],
    allowed: frozenset[str] | None = None,
    start: str | None = None,
) -> set[str]:
    """Nodes reachable from the source; ``allowed`` restricts to an edge subset."""
    if start is None:
        start = g.source
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for e in g.out_edges(u):
            if e.id in excluded:
                continue
            if allowed is not None and e.id not in allowed:
                continue
            v = e.head if u == e.tail else e.tail
            if g.directed and u != e.tail:
                continue
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def certificate_status(g: GraphInstance, b: BeliefState) -> CertificateStatus:
    """Decide the episode: On edges form a path, Off edges form a cut, or open.

    The returned certificate uses only On (resp. Off) edges.  Degenerate
    instances resolve immediately: source == target yields an empty path,
    a structurally disconnected pair yields an empty cut.
    """
    b.check_consistent(g)
    if g.source == g.target:
        return CertificateStatus(PATH, Certificate(PATH, ()))

    path = _shortest_path_in(g, allowed=b.on)
    if path is not None:
        return CertificateStatus(PATH, Certificate(PATH, path))

    reach = _reachable(g, excluded=b.off)
    if g.target not in reach:
        frontier = _frontier_edges(g, reach, restrict=b.off)
        return CertificateStatus(CUT, Certificate(CUT, frontier))
    return OPEN_STATUS


def _frontier_edges(g: GraphInstance, side: set[str], restrict: frozenset[str] | None = None) -> tuple[str, ...]:
    out = []
    for e in g.edges:
        crosses = (e.tail in side) != (e.head in side) if not g.directed else (e.tail in side and e.head not in side)
        if crosses and (restrict is None or e.id in restrict):
            out.append(e.id)
    return tuple(out)


def _shortest_path_in(g: GraphInstance, allowed: frozenset[str]) -> Optional[tuple[str, ...]]:
    """Hop-shortest s-t path within an edge subset, lexicographic tie-break."""
    result = _min_weight_path(g, weight=lambda e: 1, usable=lambda e: e.id in allowed)
    return None if result is None else result[0]


def min_hidden_path(g: GraphInstance, b: BeliefState) -> Optional[tuple[Certificate, int]]:
    """Path with the fewest hidden edges, Off edges forbidden.

    Ties broken by (hidden count, length, edge-id sequence).  Returns None
    exactly when the Off edges already form a cut (or the pair is
    structurally disconnected).
    """
    if g.source == g.target:
        return Certificate(PATH, ()), 0
    result = _min_weight_path(
        g,
        weight=lambda e: 0 if e.id in b.on else 1,
        usable=lambda e: e.id not in b.off,
    )
    if result is None:
        return None
    seq, cost = result
    return Certificate(PATH, seq), cost


def _min_weight_path(g, weight, usable) -> Optional[tuple[tuple[str, ...], int]]:
    """Dijkstra with labels (cost, length, edge-id tuple).

    The label order makes the returned path unique: cheapest first, then
    fewest edges, then lexicographically smallest id sequence.  Appending
    an edge preserves the order, so plain label-setting search is exact.
    """
    start, goal = g.source, g.target
    best: dict[str, tuple] = {}
    heap = [(0, 0, (), start)]
    while heap:
        cost, length, seq, u = heapq.heappop(heap)
        if u == goal:
            return seq, cost
        label = (cost, length, seq)
        if u in best and best[u] < label:
            continue
        best[u] = label
        for e in g.out_edges(u):
            if not usable(e):
                continue
            if g.directed and u != e.tail:
                continue
            v = e.other(u)
            new = (cost + weight(e), length + 1, seq + (e.id,))
            if v not in best or new < best[v]:
                best[v] = new
                heapq.heappush(heap, (*new, v))
    return None


def min_hidden_cut(g: GraphInstance, b: BeliefState) -> Optional[tuple[Certificate, int]]:
    """Cut with the fewest hidden edges, On edges forbidden.

    Capacities: hidden 1, Off 0, On effectively infinite.  Returns the
    canonical source-side minimum cut (edges leaving the set of nodes
    reachable in the final residual network), which is the same for every
    maximum flow and therefore a deterministic tie-break.  None exactly
    when the On edges already contain a path.
    """
    if g.source == g.target:
        return None
    if _shortest_path_in(g, allowed=b.on) is not None:
        return None
    inf = len(g.edges) + 5

    def cap(e: Edge) -> int:
        if e.id in b.on:
            return inf
        if e.id in b.off:
            return 0
        return 1

    side = _max_flow_source_side(g, cap)
    cut_edges = _frontier_edges(g, side)
    hidden = sum(1 for eid in cut_edges if b.is_hidden(eid))
    return Certificate(CUT, cut_edges), hidden


def _max_flow_source_side(g: GraphInstance, cap) -> set[str]:
    """Dinic's algorithm; returns the residual-reachable source side."""
    # arcs: [to, cap, rev_index]; undirected edges get capacity both ways
    adj: dict[str, list[list]] = {n: [] for n in g.nodes}

    def add_arc(u, v, c_uv, c_vu):
        adj[u].append([v, c_uv, len(adj[v])])
        adj[v].append([u, c_vu, len(adj[u]) - 1])

    for e in g.edges:
        c = cap(e)
        if g.directed:
            add_arc(e.tail, e.head, c, 0)
        else:
            add_arc(e.tail, e.head, c, c)

    s, t = g.source, g.target

    def bfs_levels():
        level = {s: 0}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for arc in adj[u]:
                v, c, _ = arc
                if c > 0 and v not in level:
                    level[v] = level[u] + 1
                    queue.append(v)
        return level if t in level else None

    def dfs(u, pushed, level, it):
        if u == t:
            return pushed
        while it[u] < len(adj[u]):
            arc = adj[u][it[u]]
            v, c, rev = arc
            if c > 0 and level.get(v, -1) == level[u] + 1:
                got = dfs(v, min(pushed, c), level, it)
                if got > 0:
                    arc[1] -= got
                    adj[v][rev][1] += got
                    return got
            it[u] += 1
        return 0

    inf = sum(max(cap(e), 0) for e in g.edges) + 1
    while True:
        level = bfs_levels()
        if level is None:
            break
        it = {n: 0 for n in g.nodes}
        while dfs(s, inf, level, it) > 0:
            pass

    side = {s}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        for v, c, _ in adj[u]:
            if c > 0 and v not in side:
                side.add(v)
                queue.append(v)
    return side
