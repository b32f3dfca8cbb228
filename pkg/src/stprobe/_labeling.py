"""Pure-Python kernel for the optimal correct-tree labeling search.

Given a tree structure and the certificate sets as bitmasks, compute the
minimum-cost assignment of Query/Done/Limit labels subject to the
correctness rules:

* a node is Done or queries one edge (depth-B nodes may instead be bare
  limit leaves);
* children of Done are Done; no edge repeats along a route;
* a first-time Done at a left child must have hit every cut with an On
  answer; at a right child, every path with an Off answer; at the root
  it requires an empty path set or an empty cut set.

The search is a depth-first branch and bound in normalized cost space:
q(state) is the expected number of further queries given that the node
was reached, so the objective is q at the root and sibling subtrees can
share cache entries.  Pruning is driven by an upper bound threaded down
the recursion (the incumbent at each choice point), plus a one-step
feasibility bound per candidate.  Done is taken greedily whenever legal
(always strictly cheaper), and states are canonicalized: two states
merge when they agree on the remaining structure shape, the remaining
depth budget, the undisproved cuts and paths, and the multiset of live
signatures of the still-queryable edges (live cuts hit, live paths hit).
Edges with equal signatures are interchangeable, so only the smallest
edge id per signature class is branched on.

The memo stores exact values and, for pruned states, certified lower
bounds; re-entering a pruned state with a laxer bound recomputes it.

A compiled twin of this module lives in ``_labeling_cy.pyx``; both must
stay step-for-step identical, including the floating-point evaluation
order.  The kernel equivalence tests enforce this.
"""

from __future__ import annotations

INF = float("inf")

KERNEL_NAME = "pure"


class LabelingInfeasible(RuntimeError):
    """No legal label at some node; cannot occur for certificate sets
    with pairwise path/cut intersection (guarded as an internal error)."""


class LabelingSearch:
    """Resumable search: ``q(...)`` may be called again after ``solve``
    to value states on demand during tree reconstruction."""

    def __init__(
        self,
        left: list[int],
        right: list[int],
        depth: list[int],
        side: list[int],
        budget: int,
        p: float,
        n_edges: int,
        cut_masks: list[int],
        path_masks: list[int],
        edge_cut_hits: list[int],
        edge_path_hits: list[int],
        root_done_allowed: bool,
    ):
        self.left = list(left)
        self.right = list(right)
        self.depth = list(depth)
        self.side = list(side)
        self.budget = budget
        self.p = p
        self.n_edges = n_edges
        self.all_cuts = (1 << len(cut_masks)) - 1
        self.all_paths = (1 << len(path_masks)) - 1
        self.edge_cut_hits = list(edge_cut_hits)
        self.edge_path_hits = list(edge_path_hits)
        self.root_done_allowed = bool(root_done_allowed)
        self.memo: dict = {}
        self.last_exact = True  # whether the latest q() return was exact
        self.shape = self._shape_ids()
        self.max_cut_hits = max(
            (m.bit_count() for m in edge_cut_hits), default=0
        ) or 1
        self.max_path_hits = max(
            (m.bit_count() for m in edge_path_hits), default=0
        ) or 1
        self._lower: dict = {}
        self._shape_children: dict[int, tuple[int, int]] = {}
        for node in range(len(self.left)):
            l, r = self.left[node], self.right[node]
            self._shape_children[self.shape[node]] = (
                -1 if l == -1 else self.shape[l],
                -1 if r == -1 else self.shape[r],
            )

    def _shape_ids(self) -> list[int]:
        """Canonical id per node of its subtree shape."""
        table: dict = {}
        shape = [0] * len(self.left)
        for node in sorted(range(len(self.left)), key=lambda i: -self.depth[i]):
            l, r = self.left[node], self.right[node]
            key = (
                -1 if l == -1 else shape[l],
                -1 if r == -1 else shape[r],
            )
            if key not in table:
                table[key] = len(table)
            shape[node] = table[key]
        return shape

    def done_allowed(self, node: int, live_c, live_p) -> bool:
        sd = self.side[node]
        if sd == 1:
            return live_c == 0
        if sd == 2:
            return live_p == 0
        return self.root_done_allowed

    def lower_bound(self, shape: int, depth_left: int, a: int, b: int) -> float:
        """Admissible bound on q: ``a``/``b`` are floors on how many more
        queries must answer On (resp. Off) before any Done can be claimed.
        Shape-aware, so free subtree ends (missing children, limit depth)
        are respected."""
        if a <= 0 or b <= 0:
            return 0.0
        if depth_left == 0:
            return 0.0
        key = (shape, depth_left, a, b)
        hit = self._lower.get(key)
        if hit is not None:
            return hit
        l_shape, r_shape = self._shape_children[shape]
        total = 1.0
        if l_shape != -1:
            total += self.p * self.lower_bound(l_shape, depth_left - 1, a - 1, b)
        if r_shape != -1:
            total += (1.0 - self.p) * self.lower_bound(r_shape, depth_left - 1, a, b - 1)
        self._lower[key] = total
        return total

    @staticmethod
    def _units(count: int, per_query: int) -> int:
        return -(-count // per_query)

    def signatures(self, used, live_c, live_p):
        """(canonical key part, candidate reps ordered by promise)."""
        sigs = []
        reps: dict = {}
        for e in range(self.n_edges):
            if (used >> e) & 1:
                continue
            sc = self.edge_cut_hits[e] & live_c
            sp = self.edge_path_hits[e] & live_p
            if sc == 0 and sp == 0:
                continue
            sig = (sc, sp)
            sigs.append(sig)
            if sig not in reps:
                reps[sig] = e
        sigs.sort()
        order = sorted(
            reps.items(),
            key=lambda item: (-(item[0][0].bit_count() + item[0][1].bit_count()), item[1]),
        )
        return tuple(sigs), order

    def greedy(self, node: int, on, off, hc, hp) -> float:
        """Cost of the no-backtracking labeling: an incumbent for solve()."""
        live_c = self.all_cuts & ~hc
        live_p = self.all_paths & ~hp
        if self.done_allowed(node, live_c, live_p):
            return 0.0
        if self.budget - self.depth[node] == 0:
            return 0.0
        _, order = self.signatures(on | off, live_c, live_p)
        if not order:
            raise LabelingInfeasible(f"no legal label at node {node}")
        (sc, sp), e = order[0]
        bit = 1 << e
        l, r = self.left[node], self.right[node]
        total = 1.0
        if l != -1:
            total += self.p * self.greedy(
                l, on | bit, off, hc | self.edge_cut_hits[e], hp
            )
        if r != -1:
            total += (1.0 - self.p) * self.greedy(
                r, on, off | bit, hc, hp | self.edge_path_hits[e]
            )
        return total

    def q(self, node: int, on, off, hc, hp, ub: float = INF) -> float:
        """Expected further queries from ``node``, exact when below ``ub``.

        ``self.last_exact`` reports whether the return value is the true
        optimum (True) or only a certified lower bound of at least ``ub``
        because every labeling of the subtree was pruned (False).
        Candidates count toward the optimum only when both child calls
        came back exact, so threshold rounding can never smuggle a bound
        in as a value.
        """
        live_c = self.all_cuts & ~hc
        live_p = self.all_paths & ~hp
        if self.done_allowed(node, live_c, live_p):
            self.last_exact = True
            return 0.0
        depth_left = self.budget - self.depth[node]
        if depth_left == 0:
            self.last_exact = True
            return 0.0
        shape = self.shape[node]
        a_units = self._units(live_c.bit_count(), self.max_cut_hits)
        b_units = self._units(live_p.bit_count(), self.max_path_hits)
        if self.side[node] == 1:
            b_units = max(b_units, 1)  # a left child can only close via cuts
        elif self.side[node] == 2:
            a_units = max(a_units, 1)
        else:
            a_units = max(a_units, 1)
            b_units = max(b_units, 1)
        h = self.lower_bound(shape, depth_left, a_units, b_units)
        if h >= ub:
            self.last_exact = False
            return h
        sig_key, order = self.signatures(on | off, live_c, live_p)
        key = (shape, depth_left, live_c, live_p, sig_key)
        entry = self.memo.get(key)
        if entry is not None:
            if entry[0]:
                self.last_exact = True
                return entry[1]
            if entry[1] >= ub:
                self.last_exact = False
                return entry[1]
        if not order:
            raise LabelingInfeasible(f"no legal label at node {node}")
        l, r = self.left[node], self.right[node]
        l_shape, r_shape = self._shape_children[shape]
        p = self.p
        best = -1.0
        for (sc, sp), e in order:
            line = ub if best < 0.0 else best
            a_left = self._units((live_c & ~sc).bit_count(), self.max_cut_hits)
            b_right = self._units((live_p & ~sp).bit_count(), self.max_path_hits)
            h_l = 0.0
            if l != -1:
                h_l = self.lower_bound(
                    l_shape, depth_left - 1, a_left, max(b_units, 1)
                )
            h_r = 0.0
            if r != -1:
                h_r = self.lower_bound(
                    r_shape, depth_left - 1, max(a_units, 1), b_right
                )
            if 1.0 + p * h_l + (1.0 - p) * h_r >= line:
                continue
            bit = 1 << e
            if l != -1:
                lv = self.q(l, on | bit, off, hc | self.edge_cut_hits[e], hp,
                            (line - 1.0 - (1.0 - p) * h_r) / p)
                if not self.last_exact:
                    continue
                total = 1.0 + p * lv
            else:
                total = 1.0
            if total + (1.0 - p) * h_r >= line:
                continue
            if r != -1:
                rv = self.q(r, on, off | bit, hc, hp | self.edge_path_hits[e],
                            (line - total) / (1.0 - p))
                if not self.last_exact:
                    continue
                total += (1.0 - p) * rv
            if best < 0.0 or total < best:
                best = total
        if 0.0 <= best < ub:
            self.memo[key] = (True, best)
            self.last_exact = True
            return best
        # everything at or above ub: certify ub as a lower bound
        if entry is None or (not entry[0] and entry[1] < ub):
            self.memo[key] = (False, ub)
        self.last_exact = False
        return ub

    def solve(self) -> float:
        incumbent = self.greedy(0, 0, 0, 0, 0)
        return self.q(0, 0, 0, 0, 0, incumbent + 1e-9)


def make_searcher(*args, **kw) -> LabelingSearch:
    return LabelingSearch(*args, **kw)


def solve_labeling(*args):
    """Convenience wrapper: returns (optimal normalized cost, memo)."""
    searcher = make_searcher(*args)
    return searcher.solve(), searcher.memo
