# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled twin of ``stprobe._labeling``.

Same branch-and-bound in normalized cost space, same canonical state
keys, candidate collapse, promise ordering, one-step bounds and pruning
lines, and the same floating-point evaluation order; only the loop
machinery is typed.  Certificate and edge masks stay Python ints (via
the ``_ONE`` object shifts) so instances are not limited to machine-word
widths.  Any change here must be mirrored in the pure module and is
pinned by the kernel equivalence tests.
"""

from cpython.mem cimport PyMem_Free, PyMem_Malloc

KERNEL_NAME = "cython"

_ONE = 1  # Python int; object shifts keep masks arbitrary-precision

cdef double INF = float("inf")


class LabelingInfeasible(RuntimeError):
    pass


cdef class LabelingSearch:
    cdef public dict memo
    cdef public list shape
    cdef public bint last_exact
    cdef int n_nodes, n_edges, budget
    cdef double p
    cdef int* left
    cdef int* right
    cdef int* depth
    cdef int* side
    cdef object all_cuts, all_paths
    cdef list edge_cut_hits, edge_path_hits
    cdef bint root_done_allowed
    cdef int max_cut_hits, max_path_hits
    cdef dict _lower
    cdef dict _shape_children

    def __cinit__(
        self,
        left,
        right,
        depth,
        side,
        budget,
        p,
        n_edges,
        cut_masks,
        path_masks,
        edge_cut_hits,
        edge_path_hits,
        root_done_allowed,
    ):
        cdef int n = len(left)
        self.n_nodes = n
        self.left = <int*> PyMem_Malloc(n * sizeof(int))
        self.right = <int*> PyMem_Malloc(n * sizeof(int))
        self.depth = <int*> PyMem_Malloc(n * sizeof(int))
        self.side = <int*> PyMem_Malloc(n * sizeof(int))
        cdef int i
        for i in range(n):
            self.left[i] = left[i]
            self.right[i] = right[i]
            self.depth[i] = depth[i]
            self.side[i] = side[i]
        self.budget = budget
        self.p = p
        self.n_edges = n_edges
        self.all_cuts = (_ONE << len(cut_masks)) - 1
        self.all_paths = (_ONE << len(path_masks)) - 1
        self.edge_cut_hits = list(edge_cut_hits)
        self.edge_path_hits = list(edge_path_hits)
        self.root_done_allowed = bool(root_done_allowed)
        self.memo = {}
        self.last_exact = True
        self.shape = self._shape_ids(list(left), list(right), list(depth))
        cdef int mc = 0, mp = 0
        for m in edge_cut_hits:
            if m.bit_count() > mc:
                mc = m.bit_count()
        for m in edge_path_hits:
            if m.bit_count() > mp:
                mp = m.bit_count()
        self.max_cut_hits = mc if mc > 0 else 1
        self.max_path_hits = mp if mp > 0 else 1
        self._lower = {}
        self._shape_children = {}
        for i in range(n):
            self._shape_children[self.shape[i]] = (
                -1 if self.left[i] == -1 else self.shape[self.left[i]],
                -1 if self.right[i] == -1 else self.shape[self.right[i]],
            )

    def __dealloc__(self):
        PyMem_Free(self.left)
        PyMem_Free(self.right)
        PyMem_Free(self.depth)
        PyMem_Free(self.side)

    def _shape_ids(self, left, right, depth):
        table = {}
        shape = [0] * len(left)
        for node in sorted(range(len(left)), key=lambda i: -depth[i]):
            l, r = left[node], right[node]
            key = (
                -1 if l == -1 else shape[l],
                -1 if r == -1 else shape[r],
            )
            if key not in table:
                table[key] = len(table)
            shape[node] = table[key]
        return shape

    cdef bint c_done_allowed(self, int node, object live_c, object live_p):
        cdef int sd = self.side[node]
        if sd == 1:
            return live_c == 0
        if sd == 2:
            return live_p == 0
        return self.root_done_allowed

    def done_allowed(self, int node, live_c, live_p):
        return self.c_done_allowed(node, live_c, live_p)

    cdef double lower_bound(self, int shape, int depth_left, int a, int b):
        if a <= 0 or b <= 0:
            return 0.0
        if depth_left == 0:
            return 0.0
        key = (shape, depth_left, a, b)
        hit = self._lower.get(key)
        if hit is not None:
            return hit
        l_shape, r_shape = self._shape_children[shape]
        cdef double total = 1.0
        if l_shape != -1:
            total += self.p * self.lower_bound(l_shape, depth_left - 1, a - 1, b)
        if r_shape != -1:
            total += (1.0 - self.p) * self.lower_bound(r_shape, depth_left - 1, a, b - 1)
        self._lower[key] = total
        return total

    @staticmethod
    def _units_py(count, per_query):
        return -(-count // per_query)

    def signatures(self, used, live_c, live_p):
        cdef list sigs = []
        cdef dict reps = {}
        cdef int e
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

    cpdef double greedy(self, int node, object on, object off, object hc, object hp) except? -2.0:
        cdef object live_c = self.all_cuts & ~hc
        cdef object live_p = self.all_paths & ~hp
        if self.c_done_allowed(node, live_c, live_p):
            return 0.0
        if self.budget - self.depth[node] == 0:
            return 0.0
        _, order = self.signatures(on | off, live_c, live_p)
        if not order:
            raise LabelingInfeasible(f"no legal label at node {node}")
        sig, e = order[0]
        cdef object bit = _ONE << e
        cdef int l = self.left[node]
        cdef int r = self.right[node]
        cdef double total = 1.0
        if l != -1:
            total += self.p * self.greedy(
                l, on | bit, off, hc | self.edge_cut_hits[e], hp
            )
        if r != -1:
            total += (1.0 - self.p) * self.greedy(
                r, on, off | bit, hc, hp | self.edge_path_hits[e]
            )
        return total

    cpdef double q(self, int node, object on, object off, object hc, object hp,
                   double ub=INF) except? -2.0:
        cdef object live_c = self.all_cuts & ~hc
        cdef object live_p = self.all_paths & ~hp
        if self.c_done_allowed(node, live_c, live_p):
            self.last_exact = True
            return 0.0
        cdef int depth_left = self.budget - self.depth[node]
        if depth_left == 0:
            self.last_exact = True
            return 0.0
        cdef int shape = self.shape[node]
        cdef int sd = self.side[node]
        cdef int a_units = -((-<int>live_c.bit_count()) // self.max_cut_hits)
        cdef int b_units = -((-<int>live_p.bit_count()) // self.max_path_hits)
        if sd == 1:
            if b_units < 1:
                b_units = 1  # a left child can only close via cuts
        elif sd == 2:
            if a_units < 1:
                a_units = 1
        else:
            if a_units < 1:
                a_units = 1
            if b_units < 1:
                b_units = 1
        cdef double h = self.lower_bound(shape, depth_left, a_units, b_units)
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
        cdef int l = self.left[node]
        cdef int r = self.right[node]
        cdef int l_shape, r_shape
        l_shape, r_shape = self._shape_children[shape]
        cdef double p = self.p
        cdef double best = -1.0
        cdef double line, lv, rv, total, h_l, h_r
        cdef int e, a_left, b_right
        cdef object bit, sc, sp
        for sig, e in order:
            sc = sig[0]
            sp = sig[1]
            line = ub if best < 0.0 else best
            a_left = -((-<int>((live_c & ~sc).bit_count())) // self.max_cut_hits)
            b_right = -((-<int>((live_p & ~sp).bit_count())) // self.max_path_hits)
            h_l = 0.0
            if l != -1:
                h_l = self.lower_bound(
                    l_shape, depth_left - 1, a_left, b_units if b_units > 1 else 1
                )
            h_r = 0.0
            if r != -1:
                h_r = self.lower_bound(
                    r_shape, depth_left - 1, a_units if a_units > 1 else 1, b_right
                )
            if 1.0 + p * h_l + (1.0 - p) * h_r >= line:
                continue
            bit = _ONE << e
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
        if entry is None or (not entry[0] and entry[1] < ub):
            self.memo[key] = (False, ub)
        self.last_exact = False
        return ub

    def solve(self):
        cdef double incumbent = self.greedy(0, 0, 0, 0, 0)
        return self.q(0, 0, 0, 0, 0, incumbent + 1e-9)


def make_searcher(*args, **kw):
    return LabelingSearch(*args, **kw)


def solve_labeling(*args):
    searcher = make_searcher(*args)
    return searcher.solve(), searcher.memo
