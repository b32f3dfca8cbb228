#!/usr/bin/env python3
"""Benchmark the compiled labeling kernel against the pure-Python twin.

Each case runs the exact algorithm once to harvest its final (and
hardest) labeling instance, then times ``solve_labeling`` on that
instance for both kernels.  Run from the repository root::

    PYTHONPATH=src python3 benchmarks/bench_kernels.py
"""

import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from stprobe import _labeling as pure
from stprobe.exact import ExactConfig, solve
from stprobe.graph import GraphInstance
from stprobe.ip import _kernel_inputs, referenced_edges
from stprobe.tree import node_reach_prob  # noqa: F401

try:
    from stprobe import _labeling_cy as compiled
except ImportError:
    compiled = None


def grid(rows: int, cols: int, budget: int) -> GraphInstance:
    nodes = [f"v{r}_{c}" for r in range(rows) for c in range(cols)]
    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((f"h{r:02d}_{c:02d}", f"v{r}_{c}", f"v{r}_{c+1}"))
            if r + 1 < rows:
                edges.append((f"w{r:02d}_{c:02d}", f"v{r}_{c}", f"v{r+1}_{c}"))
    return GraphInstance(
        nodes=nodes, edges=edges, directed=False,
        source="v0_0", target=f"v{rows-1}_{cols-1}", p=0.5, budget=budget,
    )


def ladder(length: int, budget: int) -> GraphInstance:
    return grid(2, length, budget)


def harvest_final_instance(g: GraphInstance):
    """Run the exact algorithm and keep its last labeling input."""
    result = solve(g, ExactConfig(initial_structure="root"))
    s = result.tree.structure
    paths, cuts = result.paths, result.cuts
    edges = referenced_edges(paths, cuts)
    cut_masks, path_masks, edge_cut_hits, edge_path_hits = _kernel_inputs(
        s, paths, cuts, edges
    )
    args = (
        list(s.left), list(s.right), list(s.depth), list(s.side),
        g.budget, g.p, len(edges), cut_masks, path_masks,
        edge_cut_hits, edge_path_hits, not paths or not cuts,
    )
    label = (
        f"|S|={len(s)} |P|={len(paths)} |C|={len(cuts)} "
        f"|E^R|={len(edges)} B={g.budget}"
    )
    return args, label


def time_kernel(kernel, args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        kernel.solve_labeling(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    cases = [
        ("fig1-like ladder 2x2, B=3", ladder(2, 3)),
        ("ladder 2x6, B=6", ladder(6, 6)),
        ("grid 4x4, B=5", grid(4, 4, 5)),
        ("grid 5x5, B=5", grid(5, 5, 5)),
        ("grid 8x8, B=5", grid(8, 8, 5)),
    ]
    print(f"{'case':<28} {'instance':<38} {'pure':>10} {'cython':>10} {'speedup':>8}")
    for name, g in cases:
        args, label = harvest_final_instance(g)
        repeats = 3
        t_pure = time_kernel(pure, args, repeats)
        if compiled is None:
            print(f"{name:<28} {label:<38} {t_pure*1e3:9.2f}ms {'n/a':>10} {'n/a':>8}")
            continue
        t_cy = time_kernel(compiled, args, repeats)
        cost_p, _ = pure.solve_labeling(*args)
        cost_c, _ = compiled.solve_labeling(*args)
        assert cost_p == cost_c
        print(
            f"{name:<28} {label:<38} {t_pure*1e3:9.2f}ms {t_cy*1e3:9.2f}ms "
            f"{t_pure/t_cy:7.2f}x"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
