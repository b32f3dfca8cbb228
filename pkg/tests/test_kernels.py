"""The compiled kernel and the pure fallback must match exactly."""

import random

import pytest

from stprobe import _labeling as pure
from stprobe.exact import ExactConfig, solve
from stprobe.graph import Certificate
from stprobe.ip import _kernel_inputs, referenced_edges
from stprobe.tree import TreeStructure, node_reach_prob

from conftest import (
    all_cuts_certificates,
    all_paths_certificates,
    random_instance,
)

try:
    from stprobe import _labeling_cy as compiled
except ImportError:
    compiled = None

needs_compiled = pytest.mark.skipif(
    compiled is None, reason="compiled kernel not built"
)


def kernel_args(s: TreeStructure, paths, cuts, p: float, budget: int):
    edges = referenced_edges(paths, cuts)
    cut_masks, path_masks, edge_cut_hits, edge_path_hits = _kernel_inputs(
        s, paths, cuts, edges
    )
    return (
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
        not paths or not cuts,
    )


def random_labeling_case(seed: int):
    rng = random.Random(seed)
    g = random_instance(seed, max_edges=8)
    paths = all_paths_certificates(g)
    cuts = all_cuts_certificates(g)
    rng.shuffle(paths)
    rng.shuffle(cuts)
    paths = sorted(paths[: rng.randint(1, len(paths))], key=lambda c: c.edges)
    cuts = sorted(cuts[: rng.randint(1, len(cuts))], key=lambda c: tuple(sorted(c.edges)))
    depth = rng.randint(1, 3)
    s = TreeStructure.complete(depth)
    budget = rng.randint(depth, depth + 2)
    p = rng.choice([0.3, 0.5, 0.7])
    return s, paths, cuts, p, budget


@needs_compiled
def test_kernels_agree_on_goldens():
    path_a = Certificate("path", ("a",))
    path_bc = Certificate("path", ("b", "c"))
    cut_ab = Certificate("cut", ("a", "b"))
    cut_ac = Certificate("cut", ("a", "c"))
    cases = [
        (TreeStructure.complete(1), [path_a], [cut_ab], 0.5, 3),
        (TreeStructure.complete(2), [path_a, path_bc], [cut_ab, cut_ac], 0.5, 3),
        (TreeStructure.complete(3), [path_a, path_bc], [cut_ab, cut_ac], 0.3, 4),
    ]
    for case in cases:
        args = kernel_args(*case)
        cost_p, memo_p = pure.solve_labeling(*args)
        cost_c, memo_c = compiled.solve_labeling(*args)
        assert cost_p == cost_c  # bit-identical, same operation order
        assert memo_p == memo_c


@needs_compiled
def test_kernels_agree_on_random_instances():
    for seed in range(40):
        case = random_labeling_case(seed)
        args = kernel_args(*case)
        cost_p, memo_p = pure.solve_labeling(*args)
        cost_c, memo_c = compiled.solve_labeling(*args)
        assert cost_p == cost_c, f"seed {seed}"
        assert memo_p == memo_c, f"seed {seed}"


@needs_compiled
def test_forced_pure_solver_matches_compiled_end_to_end(fig1):
    import subprocess
    import sys
    from pathlib import Path

    repo = Path(__file__).resolve().parent.parent
    script = (
        "from stprobe.exact import solve, ExactConfig;"
        "from stprobe.graphio import load_graph;"
        "from stprobe.tree import serialize_tree;"
        "g = load_graph('graphs/fig1.graph', 's', 't', budget=3);"
        "r = solve(g, ExactConfig(initial_structure='root'));"
        "print(repr(r.cost)); print(serialize_tree(r.tree), end='')"
    )
    outputs = {}
    for mode, env_extra in (("compiled", {}), ("pure", {"STPROBE_PURE": "1"})):
        env = {"PYTHONPATH": str(repo / "src"), "PATH": "/usr/bin:/bin", **env_extra}
        res = subprocess.run(
            [sys.executable, "-c", script],
            capture_output=True, text=True, cwd=repo, env=env,
        )
        assert res.returncode == 0, res.stderr
        outputs[mode] = res.stdout
    assert outputs["compiled"] == outputs["pure"]


def test_pure_kernel_single_edge_support():
    s = TreeStructure.complete(2)
    path = Certificate("path", ("a",))
    cut = Certificate("cut", ("a",))
    args = kernel_args(s, [path], [cut], 0.5, 5)
    cost, _ = pure.solve_labeling(*args)
    assert cost == 1.0  # both children of the root query resolve immediately


@needs_compiled
def test_kernels_agree_beyond_32_edges():
    # masks past bit 31 must stay arbitrary-precision in the compiled twin
    edges = [f"e{k:02d}" for k in range(40)]
    long_path = Certificate("path", tuple(edges))
    cuts = [Certificate("cut", (edges[k],)) for k in (0, 20, 33, 39)]
    s = TreeStructure.complete(2)
    args = kernel_args(s, [long_path], cuts, 0.5, 4)
    cost_p, memo_p = pure.solve_labeling(*args)
    cost_c, memo_c = compiled.solve_labeling(*args)
    assert cost_p == cost_c
    assert memo_p == memo_c
    assert len(memo_p) > 0
