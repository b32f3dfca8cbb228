"""Command-line surface.

One subcommand per artifact: ``exact`` and ``lower-bound`` for the exact
algorithm, ``heuristic`` for seeded episodes, ``eval`` for expected
costs, ``oracle`` for the brute-force optimum, ``endpoints`` for seeded
endpoint selection, ``hist`` for query-count histograms and ``serve``
for the wizard service.

Exit codes: 0 success, 2 input error, 3 guard exceeded, 4 timeout with a
lower bound.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from .evaluation import (
    GuardExceeded,
    dp_oracle,
    evaluate_exhaustive,
    evaluate_sampled,
    median_seed,
)
from .exact import CSV_HEADER, ExactConfig, solve
from .graph import EdgeState, GraphError, certificate_status
from .graphio import load_graph, pick_endpoints
from .heuristics import HeuristicError, parse_heuristic
from .ip import get_backend
from .tree import parse_tree, serialize_tree

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_GUARD = 3
EXIT_TIMEOUT = 4


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _add_instance_args(p: argparse.ArgumentParser, need_endpoints: bool = True) -> None:
    p.add_argument("--graph", required=True, help="graph file path")
    p.add_argument("--source", required=need_endpoints, default=None)
    p.add_argument("--target", required=need_endpoints, default=None)
    p.add_argument("--budget", type=int, default=None, help="query limit B")
    p.add_argument("--prob", type=float, default=0.5, help="On probability (default 0.5)")


def _load_instance(args) -> "GraphInstance":
    source = args.source
    target = args.target
    if source is None or target is None:
        raise CliError("--source and --target are required")
    try:
        return load_graph(args.graph, source, target, p=args.prob, budget=args.budget)
    except (GraphError, OSError) as exc:
        raise CliError(str(exc))


def _write_out(args, payload: dict) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_exact(args) -> int:
    g = _load_instance(args)
    config = ExactConfig(
        initial_structure=args.initial_structure,
        backend=get_backend(args.backend),
        time_budget=args.time_limit,
        max_iterations=args.max_iterations,
    )
    result = solve(g, config)
    for line in [CSV_HEADER] + [r.csv_line() for r in result.reports]:
        print(line)
    print(f"status={result.status} cost={result.cost!r}")
    payload = {
        "status": result.status,
        "cost": result.cost,
        "iterations": [vars(r) for r in result.reports],
        "tree": serialize_tree(result.tree) if result.tree else None,
        "paths": [list(c.edges) for c in result.paths],
        "cuts": [sorted(c.edges) for c in result.cuts],
    }
    _write_out(args, payload)
    if args.tree_out and result.tree is not None:
        Path(args.tree_out).write_text(serialize_tree(result.tree))
    return EXIT_OK if result.optimal else EXIT_TIMEOUT


def cmd_heuristic(args) -> int:
    g = _load_instance(args)
    try:
        policy = parse_heuristic(args.spec)
    except HeuristicError as exc:
        raise CliError(str(exc))
    rng = random.Random(args.seed)
    episodes = []
    for _ in range(args.episodes):
        from .graph import BeliefState

        belief = BeliefState.fresh()
        transcript = []
        queries = 0
        status = certificate_status(g, belief)
        while not status.decided and queries < g.budget:
            edge = policy.propose(g, belief, g.budget - queries)
            if edge is None:
                break
            answer = EdgeState.ON if rng.random() < g.p else EdgeState.OFF
            queries += 1
            transcript.append((edge, answer.value))
            belief = belief.reveal(edge, answer)
            status = certificate_status(g, belief)
        outcome = status.state if status.decided else "limit"
        episodes.append({"queries": queries, "outcome": outcome, "transcript": transcript})
        print(
            f"episode: {queries} queries, outcome {outcome}: "
            + " ".join(f"{e}={a}" for e, a in transcript)
        )
    _write_out(args, {"heuristic": args.spec, "episodes": episodes})
    return EXIT_OK


def cmd_eval(args) -> int:
    g = _load_instance(args)
    spec = args.spec
    if Path(spec).is_file():
        policy = parse_tree(Path(spec).read_text())
        label = f"tree-file:{spec}"
    else:
        try:
            policy = parse_heuristic(spec)
        except HeuristicError as exc:
            raise CliError(str(exc))
        label = spec
    try:
        if args.sampled:
            result = evaluate_sampled(policy, g, seed=args.seed, with_histogram=True)
        else:
            result = evaluate_exhaustive(policy, g, with_histogram=True)
    except GuardExceeded as exc:
        raise CliError(str(exc), EXIT_GUARD)
    print(f"{label}: expected_queries={result.expected_queries!r} ({result.method})")
    if args.csv:
        Path(args.csv).write_text(result.result_csv(label))
    _write_out(
        args,
        {
            "policy": label,
            "expected_queries": result.expected_queries,
            "method": result.method,
            "outcomes": result.outcome_weights,
            "histogram": {str(k): v for k, v in (result.histogram or {}).items()},
        },
    )
    return EXIT_OK


def cmd_oracle(args) -> int:
    g = _load_instance(args)
    try:
        value = dp_oracle(g)
    except GuardExceeded as exc:
        raise CliError(str(exc), EXIT_GUARD)
    print(f"optimal_expected_queries={value!r}")
    _write_out(args, {"optimal_expected_queries": value})
    return EXIT_OK


def cmd_endpoints(args) -> int:
    # endpoints are what we are choosing; load with a placeholder pair
    from .graphio import parse_graph_text

    try:
        text = Path(args.graph).read_text()
    except OSError as exc:
        raise CliError(str(exc))
    first_node = None
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line and line not in ("directed", "undirected"):
            first_node = line.split()[1]
            break
    if first_node is None:
        raise CliError("graph file has no edges")
    try:
        g = parse_graph_text(text, first_node, first_node, p=args.prob, name=args.graph)
    except GraphError as exc:
        raise CliError(str(exc))
    if args.median:
        seed, cost = median_seed(g, seeds=range(args.median_seeds), budget=args.median_budget)
        s, t = pick_endpoints(g, seed)
        print(f"median seed={seed} cost={cost!r} source={s} target={t}")
        _write_out(args, {"seed": seed, "cost": cost, "source": s, "target": t})
    else:
        try:
            s, t = pick_endpoints(g, args.seed)
        except GraphError as exc:
            raise CliError(str(exc))
        print(f"seed={args.seed} source={s} target={t}")
        _write_out(args, {"seed": args.seed, "source": s, "target": t})
    return EXIT_OK


def cmd_hist(args) -> int:
    g = _load_instance(args)
    if Path(args.spec).is_file():
        policy = parse_tree(Path(args.spec).read_text())
    else:
        policy = parse_heuristic(args.spec)
    try:
        if args.sampled:
            result = evaluate_sampled(policy, g, seed=args.seed, with_histogram=True)
        else:
            result = evaluate_exhaustive(policy, g, with_histogram=True)
    except GuardExceeded as exc:
        raise CliError(str(exc), EXIT_GUARD)
    csv = result.histogram_csv()
    if args.out:
        Path(args.out).write_text(csv)
    else:
        sys.stdout.write(csv)
    return EXIT_OK


def cmd_lower_bound(args) -> int:
    g = _load_instance(args)
    config = ExactConfig(
        initial_structure=args.initial_structure,
        backend=get_backend(args.backend),
        time_budget=args.time_limit,
        max_iterations=args.max_iterations,
        on_report=lambda r: print(r.csv_line()),
    )
    print(CSV_HEADER)
    result = solve(g, config)
    print(f"status={result.status} bound={result.cost!r}")
    _write_out(
        args,
        {
            "status": result.status,
            "bound": result.cost,
            "iterations": [vars(r) for r in result.reports],
        },
    )
    return EXIT_OK if result.optimal else EXIT_TIMEOUT


def cmd_serve(args) -> int:
    from .service import serve_forever

    serve_forever(args.host, args.port, args.store, args.ui_dir)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stprobe",
        description="adaptive edge-query policies for s-t connectivity testing",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact", help="run the exact algorithm to optimality")
    _add_instance_args(p)
    p.add_argument("--backend", default="bundled", choices=["bundled", "milp"])
    p.add_argument("--initial-structure", default="complete:4")
    p.add_argument("--time-limit", type=float, default=72 * 3600.0)
    p.add_argument("--max-iterations", type=int, default=10_000)
    p.add_argument("--out", default=None)
    p.add_argument("--tree-out", default=None)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("lower-bound", help="exact algorithm within a time budget; prints the iteration log")
    _add_instance_args(p)
    p.add_argument("--backend", default="bundled", choices=["bundled", "milp"])
    p.add_argument("--initial-structure", default="complete:4")
    p.add_argument("--time-limit", type=float, default=60.0)
    p.add_argument("--max-iterations", type=int, default=10_000)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_lower_bound)

    p = sub.add_parser("heuristic", help="run seeded episodes of a heuristic")
    p.add_argument("spec", help="heuristic spec, e.g. h1 or tree:4 or mcts:2,1000,0.2,0")
    _add_instance_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--episodes", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_heuristic)

    p = sub.add_parser("eval", help="expected cost of a heuristic or serialized tree")
    p.add_argument("spec", help="heuristic spec or policy-tree file")
    _add_instance_args(p)
    p.add_argument("--sampled", action="store_true", help="force the sampled evaluator")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", default=None, help="write a one-row result CSV")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("oracle", help="brute-force optimal expected cost (small graphs)")
    _add_instance_args(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("endpoints", help="seeded endpoint selection")
    p.add_argument("--graph", required=True)
    p.add_argument("--prob", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--median", action="store_true", help="pick the median-difficulty seed")
    p.add_argument("--median-seeds", type=int, default=11)
    p.add_argument("--median-budget", type=int, default=10)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_endpoints)

    p = sub.add_parser("hist", help="query-count histogram as CSV")
    p.add_argument("spec")
    _add_instance_args(p)
    p.add_argument("--sampled", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_hist)

    p = sub.add_parser("serve", help="run the wizard service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--store", default="sessions.sqlite")
    p.add_argument("--ui-dir", default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except GuardExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
