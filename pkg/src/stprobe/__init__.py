"""Adaptive edge-query policies for s-t connectivity testing under a budget."""

from .graph import (
    BeliefState,
    Certificate,
    CertificateStatus,
    Edge,
    EdgeState,
    GraphError,
    GraphInstance,
    certificate_status,
    min_hidden_cut,
    min_hidden_path,
)
from .tree import (
    Label,
    PolicyTree,
    ResponseVector,
    TreeStructure,
    expected_cost,
    node_reach_prob,
    parse_tree,
    run_policy,
    serialize_tree,
    validate_done_claims,
)
from .ip import (
    IPInstance,
    build_ip,
    export_lp,
    get_backend,
    referenced_edges,
    solve_optimal_tree,
)
from .exact import ExactConfig, ExactResult, IterationReport, solve
from .evaluation import (
    EvaluationResult,
    dp_oracle,
    evaluate_exhaustive,
    evaluate_sampled,
    median_seed,
)
from .heuristics import (
    SampleSets,
    action_space,
    generate_samples,
    h1_next,
    parse_heuristic,
)
from .graphio import load_graph, parse_graph_text, pick_endpoints, save_graph

__version__ = "0.1.0"
