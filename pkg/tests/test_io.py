import json
import subprocess
import sys
from pathlib import Path

import pytest

from stprobe.graph import GraphError
from stprobe.graphio import (
    GraphFileError,
    load_graph,
    parse_graph_text,
    pick_endpoints,
    save_graph,
    serialize_graph,
)

REPO = Path(__file__).resolve().parent.parent
FIG1_FILE = REPO / "graphs" / "fig1.graph"


def run_cli(*args, cwd=REPO):
    env = {"PYTHONPATH": str(REPO / "src"), "PATH": "/usr/bin:/bin"}
    return subprocess.run(
        [sys.executable, "-m", "stprobe.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
        env=env,
    )


def test_load_fig1_file():
    g = load_graph(FIG1_FILE, "s", "t", p=0.5, budget=3)
    assert len(g.edges) == 3 and not g.directed
    assert g.source == "s" and g.target == "t"


def test_parse_errors_name_the_line():
    with pytest.raises(GraphFileError, match=":1:"):
        parse_graph_text("tangled\n", "s", "t")
    with pytest.raises(GraphFileError, match=":3:"):
        parse_graph_text("undirected\na s t\nbad line here extra\n", "s", "t")
    with pytest.raises(GraphFileError, match="duplicate edge id"):
        parse_graph_text("undirected\na s t\na t u\n", "s", "t")
    with pytest.raises(GraphFileError, match="parallel edge"):
        parse_graph_text("undirected\na s t\nb t s\n", "s", "t")
    with pytest.raises(GraphFileError, match="unknown source"):
        parse_graph_text("undirected\na s t\n", "missing", "t")


def test_directed_reversed_only_connectivity_loads():
    g = parse_graph_text("directed\nback t s\n", "s", "t")
    assert g.degenerate  # no s->t route; cut semantics directed


def test_round_trip(tmp_path):
    g = load_graph(FIG1_FILE, "s", "t", p=0.5, budget=3)
    out = tmp_path / "copy.graph"
    save_graph(g, out)
    g2 = load_graph(out, "s", "t", p=0.5, budget=3)
    assert serialize_graph(g) == serialize_graph(g2)
    assert g.edge_ids == g2.edge_ids and g.directed == g2.directed


def test_pick_endpoints_deterministic():
    g = load_graph(FIG1_FILE, "s", "t", p=0.5, budget=3)
    assert pick_endpoints(g, 0) == pick_endpoints(g, 0)
    s, t = pick_endpoints(g, 3)
    assert s != t


def test_pick_endpoints_star_and_isolated():
    star = parse_graph_text(
        "directed\ne1 hub leaf1\ne2 hub leaf2\n", "hub", "leaf1"
    )
    for seed in range(6):
        s, t = pick_endpoints(star, seed)
        assert s == "hub" and t in ("leaf1", "leaf2")

    isolated = parse_graph_text("directed\nloop a b\n", "a", "b")
    # single edge still counts as reachable; true isolation needs no edges,
    # which the parser rejects, so simulate with an unreachable-only graph
    with pytest.raises(GraphError, match="no node can reach"):
        pick_endpoints(
            parse_graph_text("directed\nx b a\n", "a", "b").replace(edges=[], nodes=("a", "b")),
            0,
        )


def test_cli_oracle_and_exact_and_eval(tmp_path):
    out = tmp_path / "result.json"
    res = run_cli(
        "oracle", "--graph", str(FIG1_FILE), "--source", "s", "--target", "t",
        "--budget", "3", "--out", str(out),
    )
    assert res.returncode == 0, res.stderr
    assert "1.75" in res.stdout
    assert json.loads(out.read_text())["optimal_expected_queries"] == 1.75

    res = run_cli(
        "exact", "--graph", str(FIG1_FILE), "--source", "s", "--target", "t",
        "--budget", "3", "--out", str(out), "--tree-out", str(tmp_path / "tree.txt"),
    )
    assert res.returncode == 0, res.stderr
    assert "status=optimal" in res.stdout
    payload = json.loads(out.read_text())
    assert payload["cost"] == 1.75
    assert (tmp_path / "tree.txt").read_text().startswith("p=0.5")

    res = run_cli(
        "eval", str(tmp_path / "tree.txt"), "--graph", str(FIG1_FILE),
        "--source", "s", "--target", "t", "--budget", "3",
    )
    assert res.returncode == 0, res.stderr
    assert "1.75" in res.stdout

    res = run_cli(
        "eval", "h1", "--graph", str(FIG1_FILE), "--source", "s", "--target", "t",
        "--budget", "3",
    )
    assert res.returncode == 0 and "1.75" in res.stdout


def test_cli_heuristic_episode_and_hist(tmp_path):
    res = run_cli(
        "heuristic", "h1", "--graph", str(FIG1_FILE), "--source", "s",
        "--target", "t", "--budget", "3", "--seed", "1", "--episodes", "2",
    )
    assert res.returncode == 0, res.stderr
    assert res.stdout.count("episode:") == 2

    hist = tmp_path / "hist.csv"
    res = run_cli(
        "hist", "h1", "--graph", str(FIG1_FILE), "--source", "s", "--target", "t",
        "--budget", "3", "--out", str(hist),
    )
    assert res.returncode == 0
    lines = hist.read_text().splitlines()
    assert lines[0] == "count,frequency"
    assert sum(float(ln.split(",")[1]) for ln in lines[1:]) == pytest.approx(1.0)


def test_cli_endpoints_and_exit_codes(tmp_path):
    res = run_cli("endpoints", "--graph", str(FIG1_FILE), "--seed", "2")
    assert res.returncode == 0 and "source=" in res.stdout

    res = run_cli(
        "oracle", "--graph", str(REPO / "graphs" / "grid_25x25.graph"),
        "--source", "v0_0", "--target", "v24_24", "--budget", "5",
    )
    assert res.returncode == 3  # oracle guard on 1200 edges

    res = run_cli(
        "exact", "--graph", str(tmp_path / "missing.graph"),
        "--source", "s", "--target", "t", "--budget", "3",
    )
    assert res.returncode == 2

    bad = tmp_path / "bad.graph"
    bad.write_text("undirected\na s t\na s u\n")
    res = run_cli("exact", "--graph", str(bad), "--source", "s", "--target", "t")
    assert res.returncode == 2
    assert "duplicate" in res.stderr


def test_cli_lower_bound_timeout(tmp_path):
    res = run_cli(
        "lower-bound", "--graph", str(FIG1_FILE), "--source", "s", "--target", "t",
        "--budget", "3", "--time-limit", "0",
    )
    assert res.returncode == 4
    assert "iter,cost,|P|,|C|,|S|,ms" in res.stdout
