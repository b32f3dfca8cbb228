"""Graph file format and endpoint selection.

Format: first non-comment line is ``directed`` or ``undirected``; each
following non-comment line is ``<edgeId> <tail> <head>``.  ``#`` starts
a comment.  Duplicate edge ids and parallel edges are load errors.
"""

from __future__ import annotations

import random
import re
from pathlib import Path

from .graph import GraphError, GraphInstance, _reachable

_TOKEN = re.compile(r"^[^\s(),]+$")


class GraphFileError(GraphError):
    pass


def parse_graph_text(
    text: str,
    source: str,
    target: str,
    p: float = 0.5,
    budget: int | None = None,
    name: str = "<graph>",
) -> GraphInstance:
    directed = None
    edges = []
    nodes: dict[str, None] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if directed is None:
            if line not in ("directed", "undirected"):
                raise GraphFileError(
                    f"{name}:{lineno}: expected 'directed' or 'undirected', got {line!r}"
                )
            directed = line == "directed"
            continue
        parts = line.split()
        if len(parts) != 3:
            raise GraphFileError(f"{name}:{lineno}: expected '<edgeId> <tail> <head>'")
        eid, tail, head = parts
        for token in parts:
            if not _TOKEN.match(token):
                raise GraphFileError(f"{name}:{lineno}: bad token {token!r}")
        edges.append((eid, tail, head))
        nodes.setdefault(tail)
        nodes.setdefault(head)
    if directed is None:
        raise GraphFileError(f"{name}: empty graph file")
    if budget is None:
        budget = max(1, len(edges))
    try:
        return GraphInstance(
            nodes=list(nodes),
            edges=edges,
            directed=directed,
            source=source,
            target=target,
            p=p,
            budget=budget,
        )
    except GraphError as exc:
        raise GraphFileError(f"{name}: {exc}") from exc


def load_graph(
    path: str | Path,
    source: str,
    target: str,
    p: float = 0.5,
    budget: int | None = None,
) -> GraphInstance:
    path = Path(path)
    return parse_graph_text(
        path.read_text(), source, target, p=p, budget=budget, name=str(path)
    )


def serialize_graph(g: GraphInstance) -> str:
    lines = ["directed" if g.directed else "undirected"]
    for e in g.edges:
        lines.append(f"{e.id} {e.tail} {e.head}")
    return "\n".join(lines) + "\n"


def save_graph(g: GraphInstance, path: str | Path) -> None:
    Path(path).write_text(serialize_graph(g))


def pick_endpoints(g: GraphInstance, seed: int) -> tuple[str, str]:
    """Seeded draw of a source and a destination reachable from it."""
    rng = random.Random(seed)
    nodes = list(g.nodes)
    if not any(
        _reachable(g, excluded=frozenset(), start=n) - {n} for n in nodes
    ):
        raise GraphError("no node can reach another; cannot pick endpoints")
    while True:
        s = nodes[rng.randrange(len(nodes))]
        reachable = sorted(_reachable(g, excluded=frozenset(), start=s) - {s})
        if reachable:
            t = reachable[rng.randrange(len(reachable))]
            return s, t
