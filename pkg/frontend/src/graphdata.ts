/** Parse the graph text format and pick the subgraph worth drawing. */

import type { SessionSnapshot } from "./api";

export interface GraphEdge {
  id: string;
  tail: string;
  head: string;
}

export interface GraphData {
  directed: boolean;
  nodes: string[];
  edges: GraphEdge[];
}

export function parseGraphText(text: string): GraphData {
  let directed: boolean | null = null;
  const nodes: string[] = [];
  const seen = new Set<string>();
  const edges: GraphEdge[] = [];
  for (const raw of text.split("\n")) {
    const line = raw.split("#", 1)[0].trim();
    if (!line) continue;
    if (directed === null) {
      directed = line === "directed";
      continue;
    }
    const [id, tail, head] = line.split(/\s+/);
    edges.push({ id, tail, head });
    for (const n of [tail, head]) {
      if (!seen.has(n)) {
        seen.add(n);
        nodes.push(n);
      }
    }
  }
  return { directed: directed ?? false, nodes, edges };
}

export const FULL_RENDER_LIMIT = 400;

/**
 * Edges worth rendering for a large instance: everything already
 * revealed, the pending proposal, the certificate, and the neighborhood
 * of the endpoints and of the pending edge.  The "show full graph"
 * toggle bypasses this.
 */
export function relevantSubgraph(graph: GraphData, snapshot: SessionSnapshot): GraphData {
  if (graph.edges.length <= FULL_RENDER_LIMIT) return graph;
  const keepEdges = new Set<string>();
  const focusNodes = new Set<string>([snapshot.source, snapshot.target]);
  for (const entry of snapshot.transcript) keepEdges.add(entry.edge);
  if (snapshot.pending) keepEdges.add(snapshot.pending);
  for (const e of snapshot.certificate?.edges ?? []) keepEdges.add(e);
  for (const edge of graph.edges) {
    if (keepEdges.has(edge.id)) {
      focusNodes.add(edge.tail);
      focusNodes.add(edge.head);
    }
  }
  // one ring of context around everything in focus
  for (const edge of graph.edges) {
    if (focusNodes.has(edge.tail) || focusNodes.has(edge.head)) keepEdges.add(edge.id);
  }
  const edges = graph.edges.filter((e) => keepEdges.has(e.id));
  const nodeSet = new Set<string>();
  for (const e of edges) {
    nodeSet.add(e.tail);
    nodeSet.add(e.head);
  }
  nodeSet.add(snapshot.source);
  nodeSet.add(snapshot.target);
  return {
    directed: graph.directed,
    nodes: graph.nodes.filter((n) => nodeSet.has(n)),
    edges,
  };
}
