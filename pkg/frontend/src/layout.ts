/** Force-directed positions for the instance graph.
 *
 * The simulation runs synchronously to a fixed tick count from d3's
 * deterministic initial placement, so the same graph always lays out
 * the same way (reloads render identically).
 */

import {
  forceCenter,
  forceLink,
  forceManyBody,
  forceSimulation,
  type SimulationLinkDatum,
  type SimulationNodeDatum,
} from "d3-force";

import type { GraphData } from "./graphdata";

export interface LayoutNode extends SimulationNodeDatum {
  id: string;
}

export interface Positions {
  [node: string]: { x: number; y: number };
}

export function layoutGraph(graph: GraphData, width: number, height: number): Positions {
  const nodes: LayoutNode[] = graph.nodes.map((id) => ({ id }));
  const links: SimulationLinkDatum<LayoutNode>[] = graph.edges.map((e) => ({
    source: e.tail,
    target: e.head,
  }));
  const sim = forceSimulation(nodes)
    .force("link", forceLink<LayoutNode, SimulationLinkDatum<LayoutNode>>(links).id((d) => d.id).distance(60))
    .force("charge", forceManyBody().strength(-180))
    .force("center", forceCenter(width / 2, height / 2))
    .stop();
  const ticks = Math.min(300, 50 + graph.nodes.length * 2);
  for (let i = 0; i < ticks; i += 1) sim.tick();

  const positions: Positions = {};
  let minX = Infinity;
  let maxX = -Infinity;
  let minY = Infinity;
  let maxY = -Infinity;
  for (const n of nodes) {
    minX = Math.min(minX, n.x ?? 0);
    maxX = Math.max(maxX, n.x ?? 0);
    minY = Math.min(minY, n.y ?? 0);
    maxY = Math.max(maxY, n.y ?? 0);
  }
  const pad = 30;
  const spanX = Math.max(maxX - minX, 1);
  const spanY = Math.max(maxY - minY, 1);
  for (const n of nodes) {
    positions[n.id] = {
      x: pad + (((n.x ?? 0) - minX) / spanX) * (width - 2 * pad),
      y: pad + (((n.y ?? 0) - minY) / spanY) * (height - 2 * pad),
    };
  }
  return positions;
}
