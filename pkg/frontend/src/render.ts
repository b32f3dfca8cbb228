/** Render the wizard view.  Everything on screen is a pure function of
 * the latest session snapshot plus two local toggles (full-graph, error
 * text), so reloading and re-fetching always reproduces the view. */

import type { SessionSnapshot } from "./api";
import { FULL_RENDER_LIMIT, parseGraphText, relevantSubgraph } from "./graphdata";
import { layoutGraph } from "./layout";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 640;
const HEIGHT = 420;

export interface ViewState {
  showFullGraph: boolean;
  error: string | null;
}

export interface Handlers {
  onAnswer(edge: string, answer: "on" | "off", version: number): void;
  onToggleFullGraph(): void;
  onNewSession(): void;
}

const STATUS_LABEL: Record<SessionSnapshot["status"], string> = {
  open: "Open",
  path_found: "Path found: connectivity proven",
  cut_found: "Cut found: disconnection proven",
  budget_exhausted: "Budget exhausted: inconclusive",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function edgeStates(snapshot: SessionSnapshot): Map<string, "on" | "off"> {
  const states = new Map<string, "on" | "off">();
  for (const entry of snapshot.transcript) states.set(entry.edge, entry.answer);
  return states;
}

function renderGraph(snapshot: SessionSnapshot, view: ViewState): SVGSVGElement {
  const full = parseGraphText(snapshot.graph_text);
  const graph = view.showFullGraph ? full : relevantSubgraph(full, snapshot);
  const positions = layoutGraph(graph, WIDTH, HEIGHT);
  const states = edgeStates(snapshot);
  const certificate = new Set(snapshot.certificate?.edges ?? []);

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("class", "graph");
  svg.setAttribute("data-testid", "graph");

  for (const edge of graph.edges) {
    const a = positions[edge.tail];
    const b = positions[edge.head];
    if (!a || !b) continue;
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", a.x.toFixed(1));
    line.setAttribute("y1", a.y.toFixed(1));
    line.setAttribute("x2", b.x.toFixed(1));
    line.setAttribute("y2", b.y.toFixed(1));
    const classes = ["edge", states.get(edge.id) ?? "hidden"];
    if (edge.id === snapshot.pending) classes.push("pending");
    if (certificate.has(edge.id)) classes.push("certificate");
    line.setAttribute("class", classes.join(" "));
    line.setAttribute("data-edge", edge.id);
    svg.appendChild(line);

    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", ((a.x + b.x) / 2).toFixed(1));
    label.setAttribute("y", ((a.y + b.y) / 2 - 4).toFixed(1));
    label.setAttribute("class", "edge-label");
    label.textContent = edge.id;
    svg.appendChild(label);
  }

  for (const node of graph.nodes) {
    const pos = positions[node];
    if (!pos) continue;
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", pos.x.toFixed(1));
    circle.setAttribute("cy", pos.y.toFixed(1));
    circle.setAttribute("r", "9");
    const classes = ["node"];
    if (node === snapshot.source) classes.push("source");
    if (node === snapshot.target) classes.push("target");
    circle.setAttribute("class", classes.join(" "));
    svg.appendChild(circle);
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", (pos.x + 11).toFixed(1));
    label.setAttribute("y", (pos.y + 4).toFixed(1));
    label.setAttribute("class", "node-label");
    label.textContent = node;
    svg.appendChild(label);
  }
  return svg;
}

export function renderSession(
  root: HTMLElement,
  snapshot: SessionSnapshot,
  view: ViewState,
  handlers: Handlers,
): void {
  root.textContent = "";
  const page = el("div", { class: "session" });

  const banner = el(
    "div",
    { class: `banner ${snapshot.status}`, "data-testid": "status-banner" },
    STATUS_LABEL[snapshot.status],
  );
  page.appendChild(banner);

  if (snapshot.certificate) {
    page.appendChild(
      el(
        "div",
        { class: "certificate-line", "data-testid": "certificate" },
        `${snapshot.certificate.kind === "path" ? "Path" : "Cut"} edges: ` +
          snapshot.certificate.edges.join(", "),
      ),
    );
  }

  if (view.error) {
    page.appendChild(el("div", { class: "error", "data-testid": "error" }, view.error));
  }

  const gauge = el("div", { class: "gauge", "data-testid": "budget-gauge" });
  gauge.appendChild(el("span", {}, `Budget ${snapshot.remaining_budget}/${snapshot.budget}`));
  const bar = el("div", { class: "gauge-bar" });
  const fill = el("div", { class: "gauge-fill" });
  const fraction = snapshot.budget > 0 ? snapshot.remaining_budget / snapshot.budget : 0;
  fill.style.width = `${Math.round(fraction * 100)}%`;
  bar.appendChild(fill);
  gauge.appendChild(bar);
  page.appendChild(gauge);

  const proposal = el("div", { class: "proposal" });
  if (snapshot.status === "open" && snapshot.pending) {
    proposal.appendChild(
      el("span", { "data-testid": "proposal" }, `Proposed query: edge ${snapshot.pending}`),
    );
    const onButton = el("button", { "data-testid": "answer-on" }, "On");
    const offButton = el("button", { "data-testid": "answer-off" }, "Off");
    const pendingEdge = snapshot.pending;
    onButton.addEventListener("click", () => handlers.onAnswer(pendingEdge, "on", snapshot.version));
    offButton.addEventListener("click", () => handlers.onAnswer(pendingEdge, "off", snapshot.version));
    proposal.appendChild(onButton);
    proposal.appendChild(offButton);
  } else {
    const onButton = el("button", { "data-testid": "answer-on", disabled: "" }, "On");
    const offButton = el("button", { "data-testid": "answer-off", disabled: "" }, "Off");
    proposal.appendChild(onButton);
    proposal.appendChild(offButton);
  }
  page.appendChild(proposal);

  page.appendChild(renderGraph(snapshot, view));

  const fullEdgeCount = parseGraphText(snapshot.graph_text).edges.length;
  if (fullEdgeCount > FULL_RENDER_LIMIT) {
    const toggle = el(
      "button",
      { class: "toggle", "data-testid": "toggle-full" },
      view.showFullGraph ? "Show relevant subgraph" : "Show full graph",
    );
    toggle.addEventListener("click", handlers.onToggleFullGraph);
    page.appendChild(toggle);
  }

  const transcript = el("ol", { class: "transcript", "data-testid": "transcript" });
  for (const entry of snapshot.transcript) {
    transcript.appendChild(el("li", {}, `${entry.edge} = ${entry.answer.toUpperCase()}`));
  }
  page.appendChild(transcript);

  if (snapshot.notes.length) {
    const notes = el("ul", { class: "notes" });
    for (const note of snapshot.notes) notes.appendChild(el("li", {}, note));
    page.appendChild(notes);
  }

  const meta = el(
    "div",
    { class: "meta" },
    `session ${snapshot.session_id.slice(0, 8)} | ${snapshot.source} -> ${snapshot.target} | ` +
      `heuristic ${snapshot.heuristic} | p=${snapshot.p}`,
  );
  page.appendChild(meta);

  const newButton = el("button", { class: "new-session", "data-testid": "new-session" }, "New session");
  newButton.addEventListener("click", handlers.onNewSession);
  page.appendChild(newButton);

  root.appendChild(page);
}

export interface CreateHandlers {
  onCreate(params: {
    graph_text: string;
    source: string;
    target: string;
    budget: number;
    p: number;
    heuristic: string;
  }): void;
}

const EXAMPLE_GRAPH = "undirected\na s t\nb s x\nc x t\n";

export function renderCreateForm(root: HTMLElement, error: string | null, handlers: CreateHandlers): void {
  root.textContent = "";
  const form = el("form", { class: "create", "data-testid": "create-form" });
  form.appendChild(el("h2", {}, "New wizard session"));
  if (error) form.appendChild(el("div", { class: "error", "data-testid": "error" }, error));

  const graphField = el("textarea", { name: "graph_text", rows: "8", "data-testid": "graph-text" });
  graphField.value = EXAMPLE_GRAPH;
  form.appendChild(el("label", {}, "Graph"));
  form.appendChild(graphField);

  const fields: Array<[string, string, string]> = [
    ["source", "s", "Source"],
    ["target", "t", "Target"],
    ["budget", "3", "Query limit"],
    ["p", "0.5", "On probability"],
    ["heuristic", "h1", "Heuristic"],
  ];
  for (const [name, value, label] of fields) {
    form.appendChild(el("label", {}, label));
    const input = el("input", { name, value, "data-testid": `field-${name}` });
    form.appendChild(input);
  }
  const submit = el("button", { type: "submit", "data-testid": "create" }, "Start session");
  form.appendChild(submit);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    handlers.onCreate({
      graph_text: String(data.get("graph_text") ?? ""),
      source: String(data.get("source") ?? ""),
      target: String(data.get("target") ?? ""),
      budget: Number(data.get("budget") ?? 0),
      p: Number(data.get("p") ?? 0.5),
      heuristic: String(data.get("heuristic") ?? "h1"),
    });
  });
  root.appendChild(form);
}
