import { beforeEach, describe, expect, it, vi } from "vitest";

import type { SessionSnapshot } from "../src/api";
import { parseGraphText, relevantSubgraph } from "../src/graphdata";
import { renderCreateForm, renderSession } from "../src/render";

const FIG1 = "undirected\na s t\nb s x\nc x t\n";

function snapshot(overrides: Partial<SessionSnapshot> = {}): SessionSnapshot {
  return {
    snapshot_version: 1,
    session_id: "abc123def456",
    graph_text: FIG1,
    source: "s",
    target: "t",
    budget: 3,
    p: 0.5,
    heuristic: "h1",
    status: "open",
    pending: "a",
    remaining_budget: 3,
    transcript: [],
    certificate: null,
    notes: [],
    version: 0,
    ...overrides,
  };
}

const noHandlers = {
  onAnswer: () => {},
  onToggleFullGraph: () => {},
  onNewSession: () => {},
};

describe("session rendering", () => {
  let root: HTMLElement;

  beforeEach(() => {
    root = document.createElement("div");
    document.body.textContent = "";
    document.body.appendChild(root);
  });

  it("shows the proposal and enabled answer buttons when open", () => {
    renderSession(root, snapshot(), { showFullGraph: false, error: null }, noHandlers);
    expect(root.querySelector("[data-testid=proposal]")?.textContent).toContain("edge a");
    const on = root.querySelector<HTMLButtonElement>("[data-testid=answer-on]")!;
    const off = root.querySelector<HTMLButtonElement>("[data-testid=answer-off]")!;
    expect(on.disabled).toBe(false);
    expect(off.disabled).toBe(false);
    expect(root.querySelector("[data-testid=budget-gauge]")?.textContent).toContain("3/3");
  });

  it("binds answers to the pending edge only", () => {
    const seen: Array<[string, string, number]> = [];
    renderSession(
      root,
      snapshot({ pending: "b", version: 4 }),
      { showFullGraph: false, error: null },
      { ...noHandlers, onAnswer: (e, v, ver) => seen.push([e, v, ver]) },
    );
    root.querySelector<HTMLButtonElement>("[data-testid=answer-off]")!.click();
    root.querySelector<HTMLButtonElement>("[data-testid=answer-on]")!.click();
    expect(seen).toEqual([
      ["b", "off", 4],
      ["b", "on", 4],
    ]);
  });

  it("disables the buttons and shows the banner when the session closed", () => {
    renderSession(
      root,
      snapshot({
        status: "cut_found",
        pending: null,
        remaining_budget: 1,
        transcript: [
          { edge: "a", answer: "off", timestamp: 1 },
          { edge: "b", answer: "off", timestamp: 2 },
        ],
        certificate: { kind: "cut", edges: ["a", "b"] },
      }),
      { showFullGraph: false, error: null },
      noHandlers,
    );
    expect(root.querySelector("[data-testid=status-banner]")?.textContent).toContain("Cut found");
    expect(root.querySelector<HTMLButtonElement>("[data-testid=answer-on]")!.disabled).toBe(true);
    expect(root.querySelector("[data-testid=certificate]")?.textContent).toContain("a, b");
    const certEdges = root.querySelectorAll("line.edge.certificate");
    expect(certEdges.length).toBe(2);
    const transcript = root.querySelector("[data-testid=transcript]")!;
    expect(transcript.querySelectorAll("li").length).toBe(2);
  });

  it("marks revealed and pending edges on the drawing", () => {
    renderSession(
      root,
      snapshot({
        pending: "b",
        remaining_budget: 2,
        transcript: [{ edge: "a", answer: "off", timestamp: 1 }],
      }),
      { showFullGraph: false, error: null },
      noHandlers,
    );
    expect(root.querySelector("line[data-edge=a]")!.getAttribute("class")).toContain("off");
    expect(root.querySelector("line[data-edge=b]")!.getAttribute("class")).toContain("pending");
    expect(root.querySelector("line[data-edge=c]")!.getAttribute("class")).toContain("hidden");
  });

  it("shows the budget gauge at zero when exhausted", () => {
    renderSession(
      root,
      snapshot({ status: "budget_exhausted", pending: null, remaining_budget: 0 }),
      { showFullGraph: false, error: null },
      noHandlers,
    );
    expect(root.querySelector("[data-testid=status-banner]")?.textContent).toContain("Budget exhausted");
    expect(root.querySelector("[data-testid=budget-gauge]")?.textContent).toContain("0/3");
  });

  it("renders identically for the same snapshot", () => {
    const snap = snapshot({
      transcript: [{ edge: "a", answer: "off", timestamp: 1 }],
      pending: "b",
    });
    renderSession(root, snap, { showFullGraph: false, error: null }, noHandlers);
    const first = root.innerHTML;
    renderSession(root, snap, { showFullGraph: false, error: null }, noHandlers);
    expect(root.innerHTML).toBe(first);
  });
});

describe("create form", () => {
  it("submits the typed parameters", () => {
    const root = document.createElement("div");
    document.body.appendChild(root);
    const onCreate = vi.fn();
    renderCreateForm(root, null, { onCreate });
    root.querySelector<HTMLInputElement>("[data-testid=field-budget]")!.value = "3";
    root.querySelector<HTMLFormElement>("[data-testid=create-form]")!.dispatchEvent(
      new Event("submit", { bubbles: true, cancelable: true }),
    );
    expect(onCreate).toHaveBeenCalledOnce();
    const params = onCreate.mock.calls[0][0];
    expect(params.source).toBe("s");
    expect(params.budget).toBe(3);
    expect(params.graph_text).toContain("undirected");
  });
});

describe("subgraph selection", () => {
  it("keeps small graphs whole and trims large ones to the relevant part", () => {
    const small = parseGraphText(FIG1);
    expect(relevantSubgraph(small, snapshot() as SessionSnapshot).edges.length).toBe(3);

    const lines = ["undirected"];
    for (let i = 0; i < 500; i += 1) lines.push(`e${i} n${i} n${i + 1}`);
    const big = parseGraphText(lines.join("\n"));
    const snap = snapshot({
      graph_text: lines.join("\n"),
      source: "n0",
      target: "n500",
      pending: "e250",
    });
    const trimmed = relevantSubgraph(big, snap);
    expect(trimmed.edges.length).toBeLessThan(big.edges.length);
    expect(trimmed.edges.some((e) => e.id === "e250")).toBe(true);
  });
});
