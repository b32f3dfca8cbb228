/** Typed client for the wizard session API. */

export type SessionStatus = "open" | "path_found" | "cut_found" | "budget_exhausted";

export interface TranscriptEntry {
  edge: string;
  answer: "on" | "off";
  timestamp: number;
}

export interface Certificate {
  kind: "path" | "cut";
  edges: string[];
}

export interface SessionSnapshot {
  snapshot_version: number;
  session_id: string;
  graph_text: string;
  source: string;
  target: string;
  budget: number;
  p: number;
  heuristic: string;
  status: SessionStatus;
  pending: string | null;
  remaining_budget: number;
  transcript: TranscriptEntry[];
  certificate: Certificate | null;
  notes: string[];
  version: number;
}

export interface SessionSummary {
  session_id: string;
  status: SessionStatus;
  heuristic: string;
  queries: number;
  budget: number;
}

export interface CreateParams {
  graph_text: string;
  source: string;
  target: string;
  budget: number;
  p?: number;
  heuristic?: string;
}

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public httpStatus: number,
  ) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const err = (body as { error?: { code?: string; message?: string } }).error ?? {};
    throw new ApiError(err.code ?? "http_error", err.message ?? response.statusText, response.status);
  }
  return body as T;
}

export class WizardApi {
  constructor(public baseUrl: string = "") {}

  createSession(params: CreateParams): Promise<SessionSnapshot> {
    return request(`${this.baseUrl}/sessions`, {
      method: "POST",
      body: JSON.stringify(params),
    });
  }

  getSession(id: string): Promise<SessionSnapshot> {
    return request(`${this.baseUrl}/sessions/${id}`);
  }

  listSessions(): Promise<{ sessions: SessionSummary[] }> {
    return request(`${this.baseUrl}/sessions`);
  }

  answer(id: string, edge: string, answer: "on" | "off", version: number): Promise<SessionSnapshot> {
    return request(`${this.baseUrl}/sessions/${id}/answer`, {
      method: "POST",
      body: JSON.stringify({ edge, answer, version }),
    });
  }
}
