"""Session service for the interactive wizard.

One session is one live episode: the engine proposes an edge, a human
answers On or Off, certificates and budget are tracked until the episode
ends.  Sessions live in a sqlite store keyed by id and survive restarts;
the HTTP layer is a thin JSON front over the store.

Endpoints::

    POST /sessions                 create; body {graph_text|graph_path, source,
                                   target, budget, p?, heuristic?}
    GET  /sessions                 list session summaries
    GET  /sessions/{id}            full snapshot
    POST /sessions/{id}/answer     body {edge, answer: "on"|"off", version?}

Errors are JSON: {"error": {"code": ..., "message": ...}}.
"""

from __future__ import annotations

import json
import sqlite3
import threading
import time
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from .graph import BeliefState, GraphError, GraphInstance, certificate_status
from .graphio import parse_graph_text
from .heuristics import HeuristicError, h1_next, parse_heuristic

SNAPSHOT_VERSION = 1
PROPOSAL_TIME_GUARD = 5.0  # seconds per heavy proposal before falling back to h1

OPEN = "open"
PATH_FOUND = "path_found"
CUT_FOUND = "cut_found"
BUDGET_EXHAUSTED = "budget_exhausted"


class ServiceError(Exception):
    def __init__(self, code: str, message: str, http_status: int = 400):
        super().__init__(message)
        self.code = code
        self.http_status = http_status


@dataclass
class Session:
    session_id: str
    graph_text: str
    source: str
    target: str
    budget: int
    p: float
    heuristic_spec: str
    status: str = OPEN
    pending: Optional[str] = None
    transcript: list = field(default_factory=list)  # [edge, answer, timestamp]
    certificate: Optional[dict] = None
    notes: list = field(default_factory=list)
    version: int = 0

    def belief(self) -> BeliefState:
        b = BeliefState.fresh()
        for edge, answer, _ts in self.transcript:
            b = b.reveal(edge, answer)
        return b

    def graph(self) -> GraphInstance:
        # the session's own budget drives the episode; the instance keeps its default
        return parse_graph_text(self.graph_text, self.source, self.target, p=self.p)

    def remaining_budget(self) -> int:
        return self.budget - len(self.transcript)

    def to_json(self) -> dict:
        return {
            "snapshot_version": SNAPSHOT_VERSION,
            "session_id": self.session_id,
            "graph_text": self.graph_text,
            "source": self.source,
            "target": self.target,
            "budget": self.budget,
            "p": self.p,
            "heuristic": self.heuristic_spec,
            "status": self.status,
            "pending": self.pending,
            "remaining_budget": self.remaining_budget(),
            "transcript": [
                {"edge": e, "answer": a, "timestamp": ts} for e, a, ts in self.transcript
            ],
            "certificate": self.certificate,
            "notes": list(self.notes),
            "version": self.version,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Session":
        return cls(
            session_id=data["session_id"],
            graph_text=data["graph_text"],
            source=data["source"],
            target=data["target"],
            budget=data["budget"],
            p=data["p"],
            heuristic_spec=data["heuristic"],
            status=data["status"],
            pending=data.get("pending"),
            transcript=[
                (t["edge"], t["answer"], t["timestamp"]) for t in data.get("transcript", [])
            ],
            certificate=data.get("certificate"),
            notes=list(data.get("notes", [])),
            version=data.get("version", 0),
        )


class SessionStore:
    """sqlite-backed persistence; safe for concurrent sessions."""

    def __init__(self, path: str | Path = ":memory:"):
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._lock = threading.Lock()
        with self._lock:
            self._conn.execute(
                "CREATE TABLE IF NOT EXISTS sessions ("
                " id TEXT PRIMARY KEY, version INTEGER NOT NULL, data TEXT NOT NULL)"
            )
            self._conn.commit()

    def save(self, session: Session, expected_version: Optional[int] = None) -> None:
        payload = json.dumps(session.to_json(), sort_keys=True)
        with self._lock:
            if expected_version is None:
                self._conn.execute(
                    "INSERT OR REPLACE INTO sessions (id, version, data) VALUES (?, ?, ?)",
                    (session.session_id, session.version, payload),
                )
            else:
                cur = self._conn.execute(
                    "UPDATE sessions SET version = ?, data = ? WHERE id = ? AND version = ?",
                    (session.version, payload, session.session_id, expected_version),
                )
                if cur.rowcount != 1:
                    raise ServiceError(
                        "version_conflict",
                        "session modified concurrently; refresh and retry",
                        http_status=409,
                    )
            self._conn.commit()

    def load(self, session_id: str) -> Session:
        with self._lock:
            row = self._conn.execute(
                "SELECT data FROM sessions WHERE id = ?", (session_id,)
            ).fetchone()
        if row is None:
            raise ServiceError("unknown_session", f"no session {session_id!r}", 404)
        return Session.from_json(json.loads(row[0]))

    def list_ids(self) -> list[str]:
        with self._lock:
            rows = self._conn.execute("SELECT id FROM sessions ORDER BY id").fetchall()
        return [r[0] for r in rows]

    def close(self) -> None:
        with self._lock:
            self._conn.close()


class WizardService:
    """Session lifecycle on top of a store; the HTTP layer delegates here."""

    def __init__(self, store: Optional[SessionStore] = None, proposal_guard: float = PROPOSAL_TIME_GUARD):
        self.store = store or SessionStore()
        self.proposal_guard = proposal_guard
        self._policies: dict[str, object] = {}
        self._graphs: dict[str, GraphInstance] = {}

    # -- internals ---------------------------------------------------

    def _policy_for(self, session: Session):
        key = session.session_id
        if key not in self._policies:
            self._policies[key] = parse_heuristic(session.heuristic_spec)
        return self._policies[key]

    def _graph_for(self, session: Session) -> GraphInstance:
        key = session.session_id
        if key not in self._graphs:
            self._graphs[key] = session.graph()
        return self._graphs[key]

    def _refresh_status(self, session: Session, g: GraphInstance, belief: BeliefState) -> None:
        status = certificate_status(g, belief)
        if status.decided:
            session.status = PATH_FOUND if status.state == "path" else CUT_FOUND
            session.certificate = {
                "kind": status.certificate.kind,
                "edges": list(status.certificate.edges),
            }
            session.pending = None
            return
        if session.remaining_budget() <= 0:
            session.status = BUDGET_EXHAUSTED
            session.pending = None
            return
        session.status = OPEN

    def _compute_proposal(self, session: Session, g: GraphInstance, belief: BeliefState) -> None:
        if session.status != OPEN:
            return
        policy = self._policy_for(session)
        outcome: dict = {}

        def work():
            try:
                outcome["edge"] = policy.propose(g, belief, session.remaining_budget())
            except Exception as exc:  # surfaced below
                outcome["error"] = exc

        worker = threading.Thread(target=work, daemon=True)
        worker.start()
        worker.join(self.proposal_guard if getattr(policy, "name", "") != "h1" else None)
        if worker.is_alive():
            # heavy proposal missed the interactive guard; answer with h1 now
            session.notes.append(
                f"step {len(session.transcript) + 1}: proposal exceeded "
                f"{self.proposal_guard:.0f}s guard; fell back to h1"
            )
            session.pending = h1_next(g, belief)
            return
        if "error" in outcome:
            exc = outcome["error"]
            if isinstance(exc, HeuristicError):
                raise ServiceError("heuristic_failed", str(exc), 500)
            raise exc
        events = getattr(policy, "events", None)
        if events:
            session.notes.extend(events)
            events.clear()
        session.pending = outcome.get("edge")

    # -- operations ----------------------------------------------------

    def create_session(
        self,
        graph_text: str,
        source: str,
        target: str,
        budget: int,
        p: float = 0.5,
        heuristic: str = "h1",
    ) -> Session:
        try:
            parse_heuristic(heuristic)
        except HeuristicError as exc:
            raise ServiceError("invalid_heuristic", str(exc))
        if budget < 0:
            raise ServiceError("invalid_budget", "budget must be >= 0")
        try:
            g = parse_graph_text(graph_text, source, target, p=p)
        except GraphError as exc:
            raise ServiceError("invalid_graph", str(exc))
        session = Session(
            session_id=uuid.uuid4().hex,
            graph_text=graph_text,
            source=source,
            target=target,
            budget=budget,
            p=p,
            heuristic_spec=heuristic,
        )
        self._graphs[session.session_id] = g
        belief = BeliefState.fresh()
        self._refresh_status(session, g, belief)
        self._compute_proposal(session, g, belief)
        self.store.save(session)
        return session

    def get_session(self, session_id: str) -> Session:
        return self.store.load(session_id)

    def list_sessions(self) -> list[dict]:
        out = []
        for sid in self.store.list_ids():
            s = self.store.load(sid)
            out.append(
                {
                    "session_id": s.session_id,
                    "status": s.status,
                    "heuristic": s.heuristic_spec,
                    "queries": len(s.transcript),
                    "budget": s.budget,
                }
            )
        return out

    def submit_answer(
        self, session_id: str, edge: str, answer: str, version: Optional[int] = None
    ) -> Session:
        session = self.store.load(session_id)
        expected = session.version if version is None else version
        if expected != session.version:
            raise ServiceError(
                "version_conflict", "stale session version", http_status=409
            )
        if session.status != OPEN:
            raise ServiceError("session_closed", f"session status is {session.status}")
        if session.pending is None:
            raise ServiceError("not_pending", "session has no pending proposal")
        if edge != session.pending:
            raise ServiceError(
                "not_pending", f"edge {edge!r} is not the pending proposal {session.pending!r}"
            )
        answer = answer.lower()
        if answer not in ("on", "off"):
            raise ServiceError("bad_answer", "answer must be 'on' or 'off'")
        g = self._graph_for(session)
        session.transcript.append((edge, answer, time.time()))
        session.pending = None
        belief = session.belief()
        self._refresh_status(session, g, belief)
        self._compute_proposal(session, g, belief)
        session.version += 1
        self.store.save(session, expected_version=expected)
        return session


class _Handler(BaseHTTPRequestHandler):
    service: WizardService = None  # injected by make_server
    ui_dir: Optional[Path] = None

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _error(self, exc: ServiceError) -> None:
        self._send(exc.http_status, {"error": {"code": exc.code, "message": str(exc)}})

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b"{}"
        try:
            return json.loads(raw or b"{}")
        except json.JSONDecodeError:
            raise ServiceError("bad_json", "request body is not valid JSON")

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self):
        parts = [p for p in self.path.split("?")[0].split("/") if p]
        try:
            if parts == ["sessions"]:
                self._send(200, {"sessions": self.service.list_sessions()})
            elif len(parts) == 2 and parts[0] == "sessions":
                session = self.service.get_session(parts[1])
                self._send(200, session.to_json())
            elif self.ui_dir is not None:
                self._serve_static(parts)
            else:
                self._send(404, {"error": {"code": "not_found", "message": self.path}})
        except ServiceError as exc:
            self._error(exc)

    def _serve_static(self, parts: list[str]) -> None:
        rel = "/".join(parts) or "index.html"
        candidate = (self.ui_dir / rel).resolve()
        if not str(candidate).startswith(str(self.ui_dir.resolve())) or not candidate.is_file():
            self._send(404, {"error": {"code": "not_found", "message": rel}})
            return
        body = candidate.read_bytes()
        ctype = {
            ".html": "text/html",
            ".js": "text/javascript",
            ".css": "text/css",
            ".svg": "image/svg+xml",
        }.get(candidate.suffix, "application/octet-stream")
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        parts = [p for p in self.path.split("?")[0].split("/") if p]
        try:
            body = self._read_json()
            if parts == ["sessions"]:
                graph_text = body.get("graph_text")
                if graph_text is None and body.get("graph_path"):
                    graph_text = Path(body["graph_path"]).read_text()
                if graph_text is None:
                    raise ServiceError("invalid_graph", "graph_text or graph_path required")
                session = self.service.create_session(
                    graph_text=graph_text,
                    source=str(body.get("source", "")),
                    target=str(body.get("target", "")),
                    budget=int(body.get("budget", 1)),
                    p=float(body.get("p", 0.5)),
                    heuristic=str(body.get("heuristic", "h1")),
                )
                self._send(201, session.to_json())
            elif len(parts) == 3 and parts[0] == "sessions" and parts[2] == "answer":
                session = self.service.submit_answer(
                    parts[1],
                    edge=str(body.get("edge", "")),
                    answer=str(body.get("answer", "")),
                    version=body.get("version"),
                )
                self._send(200, session.to_json())
            else:
                self._send(404, {"error": {"code": "not_found", "message": self.path}})
        except ServiceError as exc:
            self._error(exc)
        except (ValueError, OSError) as exc:
            self._error(ServiceError("bad_request", str(exc)))


def make_server(
    host: str = "127.0.0.1",
    port: int = 0,
    store_path: str | Path = ":memory:",
    ui_dir: Optional[str | Path] = None,
) -> ThreadingHTTPServer:
    service = WizardService(SessionStore(store_path))
    handler = type(
        "BoundHandler",
        (_Handler,),
        {"service": service, "ui_dir": Path(ui_dir) if ui_dir else None},
    )
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(host: str, port: int, store_path: str | Path, ui_dir=None) -> None:
    server = make_server(host, port, store_path, ui_dir)
    host_shown, port_shown = server.server_address[:2]
    print(f"wizard service listening on http://{host_shown}:{port_shown}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
