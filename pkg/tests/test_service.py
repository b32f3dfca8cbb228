import json
import threading
import urllib.request
from pathlib import Path

import pytest

from stprobe.service import (
    ServiceError,
    SessionStore,
    WizardService,
    make_server,
)

FIG1_TEXT = "undirected\na s t\nb s x\nc x t\n"


def make_service(tmp_path=None) -> WizardService:
    store = SessionStore(tmp_path / "sessions.sqlite") if tmp_path else SessionStore()
    return WizardService(store)


def test_create_session_h1_proposes_a():
    svc = make_service()
    session = svc.create_session(FIG1_TEXT, "s", "t", budget=3, heuristic="h1")
    assert session.status == "open"
    assert session.pending == "a"
    assert session.transcript == []


def test_degenerate_sessions():
    svc = make_service()
    same = svc.create_session("undirected\ne s x\n", "s", "s", budget=1)
    assert same.status == "path_found" and same.pending is None

    exhausted = svc.create_session(FIG1_TEXT, "s", "t", budget=0)
    assert exhausted.status == "budget_exhausted" and exhausted.pending is None


def test_fig1_cut_flow():
    svc = make_service()
    session = svc.create_session(FIG1_TEXT, "s", "t", budget=3, heuristic="h1")
    sid = session.session_id

    session = svc.submit_answer(sid, "a", "off")
    assert session.status == "open"
    assert session.pending == "b"
    assert session.remaining_budget() == 2

    session = svc.submit_answer(sid, "b", "off")
    assert session.status == "cut_found"
    assert session.pending is None
    assert sorted(session.certificate["edges"]) == ["a", "b"]
    assert len(session.transcript) == 2


def test_fig1_path_flow():
    svc = make_service()
    session = svc.create_session(FIG1_TEXT, "s", "t", budget=3)
    session = svc.submit_answer(session.session_id, "a", "on")
    assert session.status == "path_found"
    assert session.certificate == {"kind": "path", "edges": ["a"]}
    assert len(session.transcript) == 1


def test_answer_validation():
    svc = make_service()
    session = svc.create_session(FIG1_TEXT, "s", "t", budget=3)
    sid = session.session_id

    with pytest.raises(ServiceError) as err:
        svc.submit_answer(sid, "b", "off")
    assert err.value.code == "not_pending"

    with pytest.raises(ServiceError) as err:
        svc.submit_answer(sid, "a", "maybe")
    assert err.value.code == "bad_answer"

    svc.submit_answer(sid, "a", "on")
    with pytest.raises(ServiceError) as err:
        svc.submit_answer(sid, "a", "on")
    assert err.value.code == "session_closed"

    with pytest.raises(ServiceError) as err:
        svc.get_session("nope")
    assert err.value.code == "unknown_session"

    with pytest.raises(ServiceError) as err:
        svc.create_session(FIG1_TEXT, "s", "t", budget=3, heuristic="h9")
    assert err.value.code == "invalid_heuristic"

    with pytest.raises(ServiceError) as err:
        svc.create_session("undirected\na s t\na s u\n", "s", "t", budget=1)
    assert err.value.code == "invalid_graph"


def test_version_conflict_detection():
    svc = make_service()
    session = svc.create_session(FIG1_TEXT, "s", "t", budget=3)
    with pytest.raises(ServiceError) as err:
        svc.submit_answer(session.session_id, "a", "off", version=99)
    assert err.value.code == "version_conflict"


def test_persistence_across_restart(tmp_path):
    path = tmp_path / "store.sqlite"
    svc = WizardService(SessionStore(path))
    session = svc.create_session(FIG1_TEXT, "s", "t", budget=3)
    sid = session.session_id
    svc.submit_answer(sid, "a", "off")
    svc.store.close()

    svc2 = WizardService(SessionStore(path))
    restored = svc2.get_session(sid)
    assert restored.pending == "b"
    assert [e for e, _, _ in restored.transcript] == ["a"]
    done = svc2.submit_answer(sid, "b", "off")
    assert done.status == "cut_found"


def test_transcript_replay_reproduces_proposals():
    from stprobe.graph import BeliefState
    from stprobe.heuristics import parse_heuristic
    from stprobe.graphio import parse_graph_text

    svc = make_service()
    session = svc.create_session(FIG1_TEXT, "s", "t", budget=3, heuristic="h2-both")
    proposals = [session.pending]
    while session.status == "open":
        edge = session.pending
        session = svc.submit_answer(session.session_id, edge, "off")
        if session.pending:
            proposals.append(session.pending)

    g = parse_graph_text(FIG1_TEXT, "s", "t")
    policy = parse_heuristic("h2-both")
    belief = BeliefState.fresh()
    for step, (edge, answer, _ts) in enumerate(session.transcript):
        assert policy.propose(g, belief, 3 - step) == proposals[step] == edge
        belief = belief.reveal(edge, answer)


def test_session_average_cost_matches_exhaustive_evaluation():
    from itertools import product

    from stprobe.evaluation import evaluate_exhaustive
    from stprobe.graphio import parse_graph_text
    from stprobe.heuristics import H1Policy

    svc = make_service()
    total = 0.0
    for bits in product(["on", "off"], repeat=2):
        session = svc.create_session(FIG1_TEXT, "s", "t", budget=3, heuristic="h1")
        k = 0
        while session.status == "open" and k < 3:
            answer = bits[k] if k < 2 else "on"  # third answer never matters
            session = svc.submit_answer(session.session_id, session.pending, answer)
            k += 1
        weight = 0.25
        total += weight * len(session.transcript)
    g = parse_graph_text(FIG1_TEXT, "s", "t", budget=3)
    assert total == evaluate_exhaustive(H1Policy(), g).expected_queries


def test_http_surface(tmp_path):
    server = make_server(port=0, store_path=tmp_path / "http.sqlite")
    host, port = server.server_address[:2]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    base = f"http://{host}:{port}"

    def call(method, path, body=None):
        data = json.dumps(body).encode() if body is not None else None
        req = urllib.request.Request(
            base + path, data=data, method=method,
            headers={"Content-Type": "application/json"},
        )
        try:
            with urllib.request.urlopen(req) as resp:
                return resp.status, json.loads(resp.read())
        except urllib.error.HTTPError as err:
            return err.code, json.loads(err.read())

    try:
        status, created = call(
            "POST", "/sessions",
            {"graph_text": FIG1_TEXT, "source": "s", "target": "t",
             "budget": 3, "heuristic": "h1"},
        )
        assert status == 201 and created["pending"] == "a"
        sid = created["session_id"]

        status, listing = call("GET", "/sessions")
        assert status == 200 and len(listing["sessions"]) == 1

        status, snap = call("GET", f"/sessions/{sid}")
        assert status == 200 and snap["status"] == "open"

        status, after = call(
            "POST", f"/sessions/{sid}/answer", {"edge": "a", "answer": "off"}
        )
        assert status == 200 and after["pending"] == "b"

        status, done = call(
            "POST", f"/sessions/{sid}/answer", {"edge": "b", "answer": "off"}
        )
        assert status == 200
        assert done["status"] == "cut_found"
        assert sorted(done["certificate"]["edges"]) == ["a", "b"]

        status, err = call("GET", "/sessions/ghost")
        assert status == 404 and err["error"]["code"] == "unknown_session"

        status, err = call(
            "POST", f"/sessions/{sid}/answer", {"edge": "c", "answer": "on"}
        )
        assert status == 400 and err["error"]["code"] == "session_closed"
    finally:
        server.shutdown()
        server.server_close()


def test_proposal_guard_falls_back_to_h1(monkeypatch):
    import time as time_module

    class Slow:
        name = "slow"
        events: list = []

        def propose(self, g, b, remaining):
            time_module.sleep(1.0)
            return "c"

    svc = WizardService(SessionStore(), proposal_guard=0.05)

    import stprobe.service as service_module

    _orig = service_module.parse_heuristic
    monkeypatch.setattr(
        service_module,
        "parse_heuristic",
        lambda spec: Slow() if spec == "slow" else _orig(spec),
    )

    session = svc.create_session(FIG1_TEXT, "s", "t", budget=3, heuristic="slow")
    assert session.pending == "a"  # h1's choice, not the slow policy's "c"
    assert any("guard" in note for note in session.notes)
