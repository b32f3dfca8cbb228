import random

import pytest

from stprobe.graph import (
    BeliefState,
    EdgeState,
    GraphError,
    GraphInstance,
    certificate_status,
    min_hidden_cut,
    min_hidden_path,
)

from conftest import (
    enumerate_simple_paths,
    random_belief,
    random_instance,
    separates,
)


def test_construction_rejects_duplicate_edge_ids():
    with pytest.raises(GraphError, match="duplicate edge id"):
        GraphInstance(
            nodes=["a", "b"],
            edges=[("e", "a", "b"), ("e", "b", "a")],
            directed=True,
            source="a",
            target="b",
        )


def test_construction_rejects_parallel_edges():
    with pytest.raises(GraphError, match="parallel edge"):
        GraphInstance(
            nodes=["a", "b"],
            edges=[("e1", "a", "b"), ("e2", "a", "b")],
            directed=False,
            source="a",
            target="b",
        )


def test_construction_rejects_bad_p_and_budget(fig1):
    with pytest.raises(GraphError, match="p must be"):
        fig1.replace(p=1.0)
    with pytest.raises(GraphError, match="budget"):
        fig1.replace(budget=4)


def test_belief_transitions():
    b = BeliefState.fresh()
    b2 = b.reveal("a", "on")
    assert b2.state_of("a") is EdgeState.ON
    assert b.state_of("a") is EdgeState.HIDDEN  # original untouched
    with pytest.raises(GraphError, match="already revealed"):
        b2.reveal("a", "off")


def test_status_examples(fig1):
    b = BeliefState.fresh()
    assert certificate_status(fig1, b).state == "open"

    on_a = certificate_status(fig1, b.reveal("a", "on"))
    assert on_a.state == "path"
    assert on_a.certificate.edges == ("a",)

    off_ab = certificate_status(fig1, b.reveal("a", "off").reveal("b", "off"))
    assert off_ab.state == "cut"
    assert off_ab.certificate.edge_set == {"a", "b"}


def test_status_rejects_unknown_edge(fig1):
    with pytest.raises(GraphError, match="unknown edge"):
        certificate_status(fig1, BeliefState.fresh().reveal("zz", "on"))


def test_min_hidden_path_examples(fig1):
    b = BeliefState.fresh()
    cert, hidden = min_hidden_path(fig1, b)
    assert cert.edges == ("a",) and hidden == 1

    cert, hidden = min_hidden_path(fig1, b.reveal("a", "off"))
    assert cert.edges == ("b", "c") and hidden == 2

    assert min_hidden_path(fig1, b.reveal("a", "off").reveal("b", "off")) is None


def test_min_hidden_path_counts_on_edges_free(fig1):
    b = BeliefState.fresh().reveal("b", "on")
    cert, hidden = min_hidden_path(fig1, b)
    assert cert.edges == ("a",) and hidden == 1  # (b,c) also costs 1; 'a' wins the tie
    b2 = b.reveal("a", "off")
    cert, hidden = min_hidden_path(fig1, b2)
    assert cert.edges == ("b", "c") and hidden == 1


def test_min_hidden_cut_examples(fig1):
    b = BeliefState.fresh()
    cert, hidden = min_hidden_cut(fig1, b)
    assert cert.edge_set == {"a", "b"} and hidden == 2

    cert, hidden = min_hidden_cut(fig1, b.reveal("a", "off"))
    assert cert.edge_set == {"a", "b"} and hidden == 1

    assert min_hidden_cut(fig1, b.reveal("a", "on")) is None


def test_degenerate_same_endpoints():
    g = GraphInstance(
        nodes=["s"], edges=[], directed=False, source="s", target="s", budget=1
    )
    status = certificate_status(g, BeliefState.fresh())
    assert status.state == "path" and status.certificate.edges == ()
    assert min_hidden_path(g, BeliefState.fresh()) == (status.certificate, 0)
    assert min_hidden_cut(g, BeliefState.fresh()) is None


def test_degenerate_disconnected():
    g = GraphInstance(
        nodes=["s", "t", "u"],
        edges=[("e", "s", "u")],
        directed=False,
        source="s",
        target="t",
        budget=1,
    )
    status = certificate_status(g, BeliefState.fresh())
    assert status.state == "cut" and status.certificate.edges == ()
    assert min_hidden_path(g, BeliefState.fresh()) is None
    cut, hidden = min_hidden_cut(g, BeliefState.fresh())
    assert hidden == 0


def test_directed_cut_orientation():
    # t->s edge cannot help an s->t cut or path
    g = GraphInstance(
        nodes=["s", "t"],
        edges=[("fwd", "s", "t"), ("back", "t", "s")],
        directed=True,
        source="s",
        target="t",
        budget=2,
    )
    cert, hidden = min_hidden_cut(g, BeliefState.fresh())
    assert cert.edge_set == {"fwd"} and hidden == 1
    cert, hidden = min_hidden_path(g, BeliefState.fresh())
    assert cert.edges == ("fwd",)


def test_path_cut_intersection_property_1000_random_states():
    rng = random.Random(7)
    checked = 0
    seed = 0
    while checked < 1000:
        g = random_instance(seed, require_connected=False)
        seed += 1
        b = random_belief(g, rng)
        path = min_hidden_path(g, b)
        cut = min_hidden_cut(g, b)
        if path is None or cut is None:
            continue
        meet = path[0].edge_set & cut[0].edge_set
        if not path[0].edges:  # degenerate s==t has no cut anyway
            continue
        assert meet, f"disjoint path/cut on seed {seed - 1}"
        assert all(b.is_hidden(e) for e in meet)
        checked += 1
    assert checked == 1000


def test_status_monotone_under_reveals():
    rng = random.Random(21)
    for seed in range(120):
        g = random_instance(seed, require_connected=False)
        b = BeliefState.fresh()
        decided = None
        order = list(g.edge_ids)
        rng.shuffle(order)
        for e in order:
            b = b.reveal(e, EdgeState.ON if rng.random() < 0.5 else EdgeState.OFF)
            state = certificate_status(g, b).state
            if decided is not None:
                assert state == decided
            elif state != "open":
                decided = state
        assert certificate_status(g, b).state in ("path", "cut")


def test_duality_against_brute_force():
    rng = random.Random(5)
    for seed in range(150):
        g = random_instance(seed, require_connected=False)
        b = random_belief(g, rng)
        status = certificate_status(g, b)
        path = min_hidden_path(g, b)
        cut = min_hidden_cut(g, b)
        assert (path is None) == (status.state == "cut")
        assert (cut is None) == (status.state == "path")
        if path is not None and not g.degenerate:
            # brute-force check of minimality over simple paths avoiding Off edges
            best = None
            for cand in enumerate_simple_paths(g):
                if any(e in b.off for e in cand):
                    continue
                hid = sum(1 for e in cand if b.is_hidden(e))
                best = hid if best is None else min(best, hid)
            assert best == path[1]
        if cut is not None and not g.degenerate:
            assert separates(g, cut[0].edge_set)
            assert not (cut[0].edge_set & b.on)


def test_min_cut_hidden_count_matches_brute_force():
    import itertools

    rng = random.Random(11)
    for seed in range(80):
        g = random_instance(seed)
        if len(g.edges) > 8:
            continue
        b = random_belief(g, rng, max_reveals=3)
        cut = min_hidden_cut(g, b)
        if cut is None:
            continue
        usable = [e for e in g.edge_ids if e not in b.on]
        best = None
        for r in range(len(usable) + 1):
            for combo in itertools.combinations(usable, r):
                if separates(g, frozenset(combo)):
                    hid = sum(1 for e in combo if b.is_hidden(e))
                    best = hid if best is None else min(best, hid)
        assert best is not None and best == cut[1]
