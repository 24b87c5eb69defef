import networkx as nx
import pytest
from hypothesis import given, strategies as st

from knotworks import fixtures
from knotworks.detection import (
    BKnot, BudgetExceeded, ModelMismatch, check_witness, closed_deadlock_sets, construct_bknot,
    detect, detect_and, detect_andor, detect_dxy, detect_or, detect_xy, is_knot, oracle_fixpoint,
    search_bknot, to_andor_graph,
)
from knotworks.graph_core import Digraph
from knotworks.sweeps import check_detection, condition_options
from knotworks.wait_models import And, AndOr, DisjXY, Or, WaitForGraph, XOutOfY

from conftest import digraphs


def example2():
    return WaitForGraph.from_json(fixtures.load("example2.json"), default=And())


def test_and_cycle_on_fig2_graph():
    v = detect_and(example2())
    assert v.deadlocked
    assert v.witness.vertices == ("P2", "P3", "P4")
    relieved, dead = oracle_fixpoint(example2())
    assert dead == {"P1", "P2", "P3", "P4"} and relieved == {"P5"}
    assert v.deadlocked_set == dead


def test_fig2_graph_under_or_has_no_knot():
    # P4 -> P2 closes the cycle but P1's only way out leads into it, so the
    # terminal component {P2, P3, P4} is a knot and P1 is stuck as well.
    w = WaitForGraph(example2().digraph, default=Or())
    v = detect_or(w)
    assert v.deadlocked and set(v.witness.vertices) == {"P2", "P3", "P4"}
    w2 = WaitForGraph(Digraph(w.vertices, list(w.digraph.arcs) + [("P3", "P5")]), default=Or())
    assert not detect_or(w2).deadlocked


def test_arcless_graph():
    w = WaitForGraph(Digraph.from_json(fixtures.load("arcless.json")))
    for model in ("and", "or", "xy", "andor", "dxy"):
        assert not detect(w, model).deadlocked


def test_model_mismatch():
    w = WaitForGraph(example2().digraph, default=Or())
    with pytest.raises(ModelMismatch):
        detect_and(w)
    with pytest.raises(ValueError):
        detect(w, "nope")


def _random_wfg(draw, model):
    d = draw(digraphs(max_n=5))
    conds = {}
    for v in d.vertices:
        out = d.out_set(v)
        opts = condition_options(model, out, 2)
        if opts != [None]:
            conds[v] = draw(st.sampled_from(opts))
    return WaitForGraph(d, conds)


@st.composite
def wfgs(draw, model):
    return _random_wfg(draw, model)


@pytest.mark.parametrize("model", ["and", "or", "xy", "andor"])
@given(data=st.data())
def test_structure_fixpoint_and_brute_force_agree(model, data):
    w = data.draw(wfgs(model))
    assert check_detection(w, model) == []


@given(wfgs("or"))
def test_knot_matches_networkx_attracting_components(w):
    h = nx.DiGraph()
    h.add_nodes_from(w.vertices)
    h.add_edges_from(w.digraph.arcs)
    knots = [c for c in nx.attracting_components(h) if len(c) >= 2]
    v = detect_or(w)
    assert v.deadlocked == bool(knots)
    if knots:
        assert frozenset(v.witness.vertices) in {frozenset(k) for k in knots}


@given(wfgs("and"))
def test_and_matches_networkx_cycles(w):
    h = nx.DiGraph(list(w.digraph.arcs))
    h.add_nodes_from(w.vertices)
    assert detect_and(w).deadlocked == (not nx.is_directed_acyclic_graph(h))


@given(wfgs("andor"))
def test_constructive_and_search_witnesses(w):
    a = detect_andor(w)
    b = detect_andor(w, witness="search")
    assert a.deadlocked == b.deadlocked
    assert check_witness(w, a) and check_witness(w, b)


@given(wfgs("dxy"))
def test_dxy_detection(w):
    v = detect_dxy(w)
    _, dead = oracle_fixpoint(w)
    assert v.deadlocked_set == dead
    assert check_witness(to_andor_graph(w), v)


def test_bknot_search_budget():
    vs = [f"P{i}" for i in range(1, 7)]
    arcs = [(u, v) for u in vs for v in vs if u != v]
    d = Digraph(vs, arcs)
    conds = {v: AndOr([{u} for u in d.out_set(v)]) for v in vs}
    w = WaitForGraph(d, conds)
    assert isinstance(search_bknot(w, budget=0), BudgetExceeded)
    v = detect_andor(w, witness="search", budget=0)
    assert isinstance(v.witness, BudgetExceeded)
    assert isinstance(construct_bknot(w, vs), BKnot)


def test_xy_knot_example():
    # each vertex waits for 2 of its 3 peers: the whole clique is a 1-knot
    vs = ["P1", "P2", "P3", "P4"]
    d = Digraph(vs, [(u, v) for u in vs for v in vs if u != v])
    w = WaitForGraph(d, default=XOutOfY(2))
    v = detect_xy(w)
    assert v.deadlocked and set(v.witness.vertices) == set(vs)
    # P4 becomes a sink: its single grant is enough only when x = 1
    d2 = Digraph(vs, [(u, v) for u in vs for v in vs if u != v and u != "P4"])
    assert not detect_xy(WaitForGraph(d2, default=XOutOfY(1))).deadlocked
    v2 = detect_xy(WaitForGraph(d2, default=XOutOfY(2)))
    assert v2.deadlocked and set(v2.witness.vertices) == {"P1", "P2", "P3"}
    assert detect_xy(WaitForGraph(d2, default=XOutOfY(3))).deadlocked


def test_closed_sets_are_unions_closed():
    w = example2()
    sets = list(closed_deadlock_sets(w))
    assert frozenset({"P2", "P3", "P4"}) in sets
    assert frozenset().union(*sets) == {"P1", "P2", "P3", "P4"}


def test_is_knot():
    d = Digraph(["a", "b", "c"], [("a", "b"), ("b", "a"), ("c", "a")])
    assert is_knot(d, {"a", "b"}) and not is_knot(d, {"a", "b", "c"}) and not is_knot(d, {"a"})


def test_verdict_json():
    v = detect_and(example2())
    data = v.to_json(example2().digraph._index, "and")
    assert data["witness"] == {"type": "cycle", "vertices": ["P2", "P3", "P4"]}
    assert data["deadlocked_set"] == ["P1", "P2", "P3", "P4"]
