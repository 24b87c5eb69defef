import json
import random

import pytest
from hypothesis import assume, given, settings, strategies as st

from knotworks import fixtures
from knotworks.async_sim import (
    RNG_NAME, AcquisitionOrder, EdgeReversal, Naive, Program, Scenario, ScenarioError, Simulator,
    dining_workload, measure_waits, random_workload, run,
)
from knotworks.detection import oracle_fixpoint
from knotworks.edge_reversal import orientation_from_order
from knotworks.graph_core import find_directed_cycle
from knotworks.resource_order import ResourceSystem, build_G

EXAMPLE2_ARCS = {("P1", "P2"), ("P2", "P3"), ("P3", "P4"), ("P4", "P2")}


def test_naive_reproduces_detected_deadlock():
    sc = Scenario.from_json(fixtures.load("scenario_naive_example2.json"))
    t = sc.run()
    assert t.deadlock and not t.exhausted
    assert set(t.witness) == {"P2", "P3", "P4"}
    assert t.deadlock_set == {"P1", "P2", "P3", "P4"}
    assert set(t.final_wfg.digraph.arcs) == EXAMPLE2_ARCS


@pytest.mark.parametrize("policy", [EdgeReversal(), AcquisitionOrder()])
def test_prevention_on_example1(example1, policy):
    for seed in range(5):
        t = run(example1, policy, dining_workload(example1), seed, 3000)
        assert not t.deadlock and t.exhausted
        assert t.me_violations == 0
        assert all(c > 0 for c in t.computes.values())
        if policy.kind == "edge_reversal":
            assert t.cyclic_snapshots == 0


def test_single_process():
    sys = ResourceSystem(["P"], ["R1", "R2"], {"P": ["R1", "R2"]})
    for policy in (Naive(), EdgeReversal(), AcquisitionOrder()):
        t = run(sys, policy, {"P": Program((frozenset({"R1"}), frozenset({"R1", "R2"})))}, 0)
        assert t.quiescent and t.computes == {"P": 2} and not t.deadlock


@st.composite
def systems(draw):
    rs = [f"R{i + 1}" for i in range(draw(st.integers(1, 5)))]
    ps = [f"P{i + 1}" for i in range(draw(st.integers(1, 5)))]
    needs = {p: draw(st.lists(st.sampled_from(rs), min_size=1, max_size=3, unique=True)) for p in ps}
    sys = ResourceSystem(ps, rs, needs)
    assume(build_G(sys, require_connected=False).is_connected())
    return sys


@settings(max_examples=60)
@given(systems(), st.integers(0, 2**32), st.sampled_from(["edge_reversal", "acquisition_order"]))
def test_finite_workloads_finish(sys, seed, kind):
    policy = EdgeReversal() if kind == "edge_reversal" else AcquisitionOrder()
    wl = random_workload(sys, random.Random(seed), steps=3, loop=False)
    t = run(sys, policy, wl, seed, max_events=20_000)
    assert t.quiescent and not t.deadlock
    assert t.me_violations == 0
    assert t.computes == {p: 3 for p in sys.processes}
    if kind == "edge_reversal":
        assert t.cyclic_snapshots == 0


@settings(max_examples=60)
@given(systems(), st.integers(0, 2**32))
def test_naive_verdicts_match_oracle(sys, seed):
    wl = random_workload(sys, random.Random(seed), steps=3, loop=False)
    t = run(sys, Naive(), wl, seed, max_events=20_000)
    assert t.me_violations == 0
    _, dead = oracle_fixpoint(t.final_wfg)
    assert t.deadlock_set == dead
    if t.deadlock:
        assert find_directed_cycle(t.final_wfg.digraph) is not None
    else:
        assert t.computes == {p: 3 for p in sys.processes}


def test_deterministic_given_seed(example1):
    a = run(example1, EdgeReversal(), dining_workload(example1), 7, 1500)
    b = run(example1, EdgeReversal(), dining_workload(example1), 7, 1500)
    c = run(example1, EdgeReversal(), dining_workload(example1), 8, 1500)
    assert a.to_jsonl() == b.to_jsonl() != c.to_jsonl()


def test_trace_header_and_summary(example1):
    t = run(example1, AcquisitionOrder(), dining_workload(example1), 3, 500)
    lines = t.to_jsonl().splitlines()
    head = json.loads(lines[0])
    assert head["rng"] == RNG_NAME and head["seed"] == 3 and head["policy"] == "acquisition_order"
    assert len(lines) == 501
    s = t.summary()
    assert s["events"] == 500 and s["max_chain"] >= 1
    assert s["waits"] == json.loads(json.dumps(measure_waits(t)))


def test_chain_lengths_are_bounded(example1):
    t = run(example1, EdgeReversal(), dining_workload(example1), 0, 5000)
    waits = measure_waits(t)
    assert set(waits) == set(example1.processes)
    assert all(1 <= w["max_chain"] <= 2 * len(example1.processes) for w in waits.values())


@pytest.mark.parametrize("name", ["scenario_naive_example2.json", "scenario_edge_reversal.json",
                                  "scenario_acquisition_order.json"])
def test_scenario_round_trip(name):
    sc = Scenario.from_json(fixtures.load(name))
    again = Scenario.from_json(sc.to_json())
    assert again.to_json() == sc.to_json()
    assert again.run(check_snapshots=False).to_jsonl() == sc.run(check_snapshots=False).to_jsonl()


def test_errors(example1):
    good = fixtures.load("scenario_edge_reversal.json")
    with pytest.raises(ScenarioError):
        Scenario.from_json({**good, "seed": "x"})
    with pytest.raises(ScenarioError):
        Scenario.from_json({**good, "policy": {"kind": "magic"}})
    with pytest.raises(ScenarioError):
        Scenario.from_json({**good, "initial_holdings": {"P2": ["R2"]}}).run()
    with pytest.raises(ScenarioError):
        Simulator(example1, Naive(), {"P1": Program((frozenset({"R9"}),))}, 0)
    with pytest.raises(ScenarioError):
        Simulator(example1, Naive(), {"P9": Program(())}, 0)
    with pytest.raises(ScenarioError):
        Simulator(example1, Naive(), dining_workload(example1), None)
    with pytest.raises(ScenarioError):
        Simulator(example1, Naive(), dining_workload(example1), 0, initial_holdings={"P1": ["R3"]})
    other = ResourceSystem(["A", "B"], ["R"], {"A": ["R"], "B": ["R"]})
    with pytest.raises(ScenarioError):
        Simulator(example1, EdgeReversal(orientation_from_order(build_G(other))), {}, 0)
