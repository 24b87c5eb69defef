"""Acceptance criteria 1-12.

Each test prints (and records for the terminal summary) one line of the
form ``criterion N: PASS|FAIL  detail``.  Run alone with
``python3 tests/test_acceptance.py`` or ``pytest tests/test_acceptance.py -s``.
"""
import re
import time
from fractions import Fraction
from functools import cache
from pathlib import Path

import pytest

from knotworks import fixtures
from knotworks.async_sim import Scenario
from knotworks.bead_reversal import (
    BeadPlacement, all_placements, edge_capacity, ratio_compliance, rho, run_smer, validate_placement,
)
from knotworks.detection import detect_and, oracle_fixpoint
from knotworks.edge_reversal import (
    AcyclicOrientation, chi_bar, conc_simulated,
    optimal_orientation, run_until_period,
)
from knotworks.graph_core import Graph, longest_path_length
from knotworks.resource_order import Coloring, ResourceSystem, build_G, build_H, orient_by_coloring
from knotworks.sweeps import (
    BeadSweepConfig, CampaignConfig, campaign, sweep_bead_reversal, sweep_conversions,
    sweep_detection, sweep_edge_reversal,
)
from knotworks.wait_models import (
    WaitForGraph, andor_to_dxy, condition_from_json, dxy_to_andor, xy_to_andor,
)

ROOT = Path(__file__).resolve().parents[1]


def report(record_property, n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    record_property("criterion", line)
    assert ok, line


def sets(items):
    return {frozenset(s) for s in items}


def test_c01_and_deadlock(record_property):
    t0 = time.perf_counter()
    w = WaitForGraph.from_json(fixtures.load("example2.json"))
    v = detect_and(w)
    _, dead = oracle_fixpoint(w)
    dt = time.perf_counter() - t0
    cyc = set(v.witness.vertices) if v.witness else set()
    ok = v.deadlocked and cyc == {"P2", "P3", "P4"} and dead == {"P1", "P2", "P3", "P4"} and dt < 1
    report(record_property, 1, ok, f"cycle {sorted(cyc)}, fixpoint deadlocked {sorted(dead)}, {dt:.3f}s")


def test_c02_detection_sweep(record_property):
    t0 = time.perf_counter()
    rep = sweep_detection(4, ("and", "or", "xy", "andor"), max_parts=2)
    dt = time.perf_counter() - t0
    bad = sum(len(r["mismatches"]) for r in rep.values())
    counts = ", ".join(f"{m} {r['graphs']}" for m, r in rep.items())
    report(record_property, 2, bad == 0 and dt < 300, f"{counts} graphs, {bad} mismatches, {dt:.1f}s")


def test_c03_model_conversions(record_property):
    rep = sweep_conversions(max_out=5, max_parts=3)
    ex3 = fixtures.load("example3.json")
    fam3 = xy_to_andor(condition_from_json(ex3["condition"]).x, ex3["out_set"])
    ok3 = set(fam3.subsets) == sets([["Pj", "Pk"], ["Pj", "Pl"], ["Pk", "Pl"]])
    ex4 = fixtures.load("example4.json")
    fam4 = dxy_to_andor(condition_from_json(ex4["condition"]))
    listed = sets([["Pj", "Pk"], ["Pk", "Pl"], ["Pk", "Pt"], ["Pl", "Pt"]])
    back = andor_to_dxy(fam4)
    ok4 = set(fam4.subsets) == listed and set(back.pairs) == {(2, s) for s in listed}
    ok = rep["mismatch_count"] == 0 and ok3 and ok4
    c = rep["counts"]
    report(record_property, 3, ok,
           f"{c['xy']} xy, {c['dxy']} dxy, {c['andor']} and-or instances, "
           f"{rep['mismatch_count']} mismatches; listed subsets match: {ok3 and ok4}")


def test_c04_ring_of_five(record_property):
    t0 = time.perf_counter()
    g = Graph.from_json(fixtures.load("c5.json"))
    om = AcyclicOrientation.from_json(fixtures.load("c5_23.json"), graph=g)
    t = run_until_period(om)
    _, best = optimal_orientation(g, "exact")
    cb = chi_bar(g)
    dt = time.perf_counter() - t0
    ok = (t.p, t.m) == (5, 2) and conc_simulated(t) == Fraction(2, 5) == best and cb == Fraction(5, 2) and dt < 1
    report(record_property, 4, ok, f"p={t.p} m={t.m} conc={conc_simulated(t)} optimum={best} chi_bar={cb}, {dt:.3f}s")


@cache
def er_sweep():
    t0 = time.perf_counter()
    rep = sweep_edge_reversal(max_n=6)
    return rep, time.perf_counter() - t0


def test_c05_concurrency_formulas(record_property):
    rep, dt = er_sweep()
    bad = len(rep["conc_mismatches"]) + len(rep["tree_mismatches"])
    report(record_property, 5, bad == 0 and dt < 600,
           f"{rep['graphs']} graphs, {rep['orientations']} orientations, {bad} mismatches, {dt:.1f}s")


def test_c06_acyclic_steps_equal_counts(record_property):
    rep, _ = er_sweep()
    bad = len(rep["cyclic_steps"]) + len(rep["unequal_counts"])
    report(record_property, 6, bad == 0, f"{rep['orientations']} runs, {bad} violations")


def test_c07_single_edge(record_property):
    g = Graph.from_json(fixtures.load("edge23.json"))
    p = BeadPlacement.from_json(fixtures.load("edge23_beads.json"), g, fixtures.load("edge23_rates.json")["rates"])
    t = run_smer(p)
    [row] = ratio_compliance(t)
    ops = t.op_counts()
    ok = (edge_capacity(2, 3) == 4 and t.tail_start == 0 and t.period == 5 and len(set(t.states)) == 5
          and (ops["Pi"], ops["Pj"]) == (3, 2) and row.ratio == Fraction(3, 2))
    report(record_property, 7, ok, f"e={edge_capacity(2, 3)}, {t.period} placements per period, ops {ops['Pi']}:{ops['Pj']}")


def test_c08_triangle(record_property):
    g = Graph.from_json(fixtures.load("triangle.json"))
    rates = fixtures.load("triangle_rates.json")["rates"]
    # every well-formed placement with far-end sum 5 or 6, found exhaustively
    by_sigma = {5: [], 6: []}
    for p in all_placements(g, rates):
        if p.is_well_formed():
            s = validate_placement(g, rates, p).max_sigma
            if s in by_sigma:
                by_sigma[s].append(p)
    p5 = BeadPlacement.from_json(fixtures.load("triangle_sigma5.json"), g, rates)
    p6 = BeadPlacement.from_json(fixtures.load("triangle_sigma6.json"), g, rates)
    rep5, rep6 = validate_placement(g, rates, p5), validate_placement(g, rates, p6)
    cyc = rep5.cycles[0][0]

    def live(p):
        t = run_smer(p)
        return t.has_period and t.always_acyclic() and not t.blocked()

    def breaks(p):
        t = run_smer(p, horizon=51)
        return t.first_cyclic_step is not None and t.first_cyclic_step <= 50

    ok = (rho(cyc, rates) == 6 and p5 in by_sigma[5] and p6 in by_sigma[6]
          and rep5.valid and live(p5) and not rep6.valid and breaks(p6)
          and all(live(p) for p in by_sigma[5]) and all(breaks(p) for p in by_sigma[6]))
    report(record_property, 8, ok,
           f"rho=6; sigma=5 placement valid and live ({len(by_sigma[5])} such); "
           f"sigma=6 rejected, cyclic at step {run_smer(p6).first_cyclic_step} ({len(by_sigma[6])} such)")


def test_c09_bead_sweep(record_property):
    t0 = time.perf_counter()
    rep = sweep_bead_reversal(BeadSweepConfig())
    dt = time.perf_counter() - t0
    ok = rep["mismatch_count"] == 0 and dt < 900
    report(record_property, 9, ok,
           f"{rep['runs']} runs ({rep['valid']} valid), {rep['mismatch_count']} mismatches, {dt:.1f}s; "
           "mismatches are live placements with sigma >= rho, see README")


def test_c10_resource_graphs(record_property):
    sys = ResourceSystem.from_json(fixtures.load("example1.json"))
    G = set(build_G(sys).edge_list())
    H = build_H(sys)
    col = Coloring(fixtures.load("example1_h_coloring.json")["colors"])
    lp = longest_path_length(orient_by_coloring(H, col).digraph())
    g_ok = G == {("P1", "P2"), ("P1", "P5"), ("P2", "P3"), ("P2", "P4"), ("P3", "P4"), ("P4", "P5")}
    h_ok = set(H.edge_list()) == {("R1", "R2"), ("R1", "R5"), ("R2", "R3"), ("R2", "R6"), ("R3", "R4"),
                                  ("R3", "R6"), ("R4", "R5"), ("R4", "R6"), ("R5", "R6")}
    ok = g_ok and h_ok and col.is_proper(H) and col.num_colors == 3 and lp <= 2
    report(record_property, 10, ok,
           f"G {len(G)} edges, H {len(H.edge_list())} edges, coloring proper={col.is_proper(H)}, longest path {lp}")


def test_c11_simulator_safety(record_property):
    sys = ResourceSystem.from_json(fixtures.load("example1.json"))
    parts, ok = [], True
    for policy in ("edge_reversal", "acquisition_order"):
        t0 = time.perf_counter()
        r = campaign(sys, CampaignConfig(policy=policy))
        dt = time.perf_counter() - t0
        ok &= r["runs"] == 50 and r["events_min"] >= 10_000 and r["deadlocks"] == 0
        ok &= r["me_violations"] == 0 and dt < 120
        if policy == "edge_reversal":
            ok &= r["cyclic_snapshots"] == 0
        parts.append(f"{policy}: {r['deadlocks']} deadlocks, {r['me_violations']} ME violations, "
                     f"{r['cyclic_snapshots']} cyclic snapshots, {dt:.0f}s")
    t = Scenario.from_json(fixtures.load("scenario_naive_example2.json")).run()
    expected = WaitForGraph.from_json(fixtures.load("example2.json")).digraph
    naive_ok = t.deadlock and set(t.witness) == {"P2", "P3", "P4"} and set(t.final_wfg.digraph.arcs) == set(expected.arcs)
    parts.append(f"naive deadlock on {sorted(t.witness or [])}")
    report(record_property, 11, ok and naive_ok, "; ".join(parts))


def test_c12_out_of_scope_documented(record_property):
    readme = (ROOT / "README.md").read_text()
    ok = bool(re.search(r"not reproduced", readme)) and "χ*" in readme
    report(record_property, 12, ok, "README documents the omitted fractional-chromatic witness")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-s", "-q"]))
