"""Exhaustive and capped sweeps that check the theorems against oracles.

Every function returns a plain dict with counts and a ``mismatches`` list
(truncated), so scripts and tests can print or assert on them.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product

import networkx as nx

from . import async_sim
from .bead_reversal import all_placements, count_placements, random_placement, run_smer, validate_placement
from .detection import check_witness, closed_deadlock_sets, detect, oracle_fixpoint
from .edge_reversal import acyclic_orientations, conc_simulated, conc_structural, run_until_period
from .graph_core import Digraph, Graph, enumerate_simple_cycles, find_directed_cycle
from .resource_order import ResourceSystem
from .wait_models import (
    And, AndOr, ConditionError, DisjXY, Or, WaitForGraph, XOutOfY, andor_to_dxy, dxy_to_andor,
    relieved_by, validate_condition, xy_to_andor,
)

MAX_REPORTED = 20


def _subsets(items, min_size=1):
    items = list(items)
    return [frozenset(c) for k in range(min_size, len(items) + 1) for c in combinations(items, k)]


def connected_graphs(max_n: int, min_n: int = 1):
    """One representative of every connected unlabeled graph on
    ``min_n..max_n`` vertices (``max_n <= 7``), vertices named v0, v1, ..."""
    if max_n > 7:
        raise ValueError("the graph atlas stops at 7 vertices")
    for h in nx.graph_atlas_g():
        n = h.number_of_nodes()
        if n < min_n or n > max_n or n == 0 or not nx.is_connected(h):
            continue
        names = [f"v{i}" for i in range(n)]
        yield Graph(names, [(names[u], names[v]) for u, v in h.edges()])


# -- detection ---------------------------------------------------------------

def andor_families(out, max_parts: int):
    out = frozenset(out)
    fams = []
    for k in range(1, max_parts + 1):
        for f in combinations(_subsets(sorted(out)), k):
            try:
                validate_condition(AndOr(f), out)
            except ConditionError:
                continue
            fams.append(AndOr(f))
    return list(dict.fromkeys(fams))


def dxy_families(out, max_parts: int):
    out = frozenset(out)
    pairs = [(x, q) for q in _subsets(sorted(out)) for x in range(1, len(q) + 1)]
    fams = []
    for k in range(1, max_parts + 1):
        for f in combinations(pairs, k):
            try:
                validate_condition(DisjXY(f), out)
            except ConditionError:
                continue
            fams.append(DisjXY(f))
    return list(dict.fromkeys(fams))


def condition_options(model: str, out: frozenset, max_parts: int = 2):
    if not out:
        return [None]
    if model == "and":
        return [And()]
    if model == "or":
        return [Or()]
    if model == "xy":
        return [XOutOfY(x) for x in range(1, len(out) + 1)]
    if model == "andor":
        return andor_families(out, max_parts)
    if model == "dxy":
        return dxy_families(out, max_parts)
    raise ValueError(model)


def all_wfgs(n: int, model: str, max_parts: int = 2):
    """Every digraph on ``n`` vertices with every legal condition assignment."""
    verts = [f"P{i + 1}" for i in range(n)]
    arcs = [(u, v) for u in verts for v in verts if u != v]
    cache = {}
    for mask in range(1 << len(arcs)):
        d = Digraph(verts, [a for i, a in enumerate(arcs) if mask >> i & 1])
        opts = []
        for v in verts:
            out = d.out_set(v)
            if out not in cache:
                cache[out] = condition_options(model, out, max_parts)
            opts.append(cache[out])
        for combo in product(*opts):
            conds = {v: c for v, c in zip(verts, combo) if c is not None}
            yield WaitForGraph(d, conds)


def check_detection(w: WaitForGraph, model: str) -> list[str]:
    """Compare structural detector, grant fixpoint and subset brute force."""
    kw = {"witness": "search"} if model in ("andor", "dxy") else {}
    v = detect(w, model, **kw)
    _, dead = oracle_fixpoint(w)
    closed = list(closed_deadlock_sets(w))
    union = frozenset().union(*closed) if closed else frozenset()
    problems = []
    if v.deadlocked != bool(dead):
        problems.append("structural vs fixpoint")
    if bool(dead) != bool(closed):
        problems.append("fixpoint vs brute force")
    if dead != union:
        problems.append("deadlocked set vs union of closed sets")
    if not check_witness(w, v):
        problems.append("witness check")
    return problems


def sweep_detection(n: int = 4, models=("and", "or", "xy", "andor"), max_parts: int = 2) -> dict:
    report = {}
    for model in models:
        count, bad = 0, []
        for w in all_wfgs(n, model, max_parts):
            count += 1
            probs = check_detection(w, model)
            if probs and len(bad) < MAX_REPORTED:
                bad.append((w.to_json(), probs))
        report[model] = {"graphs": count, "mismatches": bad}
    return report


# -- model conversions -------------------------------------------------------

def _same_relief(a, b, out) -> bool:
    return all(relieved_by(a, out, g) == relieved_by(b, out, g) for g in _subsets(sorted(out), 0))


def sweep_conversions(max_out: int = 5, max_parts: int = 3) -> dict:
    counts = {"xy": 0, "dxy": 0, "andor": 0}
    bad = []
    for y in range(1, max_out + 1):
        out = frozenset(f"Q{i}" for i in range(y))
        for x in range(1, y + 1):
            counts["xy"] += 1
            if not _same_relief(XOutOfY(x), xy_to_andor(x, out), out):
                bad.append(("xy", x, sorted(out)))
        for fam in dxy_families(out, max_parts):
            counts["dxy"] += 1
            if not _same_relief(fam, dxy_to_andor(fam.pairs), out):
                bad.append(("dxy", repr(fam)))
        for fam in andor_families(out, max_parts):
            counts["andor"] += 1
            back = andor_to_dxy(fam.subsets)
            if not _same_relief(fam, back, out) or dxy_to_andor(back.pairs) != fam:
                bad.append(("andor", repr(fam)))
    return {"counts": counts, "mismatches": bad[:MAX_REPORTED], "mismatch_count": len(bad)}


# -- edge reversal -----------------------------------------------------------

def sweep_edge_reversal(max_n: int = 6, min_n: int = 1) -> dict:
    """Simulated vs structural concurrency, step acyclicity and equal
    within-period sink counts, over every acyclic orientation."""
    graphs = orients = 0
    conc_bad, acyc_bad, count_bad, tree_bad = [], [], [], []
    for g in connected_graphs(max_n, min_n):
        graphs += 1
        tree = g.is_tree()
        cycles = None if tree or len(g.vertices) == 1 else enumerate_simple_cycles(g)
        for om in acyclic_orientations(g):
            orients += 1
            t = run_until_period(om)
            if any(find_directed_cycle(o.digraph()) is not None for o in t.orientations):
                acyc_bad.append((g.to_json(), om.arc_list()))
            if len(set(t.sink_counts.values())) != 1:
                count_bad.append((g.to_json(), om.arc_list()))
                continue
            sim = conc_simulated(t)
            struct = conc_structural(om, cycles=cycles)
            if sim != struct:
                conc_bad.append((g.to_json(), om.arc_list(), str(sim), str(struct)))
            if tree and len(g.vertices) >= 2 and sim != Fraction(1, 2):
                tree_bad.append((g.to_json(), om.arc_list()))
    return {
        "graphs": graphs,
        "orientations": orients,
        "conc_mismatches": conc_bad[:MAX_REPORTED],
        "tree_mismatches": tree_bad[:MAX_REPORTED],
        "cyclic_steps": acyc_bad[:MAX_REPORTED],
        "unequal_counts": count_bad[:MAX_REPORTED],
        "violations": len(conc_bad) + len(tree_bad) + len(acyc_bad) + len(count_bad),
    }


# -- bead reversal -----------------------------------------------------------

@dataclass
class BeadSweepConfig:
    max_n: int = 5
    max_rate: int = 3
    rate_vectors_cap: int = 27
    placements_cap: int = 32
    horizon: int = 20_000
    seed: int = 0


def _rate_vectors(g: Graph, cfg: BeadSweepConfig, rng: random.Random):
    n = len(g.vertices)
    values = range(1, cfg.max_rate + 1)
    if cfg.max_rate ** n <= cfg.rate_vectors_cap:
        vecs = list(product(values, repeat=n))
    else:
        vecs = {(1,) * n}
        while len(vecs) < cfg.rate_vectors_cap:
            vecs.add(tuple(rng.choice(values) for _ in range(n)))
        vecs = sorted(vecs)
    return [dict(zip(g.vertices, r)) for r in vecs]


def _placements(g, rates, cfg, rng):
    if count_placements(g, rates) <= cfg.placements_cap:
        return list(all_placements(g, rates))
    return [random_placement(g, rates, rng) for _ in range(cfg.placements_cap)]


def sweep_bead_reversal(cfg: BeadSweepConfig | None = None) -> dict:
    """``sigma < rho`` on every cycle iff the simulation finds a period,
    every induced orientation stays acyclic and every process fires."""
    cfg = cfg or BeadSweepConfig()
    rng = random.Random(cfg.seed)
    runs = valid = 0
    bad = []
    for g in connected_graphs(cfg.max_n, 2):
        for rates in _rate_vectors(g, cfg, rng):
            for p in _placements(g, rates, cfg, rng):
                runs += 1
                rep = validate_placement(g, rates, p)
                t = run_smer(p, horizon=cfg.horizon)
                live = t.has_period and t.always_acyclic() and not t.blocked()
                valid += rep.valid
                if rep.valid != live:
                    bad.append((p.to_json(), g.to_json(), rep.valid, live))
    return {"runs": runs, "valid": valid, "invalid": runs - valid,
            "mismatches": bad[:MAX_REPORTED], "mismatch_count": len(bad)}


# -- simulator campaigns -----------------------------------------------------

@dataclass
class CampaignConfig:
    policy: str = "edge_reversal"
    seeds: tuple = tuple(range(50))
    max_events: int = 10_000
    workload: str = "dining"
    extra: dict = field(default_factory=dict)


def campaign(sys: ResourceSystem, cfg: CampaignConfig) -> dict:
    policy = {
        "edge_reversal": async_sim.EdgeReversal(),
        "acquisition_order": async_sim.AcquisitionOrder(),
        "naive": async_sim.Naive(),
    }[cfg.policy]
    totals = {"runs": 0, "deadlocks": 0, "me_violations": 0, "cyclic_snapshots": 0,
              "snapshots": 0, "events_min": None, "max_chain": 0, "starved_runs": 0}
    for seed in cfg.seeds:
        if cfg.workload == "dining":
            wl = async_sim.dining_workload(sys)
        else:
            wl = async_sim.random_workload(sys, random.Random(seed), loop=True)
        t = async_sim.run(sys, policy, wl, seed, cfg.max_events)
        waits = async_sim.measure_waits(t)
        totals["runs"] += 1
        totals["deadlocks"] += t.deadlock or t.first_deadlock_event is not None
        totals["me_violations"] += t.me_violations
        totals["cyclic_snapshots"] += t.cyclic_snapshots
        totals["snapshots"] += t.snapshots_checked
        totals["events_min"] = t.event_count if totals["events_min"] is None else min(totals["events_min"], t.event_count)
        totals["max_chain"] = max([totals["max_chain"]] + [w["max_chain"] for w in waits.values()])
        totals["starved_runs"] += any(c == 0 for c in t.computes.values())
    return totals


__all__ = [
    "connected_graphs", "all_wfgs", "check_detection", "sweep_detection", "sweep_conversions",
    "sweep_edge_reversal", "BeadSweepConfig", "sweep_bead_reversal", "CampaignConfig", "campaign",
]
