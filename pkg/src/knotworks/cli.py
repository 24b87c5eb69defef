"""``knotworks`` command-line front end.

Exit codes: 0 ok, 1 domain verdict (deadlock found, invalid placement,
naive simulation deadlocked), 2 input error, 3 search budget or cap
exceeded.  JSON goes to stdout only for exit codes 0 and 1; a one-line
summary goes to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import async_sim, bead_reversal as br, detection, edge_reversal as er, resource_order as ro
from .graph_core import FORMAT, CycleCapExceeded, Graph, longest_path_length
from .wait_models import And, Or, WaitForGraph

OK, VERDICT, INPUT_ERROR, BUDGET = 0, 1, 2, 3


class Budget(Exception):
    pass


def frac(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _load(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _graph(path):
    return Graph.from_json(_load(path))


def _orientation(g: Graph, path):
    if path is None:
        return er.orientation_from_order(g)
    return er.AcyclicOrientation.from_json(_load(path), graph=g)


# -- detect ------------------------------------------------------------------

def cmd_detect(a):
    default = {"and": And(), "or": Or()}.get(a.model)
    w = WaitForGraph.from_json(_load(a.input), default=default)
    kw = {}
    if a.model in ("andor", "dxy"):
        kw = {"witness": a.witness, "budget": a.budget}
    v = detection.detect(w, a.model, **kw)
    if isinstance(v.witness, detection.BudgetExceeded):
        raise Budget(f"b-knot search exceeded {a.budget} b-subgraphs")
    out = v.to_json(w.digraph._index, a.model)
    msg = (f"deadlocked: {', '.join(out['deadlocked_set'])}" if v.deadlocked else "no deadlock")
    return (VERDICT if v.deadlocked else OK), out, msg


# -- ser ---------------------------------------------------------------------

def cmd_ser(a):
    g = _graph(a.graph)
    if a.action == "optimize":
        if not a.exact and a.seed is None:
            raise ValueError("heuristic optimize needs --seed (or use --exact)")
        mode = "exact" if a.exact else "heuristic"
        om, conc = er.optimal_orientation(g, mode=mode, seed=a.seed)
        out = {"format": FORMAT, "mode": mode, "conc": frac(conc), "chi_bar": frac(1 / conc),
               "orientation": {"format": FORMAT, "directions": [list(x) for x in om.arc_list()]}}
        if not a.exact:
            out["seed"] = a.seed
        return OK, out, f"best concurrency {frac(conc)} ({mode})"
    om = _orientation(g, a.orientation)
    trace = er.run_until_period(om)
    if a.action == "simulate":
        if a.trace:
            Path(a.trace).write_text(trace.to_jsonl())
        out = {"format": FORMAT, "p": trace.period, "m": trace.m,
               "conc": frac(er.conc_simulated(trace)), "tail_start": trace.tail_start}
        if a.trace:
            out["trace"] = a.trace
        return OK, out, f"p={trace.period} m={trace.m} conc={out['conc']}"
    if a.action == "concurrency":
        sim, struct = er.conc_simulated(trace), er.conc_structural(om)
        out = {"format": FORMAT, "conc": frac(struct), "conc_structural": frac(struct),
               "conc_simulated": frac(sim), "agree": sim == struct}
        return OK, out, f"conc={frac(struct)}"
    col = er.extract_interleaved_coloring(trace)
    out = {"format": FORMAT, "total": col.total, "per_vertex": col.per_vertex,
           "colors": {v: list(col.colors[v]) for v in g.vertices},
           "proper": col.is_proper(g), "interleaved": col.is_interleaved(g)}
    return OK, out, f"{col.per_vertex}-fold interleaved coloring with {col.total} colors"


# -- smer --------------------------------------------------------------------

def cmd_smer(a):
    g = _graph(a.graph)
    rates = _load(a.rates)
    rates = rates.get("rates", rates) if isinstance(rates, dict) else rates
    if not isinstance(rates, dict):
        raise ValueError("rates file must be an object")
    p = br.BeadPlacement.from_json(_load(a.beads), g, rates)
    if a.action == "validate":
        rep = br.validate_placement(g, p.rates, p)
        out = rep.to_json()
        out["max_sigma"] = rep.max_sigma
        verdict = "valid" if rep.valid else "invalid"
        return (OK if rep.valid else VERDICT), out, f"placement {verdict}"
    trace = br.run_smer(p, horizon=a.horizon)
    if a.action == "simulate":
        out = {"format": FORMAT, "steps": len(trace.states), "tail_start": trace.tail_start,
               "period": trace.period, "always_acyclic": trace.always_acyclic(),
               "first_cyclic_step": trace.first_cyclic_step,
               "blocked": sorted(trace.blocked(), key=g.index),
               "op_counts": trace.op_counts() if trace.has_period else None}
        msg = f"period {trace.period}" if trace.has_period else f"no period within {a.horizon} steps"
        return OK, out, msg
    if not trace.has_period:
        raise Budget(f"no period within {a.horizon} steps")
    rows = br.ratio_compliance(trace)
    out = {"format": FORMAT, "period": trace.period, "edges": [
        {"edge": list(r.edge), "ops": list(r.ops),
         "ratio": None if r.ratio is None else frac(r.ratio),
         "target": frac(r.target), "compliant": r.compliant} for r in rows]}
    return OK, out, ", ".join(f"{u}-{v}: {e['ratio']}" for (u, v), e in zip((r.edge for r in rows), out["edges"]))


# -- resources ---------------------------------------------------------------

def cmd_resources(a):
    sys_ = ro.ResourceSystem.from_json(_load(a.system))
    if a.action == "build-g":
        g = ro.build_G(sys_)
        return OK, g.to_json(), f"G has {len(g.edge_list())} edges"
    H = ro.build_H(sys_)
    if a.action == "build-h":
        return OK, H.to_json(), f"H has {len(H.edge_list())} edges"
    if a.coloring:
        raw = _load(a.coloring)
        col = ro.Coloring(dict(raw["colors"]))
        if not col.is_proper(H):
            raise ro.ColoringError("supplied coloring is not a proper coloring of H")
        mode = "supplied"
    else:
        mode = "exact" if a.exact else "greedy"
        col = ro.color_graph(H, mode)
    if a.action == "color":
        out = col.to_json(H)
        out["mode"] = mode
        return OK, out, f"{col.num_colors} colors ({mode})"
    phi = ro.orient_by_coloring(H, col)
    lp = longest_path_length(phi.digraph())
    out = {"format": FORMAT, "mode": mode, "num_colors": col.num_colors,
           "directions": [list(x) for x in phi.arc_list()],
           "longest_path": lp, "bound": col.num_colors - 1, "within_bound": lp <= col.num_colors - 1,
           "wait_bound": ro.wait_bound(col.num_colors, sys_.max_users())}
    return OK, out, f"longest path {lp} <= {col.num_colors - 1}"


# -- asim --------------------------------------------------------------------

def cmd_asim(a):
    sc = async_sim.Scenario.from_json(_load(a.scenario))
    if a.seed is not None:
        sc.seed = a.seed
    if a.max_events is not None:
        sc.max_events = a.max_events
    trace = sc.run()
    out = trace.summary()
    if a.trace:
        Path(a.trace).write_text(trace.to_jsonl())
        out["trace"] = a.trace
    if trace.deadlock:
        return VERDICT, out, f"deadlock: cycle {', '.join(trace.witness)}"
    return OK, out, f"{trace.event_count} events, no deadlock, max chain {out['max_chain']}"


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="knotworks", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", help="deadlock verdict for a wait-for graph")
    d.add_argument("--model", required=True, choices=sorted(detection.DETECTORS))
    d.add_argument("--input", required=True)
    d.add_argument("--witness", choices=["constructive", "search"], default="constructive")
    d.add_argument("--budget", type=int, default=detection.DEFAULT_BKNOT_BUDGET)
    d.set_defaults(fn=cmd_detect)

    s = sub.add_parser("ser", help="synchronous edge reversal")
    s.add_argument("action", choices=["simulate", "concurrency", "optimize", "coloring"])
    s.add_argument("--graph", required=True)
    s.add_argument("--orientation")
    s.add_argument("--exact", action="store_true")
    s.add_argument("--seed", type=int)
    s.add_argument("--trace")
    s.set_defaults(fn=cmd_ser)

    b = sub.add_parser("smer", help="bead reversal")
    b.add_argument("action", choices=["validate", "simulate", "ratios"])
    b.add_argument("--graph", required=True)
    b.add_argument("--rates", required=True)
    b.add_argument("--beads", required=True)
    b.add_argument("--horizon", type=int, default=br.DEFAULT_HORIZON)
    b.set_defaults(fn=cmd_smer)

    r = sub.add_parser("resources", help="process graph, resource graph, coloring")
    r.add_argument("action", choices=["build-g", "build-h", "color", "orient"])
    r.add_argument("--system", required=True)
    r.add_argument("--exact", action="store_true")
    r.add_argument("--coloring")
    r.set_defaults(fn=cmd_resources)

    m = sub.add_parser("asim", help="asynchronous resource-sharing simulation")
    m.add_argument("action", choices=["run"])
    m.add_argument("--scenario", required=True)
    m.add_argument("--seed", type=int)
    m.add_argument("--max-events", type=int)
    m.add_argument("--trace")
    m.set_defaults(fn=cmd_asim)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return INPUT_ERROR if exc.code else OK
    try:
        code, payload, msg = args.fn(args)
    except (Budget, CycleCapExceeded, er.SearchCapExceeded, ro.ColoringCapExceeded) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return BUDGET
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    print(msg, file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
