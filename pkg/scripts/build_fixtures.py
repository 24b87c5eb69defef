"""Write the bundled fixture files.

The triangle placements are chosen by exhaustive search over all
well-formed, initially acyclic placements with rates (1, 2, 3): the first
one (in enumeration order) whose clockwise far-end sum is 5, and the first
whose clockwise far-end sum is 6.
"""
import json
from pathlib import Path

from knotworks.async_sim import AcquisitionOrder, EdgeReversal, Naive, Program, Scenario, dining_workload
from knotworks.bead_reversal import all_placements, orientation_from_beads
from knotworks.edge_reversal import AcyclicOrientation
from knotworks.graph_core import FORMAT, Digraph, Graph, enumerate_simple_cycles, find_directed_cycle
from knotworks.resource_order import ResourceSystem
from knotworks.wait_models import And, WaitForGraph

OUT = Path(__file__).resolve().parent.parent / "src" / "knotworks" / "fixtures"


def write(name, data, description):
    data = {"format": FORMAT, "description": description, **{k: v for k, v in data.items() if k != "format"}}
    (OUT / name).write_text(json.dumps(data, indent=2) + "\n")


def example1():
    return ResourceSystem(
        ["P1", "P2", "P3", "P4", "P5"],
        ["R1", "R2", "R3", "R4", "R5", "R6"],
        {"P1": ["R1", "R2"], "P2": ["R2", "R3", "R6"], "P3": ["R3", "R4", "R6"],
         "P4": ["R4", "R5", "R6"], "P5": ["R1", "R5"]},
    )


def triangle_placement(g, rates, target):
    cyc = enumerate_simple_cycles(g)[0]
    for p in all_placements(g, rates):
        if not p.is_well_formed() or find_directed_cycle(orientation_from_beads(p)) is not None:
            continue
        if sum(p.at(y, x) for x, y in cyc.plus_steps()) == target:
            return p
    raise RuntimeError(f"no placement with clockwise sum {target}")


def main():
    sys1 = example1()
    write("example1.json", sys1.to_json(), "five processes sharing six resources")
    write("example1_h_coloring.json",
          {"colors": {"R1": 2, "R2": 1, "R3": 0, "R4": 1, "R5": 0, "R6": 2}},
          "proper 3-coloring of the resource graph of example1")

    procs = list(sys1.processes)
    w = WaitForGraph(Digraph(procs, [("P1", "P2"), ("P2", "P3"), ("P3", "P4"), ("P4", "P2")]), default=And())
    write("example2.json", w.to_json(), "AND wait-for graph with a cycle on P2, P3, P4 and P1 waiting on P2")
    write("arcless.json", Digraph(procs, []).to_json(), "wait-for graph with no arcs")

    write("example3.json", {
        "out_set": ["Pj", "Pk", "Pl"],
        "condition": {"model": "xy", "x": 2},
        "expected_andor": [["Pj", "Pk"], ["Pj", "Pl"], ["Pk", "Pl"]],
    }, "2-out-of-3 request and its AND-OR form")
    write("example4.json", {
        "out_set": ["Pj", "Pk", "Pl", "Pt"],
        "condition": {"model": "dxy", "pairs": [[2, ["Pj", "Pk"]], [2, ["Pk", "Pl", "Pt"]]]},
        "expected_andor": [["Pj", "Pk"], ["Pk", "Pl"], ["Pk", "Pt"], ["Pl", "Pt"]],
        "expected_dxy_from_andor": [[2, ["Pj", "Pk"]], [2, ["Pk", "Pl"]], [2, ["Pk", "Pt"]], [2, ["Pl", "Pt"]]],
    }, "disjunctive 2-of-2 or 2-of-3 request, its AND-OR form and back")

    c5 = Graph(["P1", "P2", "P3", "P4", "P5"],
               [("P1", "P2"), ("P2", "P3"), ("P3", "P4"), ("P4", "P5"), ("P5", "P1")])
    write("c5.json", c5.to_json(), "ring on five vertices")
    om = AcyclicOrientation(c5, [("P1", "P2"), ("P3", "P2"), ("P3", "P4"), ("P4", "P5"), ("P1", "P5")])
    write("c5_23.json", {"directions": om.to_json()["directions"]},
          "orientation of c5 with three arcs one way round and two the other")
    path4 = Graph(["P1", "P2", "P3", "P4"], [("P1", "P2"), ("P2", "P3"), ("P3", "P4")])
    write("path4.json", path4.to_json(), "path on four vertices")

    edge = Graph(["Pi", "Pj"], [("Pi", "Pj")])
    write("edge23.json", edge.to_json(), "single edge")
    write("edge23_rates.json", {"rates": {"Pi": 2, "Pj": 3}}, "rates 2 and 3")
    write("edge23_beads.json", {"beads": [{"edge": ["Pi", "Pj"], "at_i": 0, "at_j": 4}]},
          "all four beads on the Pj end")

    tri = Graph(["P1", "P2", "P3"], [("P1", "P2"), ("P2", "P3"), ("P3", "P1")])
    rates = {"P1": 1, "P2": 2, "P3": 3}
    write("triangle.json", tri.to_json(), "complete graph on three vertices")
    write("triangle_rates.json", {"rates": rates}, "rates 1, 2, 3")
    for target in (5, 6):
        p = triangle_placement(tri, rates, target)
        write(f"triangle_sigma{target}.json", {"beads": p.to_json()["beads"]},
              f"initially acyclic placement with clockwise far-end sum {target}")

    ring4 = Graph(["v0", "v1", "v2", "v3"], [("v0", "v1"), ("v1", "v2"), ("v2", "v3"), ("v3", "v0")])
    write("ring4.json", ring4.to_json(), "ring on four vertices")
    write("ring4_live_equal.json", {
        "rates": {"v0": 1, "v1": 2, "v2": 3, "v3": 2},
        "beads": [{"edge": ["v0", "v1"], "at_i": 1, "at_j": 1}, {"edge": ["v0", "v3"], "at_i": 1, "at_j": 1},
                  {"edge": ["v1", "v2"], "at_i": 4, "at_j": 0}, {"edge": ["v2", "v3"], "at_i": 2, "at_j": 2}],
    }, "placement whose far-end sum equals the rate sum on the ring, yet no schedule reaches a cycle")

    wl = {"P1": Program((frozenset({"R2"}),)), "P2": Program((frozenset({"R2", "R3", "R6"}),)),
          "P3": Program((frozenset({"R3", "R4"}),)), "P4": Program((frozenset({"R4", "R6"}),))}
    hold = {"P2": frozenset({"R2", "R6"}), "P3": frozenset({"R3"}), "P4": frozenset({"R4"})}
    write("scenario_naive_example2.json", Scenario(sys1, Naive(), wl, 0, 1000, hold).to_json(),
          "naive policy driven into a hold-and-wait cycle on P2, P3, P4")
    dining = dining_workload(sys1)
    write("scenario_edge_reversal.json", Scenario(sys1, EdgeReversal(), dining, 0, 10_000).to_json(),
          "heavy load on example1 under edge reversal")
    write("scenario_acquisition_order.json", Scenario(sys1, AcquisitionOrder(), dining, 0, 10_000).to_json(),
          "heavy load on example1 under acquisition order")


if __name__ == "__main__":
    main()
