"""Deadlock detection and prevention on graphs of processes and resources."""
from .graph_core import FORMAT, Digraph, Graph, GraphError, SimpleCycle
from .wait_models import And, AndOr, DisjXY, Or, WaitForGraph, XOutOfY
from .detection import Verdict, detect, oracle_fixpoint
from .edge_reversal import AcyclicOrientation, conc_simulated, conc_structural, run_until_period
from .bead_reversal import BeadPlacement, run_smer, validate_placement
from .resource_order import ResourceSystem, build_G, build_H

__all__ = [
    "FORMAT", "Digraph", "Graph", "GraphError", "SimpleCycle",
    "And", "AndOr", "DisjXY", "Or", "WaitForGraph", "XOutOfY",
    "Verdict", "detect", "oracle_fixpoint",
    "AcyclicOrientation", "conc_simulated", "conc_structural", "run_until_period",
    "BeadPlacement", "run_smer", "validate_placement",
    "ResourceSystem", "build_G", "build_H",
]
