"""Bead reversal on a graph abacus.

Each process ``i`` has a rate ``r_i``.  Edge ``{i, j}`` carries
``e_ij = r_i + r_j - gcd(r_i, r_j)`` beads split between its two ends; the
edge points at ``i`` when at least ``r_i`` beads sit on ``i``'s end.  A
process whose every edge points at it is a sink; under heavy load every
sink fires each step, moving ``r_i`` beads to the far end of each of its
edges, and keeps firing while it remains a sink.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import gcd
from typing import Mapping

from .graph_core import (
    FORMAT,
    Digraph,
    Graph,
    SimpleCycle,
    _check_format,
    enumerate_simple_cycles,
    find_directed_cycle,
)

DEFAULT_HORIZON = 10_000


class PlacementError(ValueError):
    """Bead placement does not fit its graph, rates or capacities."""


def edge_capacity(r_i: int, r_j: int) -> int:
    if r_i < 1 or r_j < 1:
        raise PlacementError("rates must be positive")
    return r_i + r_j - gcd(r_i, r_j)


def legal_splits(r_i: int, r_j: int) -> list[tuple[int, int]]:
    """Every bead split ``(a_i, a_j)`` with both counts multiples of the gcd."""
    e, g = edge_capacity(r_i, r_j), gcd(r_i, r_j)
    return [(a, e - a) for a in range(0, e + 1, g)]


def _check_rates(g: Graph, rates: Mapping[str, int]) -> dict:
    if set(rates) != set(g.vertices):
        raise PlacementError("rates must be given for every vertex")
    out = {}
    for v in g.vertices:
        r = rates[v]
        if not isinstance(r, int) or isinstance(r, bool) or r < 1:
            raise PlacementError(f"rate of {v!r} must be a positive integer")
        out[v] = r
    return out


@dataclass(frozen=True)
class BeadPlacement:
    """Bead counts on both ends of every edge.

    ``beads[(u, v)] = (a_u, a_v)`` with ``(u, v)`` in ``graph.edge_list()``
    order.  Capacity consistency is checked on construction; residue and
    orientation conditions are reported by :meth:`edge_issues`.
    """

    graph: Graph
    rates: dict
    beads: dict
    _edges: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __init__(self, graph: Graph, rates: Mapping[str, int], beads: Mapping):
        rates = _check_rates(graph, rates)
        edges = tuple(graph.edge_list())
        clean = {}
        for key, counts in beads.items():
            u, v = key
            a_u, a_v = counts
            if not graph.has_edge(u, v):
                raise PlacementError(f"beads on a non-edge {key!r}")
            for a in (a_u, a_v):
                if not isinstance(a, int) or isinstance(a, bool) or a < 0:
                    raise PlacementError("bead counts must be nonnegative integers")
            k = (u, v) if (u, v) in edges else (v, u)
            if k in clean:
                raise PlacementError(f"edge {k!r} listed twice")
            clean[k] = (a_u, a_v) if k == (u, v) else (a_v, a_u)
        for u, v in edges:
            if (u, v) not in clean:
                raise PlacementError(f"no beads given for edge {(u, v)!r}")
            if sum(clean[(u, v)]) != edge_capacity(rates[u], rates[v]):
                raise PlacementError(
                    f"edge {(u, v)!r} holds {sum(clean[(u, v)])} beads, capacity is "
                    f"{edge_capacity(rates[u], rates[v])}"
                )
        object.__setattr__(self, "graph", graph)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "beads", clean)
        object.__setattr__(self, "_edges", edges)

    def at(self, u: str, v: str) -> int:
        """Beads on ``u``'s end of edge ``{u, v}``."""
        if (u, v) in self.beads:
            return self.beads[(u, v)][0]
        return self.beads[(v, u)][1]

    def edge_issues(self) -> dict:
        """Per-edge problems: residue not a multiple of the gcd, or not
        exactly one end meeting its rate."""
        issues = {}
        for u, v in self._edges:
            a_u, a_v = self.beads[(u, v)]
            r_u, r_v = self.rates[u], self.rates[v]
            g = gcd(r_u, r_v)
            probs = []
            if a_u % g or a_v % g:
                probs.append("residue")
            if (a_u >= r_u) == (a_v >= r_v):
                probs.append("orientation")
            if probs:
                issues[(u, v)] = probs
        return issues

    def is_well_formed(self) -> bool:
        return not self.edge_issues()

    def to_json(self) -> dict:
        return {
            "format": FORMAT,
            "rates": {v: self.rates[v] for v in self.graph.vertices},
            "beads": [
                {"edge": [u, v], "at_i": self.beads[(u, v)][0], "at_j": self.beads[(u, v)][1]}
                for u, v in self._edges
            ],
        }

    @classmethod
    def from_json(cls, data: dict, graph: Graph, rates: Mapping[str, int] | None = None):
        _check_format(data)
        try:
            if rates is None:
                rates = data["rates"]
            beads = {}
            for item in data["beads"]:
                u, v = item["edge"]
                if (u, v) in beads or (v, u) in beads:
                    raise PlacementError(f"edge {(u, v)!r} listed twice")
                beads[(u, v)] = (item["at_i"], item["at_j"])
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, PlacementError):
                raise
            raise PlacementError(f"malformed placement JSON: {exc}") from exc
        return cls(graph, rates, beads)


def orientation_from_beads(p: BeadPlacement) -> Digraph:
    """Each edge points at the end holding at least that end's rate.

    The result need not be acyclic.
    """
    arcs = []
    for u, v in p._edges:
        a_u, a_v = p.beads[(u, v)]
        to_u, to_v = a_u >= p.rates[u], a_v >= p.rates[v]
        if to_u == to_v:
            raise PlacementError(f"edge {(u, v)!r} is not oriented in exactly one direction")
        arcs.append((v, u) if to_u else (u, v))
    return Digraph(p.graph.vertices, arcs)


def rho(cycle: SimpleCycle, rates: Mapping[str, int]) -> int:
    return sum(rates[v] for v in cycle.vertices)


def sigma(cycle: SimpleCycle, p: BeadPlacement) -> int:
    """Beads on the far ends of the cycle's edges, for the heavier of the
    two traversal directions."""
    plus = sum(p.at(y, x) for x, y in cycle.plus_steps())
    minus = sum(p.at(y, x) for x, y in cycle.minus_steps())
    return max(plus, minus)


@dataclass
class ValidationReport:
    edges: dict          # edge -> list of issues (empty when fine)
    cycles: list         # (cycle, sigma, rho)
    valid: bool

    @property
    def max_sigma(self):
        return max((s for _, s, _ in self.cycles), default=None)

    def to_json(self) -> dict:
        return {
            "format": FORMAT,
            "valid": self.valid,
            "edges": [{"edge": list(e), "ok": not issues, "issues": issues}
                      for e, issues in self.edges.items()],
            "cycles": [{"vertices": list(c.vertices), "sigma": s, "rho": r, "ok": s < r}
                       for c, s, r in self.cycles],
        }


def validate_placement(g: Graph, rates: Mapping[str, int], p: BeadPlacement, **cycle_caps) -> ValidationReport:
    """Check every edge and the ``sigma < rho`` criterion on every simple cycle."""
    if p.graph != g or p.rates != dict(rates):
        raise PlacementError("placement does not belong to this graph and rates")
    issues = p.edge_issues()
    edges = {e: issues.get(e, []) for e in p._edges}
    cycles = [(c, sigma(c, p), rho(c, rates)) for c in enumerate_simple_cycles(g, **cycle_caps)]
    ok = not issues and all(s < r for _, s, r in cycles)
    return ValidationReport(edges, cycles, ok)


# -- simulation --------------------------------------------------------------

class _Abacus:
    """Placement as a tuple of bead counts on the first end of each edge."""

    def __init__(self, g: Graph, rates: Mapping[str, int]):
        self.g = g
        self.rates = dict(rates)
        self.edges = g.edge_list()
        idx = g._index
        self.cap = [edge_capacity(self.rates[u], self.rates[v]) for u, v in self.edges]
        self.r = [self.rates[v] for v in g.vertices]
        # incident edges per vertex, flagged True when the vertex is the first end
        self.inc = [[] for _ in g.vertices]
        for k, (u, v) in enumerate(self.edges):
            self.inc[idx[u]].append((k, True))
            self.inc[idx[v]].append((k, False))

    def encode(self, p: BeadPlacement) -> tuple:
        return tuple(p.beads[e][0] for e in self.edges)

    def decode(self, state) -> BeadPlacement:
        beads = {e: (a, c - a) for e, a, c in zip(self.edges, state, self.cap)}
        return BeadPlacement(self.g, self.rates, beads)

    def sinks(self, state) -> list[int]:
        out = []
        for i, inc in enumerate(self.inc):
            r = self.r[i]
            for k, first in inc:
                mine = state[k] if first else self.cap[k] - state[k]
                if mine < r:
                    break
            else:
                out.append(i)
        return out

    def step(self, state, sink_ids) -> tuple:
        s = list(state)
        for i in sink_ids:
            r = self.r[i]
            for k, first in self.inc[i]:
                s[k] += -r if first else r
        return tuple(s)

    def cyclic(self, state) -> bool:
        arcs = []
        for k, (u, v) in enumerate(self.edges):
            arcs.append((v, u) if state[k] >= self.rates[u] else (u, v))
        return find_directed_cycle(Digraph(self.g.vertices, arcs)) is not None


def smer_step(p: BeadPlacement) -> BeadPlacement:
    """Every sink simultaneously sends its rate in beads along each edge."""
    if not p.is_well_formed():
        raise PlacementError(f"placement is not well formed: {p.edge_issues()}")
    ab = _Abacus(p.graph, p.rates)
    state = ab.encode(p)
    return ab.decode(ab.step(state, ab.sinks(state)))


@dataclass
class SmerTrace:
    graph: Graph
    rates: dict
    states: list            # raw per-edge counts, see _Abacus
    fired: list             # frozenset of firing processes per step
    tail_start: int | None
    period: int | None
    first_cyclic_step: int | None
    _abacus: _Abacus = field(repr=False)

    def placement(self, s: int) -> BeadPlacement:
        return self._abacus.decode(self.states[s])

    @property
    def has_period(self) -> bool:
        return self.period is not None

    def op_counts(self) -> dict:
        """Firings per process within one period."""
        if self.period is None:
            raise ValueError("trace has no complete period")
        counts = {v: 0 for v in self.graph.vertices}
        for fired in self.fired[self.tail_start:self.tail_start + self.period]:
            for v in fired:
                counts[v] += 1
        return counts

    def blocked(self) -> frozenset:
        """Processes that never fire again (within the period, or at all
        when no period was found)."""
        window = self.fired[self.tail_start:] if self.period else self.fired
        active = set().union(*window) if window else set()
        return frozenset(self.graph.vertices) - active

    def always_acyclic(self) -> bool:
        return self.first_cyclic_step is None

    def ops_per_step(self) -> Fraction:
        """Average number of firing processes per step over the period.
        Empirical statistic only."""
        return Fraction(sum(self.op_counts().values()), self.period)


def run_smer(p0: BeadPlacement, horizon: int = DEFAULT_HORIZON) -> SmerTrace:
    """Simulate until a placement repeats or ``horizon`` steps have run.

    Placements that are not well formed are rejected; a violated
    ``sigma < rho`` criterion is simulated anyway.
    """
    if not p0.is_well_formed():
        raise PlacementError(f"placement is not well formed: {p0.edge_issues()}")
    ab = _Abacus(p0.graph, p0.rates)
    vs = p0.graph.vertices
    state = ab.encode(p0)
    seen = {}
    states, fired = [], []
    first_cyclic = None
    tail = period = None
    while True:
        if state in seen:
            tail = seen[state]
            period = len(states) - tail
            break
        if len(states) >= horizon:
            break
        seen[state] = len(states)
        if first_cyclic is None and ab.cyclic(state):
            first_cyclic = len(states)
        states.append(state)
        sk = ab.sinks(state)
        fired.append(frozenset(vs[i] for i in sk))
        state = ab.step(state, sk)
    return SmerTrace(p0.graph, dict(p0.rates), states, fired, tail, period, first_cyclic, ab)


@dataclass(frozen=True)
class ScheduleExploration:
    states: int
    cyclic_state: BeadPlacement | None
    complete: bool

    @property
    def deadlock_reachable(self) -> bool:
        return self.cyclic_state is not None


def explore_schedules(p0: BeadPlacement, max_states: int = 100_000) -> ScheduleExploration:
    """Breadth-first search over every asynchronous schedule.

    Nonadjacent sinks fire independently, so firing one sink at a time
    reaches every placement any schedule can reach.  Stops at the first
    placement whose induced orientation has a directed cycle.
    """
    if not p0.is_well_formed():
        raise PlacementError(f"placement is not well formed: {p0.edge_issues()}")
    ab = _Abacus(p0.graph, p0.rates)
    start = ab.encode(p0)
    seen = {start}
    frontier = deque([start])
    while frontier:
        state = frontier.popleft()
        if ab.cyclic(state):
            return ScheduleExploration(len(seen), ab.decode(state), True)
        for i in ab.sinks(state):
            nxt = ab.step(state, [i])
            if nxt not in seen:
                if len(seen) >= max_states:
                    return ScheduleExploration(len(seen), None, False)
                seen.add(nxt)
                frontier.append(nxt)
    return ScheduleExploration(len(seen), None, True)


@dataclass(frozen=True)
class EdgeRatio:
    edge: tuple
    ops: tuple          # firings of (u, v) within the period
    ratio: Fraction | None    # ops_u / ops_v
    target: Fraction    # r_v / r_u

    @property
    def compliant(self) -> bool:
        return self.ratio is not None and self.ratio == self.target


def ratio_compliance(trace: SmerTrace, rates: Mapping[str, int] | None = None) -> list[EdgeRatio]:
    """Per-edge firing ratio over one period against ``r_j / r_i``."""
    if trace.period is None:
        raise ValueError("trace has no complete period")
    rates = dict(trace.rates if rates is None else rates)
    ops = trace.op_counts()
    out = []
    for u, v in trace.graph.edge_list():
        ratio = Fraction(ops[u], ops[v]) if ops[v] else None
        out.append(EdgeRatio((u, v), (ops[u], ops[v]), ratio, Fraction(rates[v], rates[u])))
    return out


def all_placements(g: Graph, rates: Mapping[str, int]):
    """Every well-formed placement (residue-respecting splits on each edge)."""
    edges = g.edge_list()
    choices = [legal_splits(rates[u], rates[v]) for u, v in edges]
    for combo in product(*choices):
        yield BeadPlacement(g, rates, dict(zip(edges, combo)))


def count_placements(g: Graph, rates: Mapping[str, int]) -> int:
    total = 1
    for u, v in g.edge_list():
        total *= len(legal_splits(rates[u], rates[v]))
    return total


def random_placement(g: Graph, rates: Mapping[str, int], rng: random.Random) -> BeadPlacement:
    beads = {(u, v): rng.choice(legal_splits(rates[u], rates[v])) for u, v in g.edge_list()}
    return BeadPlacement(g, rates, beads)
