"""Synchronous scheduling by edge reversal.

Starting from an acyclic orientation of a connected graph, every step
turns all current sinks into sources.  The orientation sequence becomes
periodic; within a period every vertex is a sink equally often (``m``
times out of a period of ``p``), which gives the concurrency ``m/p``.
The same value follows from the initial orientation alone, as a minimum
over simple cycles.

All concurrency values are :class:`fractions.Fraction`.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .graph_core import (
    FORMAT,
    CycleCapExceeded,
    Digraph,
    Graph,
    GraphError,
    SimpleCycle,
    _check_format,
    enumerate_simple_cycles,
    find_directed_cycle,
)

DEFAULT_MAX_STATES = 10**6
DEFAULT_MAX_EXACT_EDGES = 15


class OrientationError(ValueError):
    """Orientation does not match its graph or is not acyclic."""


class SearchCapExceeded(RuntimeError):
    """Exhaustive search or simulation would exceed its configured cap."""


@dataclass(frozen=True)
class AcyclicOrientation:
    """Orientation of every edge of ``graph``; the arc ``(u, v)`` points at ``v``."""

    graph: Graph
    arcs: frozenset
    _out: dict = field(init=False, repr=False, compare=False, hash=False)

    def __init__(self, graph: Graph, arcs: Iterable[Sequence[str]], check: bool = True):
        arcs = frozenset(tuple(a) for a in arcs)
        if check:
            if len(arcs) != len(graph.edges) or {frozenset(a) for a in arcs} != graph.edges:
                raise OrientationError("orientation must direct every edge exactly once")
        out = {v: [] for v in graph.vertices}
        for u, v in arcs:
            out[u].append(v)
        object.__setattr__(self, "graph", graph)
        object.__setattr__(self, "arcs", arcs)
        object.__setattr__(self, "_out", out)
        if check and find_directed_cycle(self.digraph()) is not None:
            raise OrientationError("orientation has a directed cycle")

    def digraph(self) -> Digraph:
        return Digraph(self.graph.vertices, self.arcs)

    def sinks(self) -> frozenset:
        return frozenset(v for v in self.graph.vertices if not self._out[v])

    def sources(self) -> frozenset:
        heads = {v for _, v in self.arcs}
        return frozenset(v for v in self.graph.vertices if v not in heads)

    def points_to(self, u: str, v: str) -> bool:
        """True iff the edge ``{u, v}`` is oriented from ``u`` towards ``v``."""
        return (u, v) in self.arcs

    def arc_list(self) -> list[tuple[str, str]]:
        idx = self.graph._index
        return sorted(self.arcs, key=lambda a: (idx[a[0]], idx[a[1]]))

    def to_json(self) -> dict:
        return {
            "format": FORMAT,
            "graph": self.graph.to_json(),
            "directions": [list(a) for a in self.arc_list()],
        }

    @classmethod
    def from_json(cls, data: dict, graph: Graph | None = None) -> "AcyclicOrientation":
        _check_format(data)
        if "graph" in data:
            g = Graph.from_json(data["graph"])
            if graph is not None and g != graph:
                raise OrientationError("orientation file refers to a different graph")
        elif graph is not None:
            g = graph
        else:
            raise OrientationError("orientation JSON needs a graph")
        try:
            return cls(g, data["directions"])
        except (KeyError, TypeError) as exc:
            raise OrientationError(f"malformed orientation JSON: {exc}") from exc


def orientation_from_order(g: Graph, order: Sequence[str] | None = None) -> AcyclicOrientation:
    """Orient every edge from the earlier to the later vertex of ``order``."""
    order = list(g.vertices if order is None else order)
    pos = {v: i for i, v in enumerate(order)}
    arcs = [(u, v) if pos[u] < pos[v] else (v, u) for u, v in g.edge_list()]
    return AcyclicOrientation(g, arcs, check=False)


def reverse_at(omega: AcyclicOrientation, vertices: Iterable[str]) -> AcyclicOrientation:
    """Turn each of ``vertices`` into a source at once.

    The vertices must be pairwise nonadjacent.
    """
    vs = frozenset(vertices)
    g = omega.graph
    for v in vs:
        if any(w in vs for w in g.neighbors(v)):
            raise OrientationError("simultaneous reversals need an independent set")
    arcs = [(v, u) if v in vs else (u, v) for u, v in omega.arcs]
    return AcyclicOrientation(g, arcs, check=False)


def ser_step(omega: AcyclicOrientation, check: bool = True) -> AcyclicOrientation:
    """One synchronous step: every sink reverses all of its edges."""
    if check and find_directed_cycle(omega.digraph()) is not None:
        raise OrientationError("ser_step needs an acyclic orientation")
    return reverse_at(omega, omega.sinks())


# -- bitmask engine ----------------------------------------------------------
# Edge k = (a, b) from graph.edge_list(); bit k set means a -> b.

class _Engine:
    def __init__(self, g: Graph):
        self.g = g
        self.edges = g.edge_list()
        idx = g._index
        # per vertex: (mask of incident edges, mask of those bits that must be
        # set for every incident edge to point at the vertex)
        inc = [0] * len(g.vertices)
        want = [0] * len(g.vertices)
        for k, (a, b) in enumerate(self.edges):
            inc[idx[a]] |= 1 << k
            inc[idx[b]] |= 1 << k
            want[idx[b]] |= 1 << k
        self.inc = inc
        self.want = want

    def encode(self, omega: AcyclicOrientation) -> int:
        mask = 0
        for k, (a, b) in enumerate(self.edges):
            if (a, b) in omega.arcs:
                mask |= 1 << k
        return mask

    def decode(self, mask: int) -> AcyclicOrientation:
        arcs = [(a, b) if mask >> k & 1 else (b, a) for k, (a, b) in enumerate(self.edges)]
        return AcyclicOrientation(self.g, arcs, check=False)

    def sinks(self, mask: int) -> list[int]:
        inc, want = self.inc, self.want
        return [i for i in range(len(inc)) if mask & inc[i] == want[i]]

    def step(self, mask: int, sink_ids) -> int:
        for i in sink_ids:
            # a sink's incident bits equal want[i]; flipping them all reverses them
            mask ^= self.inc[i]
        return mask


def _run_masks(engine: _Engine, start: int, max_states: int):
    seen = {}
    seq = []
    sink_seq = []
    mask = start
    while mask not in seen:
        if len(seq) >= max_states:
            raise SearchCapExceeded(f"no period within {max_states} states")
        seen[mask] = len(seq)
        seq.append(mask)
        sk = engine.sinks(mask)
        sink_seq.append(sk)
        mask = engine.step(mask, sk)
    return seq, sink_seq, seen[mask]


@dataclass
class SerTrace:
    """Orientations ``omega_0 .. omega_{tail_start + period - 1}``.

    ``omega_{tail_start + period}`` equals ``omega_{tail_start}``.
    """

    graph: Graph
    orientations: list
    sink_sets: list
    tail_start: int
    period: int
    sink_counts: dict

    @property
    def initial(self) -> AcyclicOrientation:
        return self.orientations[0]

    @property
    def m(self) -> int:
        counts = set(self.sink_counts.values())
        if len(counts) != 1:
            raise ValueError(f"unequal per-vertex sink counts in the period: {self.sink_counts}")
        return counts.pop()

    @property
    def p(self) -> int:
        return self.period

    def sink_set_at(self, s: int) -> frozenset:
        if s < len(self.sink_sets):
            return self.sink_sets[s]
        return self.sink_sets[self.tail_start + (s - self.tail_start) % self.period]

    def sink_count_prefix(self, s: int) -> dict:
        """``m_i(s)``: times each vertex is a sink in ``omega_0 .. omega_{s-1}``."""
        counts = {v: 0 for v in self.graph.vertices}
        t = min(s, self.tail_start)
        for k in range(t):
            for v in self.sink_sets[k]:
                counts[v] += 1
        rest = s - t
        full, part = divmod(rest, self.period)
        for v in counts:
            counts[v] += full * self.sink_counts[v]
        for k in range(self.tail_start, self.tail_start + part):
            for v in self.sink_sets[k]:
                counts[v] += 1
        return counts

    def prefix_average(self, s: int) -> Fraction:
        n = len(self.graph.vertices)
        return Fraction(sum(self.sink_count_prefix(s).values()), s * n)

    def first_sink_times(self) -> dict:
        out = {}
        for s, sk in enumerate(self.sink_sets):
            for v in sk:
                out.setdefault(v, s)
        return out

    def max_sink_gap(self) -> int:
        """Largest distance between consecutive sink times of one vertex,
        measured cyclically inside the period."""
        worst = 0
        p = self.period
        for v in self.graph.vertices:
            times = [s - self.tail_start for s in range(self.tail_start, self.tail_start + p)
                     if v in self.sink_sets[s]]
            for a, b in zip(times, times[1:] + [times[0] + p]):
                worst = max(worst, b - a)
        return worst

    def to_jsonl(self) -> str:
        lines = []
        for s, (om, sk) in enumerate(zip(self.orientations, self.sink_sets)):
            lines.append(json.dumps({
                "step": s,
                "directions": [list(a) for a in om.arc_list()],
                "sinks": sorted(sk, key=self.graph._index.__getitem__),
                "periodic": s >= self.tail_start,
            }))
        return "\n".join(lines) + "\n"


def run_until_period(omega0: AcyclicOrientation, max_states: int = DEFAULT_MAX_STATES) -> SerTrace:
    """Iterate :func:`ser_step` until an orientation repeats."""
    g = omega0.graph
    if not g.is_connected():
        raise GraphError("edge reversal needs a connected graph")
    if find_directed_cycle(omega0.digraph()) is not None:
        raise OrientationError("initial orientation has a directed cycle")
    eng = _Engine(g)
    seq, sink_seq, tail = _run_masks(eng, eng.encode(omega0), max_states)
    vs = g.vertices
    sink_sets = [frozenset(vs[i] for i in sk) for sk in sink_seq]
    counts = {v: 0 for v in vs}
    for sk in sink_sets[tail:]:
        for v in sk:
            counts[v] += 1
    orientations = [omega0] + [eng.decode(mk) for mk in seq[1:]]
    return SerTrace(g, orientations, sink_sets, tail, len(seq) - tail, counts)


def conc_simulated(trace: SerTrace) -> Fraction:
    return Fraction(trace.m, trace.period)


def _cycle_ratio(cycles, arcs) -> Fraction:
    best = None
    for cyc in cycles:
        plus = sum(1 for step in cyc.plus_steps() if step in arcs)
        r = Fraction(min(plus, len(cyc) - plus), len(cyc))
        if best is None or r < best:
            best = r
    return best


def conc_structural(omega0: AcyclicOrientation, cycles: list[SimpleCycle] | None = None,
                    **cycle_caps) -> Fraction:
    """Concurrency from the orientation alone.

    Trees give 1/2; otherwise the minimum over simple cycles of
    ``min(c+, c-) / |cycle|``, where ``c+``/``c-`` count the cycle's edges
    oriented along each traversal direction.  A single vertex is a sink at
    every step, so its concurrency is 1.
    """
    g = omega0.graph
    if len(g.vertices) == 1:
        return Fraction(1)
    if g.is_tree():
        return Fraction(1, 2)
    if cycles is None:
        cycles = enumerate_simple_cycles(g, **cycle_caps)
    return _cycle_ratio(cycles, omega0.arcs)


def acyclic_orientations(g: Graph, max_edges: int = DEFAULT_MAX_EXACT_EDGES) -> Iterator[AcyclicOrientation]:
    """Every acyclic orientation of ``g``, by backtracking over edges."""
    edges = g.edge_list()
    if len(edges) > max_edges:
        raise SearchCapExceeded(f"{len(edges)} edges exceeds the exact cap of {max_edges}")
    succ = {v: set() for v in g.vertices}

    def reaches(src, dst):
        stack, seen = [src], {src}
        while stack:
            x = stack.pop()
            if x == dst:
                return True
            for y in succ[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return False

    chosen = []

    def rec(k):
        if k == len(edges):
            yield AcyclicOrientation(g, chosen, check=False)
            return
        a, b = edges[k]
        for u, v in ((a, b), (b, a)):
            if not reaches(v, u):
                succ[u].add(v)
                chosen.append((u, v))
                yield from rec(k + 1)
                chosen.pop()
                succ[u].discard(v)

    yield from rec(0)


def _flip_keeps_acyclic(u: str, v: str, out: dict) -> bool:
    """Would replacing arc u->v by v->u keep the orientation acyclic?"""
    # a new cycle needs a path u -> v avoiding the arc itself
    stack, seen = [u], {u}
    while stack:
        x = stack.pop()
        for y in out[x]:
            if x == u and y == v:
                continue
            if y == v:
                return False
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return True


def optimal_orientation(g: Graph, mode: str = "exact", seed: int | None = None,
                        max_edges: int = DEFAULT_MAX_EXACT_EDGES, restarts: int = 20):
    """Orientation maximising concurrency, and that concurrency.

    ``mode="exact"`` enumerates every acyclic orientation.  ``mode=
    "heuristic"`` hill-climbs over single edge flips from ``restarts``
    random linear orders and needs an explicit ``seed``; it makes no
    optimality claim.
    """
    if not g.is_connected():
        raise GraphError("edge reversal needs a connected graph")
    cycles = None if g.is_tree() or len(g.vertices) == 1 else enumerate_simple_cycles(g)

    def score(om):
        return conc_structural(om, cycles=cycles)

    if mode == "exact":
        best, best_c = None, None
        for om in acyclic_orientations(g, max_edges=max_edges):
            c = score(om)
            if best_c is None or c > best_c:
                best, best_c = om, c
        return best, best_c
    if mode != "heuristic":
        raise ValueError(f"unknown mode {mode!r}")
    if seed is None:
        raise ValueError("heuristic search needs an explicit seed")
    rng = random.Random(seed)
    best, best_c = None, None
    for _ in range(restarts):
        order = list(g.vertices)
        rng.shuffle(order)
        om = orientation_from_order(g, order)
        c = score(om)
        improved = True
        while improved:
            improved = False
            arcs = list(om.arc_list())
            rng.shuffle(arcs)
            for u, v in arcs:
                if not _flip_keeps_acyclic(u, v, om._out):
                    continue
                cand = AcyclicOrientation(g, (om.arcs - {(u, v)}) | {(v, u)}, check=False)
                cc = score(cand)
                if cc > c:
                    om, c, improved = cand, cc, True
                    break
        if best_c is None or c > best_c:
            best, best_c = om, c
    return best, best_c


def chi_bar(g: Graph, mode: str = "exact", seed: int | None = None, **kw) -> Fraction:
    """Interleaved multichromatic number: ``min p/m`` over initial orientations."""
    _, conc = optimal_orientation(g, mode=mode, seed=seed, **kw)
    return 1 / conc


@dataclass(frozen=True)
class InterleavedColoring:
    """``colors[v]``: sink times of ``v`` within the period, offset from its start."""

    colors: dict
    total: int
    per_vertex: int

    def is_proper(self, g: Graph) -> bool:
        return all(not (set(self.colors[u]) & set(self.colors[v])) for u, v in g.edge_list())

    def is_interleaved(self, g: Graph) -> bool:
        for u, v in g.edge_list():
            cu, cv = self.colors[u], self.colors[v]
            if len(cu) != len(cv):
                return False
            first, second = (cu, cv) if cu[0] < cv[0] else (cv, cu)
            merged = [c for pair in zip(first, second) for c in pair]
            if any(a >= b for a, b in zip(merged, merged[1:])):
                return False
        return True


def extract_interleaved_coloring(trace: SerTrace) -> InterleavedColoring:
    start = trace.tail_start
    colors = {v: [] for v in trace.graph.vertices}
    for s in range(start, start + trace.period):
        for v in trace.sink_sets[s]:
            colors[v].append(s - start)
    colors = {v: tuple(c) for v, c in colors.items()}
    return InterleavedColoring(colors, trace.period, trace.m)
