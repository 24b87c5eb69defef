"""Undirected and directed graph types plus the handful of algorithms the
rest of the package needs: SCCs, reachability, simple cycles, acyclicity.

Vertex ids are opaque strings.  Iteration always follows declared vertex
order so that witnesses are reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

FORMAT = "knotworks/1"


class GraphError(ValueError):
    """Malformed graph input (self-loop, duplicate, undeclared endpoint)."""


class CycleCapExceeded(RuntimeError):
    """Raised when simple-cycle enumeration would exceed its configured cap."""


def _check_vertices(vertices: Sequence[str]) -> tuple[str, ...]:
    vertices = tuple(vertices)
    if len(set(vertices)) != len(vertices):
        raise GraphError("duplicate vertex id")
    for v in vertices:
        if not isinstance(v, str):
            raise GraphError(f"vertex id must be a string, got {v!r}")
    return vertices


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph.

    ``edges`` is a frozenset of 2-element frozensets; use :meth:`edge_list`
    for a deterministic ordering.
    """

    vertices: tuple[str, ...]
    edges: frozenset
    _index: dict = field(init=False, repr=False, compare=False, hash=False)
    _adj: dict = field(init=False, repr=False, compare=False, hash=False)

    def __init__(self, vertices: Iterable[str], edges: Iterable[Iterable[str]] = ()):
        vertices = _check_vertices(vertices)
        index = {v: i for i, v in enumerate(vertices)}
        seen = set()
        for e in edges:
            e = tuple(e)
            if len(e) != 2:
                raise GraphError(f"edge must have two endpoints: {e!r}")
            u, v = e
            if u == v:
                raise GraphError(f"self-loop on {u!r}")
            if u not in index or v not in index:
                raise GraphError(f"edge {e!r} uses an undeclared vertex")
            key = frozenset(e)
            if key in seen:
                raise GraphError(f"duplicate edge {e!r}")
            seen.add(key)
        adj = {v: [] for v in vertices}
        for key in seen:
            u, v = key
            adj[u].append(v)
            adj[v].append(u)
        for v in vertices:
            adj[v] = tuple(sorted(adj[v], key=index.__getitem__))
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "edges", frozenset(seen))
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_adj", adj)

    def index(self, v: str) -> int:
        return self._index[v]

    def neighbors(self, v: str) -> tuple[str, ...]:
        return self._adj[v]

    def degree(self, v: str) -> int:
        return len(self._adj[v])

    def has_edge(self, u: str, v: str) -> bool:
        return frozenset((u, v)) in self.edges

    def edge_list(self) -> list[tuple[str, str]]:
        """Edges as ``(u, v)`` with ``u`` declared before ``v``, sorted."""
        idx = self._index
        out = [tuple(sorted(e, key=idx.__getitem__)) for e in self.edges]
        out.sort(key=lambda e: (idx[e[0]], idx[e[1]]))
        return out

    def is_connected(self) -> bool:
        if not self.vertices:
            return True
        seen = {self.vertices[0]}
        stack = [self.vertices[0]]
        while stack:
            for w in self._adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.vertices)

    def is_tree(self) -> bool:
        return self.is_connected() and len(self.edges) == len(self.vertices) - 1

    def to_json(self) -> dict:
        return {
            "format": FORMAT,
            "vertices": list(self.vertices),
            "edges": [list(e) for e in self.edge_list()],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Graph":
        _check_format(data)
        try:
            return cls(data["vertices"], data.get("edges", []))
        except (KeyError, TypeError) as exc:
            raise GraphError(f"malformed graph JSON: {exc}") from exc


@dataclass(frozen=True)
class Digraph:
    vertices: tuple[str, ...]
    arcs: frozenset
    _index: dict = field(init=False, repr=False, compare=False, hash=False)
    _succ: dict = field(init=False, repr=False, compare=False, hash=False)

    def __init__(self, vertices: Iterable[str], arcs: Iterable[Iterable[str]] = ()):
        vertices = _check_vertices(vertices)
        index = {v: i for i, v in enumerate(vertices)}
        seen = set()
        for a in arcs:
            a = tuple(a)
            if len(a) != 2:
                raise GraphError(f"arc must have two endpoints: {a!r}")
            u, v = a
            if u == v:
                raise GraphError(f"self-loop on {u!r}")
            if u not in index or v not in index:
                raise GraphError(f"arc {a!r} uses an undeclared vertex")
            if a in seen:
                raise GraphError(f"duplicate arc {a!r}")
            seen.add(a)
        succ = {v: [] for v in vertices}
        for u, v in seen:
            succ[u].append(v)
        for v in vertices:
            succ[v] = tuple(sorted(succ[v], key=index.__getitem__))
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "arcs", frozenset(seen))
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_succ", succ)

    def index(self, v: str) -> int:
        return self._index[v]

    def successors(self, v: str) -> tuple[str, ...]:
        return self._succ[v]

    def out_set(self, v: str) -> frozenset:
        return frozenset(self._succ[v])

    def arc_list(self) -> list[tuple[str, str]]:
        idx = self._index
        return sorted(self.arcs, key=lambda a: (idx[a[0]], idx[a[1]]))

    def to_json(self) -> dict:
        return {
            "format": FORMAT,
            "vertices": list(self.vertices),
            "arcs": [list(a) for a in self.arc_list()],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Digraph":
        _check_format(data)
        try:
            return cls(data["vertices"], data.get("arcs", []))
        except (KeyError, TypeError) as exc:
            raise GraphError(f"malformed digraph JSON: {exc}") from exc


def _check_format(data) -> None:
    if not isinstance(data, dict):
        raise GraphError("expected a JSON object")
    fmt = data.get("format", FORMAT)
    if fmt != FORMAT:
        raise GraphError(f"unsupported format {fmt!r}, expected {FORMAT!r}")


def canonical_rotation(cycle: Sequence[str], order: dict) -> tuple[str, ...]:
    """Rotate a cyclic sequence so it starts at its earliest-declared vertex."""
    k = min(range(len(cycle)), key=lambda i: order[cycle[i]])
    return tuple(cycle[k:]) + tuple(cycle[:k])


@dataclass(frozen=True)
class SimpleCycle:
    """Undirected simple cycle.

    ``vertices`` lists the cycle in its "plus" traversal direction; the
    "minus" direction is the reverse.
    """

    vertices: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.vertices)

    def plus_steps(self) -> list[tuple[str, str]]:
        vs = self.vertices
        return [(vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs))]

    def minus_steps(self) -> list[tuple[str, str]]:
        return [(v, u) for u, v in self.plus_steps()]

    def edges(self) -> set:
        return {frozenset(s) for s in self.plus_steps()}


@dataclass(frozen=True)
class SCCResult:
    components: tuple[tuple[str, ...], ...]
    component_of: dict
    condensation: frozenset  # arcs between component indices

    def terminal(self) -> list[int]:
        """Indices of components with no outgoing condensation arc."""
        has_out = {a for a, _ in self.condensation}
        return [i for i in range(len(self.components)) if i not in has_out]


def strongly_connected_components(d: Digraph) -> SCCResult:
    """Tarjan's algorithm, iterative.

    Components are returned ordered by their earliest-declared member, and
    members inside each component follow declared order.
    """
    index_of = {}
    low = {}
    on_stack = set()
    stack = []
    comps = []
    counter = 0
    for root in d.vertices:
        if root in index_of:
            continue
        work = [(root, iter(d.successors(root)))]
        index_of[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index_of:
                    index_of[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(d.successors(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index_of[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index_of[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
    order = d._index
    comps = [tuple(sorted(c, key=order.__getitem__)) for c in comps]
    comps.sort(key=lambda c: order[c[0]])
    component_of = {v: i for i, c in enumerate(comps) for v in c}
    cond = frozenset(
        (component_of[u], component_of[v])
        for u, v in d.arcs
        if component_of[u] != component_of[v]
    )
    return SCCResult(tuple(comps), component_of, cond)


def reachability_set(d: Digraph, v: str) -> frozenset:
    """Vertices reachable from ``v`` by a directed path, ``v`` included."""
    if v not in d._index:
        raise GraphError(f"unknown vertex {v!r}")
    seen = {v}
    stack = [v]
    while stack:
        for w in d.successors(stack.pop()):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return frozenset(seen)


def find_directed_cycle(d: Digraph, within: Iterable[str] | None = None):
    """Return one directed cycle as a tuple of vertices, or ``None``.

    The cycle is rotated to start at its earliest-declared vertex.  With
    ``within``, only the induced subdigraph on those vertices is searched.
    """
    allowed = set(d.vertices) if within is None else set(within)
    color = {}
    for root in d.vertices:
        if root not in allowed or root in color:
            continue
        color[root] = 1
        path = [root]
        iters = [iter(d.successors(root))]
        while iters:
            for w in iters[-1]:
                if w not in allowed:
                    continue
                c = color.get(w)
                if c == 1:
                    cyc = path[path.index(w):]
                    return canonical_rotation(cyc, d._index)
                if c is None:
                    color[w] = 1
                    path.append(w)
                    iters.append(iter(d.successors(w)))
                    break
            else:
                color[path.pop()] = 2
                iters.pop()
    return None


def is_acyclic(d: Digraph) -> bool:
    return find_directed_cycle(d) is None


def sinks(d: Digraph) -> frozenset:
    """Vertices with no outgoing arcs (isolated vertices included)."""
    return frozenset(v for v in d.vertices if not d.successors(v))


def sources(d: Digraph) -> frozenset:
    has_in = {v for _, v in d.arcs}
    return frozenset(v for v in d.vertices if v not in has_in)


def topological_order(d: Digraph) -> list[str]:
    """Kahn's algorithm with declared-order tie breaking."""
    indeg = {v: 0 for v in d.vertices}
    for _, v in d.arcs:
        indeg[v] += 1
    ready = [v for v in d.vertices if indeg[v] == 0]
    out = []
    while ready:
        ready.sort(key=d._index.__getitem__)
        v = ready.pop(0)
        out.append(v)
        for w in d.successors(v):
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    if len(out) != len(d.vertices):
        raise GraphError("digraph has a directed cycle")
    return out


def longest_path_length(d: Digraph) -> int:
    """Number of arcs on the longest directed path in an acyclic digraph."""
    dist = {v: 0 for v in d.vertices}
    for v in topological_order(d):
        for w in d.successors(v):
            if dist[v] + 1 > dist[w]:
                dist[w] = dist[v] + 1
    return max(dist.values(), default=0)


DEFAULT_MAX_CYCLE_VERTICES = 20
DEFAULT_MAX_CYCLES = 10_000


def enumerate_simple_cycles(
    g: Graph,
    max_vertices: int = DEFAULT_MAX_CYCLE_VERTICES,
    max_cycles: int = DEFAULT_MAX_CYCLES,
) -> list[SimpleCycle]:
    """All simple cycles of an undirected graph, each listed once.

    Every cycle starts at its earliest-declared vertex ``s`` and only uses
    vertices declared after ``s``; of its two traversal directions the one
    whose second vertex is declared earlier than its last is kept.
    Worst-case exponential, hence the caps.
    """
    n = len(g.vertices)
    if n > max_vertices:
        raise CycleCapExceeded(f"{n} vertices exceeds the cap of {max_vertices}")
    idx = g._index
    out: list[SimpleCycle] = []
    for s in g.vertices:
        si = idx[s]
        path = [s]
        on_path = {s}
        iters = [iter(g.neighbors(s))]
        while iters:
            for w in iters[-1]:
                wi = idx[w]
                if wi < si:
                    continue
                if w == s:
                    if len(path) >= 3 and idx[path[1]] < idx[path[-1]]:
                        out.append(SimpleCycle(tuple(path)))
                        if len(out) > max_cycles:
                            raise CycleCapExceeded(
                                f"more than {max_cycles} simple cycles"
                            )
                    continue
                if w in on_path:
                    continue
                path.append(w)
                on_path.add(w)
                iters.append(iter(g.neighbors(w)))
                break
            else:
                iters.pop()
                on_path.discard(path.pop())
    return out
