"""Resource systems, the process graph ``G``, the resource graph ``H``,
colorings of ``H`` and the acyclic orientations they induce.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Mapping

from .edge_reversal import AcyclicOrientation, OrientationError
from .graph_core import FORMAT, Graph, GraphError, _check_format, longest_path_length, reachability_set

DEFAULT_MAX_EXACT_VERTICES = 12


class ResourceSystemError(ValueError):
    """Invalid resource system."""


class ColoringError(ValueError):
    pass


class ColoringCapExceeded(RuntimeError):
    """Exact coloring refused because the graph is over the size cap."""


@dataclass(frozen=True)
class ResourceSystem:
    processes: tuple[str, ...]
    resources: tuple[str, ...]
    needs: dict  # process -> frozenset of resources it may request

    def __init__(self, processes, resources, needs: Mapping[str, object]):
        processes = tuple(processes)
        resources = tuple(resources)
        if len(set(processes)) != len(processes) or len(set(resources)) != len(resources):
            raise ResourceSystemError("duplicate process or resource id")
        if set(processes) & set(resources):
            raise ResourceSystemError("process and resource ids must be distinct")
        if set(needs) != set(processes):
            raise ResourceSystemError("needs must list every process exactly once")
        index = {r: i for i, r in enumerate(resources)}
        clean = {}
        for p in processes:
            rs = list(needs[p])
            if not rs:
                raise ResourceSystemError(f"{p!r} needs no resources")
            if len(set(rs)) != len(rs):
                raise ResourceSystemError(f"duplicate resource in needs of {p!r}")
            for r in rs:
                if r not in index:
                    raise ResourceSystemError(f"{p!r} needs undeclared resource {r!r}")
            clean[p] = frozenset(rs)
        object.__setattr__(self, "processes", processes)
        object.__setattr__(self, "resources", resources)
        object.__setattr__(self, "needs", clean)
        object.__setattr__(self, "_users", {
            r: tuple(p for p in processes if r in clean[p]) for r in resources})

    @property
    def n(self) -> int:
        return len(self.processes)

    @property
    def m(self) -> int:
        return len(self.resources)

    def users(self, r: str) -> tuple[str, ...]:
        """Processes that may request ``r``, in declared order."""
        return self._users[r]

    def shared(self, p: str, q: str) -> frozenset:
        return self.needs[p] & self.needs[q]

    def co_users(self, r: str, s: str) -> frozenset:
        return frozenset(self.users(r)) & frozenset(self.users(s))

    def max_users(self) -> int:
        return max((len(self.users(r)) for r in self.resources), default=0)

    def to_json(self) -> dict:
        order = {r: i for i, r in enumerate(self.resources)}
        return {
            "format": FORMAT,
            "processes": list(self.processes),
            "resources": list(self.resources),
            "needs": {p: sorted(self.needs[p], key=order.__getitem__) for p in self.processes},
        }

    @classmethod
    def from_json(cls, data: dict) -> "ResourceSystem":
        try:
            _check_format(data)
            return cls(data["processes"], data["resources"], data["needs"])
        except (KeyError, TypeError, GraphError) as exc:
            raise ResourceSystemError(f"malformed resource system: {exc}") from exc


def build_G(sys: ResourceSystem, require_connected: bool = True) -> Graph:
    """Process graph: an edge wherever two processes share a resource."""
    edges = [(p, q) for p, q in combinations(sys.processes, 2) if sys.shared(p, q)]
    g = Graph(sys.processes, edges)
    if require_connected and not g.is_connected():
        raise ResourceSystemError("process graph is not connected")
    return g


def build_H(sys: ResourceSystem) -> Graph:
    """Resource graph: an edge wherever some process may use both resources."""
    edges = [(r, s) for r, s in combinations(sys.resources, 2) if sys.co_users(r, s)]
    return Graph(sys.resources, edges)


@dataclass(frozen=True)
class Coloring:
    colors: dict

    @property
    def num_colors(self) -> int:
        return len(set(self.colors.values()))

    def is_proper(self, g: Graph) -> bool:
        if set(self.colors) != set(g.vertices):
            return False
        return all(self.colors[u] != self.colors[v] for u, v in g.edge_list())

    def classes(self) -> dict:
        out = {}
        for v, c in self.colors.items():
            out.setdefault(c, []).append(v)
        return dict(sorted(out.items()))

    def to_json(self, g: Graph | None = None) -> dict:
        verts = g.vertices if g is not None else sorted(self.colors)
        return {"format": FORMAT, "colors": {v: self.colors[v] for v in verts},
                "num_colors": self.num_colors}


def greedy_coloring(g: Graph) -> Coloring:
    """First-fit in ascending degree order, ties broken by declared order."""
    order = sorted(g.vertices, key=lambda v: (g.degree(v), g.index(v)))
    colors = {}
    for v in order:
        used = {colors[w] for w in g.neighbors(v) if w in colors}
        c = 0
        while c in used:
            c += 1
        colors[v] = c
    return Coloring(colors)


def _k_coloring(g: Graph, k: int):
    # most-constrained-first backtracking
    order = sorted(g.vertices, key=lambda v: (-g.degree(v), g.index(v)))
    colors = {}

    def rec(i):
        if i == len(order):
            return True
        v = order[i]
        used = {colors[w] for w in g.neighbors(v) if w in colors}
        top = min(k, max(colors.values(), default=-1) + 2)  # symmetry breaking
        for c in range(top):
            if c not in used:
                colors[v] = c
                if rec(i + 1):
                    return True
                del colors[v]
        return False

    return dict(colors) if rec(0) else None


def chromatic_number(g: Graph, max_vertices: int = DEFAULT_MAX_EXACT_VERTICES) -> int:
    return exact_coloring(g, max_vertices).num_colors


def exact_coloring(g: Graph, max_vertices: int = DEFAULT_MAX_EXACT_VERTICES) -> Coloring:
    if len(g.vertices) > max_vertices:
        raise ColoringCapExceeded(f"{len(g.vertices)} vertices exceeds the exact cap of {max_vertices}")
    if not g.vertices:
        return Coloring({})
    for k in range(1, len(g.vertices) + 1):
        col = _k_coloring(g, k)
        if col is not None:
            return Coloring(col)
    raise AssertionError("unreachable")  # pragma: no cover


def color_graph(g: Graph, mode: str = "greedy", max_vertices: int = DEFAULT_MAX_EXACT_VERTICES) -> Coloring:
    if mode == "greedy":
        return greedy_coloring(g)
    if mode == "exact":
        return exact_coloring(g, max_vertices)
    raise ValueError(f"unknown coloring mode {mode!r}")


def orient_by_coloring(g: Graph, col: Coloring) -> AcyclicOrientation:
    """Point every edge from its lower-colored to its higher-colored end.

    Colors strictly increase along any directed path, so the longest path
    has at most ``num_colors - 1`` arcs.
    """
    if not col.is_proper(g):
        raise ColoringError("coloring is not proper")
    arcs = [(u, v) if col.colors[u] < col.colors[v] else (v, u) for u, v in g.edge_list()]
    om = AcyclicOrientation(g, arcs, check=False)
    if longest_path_length(om.digraph()) > col.num_colors - 1:  # pragma: no cover
        raise AssertionError("path bound violated")
    return om


def precedes(phi: AcyclicOrientation, r: str, s: str) -> bool:
    """``r`` precedes ``s`` iff a directed path leads from ``r`` to ``s``."""
    return r != s and s in reachability_set(phi.digraph(), r)


def acquisition_sequence(phi: AcyclicOrientation, resources) -> list[str]:
    """Order ``resources`` (a clique of ``H``) by the precedes relation."""
    rs = list(resources)
    for a, b in combinations(rs, 2):
        if not phi.graph.has_edge(a, b):
            raise OrientationError(f"{a!r} and {b!r} are not adjacent in the resource graph")
    depth = {r: sum(1 for t in rs if precedes(phi, t, r)) for r in rs}
    return sorted(rs, key=depth.__getitem__)


def wait_bound(c: int, h: int) -> int:
    """Value of ``c * h**c``, the order of the worst-case wait for
    acquisition-order computations.  Not a measured wait."""
    if c < 1 or h < 1:
        raise ValueError("c and h must be positive")
    return c * h**c
