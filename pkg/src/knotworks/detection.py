"""Deadlock detection for the five wait models.

Each model has a structural detector: a directed cycle (AND), a knot (OR),
a (y-x)-knot (x-out-of-y) and a b-knot (AND-OR, and disjunctive
x-out-of-y after conversion).  :func:`oracle_fixpoint` simulates grant
propagation and works for any mix of models; every detector reports the
fixpoint's unrelieved set as its ``deadlocked_set``.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

from .graph_core import (
    Digraph,
    canonical_rotation,
    find_directed_cycle,
    reachability_set,
    strongly_connected_components,
)
from .wait_models import (
    And,
    AndOr,
    DisjXY,
    Or,
    WaitForGraph,
    XOutOfY,
    dxy_to_andor,
    relieved_by,
)

DEFAULT_BKNOT_BUDGET = 10**6


class ModelMismatch(ValueError):
    """A detector was given a graph with conditions from another model."""


# -- witnesses ---------------------------------------------------------------

@dataclass(frozen=True)
class DirectedCycle:
    vertices: tuple[str, ...]
    kind = "cycle"

    def to_json(self):
        return {"type": self.kind, "vertices": list(self.vertices)}


@dataclass(frozen=True)
class Knot:
    vertices: tuple[str, ...]
    kind = "knot"

    def to_json(self):
        return {"type": self.kind, "vertices": list(self.vertices)}


@dataclass(frozen=True)
class YxKnot:
    vertices: tuple[str, ...]
    kind = "yx_knot"

    def to_json(self):
        return {"type": self.kind, "vertices": list(self.vertices)}


@dataclass(frozen=True)
class BKnot:
    """A knot together with the b-subgraph it lives in.

    ``choice`` maps each vertex to its out-set in the b-subgraph.
    """

    choice: dict
    vertices: tuple[str, ...]
    kind = "b_knot"

    def to_json(self):
        return {
            "type": self.kind,
            "vertices": list(self.vertices),
            "b_subgraph": {v: sorted(s) for v, s in self.choice.items()},
        }


@dataclass(frozen=True)
class BudgetExceeded:
    """Placeholder when the b-knot search ran out of budget."""

    budget: int
    kind = "budget_exceeded"

    def to_json(self):
        return {"type": self.kind, "budget": self.budget}


@dataclass(frozen=True)
class Verdict:
    deadlocked: bool
    deadlocked_set: frozenset
    relieved: frozenset
    witness: object = None

    def __post_init__(self):
        if self.deadlocked != bool(self.deadlocked_set) or self.deadlocked != (
            self.witness is not None
        ):
            raise ValueError("inconsistent verdict")

    def to_json(self, order=None, model=None) -> dict:
        key = order.__getitem__ if order else None
        data = {"format": "knotworks/1"}
        if model:
            data["model"] = model
        data["deadlocked"] = self.deadlocked
        data["deadlocked_set"] = sorted(self.deadlocked_set, key=key)
        data["relieved"] = sorted(self.relieved, key=key)
        data["witness"] = None if self.witness is None else self.witness.to_json()
        return data


# -- grant-propagation oracle ------------------------------------------------

def oracle_fixpoint(w: WaitForGraph, order: Sequence[str] | None = None):
    """Least fixpoint of grant propagation.

    Sinks are relieved; a vertex becomes relieved once its condition is met
    by the relieved members of its out-set.  Returns ``(relieved,
    deadlocked)``.  ``order`` only changes the sweep order, never the result.
    """
    verts = list(order) if order is not None else list(w.vertices)
    relieved = set()
    changed = True
    while changed:
        changed = False
        for v in verts:
            if v in relieved:
                continue
            out = w.out_set(v)
            if relieved_by(w.condition(v), out, out & relieved):
                relieved.add(v)
                changed = True
    relieved = frozenset(relieved)
    return relieved, frozenset(w.vertices) - relieved


def closed_deadlock_sets(w: WaitForGraph):
    """Brute force over all vertex subsets S: yield each nonempty S such
    that no member is relieved even if everybody outside S grants."""
    verts = list(w.vertices)
    n = len(verts)
    for mask in range(1, 1 << n):
        s = frozenset(verts[i] for i in range(n) if mask >> i & 1)
        if all(not relieved_by(w.condition(v), w.out_set(v), w.out_set(v) - s) for v in s):
            yield s


# -- model checks ------------------------------------------------------------

def _require(w: WaitForGraph, kinds, name):
    for v in w.waiting():
        if not isinstance(w.condition(v), kinds):
            raise ModelMismatch(f"{name} detector: {v!r} has a {w.condition(v).model} condition")


def _order(w):
    return w.digraph._index


# -- detectors ---------------------------------------------------------------

def detect_and(w: WaitForGraph) -> Verdict:
    """Deadlock iff ``W`` has a directed cycle."""
    _require(w, And, "AND")
    relieved, dead = oracle_fixpoint(w)
    cyc = find_directed_cycle(w.digraph)
    witness = DirectedCycle(cyc) if cyc else None
    return Verdict(witness is not None, dead if witness else frozenset(), relieved, witness)


def find_knot(d: Digraph):
    """First terminal strongly connected component with two or more members."""
    scc = strongly_connected_components(d)
    for i in scc.terminal():
        comp = scc.components[i]
        if len(comp) >= 2:
            return comp
    return None


def detect_or(w: WaitForGraph) -> Verdict:
    """Deadlock iff ``W`` has a knot, i.e. a nontrivial terminal SCC."""
    _require(w, Or, "OR")
    relieved, dead = oracle_fixpoint(w)
    knot = find_knot(w.digraph)
    witness = Knot(knot) if knot else None
    return Verdict(witness is not None, dead if witness else frozenset(), relieved, witness)


def maximal_yx_knot(w: WaitForGraph) -> tuple[str, ...]:
    """Prune vertices with at most ``y - x`` out-neighbours left in the set.

    Deletion is monotone, so the survivor set is the unique maximal
    (y-x)-knot regardless of pruning order; we prune earliest-declared
    first.
    """
    slack = {}
    for v in w.vertices:
        cond = w.condition(v)
        y = len(w.out_set(v))
        if isinstance(cond, XOutOfY):
            slack[v] = y - cond.x
        elif isinstance(cond, Or):
            slack[v] = y - 1
        else:
            slack[v] = 0
    alive = set(w.vertices)
    changed = True
    while changed:
        changed = False
        for v in w.vertices:
            if v in alive and len(w.out_set(v) & alive) <= slack[v]:
                alive.discard(v)
                changed = True
    return tuple(v for v in w.vertices if v in alive)


def detect_xy(w: WaitForGraph) -> Verdict:
    """Deadlock iff ``W`` has a (y-x)-knot."""
    _require(w, XOutOfY, "x-out-of-y")
    relieved, dead = oracle_fixpoint(w)
    knot = maximal_yx_knot(w)
    witness = YxKnot(knot) if knot else None
    return Verdict(witness is not None, dead if witness else frozenset(), relieved, witness)


def _andor_of(w: WaitForGraph, v) -> AndOr:
    cond = w.condition(v)
    if isinstance(cond, AndOr):
        return cond
    return AndOr([w.out_set(v)])  # sinks / AND


def construct_bknot(w: WaitForGraph, deadlocked: Iterable[str]) -> BKnot:
    """Build a b-knot inside a nonempty fixpoint-deadlocked set.

    Every subset of a deadlocked vertex contains a deadlocked member (else
    the subset alone would relieve it).  Picking one such member per subset
    yields a b-subgraph whose arcs out of the deadlocked set stay inside
    it, so any terminal SCC there is a knot of the b-subgraph.
    """
    dead = set(deadlocked)
    order = _order(w)
    choice = {}
    for v in w.vertices:
        picks = set()
        if not w.out_set(v):
            choice[v] = frozenset()
            continue
        for s in _andor_of(w, v).subsets:
            pool = s & dead if v in dead else s
            picks.add(min(pool, key=order.__getitem__))
        choice[v] = frozenset(picks)
    sub = Digraph(w.vertices, [(v, u) for v, out in choice.items() for u in out])
    scc = strongly_connected_components(sub)
    for i in scc.terminal():
        comp = scc.components[i]
        if len(comp) >= 2 and comp[0] in dead:
            return BKnot(choice, comp)
    raise AssertionError("no knot inside a deadlocked set")  # pragma: no cover


def b_subgraph_choices(w: WaitForGraph):
    """Yield every b-subgraph built by choosing one member per subset.

    Duplicate out-sets per vertex are merged before taking the product.
    """
    per_vertex = []
    for v in w.vertices:
        subsets = _andor_of(w, v).subsets if w.out_set(v) else ()
        outs = {frozenset(pick) for pick in product(*[sorted(s) for s in subsets])}
        per_vertex.append(sorted(outs, key=lambda s: (len(s), sorted(s))))
    for combo in product(*per_vertex):
        yield dict(zip(w.vertices, combo))


def search_bknot(w: WaitForGraph, budget: int = DEFAULT_BKNOT_BUDGET):
    """Exhaustive b-subgraph search.  Returns a :class:`BKnot`, ``None`` when
    no b-subgraph has a knot, or :class:`BudgetExceeded`."""
    for k, choice in enumerate(b_subgraph_choices(w)):
        if k >= budget:
            return BudgetExceeded(budget)
        sub = Digraph(w.vertices, [(v, u) for v, out in choice.items() for u in out])
        knot = find_knot(sub)
        if knot:
            return BKnot(choice, knot)
    return None


def detect_andor(w: WaitForGraph, witness: str = "constructive",
                 budget: int = DEFAULT_BKNOT_BUDGET) -> Verdict:
    """Deadlock iff some b-subgraph of ``W`` has a knot.

    ``witness="constructive"`` derives the b-knot from the fixpoint in
    polynomial time; ``witness="search"`` enumerates b-subgraphs up to
    ``budget`` and may return :class:`BudgetExceeded`.
    """
    _require(w, (AndOr, And), "AND-OR")
    for v in w.waiting():
        cond = w.condition(v)
        if isinstance(cond, AndOr) and frozenset().union(*cond.subsets) != w.out_set(v):
            raise ModelMismatch(f"subsets of {v!r} do not cover its out-set")
    relieved, dead = oracle_fixpoint(w)
    if not dead:
        return Verdict(False, frozenset(), relieved, None)
    if witness == "constructive":
        wit = construct_bknot(w, dead)
    elif witness == "search":
        wit = search_bknot(w, budget)
        if wit is None:  # pragma: no cover - contradicts the b-knot theorem
            raise AssertionError("fixpoint deadlock without a b-knot")
    else:
        raise ValueError(f"unknown witness method {witness!r}")
    return Verdict(True, dead, relieved, wit)


def to_andor_graph(w: WaitForGraph) -> WaitForGraph:
    conds = {}
    for v in w.waiting():
        cond = w.condition(v)
        conds[v] = dxy_to_andor(cond) if isinstance(cond, DisjXY) else cond
    return WaitForGraph(w.digraph, conds)


def detect_dxy(w: WaitForGraph, witness: str = "constructive",
               budget: int = DEFAULT_BKNOT_BUDGET) -> Verdict:
    """Convert every disjunctive condition to AND-OR, then :func:`detect_andor`."""
    _require(w, (DisjXY, And), "disjunctive x-out-of-y")
    return detect_andor(to_andor_graph(w), witness=witness, budget=budget)


DETECTORS = {
    "and": detect_and,
    "or": detect_or,
    "xy": detect_xy,
    "andor": detect_andor,
    "dxy": detect_dxy,
}


def detect(w: WaitForGraph, model: str, **kw) -> Verdict:
    try:
        fn = DETECTORS[model]
    except KeyError:
        raise ValueError(f"unknown model {model!r}") from None
    return fn(w, **kw) if model in ("andor", "dxy") else fn(w)


# -- witness checks ----------------------------------------------------------

def is_knot(d: Digraph, s) -> bool:
    s = frozenset(s)
    return len(s) >= 2 and all(reachability_set(d, v) == s for v in s)


def is_yx_knot(w: WaitForGraph, s) -> bool:
    s = frozenset(s)
    if not s:
        return False
    for v in s:
        cond = w.condition(v)
        if not isinstance(cond, XOutOfY):
            return False
        if len(w.out_set(v) & s) <= len(w.out_set(v)) - cond.x:
            return False
    return True


def is_directed_cycle(d: Digraph, cyc) -> bool:
    cyc = tuple(cyc)
    if len(cyc) < 2 or len(set(cyc)) != len(cyc):
        return False
    return all((cyc[i], cyc[(i + 1) % len(cyc)]) in d.arcs for i in range(len(cyc)))


def check_witness(w: WaitForGraph, verdict: Verdict) -> bool:
    """Independent validation of a verdict's witness."""
    wit = verdict.witness
    if wit is None:
        return not verdict.deadlocked
    if isinstance(wit, DirectedCycle):
        ok = is_directed_cycle(w.digraph, wit.vertices)
        return ok and canonical_rotation(wit.vertices, _order(w)) == wit.vertices
    if isinstance(wit, Knot):
        return is_knot(w.digraph, wit.vertices) and set(wit.vertices) <= verdict.deadlocked_set
    if isinstance(wit, YxKnot):
        return is_yx_knot(w, wit.vertices) and set(wit.vertices) <= verdict.deadlocked_set
    if isinstance(wit, BKnot):
        for v in w.vertices:
            out = wit.choice[v]
            if not out <= w.out_set(v):
                return False
            if any(not (out & s) for s in _andor_of(w, v).subsets if w.out_set(v)):
                return False
        sub = Digraph(w.vertices, [(v, u) for v, o in wit.choice.items() for u in o])
        return is_knot(sub, wit.vertices) and set(wit.vertices) <= verdict.deadlocked_set
    return isinstance(wit, BudgetExceeded)
