"""Wait conditions for the five deadlock models and conversions between them.

A condition says which subsets of a process's out-set ``O_i`` must have
granted for the process to stop waiting.  Conditions for AND, OR and
x-out-of-y are independent of ``O_i``; AND-OR and disjunctive x-out-of-y
carry explicit process sets.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Union

from .graph_core import FORMAT, Digraph, GraphError, _check_format


class ConditionError(ValueError):
    """A wait condition is malformed or inconsistent with its out-set."""


def _sorted_set(s, order=None):
    if order is None:
        return sorted(s)
    return sorted(s, key=order.__getitem__)


def _family_key(s):
    return (len(s), sorted(s))


@dataclass(frozen=True)
class And:
    model = "and"


@dataclass(frozen=True)
class Or:
    model = "or"


@dataclass(frozen=True)
class XOutOfY:
    x: int
    model = "xy"


@dataclass(frozen=True)
class AndOr:
    """Relieved once every member of at least one subset has granted."""

    subsets: tuple[frozenset, ...]
    model = "andor"

    def __init__(self, subsets: Iterable[Iterable[str]]):
        fam = {frozenset(s) for s in subsets}
        object.__setattr__(self, "subsets", tuple(sorted(fam, key=_family_key)))


@dataclass(frozen=True)
class DisjXY:
    """Relieved once, for some pair ``(x, Q)``, ``x`` members of ``Q`` granted."""

    pairs: tuple[tuple[int, frozenset], ...]
    model = "dxy"

    def __init__(self, pairs: Iterable[tuple[int, Iterable[str]]]):
        ps = list({(int(x), frozenset(q)) for x, q in pairs})
        ps.sort(key=lambda p: (_family_key(p[1]), p[0]))
        object.__setattr__(self, "pairs", tuple(ps))


WaitCondition = Union[And, Or, XOutOfY, AndOr, DisjXY]


def _implies(p, o) -> bool:
    """Whenever ``p = (x, Q)`` is met, so is ``o``: even with the worst
    choice, at least ``x - |Q - Q_o|`` of the granted members lie in ``Q_o``."""
    (x, q), (xo, qo) = p, o
    return x - len(q - qo) >= xo


def validate_condition(cond: WaitCondition, out_set: frozenset) -> None:
    """Raise :class:`ConditionError` unless ``cond`` is legal for ``out_set``."""
    y = len(out_set)
    if isinstance(cond, (And, Or)):
        if isinstance(cond, Or) and y == 0:
            raise ConditionError("OR condition needs a nonempty out-set")
        return
    if isinstance(cond, XOutOfY):
        if not 1 <= cond.x <= y:
            raise ConditionError(f"x={cond.x} outside [1, {y}]")
        return
    if isinstance(cond, AndOr):
        if not cond.subsets:
            raise ConditionError("AND-OR condition needs at least one subset")
        if any(not s for s in cond.subsets):
            raise ConditionError("AND-OR subsets must be nonempty")
        if frozenset().union(*cond.subsets) != out_set:
            raise ConditionError("AND-OR subsets must cover the out-set exactly")
        for a, b in combinations(cond.subsets, 2):
            if a <= b or b <= a:
                raise ConditionError("AND-OR subsets must form an antichain")
        return
    if isinstance(cond, DisjXY):
        if not cond.pairs:
            raise ConditionError("disjunctive condition needs at least one pair")
        for x, q in cond.pairs:
            if not 1 <= x <= len(q):
                raise ConditionError(f"x={x} outside [1, {len(q)}]")
        if frozenset().union(*(q for _, q in cond.pairs)) != out_set:
            raise ConditionError("disjunctive sets must cover the out-set exactly")
        for p1, p2 in combinations(cond.pairs, 2):
            if _implies(p1, p2) or _implies(p2, p1):
                raise ConditionError("a disjunctive pair is redundant given another")
        return
    raise ConditionError(f"unknown condition {cond!r}")


def relieved_by(cond: WaitCondition, out_set, granted) -> bool:
    """True iff receiving grants from exactly ``granted`` ends the wait."""
    out_set = frozenset(out_set)
    granted = frozenset(granted)
    if not granted <= out_set:
        raise ConditionError("granted set is not contained in the out-set")
    if isinstance(cond, And):
        return granted == out_set
    if isinstance(cond, Or):
        return bool(granted)
    if isinstance(cond, XOutOfY):
        return len(granted) >= cond.x
    if isinstance(cond, AndOr):
        return any(s <= granted for s in cond.subsets)
    if isinstance(cond, DisjXY):
        return any(len(q & granted) >= x for x, q in cond.pairs)
    raise ConditionError(f"unknown condition {cond!r}")


def normalize_andor(subsets) -> AndOr:
    """Drop subsets that contain another subset (dominated alternatives)."""
    fam = {frozenset(s) for s in subsets}
    if not fam:
        raise ConditionError("empty family of subsets")
    keep = [s for s in fam if not any(t < s for t in fam)]
    return AndOr(keep)


def xy_to_andor(x: int, out_set) -> AndOr:
    out_set = frozenset(out_set)
    if not 1 <= x <= len(out_set):
        raise ConditionError(f"x={x} outside [1, {len(out_set)}]")
    return AndOr(combinations(sorted(out_set), x))


def dxy_to_andor(pairs) -> AndOr:
    """Expand every pair into all of its x-subsets, then prune to an antichain."""
    cond = pairs if isinstance(pairs, DisjXY) else DisjXY(pairs)
    out_set = frozenset().union(*(q for _, q in cond.pairs)) if cond.pairs else frozenset()
    validate_condition(cond, out_set)
    fam = []
    for x, q in cond.pairs:
        fam.extend(combinations(sorted(q), x))
    return normalize_andor(fam)


def andor_to_dxy(subsets) -> DisjXY:
    cond = subsets if isinstance(subsets, AndOr) else AndOr(subsets)
    out_set = frozenset().union(*cond.subsets) if cond.subsets else frozenset()
    validate_condition(cond, out_set)
    return DisjXY((len(s), s) for s in cond.subsets)


def as_andor(cond: WaitCondition, out_set) -> AndOr:
    """Express any condition over a nonempty out-set in the AND-OR model."""
    out_set = frozenset(out_set)
    if isinstance(cond, AndOr):
        return cond
    if isinstance(cond, And):
        return AndOr([out_set])
    if isinstance(cond, Or):
        return AndOr([{v} for v in out_set])
    if isinstance(cond, XOutOfY):
        return xy_to_andor(cond.x, out_set)
    if isinstance(cond, DisjXY):
        return dxy_to_andor(cond)
    raise ConditionError(f"unknown condition {cond!r}")


# -- serialization -----------------------------------------------------------

def condition_to_json(cond: WaitCondition, order=None) -> dict:
    if isinstance(cond, (And, Or)):
        return {"model": cond.model}
    if isinstance(cond, XOutOfY):
        return {"model": "xy", "x": cond.x}
    if isinstance(cond, AndOr):
        return {"model": "andor", "subsets": [_sorted_set(s, order) for s in cond.subsets]}
    if isinstance(cond, DisjXY):
        return {
            "model": "dxy",
            "pairs": [[x, _sorted_set(q, order)] for x, q in cond.pairs],
        }
    raise ConditionError(f"unknown condition {cond!r}")


def condition_from_json(data: Mapping) -> WaitCondition:
    try:
        model = data["model"]
        if model == "and":
            return And()
        if model == "or":
            return Or()
        if model == "xy":
            x = data["x"]
            if not isinstance(x, int) or isinstance(x, bool):
                raise ConditionError("x must be an integer")
            return XOutOfY(x)
        if model == "andor":
            subsets = data["subsets"]
            for s in subsets:
                if len(set(s)) != len(s):
                    raise ConditionError("duplicate member in an AND-OR subset")
            if len({frozenset(s) for s in subsets}) != len(subsets):
                raise ConditionError("duplicate AND-OR subset")
            return AndOr(subsets)
        if model == "dxy":
            pairs = []
            for x, q in data["pairs"]:
                if not isinstance(x, int) or isinstance(x, bool):
                    raise ConditionError("x must be an integer")
                if len(set(q)) != len(q):
                    raise ConditionError("duplicate member in a disjunctive set")
                pairs.append((x, q))
            return DisjXY(pairs)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConditionError):
            raise
        raise ConditionError(f"malformed condition: {exc}") from exc
    raise ConditionError(f"unknown model {data.get('model')!r}")


# -- wait-for graphs ---------------------------------------------------------

@dataclass(frozen=True)
class WaitForGraph:
    """Digraph ``W`` plus a wait condition per vertex.

    Sinks always carry :class:`And` over the empty out-set, i.e. they are
    relieved from the start; any condition supplied for a sink is ignored.
    """

    digraph: Digraph
    conditions: dict

    def __init__(self, digraph: Digraph, conditions: Mapping[str, WaitCondition] | None = None,
                 default: WaitCondition | None = None):
        conditions = dict(conditions or {})
        unknown = set(conditions) - set(digraph.vertices)
        if unknown:
            raise ConditionError(f"conditions for undeclared vertices: {sorted(unknown)}")
        resolved = {}
        for v in digraph.vertices:
            out = digraph.out_set(v)
            if not out:
                resolved[v] = And()
                continue
            cond = conditions.get(v, default)
            if cond is None:
                raise ConditionError(f"no wait condition for {v!r}")
            validate_condition(cond, out)
            resolved[v] = cond
        object.__setattr__(self, "digraph", digraph)
        object.__setattr__(self, "conditions", resolved)

    @property
    def vertices(self):
        return self.digraph.vertices

    def out_set(self, v: str) -> frozenset:
        return self.digraph.out_set(v)

    def condition(self, v: str) -> WaitCondition:
        return self.conditions[v]

    def waiting(self):
        """Non-sink vertices in declared order."""
        return [v for v in self.vertices if self.digraph.successors(v)]

    def to_json(self) -> dict:
        order = self.digraph._index
        data = self.digraph.to_json()
        data["conditions"] = {
            v: condition_to_json(self.conditions[v], order) for v in self.waiting()
        }
        return data

    @classmethod
    def from_json(cls, data: dict, default: WaitCondition | None = None) -> "WaitForGraph":
        _check_format(data)
        d = Digraph.from_json(data)
        raw = data.get("conditions", {})
        if not isinstance(raw, dict):
            raise ConditionError("conditions must be an object")
        conds = {v: condition_from_json(c) for v, c in raw.items()}
        return cls(d, conds, default=default)


def uniform(digraph: Digraph, cond: WaitCondition) -> WaitForGraph:
    return WaitForGraph(digraph, default=cond)


__all__ = [
    "FORMAT", "GraphError",
    "And", "Or", "XOutOfY", "AndOr", "DisjXY", "WaitCondition", "ConditionError",
    "WaitForGraph", "validate_condition", "relieved_by", "normalize_andor",
    "xy_to_andor", "dxy_to_andor", "andor_to_dxy", "as_andor",
    "condition_to_json", "condition_from_json", "uniform",
]
