"""Seeded discrete-event simulation of resource-sharing computations.

Processes run a scripted demand program.  Each step is a set of resources
to acquire (Request), then a compute phase, then Clean_up.  Messages travel
over FIFO channels between neighbours of ``G``.  A seeded scheduler picks
the next enabled action uniformly at random: the delivery of the message at
the head of some channel, an idle process starting its next step, or a
computing process finishing.

Three AND-model policies are available:

* ``Naive``: each resource has a home process (its earliest-declared user)
  that grants it when free and queues requests otherwise.  All resources of
  a step are requested at once and nothing is ever preempted, so deadlock
  is possible.
* ``AcquisitionOrder``: same arbiter, but resources are requested one at a
  time along an acyclic orientation of the resource graph ``H``.
* ``EdgeReversal``: one permission token per resource per pair of users.
  A request is withheld only by a process that is using the resource, or
  that needs it and has priority under the current acyclic orientation of
  ``G``.  After computing, a process turns itself into a source.
"""
from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping

from .detection import detect_and
from .edge_reversal import AcyclicOrientation, orientation_from_order, reverse_at
from .graph_core import FORMAT, Digraph, _check_format, find_directed_cycle
from .resource_order import (
    ResourceSystem,
    acquisition_sequence,
    build_G,
    build_H,
    greedy_coloring,
    orient_by_coloring,
)
from .wait_models import And, WaitForGraph

RNG_NAME = "python-random-mt19937/1"
DEFAULT_MAX_EVENTS = 10_000


class ScenarioError(ValueError):
    """Invalid scenario, policy or workload."""


# -- specs -------------------------------------------------------------------

@dataclass(frozen=True)
class Naive:
    kind = "naive"


@dataclass(frozen=True)
class EdgeReversal:
    orientation: AcyclicOrientation | None = None
    kind = "edge_reversal"


@dataclass(frozen=True)
class AcquisitionOrder:
    orientation: AcyclicOrientation | None = None
    kind = "acquisition_order"


@dataclass(frozen=True)
class Program:
    steps: tuple
    loop: bool = False


def dining_workload(sys: ResourceSystem, loop: bool = True) -> dict:
    """Every process repeatedly needs all of its resources."""
    return {p: Program((sys.needs[p],), loop) for p in sys.processes}


def random_workload(sys: ResourceSystem, rng: random.Random, steps: int = 4,
                    loop: bool = True) -> dict:
    """Each step needs a random nonempty subset of the process's resources."""
    out = {}
    for p in sys.processes:
        rs = sorted(sys.needs[p])
        prog = []
        for _ in range(steps):
            k = rng.randint(1, len(rs))
            prog.append(frozenset(rng.sample(rs, k)))
        out[p] = Program(tuple(prog), loop)
    return out


@dataclass(frozen=True)
class Message:
    kind: str        # request | grant | release
    sender: str
    receiver: str
    resource: str
    send_index: int
    chains: dict = field(default_factory=dict, compare=False, repr=False)

    def to_json(self) -> dict:
        return {"kind": self.kind, "sender": self.sender, "receiver": self.receiver,
                "resource": self.resource, "send_index": self.send_index}


# -- per-process state -------------------------------------------------------

@dataclass
class _Proc:
    name: str
    program: Program
    step: int = 0
    phase: str = "idle"          # idle | acquiring | computing | done
    need: frozenset = frozenset()
    got: set = field(default_factory=set)
    episode: int | None = None
    episode_start: int = 0
    chains: dict = field(default_factory=dict)

    def has_more(self) -> bool:
        return self.program.loop and self.program.steps or self.step < len(self.program.steps)

    def next_need(self) -> frozenset:
        steps = self.program.steps
        need = frozenset(steps[self.step % len(steps)])
        self.step += 1
        return need


# -- policies ----------------------------------------------------------------

class _HomeArbiter:
    """Shared machinery for the naive and acquisition-order policies."""

    ordered = False

    def __init__(self, sim, phi=None):
        self.sim = sim
        sys = sim.sys
        self.home = {r: sys.users(r)[0] for r in sys.resources if sys.users(r)}
        self.holder = {r: None for r in sys.resources}
        self.queue = {r: deque() for r in sys.resources}
        self.requested = {p: set() for p in sys.processes}   # received at home
        self.phi = phi
        self.sequence = {}
        self.initial = {}
        self.releasing = set()   # (r, p) with p's release of r in flight

    def holders(self, r):
        h = self.holder[r]
        return set() if h is None else {h}

    def hold_initially(self, p, rs):
        for r in rs:
            if self.holder[r] is not None:
                raise ScenarioError(f"{r!r} held twice initially")
            self.holder[r] = p
        self.initial[p] = set(rs)

    def start(self, proc):
        # only the process's own view counts; a stale holder entry may
        # still name it while its release is in flight
        proc.got = self.initial.pop(proc.name, set())
        missing = [r for r in proc.need if r not in proc.got]
        if self.ordered:
            seq = acquisition_sequence(self.phi, proc.need)
            self.sequence[proc.name] = [r for r in seq if r in missing]
            self._request_next(proc)
        else:
            for r in sorted(missing, key=self.sim.res_index.__getitem__):
                self._request(proc, r)
        self.sim.maybe_compute(proc)

    def _request_next(self, proc):
        seq = self.sequence.get(proc.name)
        if seq:
            self._request(proc, seq.pop(0))

    def _request(self, proc, r):
        home = self.home[r]
        if home == proc.name:
            self._arrive(proc.name, r)
        else:
            self.sim.send("request", proc.name, home, r)

    def _arrive(self, p, r):
        """Request for ``r`` by ``p`` has reached the home."""
        self.requested[p].add(r)
        if self.holder[r] is None:
            self._grant(r, p)
        else:
            self.queue[r].append(p)

    def _grant(self, r, p):
        self.holder[r] = p
        self.requested[p].discard(r)
        home = self.home[r]
        if home == p:
            self.granted(self.sim.procs[p], r)
        else:
            self.sim.send("grant", home, p, r)

    def _free(self, r):
        self.holder[r] = None
        if self.queue[r]:
            self._grant(r, self.queue[r].popleft())

    def granted(self, proc, r):
        proc.got.add(r)
        if self.ordered:
            self._request_next(proc)
        self.sim.maybe_compute(proc)

    def receive(self, msg):
        if msg.kind == "request":
            self._arrive(msg.sender, msg.resource)
        elif msg.kind == "grant":
            self.granted(self.sim.procs[msg.receiver], msg.resource)
        elif msg.kind == "release":
            self.releasing.discard((msg.resource, msg.sender))
            self._free(msg.resource)

    def finish(self, proc):
        for r in sorted(proc.need, key=self.sim.res_index.__getitem__):
            if self.home[r] == proc.name:
                self._free(r)
            else:
                self.releasing.add((r, proc.name))
                self.sim.send("release", proc.name, self.home[r], r)

    def holds_all(self, proc):
        return proc.need <= proc.got and all(self.holder[r] == proc.name for r in proc.need)

    def wait_arcs(self):
        arcs = set()
        for p, rs in self.requested.items():
            for r in rs:
                h = self.holder[r]
                if h is not None and h != p and (r, h) not in self.releasing:
                    arcs.add((p, h))
        return arcs


class _NaivePolicy(_HomeArbiter):
    ordered = False


class _AcquisitionOrderPolicy(_HomeArbiter):
    ordered = True


class _EdgeReversalPolicy:
    def __init__(self, sim, omega: AcyclicOrientation):
        self.sim = sim
        self.omega = omega
        sys = sim.sys
        self.tokens = {}   # (r, frozenset{i, j}) -> holder, or None while in transit
        for r in sys.resources:
            for i, j in combinations(sys.users(r), 2):
                # start at the lower-priority end
                self.tokens[(r, frozenset((i, j)))] = i if omega.points_to(i, j) else j
        self.outstanding = {p: set() for p in sys.processes}  # (r, other)
        self.deferred = {p: set() for p in sys.processes}     # (r, requester)
        self.reversals = 0

    def holders(self, r):
        out = set()
        users = self.sim.sys.users(r)
        for p in users:
            if all(self.tokens[(r, frozenset((p, q)))] == p for q in users if q != p):
                out.add(p)
        return out if len(users) > 1 else set()

    def hold_initially(self, p, rs):  # pragma: no cover - rejected at scenario level
        raise ScenarioError("initial holdings are only supported by the naive policy")

    def start(self, proc):
        p = proc.name
        for r in sorted(proc.need, key=self.sim.res_index.__getitem__):
            for q in self.sim.sys.users(r):
                if q != p and self.tokens[(r, frozenset((p, q)))] != p:
                    self._ask(p, q, r)
        self.sim.maybe_compute(proc)

    def _ask(self, p, q, r):
        if (r, q) not in self.outstanding[p]:
            self.outstanding[p].add((r, q))
            self.sim.send("request", p, q, r)

    def _hand_over(self, j, i, r):
        self.tokens[(r, frozenset((i, j)))] = None
        self.sim.send("grant", j, i, r)

    def receive(self, msg):
        r, i, j = msg.resource, msg.sender, msg.receiver
        key = (r, frozenset((i, j)))
        if msg.kind == "grant":
            self.tokens[key] = j
            self.outstanding[j].discard((r, i))
            self.sim.maybe_compute(self.sim.procs[j])
            return
        if self.tokens[key] != j:  # pragma: no cover - FIFO channels rule this out
            raise AssertionError(f"request for a token {j!r} does not hold")
        proc = self.sim.procs[j]
        wants = r in proc.need and proc.phase in ("acquiring", "computing")
        if wants and (proc.phase == "computing" or self.omega.points_to(i, j)):
            self.deferred[j].add((r, i))
            return
        self._hand_over(j, i, r)
        if wants:
            self._ask(j, i, r)

    def holds_all(self, proc):
        p = proc.name
        return not self.outstanding[p] and all(
            self.tokens[(r, frozenset((p, q)))] == p
            for r in proc.need for q in self.sim.sys.users(r) if q != p
        )

    def finish(self, proc):
        p = proc.name
        self.omega = reverse_at(self.omega, [p])
        self.reversals += 1
        for r, i in sorted(self.deferred[p], key=lambda x: (self.sim.res_index[x[0]], x[1])):
            self._hand_over(p, i, r)
        self.deferred[p].clear()

    def wait_arcs(self):
        return {(i, j) for j, ds in self.deferred.items() for _, i in ds}


# -- simulator ---------------------------------------------------------------

@dataclass
class Episode:
    process: str
    index: int
    requested_at: int
    computed_at: int
    chain: int


@dataclass
class SimTrace:
    events: list
    episodes: list
    computes: dict
    quiescent: bool
    exhausted: bool
    deadlock: bool
    deadlock_set: frozenset
    witness: tuple | None
    final_wfg: WaitForGraph
    me_violations: int
    cyclic_snapshots: int
    snapshots_checked: int
    first_deadlock_event: int | None
    seed: int
    policy: str

    @property
    def event_count(self) -> int:
        return len(self.events)

    def to_jsonl(self) -> str:
        header = {"format": FORMAT, "rng": RNG_NAME, "seed": self.seed, "policy": self.policy}
        lines = [json.dumps(header)]
        lines.extend(json.dumps(e) for e in self.events)
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        waits = measure_waits(self)
        return {
            "format": FORMAT,
            "policy": self.policy,
            "seed": self.seed,
            "events": self.event_count,
            "quiescent": self.quiescent,
            "exhausted": self.exhausted,
            "deadlock": self.deadlock,
            "deadlock_set": sorted(self.deadlock_set),
            "witness": list(self.witness) if self.witness else None,
            "computes": dict(self.computes),
            "max_chain": max((w["max_chain"] for w in waits.values()), default=0),
            "waits": waits,
            "me_violations": self.me_violations,
            "cyclic_snapshots": self.cyclic_snapshots,
            "final_wfg": self.final_wfg.digraph.to_json()["arcs"],
        }


class Simulator:
    def __init__(self, sys: ResourceSystem, policy, workload: Mapping[str, Program],
                 seed: int, max_events: int = DEFAULT_MAX_EVENTS,
                 initial_holdings: Mapping[str, object] | None = None,
                 check_snapshots: bool = True):
        if seed is None:
            raise ScenarioError("a seed is required")
        self.sys = sys
        self.G = build_G(sys)
        self.seed = seed
        self.rng = random.Random(seed)
        self.max_events = max_events
        self.check_snapshots = check_snapshots
        self.res_index = {r: i for i, r in enumerate(sys.resources)}
        self.proc_index = {p: i for i, p in enumerate(sys.processes)}
        unknown = set(workload) - set(sys.processes)
        if unknown:
            raise ScenarioError(f"workload for unknown processes {sorted(unknown)}")
        self.procs = {}
        for p in sys.processes:
            prog = workload.get(p, Program(()))
            for st in prog.steps:
                if not st or not set(st) <= sys.needs[p]:
                    raise ScenarioError(f"step {sorted(st)} of {p!r} is not a nonempty subset of its resources")
            self.procs[p] = _Proc(p, prog)
        self.policy_name = policy.kind
        if isinstance(policy, Naive):
            self.policy = _NaivePolicy(self)
        elif isinstance(policy, AcquisitionOrder):
            H = build_H(sys)
            phi = policy.orientation or orient_by_coloring(H, greedy_coloring(H))
            if phi.graph != H:
                raise ScenarioError("acquisition order must orient the resource graph")
            self.policy = _AcquisitionOrderPolicy(self, phi)
        elif isinstance(policy, EdgeReversal):
            omega = policy.orientation or orientation_from_order(self.G)
            if omega.graph != self.G:
                raise ScenarioError("edge-reversal orientation must orient the process graph")
            self.policy = _EdgeReversalPolicy(self, omega)
        else:
            raise ScenarioError(f"unknown policy {policy!r}")
        if initial_holdings:
            if not isinstance(policy, Naive):
                raise ScenarioError("initial holdings are only supported by the naive policy")
            for p, rs in initial_holdings.items():
                rs = frozenset(rs)
                prog = self.procs[p].program
                if not prog.steps or not rs <= frozenset(prog.steps[0]):
                    raise ScenarioError(f"initial holdings of {p!r} must be part of its first step")
                self.policy.hold_initially(p, rs)
        self.channels = {}
        for u, v in self.G.edge_list():
            self.channels[(u, v)] = deque()
            self.channels[(v, u)] = deque()
        self.sent = 0
        self.event = 0
        self.log = []
        self.episodes = []
        self.computes = {p: 0 for p in sys.processes}
        self.ep_counter = 0
        self.closed = set()
        self._computed_now = []

    # hooks used by policies
    def send(self, kind, sender, receiver, resource):
        if (sender, receiver) not in self.channels:
            raise AssertionError(f"no channel {sender}->{receiver}")
        chains = self.procs[sender].chains
        for ep in [ep for ep in chains if ep in self.closed]:
            del chains[ep]
        bump = 1 if kind == "grant" else 0
        carried = {ep: c + bump for ep, c in chains.items()}
        self.channels[(sender, receiver)].append(
            Message(kind, sender, receiver, resource, self.sent, carried))
        self.sent += 1

    def maybe_compute(self, proc):
        if proc.phase == "acquiring" and self.policy.holds_all(proc):
            proc.phase = "computing"
            chain = proc.chains.get(proc.episode, 0)
            self.episodes.append(Episode(proc.name, proc.episode, proc.episode_start,
                                         self.event, chain))
            self.closed.add(proc.episode)
            proc.chains.pop(proc.episode, None)
            self.computes[proc.name] += 1
            self._computed_now.append(proc.name)

    # scheduler
    def enabled(self):
        acts = []
        for ch, q in self.channels.items():
            if q:
                acts.append(("deliver", ch))
        for p in self.sys.processes:
            proc = self.procs[p]
            if proc.phase == "idle" and proc.has_more():
                acts.append(("start", p))
            elif proc.phase == "computing":
                acts.append(("finish", p))
        return acts

    def _do(self, act):
        kind, arg = act
        rec = {"event": self.event, "action": kind}
        if kind == "deliver":
            msg = self.channels[arg].popleft()
            proc = self.procs[msg.receiver]
            for ep, c in msg.chains.items():
                if ep not in self.closed and c > proc.chains.get(ep, -1):
                    proc.chains[ep] = c
            rec["process"] = msg.receiver
            rec["message"] = msg.to_json()
            self.policy.receive(msg)
        elif kind == "start":
            proc = self.procs[arg]
            rec["process"] = arg
            proc.need = proc.next_need()
            proc.phase = "acquiring"
            proc.episode = self.ep_counter
            self.ep_counter += 1
            proc.episode_start = self.event
            proc.chains[proc.episode] = 0
            rec["need"] = sorted(proc.need, key=self.res_index.__getitem__)
            self.policy.start(proc)
        else:
            proc = self.procs[arg]
            rec["process"] = arg
            proc.phase = "idle" if proc.has_more() else "done"
            self.policy.finish(proc)
            proc.need = frozenset()
            proc.got = set()
        rec["computes"] = list(self._computed_now)
        self._computed_now.clear()
        return rec

    def mutual_exclusion_ok(self) -> bool:
        for r in self.sys.resources:
            if len(self.policy.holders(r)) > 1:
                return False
        busy = [p for p in self.sys.processes if self.procs[p].phase == "computing"]
        for a, b in combinations(busy, 2):
            if self.procs[a].need & self.procs[b].need:
                return False
        return all(self.policy.holds_all(self.procs[p]) for p in busy)

    def snapshot_wfg(self) -> WaitForGraph:
        """Wait-for graph between atomic events: ``i -> j`` when ``j`` has
        received ``i``'s request and is withholding the grant (or, for the
        home arbiters, when ``i`` is queued behind holder ``j``)."""
        return WaitForGraph(Digraph(self.sys.processes, self.policy.wait_arcs()), default=And())

    def run(self) -> SimTrace:
        me_bad = cyclic = checked = 0
        first_dead = None
        exhausted = False
        while True:
            acts = self.enabled()
            if not acts:
                break
            if self.event >= self.max_events:
                exhausted = True
                break
            act = acts[self.rng.randrange(len(acts))]
            self.log.append(self._do(act))
            self.event += 1
            if not self.mutual_exclusion_ok():
                me_bad += 1
            if self.check_snapshots:
                checked += 1
                if find_directed_cycle(self.snapshot_wfg().digraph) is not None:
                    cyclic += 1
                    if first_dead is None:
                        first_dead = self.event
        wfg = self.snapshot_wfg()
        verdict = detect_and(wfg)
        return SimTrace(
            events=self.log,
            episodes=self.episodes,
            computes=self.computes,
            quiescent=not exhausted,
            exhausted=exhausted,
            deadlock=verdict.deadlocked,
            deadlock_set=verdict.deadlocked_set,
            witness=verdict.witness.vertices if verdict.witness else None,
            final_wfg=wfg,
            me_violations=me_bad,
            cyclic_snapshots=cyclic,
            snapshots_checked=checked,
            first_deadlock_event=first_dead,
            seed=self.seed,
            policy=self.policy_name,
        )


def run(sys: ResourceSystem, policy, workload: Mapping[str, Program], seed: int,
        max_events: int = DEFAULT_MAX_EVENTS, **kw) -> SimTrace:
    return Simulator(sys, policy, workload, seed, max_events, **kw).run()


def snapshot_wfg(sim: Simulator) -> WaitForGraph:
    return sim.snapshot_wfg()


def measure_waits(trace: SimTrace) -> dict:
    """Per-process wait statistics over completed acquisition episodes.

    ``max_chain`` is the longest causal chain of grant messages from a
    Request to the matching compute; ``max_events`` counts scheduler
    events in between.
    """
    out = {}
    for ep in trace.episodes:
        s = out.setdefault(ep.process, {"episodes": 0, "max_chain": 0, "total_chain": 0,
                                        "max_events": 0})
        s["episodes"] += 1
        s["max_chain"] = max(s["max_chain"], ep.chain)
        s["total_chain"] += ep.chain
        s["max_events"] = max(s["max_events"], ep.computed_at - ep.requested_at)
    for s in out.values():
        s["mean_chain"] = s.pop("total_chain") / s["episodes"]
    return dict(sorted(out.items()))


# -- scenario files ----------------------------------------------------------

@dataclass
class Scenario:
    system: ResourceSystem
    policy: object
    workload: dict
    seed: int
    max_events: int = DEFAULT_MAX_EVENTS
    initial_holdings: dict = field(default_factory=dict)

    def run(self, **kw) -> SimTrace:
        return run(self.system, self.policy, self.workload, self.seed, self.max_events,
                   initial_holdings=self.initial_holdings, **kw)

    def to_json(self) -> dict:
        pol = {"kind": self.policy.kind}
        om = getattr(self.policy, "orientation", None)
        if om is not None:
            pol["directions"] = [list(a) for a in om.arc_list()]
        return {
            "format": FORMAT,
            "system": self.system.to_json(),
            "policy": pol,
            "workload": {
                p: {"steps": [sorted(s) for s in prog.steps], "loop": prog.loop}
                for p, prog in self.workload.items()
            },
            "initial_holdings": {p: sorted(rs) for p, rs in self.initial_holdings.items()},
            "seed": self.seed,
            "max_events": self.max_events,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Scenario":
        try:
            _check_format(data)
            sys = ResourceSystem.from_json(data["system"])
            pol = data["policy"]
            kind = pol["kind"]
            if kind == "naive":
                policy = Naive()
            elif kind == "edge_reversal":
                om = None
                if "directions" in pol:
                    om = AcyclicOrientation(build_G(sys), pol["directions"])
                policy = EdgeReversal(om)
            elif kind == "acquisition_order":
                om = None
                if "directions" in pol:
                    om = AcyclicOrientation(build_H(sys), pol["directions"])
                policy = AcquisitionOrder(om)
            else:
                raise ScenarioError(f"unknown policy kind {kind!r}")
            wl = data["workload"]
            if wl == "dining":
                workload = dining_workload(sys)
            else:
                workload = {p: Program(tuple(frozenset(s) for s in spec["steps"]),
                                       bool(spec.get("loop", False)))
                            for p, spec in wl.items()}
            seed = data["seed"]
            if not isinstance(seed, int) or isinstance(seed, bool):
                raise ScenarioError("seed must be an integer")
            holdings = {p: frozenset(rs) for p, rs in data.get("initial_holdings", {}).items()}
            return cls(sys, policy, workload, seed, int(data.get("max_events", DEFAULT_MAX_EVENTS)),
                       holdings)
        except ScenarioError:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ScenarioError(f"malformed scenario: {exc}") from exc
