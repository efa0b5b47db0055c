"""Synchronous round engine.

Each round: scheduled wake-ups and wake-up by co-location, announcements,
observation of the node's announcement multiset, actions, then moves that take
effect at the next round. Two execution routes share this loop:

* :func:`run` simulates every round and audits the behaviours' quietness
  promises, raising :class:`CompressionContractViolation` on a broken one;
* :func:`run_compressed` jumps over rounds in which every agent promised to
  stay quiet, and optionally over whole periods once the global state repeats.
"""

from __future__ import annotations

import hashlib
import zlib
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, NamedTuple, Sequence

from .errors import CompressionContractViolation, ProtocolFault
from .instance import AgentSpec, Instance, check_instance
from .timing import U64_MAX

WAIT = -1
DECLARE = -2
NEVER = U64_MAX + 1


class Announcement(NamedTuple):
    label: int
    state: str
    payload: Hashable = None


class Crowd:
    """Announcements heard at one node in one round, in canonical order, with cached queries."""

    __slots__ = ("anns", "_states", "_by_state_payload", "_payload_counts", "_payloads")

    def __init__(self, anns: tuple[Announcement, ...]):
        self.anns = anns
        self._states: dict[str, int] | None = None
        self._by_state_payload: dict[tuple, frozenset[int]] = {}
        self._payload_counts: dict[str, dict] = {}
        self._payloads: dict[str, frozenset] = {}

    def __len__(self) -> int:
        return len(self.anns)

    def count_state(self, state: str) -> int:
        if self._states is None:
            counts: dict[str, int] = {}
            for a in self.anns:
                counts[a.state] = counts.get(a.state, 0) + 1
            self._states = counts
        return self._states.get(state, 0)

    def labels(self, state: str | None = None, payload: Hashable = ..., states: frozenset[str] | None = None) -> frozenset[int]:
        """Distinct claimed labels matching a state (or set of states) and payload (``...`` = any)."""
        key = (state, payload, states)
        got = self._by_state_payload.get(key)
        if got is None:
            got = frozenset(
                a.label for a in self.anns
                if (state is None or a.state == state)
                and (states is None or a.state in states)
                and (payload is ... or a.payload == payload)
            )
            self._by_state_payload[key] = got
        return got

    def payload_counts(self, state: str) -> dict:
        got = self._payload_counts.get(state)
        if got is None:
            got = {}
            for a in self.anns:
                if a.state == state:
                    got[a.payload] = got.get(a.payload, 0) + 1
            self._payload_counts[state] = got
        return got

    def has_payload(self, payload: Hashable) -> bool:
        got = self._payloads.get("all")
        if got is None:
            got = frozenset(_hashable(a.payload) for a in self.anns)
            self._payloads["all"] = got
        return payload in got


def _hashable(x: Any) -> Hashable:
    try:
        hash(x)
        return x
    except TypeError:
        return repr(x)


class Observation(NamedTuple):
    round: int
    degree: int
    entry_port: int | None
    crowd: Crowd


class Behavior:
    """Agent logic. Receives only observations, never node identities.

    ``quiet_until(t)`` is asked after ``act`` at round t and returns q > t such
    that, while the observation stays identical (except its round and an absent
    entry port), the agent keeps announcing what it announced at t and waits in
    rounds t+1..q-1. ``skip`` then informs it that those rounds went by.

    The ``cycle_*`` hooks support period jumps: a key describing the full state
    with times relative to t (or absolute when a jump cannot cross them), how
    many periods may be skipped, and how to apply the skip.
    """

    def wake(self, t: int) -> None:
        pass

    def announce(self, t: int) -> Announcement:
        raise NotImplementedError

    def act(self, obs: Observation) -> int:
        raise NotImplementedError

    def quiet_until(self, t: int) -> int:
        return t + 1

    def skip(self, first: int, last: int, obs: Observation) -> None:
        pass

    def cycle_anchor(self, t: int) -> int | None:
        return None

    def cycle_key(self, t: int) -> Hashable | None:
        return None

    def cycle_room(self, t: int, period: int) -> int:
        return 0

    def advance(self, m: int, period: int, t: int) -> None:
        raise NotImplementedError


ProtocolFactory = Callable[[AgentSpec, Instance], Behavior]
ScriptFactory = Callable[[int, AgentSpec, Instance], Behavior]

_DIGESTS: dict[Announcement, str] = {}


def ann_digest(a: Announcement) -> str:
    d = _DIGESTS.get(a)
    if d is None:
        d = format(zlib.crc32(repr(tuple(a)).encode()), "08x")
        if len(_DIGESTS) > 200_000:
            _DIGESTS.clear()
        _DIGESTS[a] = d
    return d


def action_text(a: int) -> str:
    if a == WAIT:
        return "W"
    if a == DECLARE:
        return "D"
    return f"M{a}"


@dataclass
class Trace:
    """Streaming trace: canonical records hashed into a digest, optionally retained.

    Record formats: ``R|round|agent|node|state|action|ann`` for simulated
    rounds, ``I|first|length|digest`` for skipped quiet rounds and
    ``C|round|period|m`` for period jumps.
    """

    keep: bool = False
    records: list[str] = field(default_factory=list)
    intervals: list[tuple[int, int, tuple[str, ...]]] = field(default_factory=list)
    declare_round: dict[int, int] = field(default_factory=dict)
    declare_node: dict[int, int] = field(default_factory=dict)
    final_round: int = 0
    simulated_rounds: int = 0
    skipped_rounds: int = 0
    cycle_jumps: int = 0
    cycled_rounds: int = 0
    horizon_exhausted: bool = False
    _hash: Any = field(default_factory=hashlib.sha256)

    def emit(self, line: str) -> None:
        self._hash.update(line.encode())
        self._hash.update(b"\n")
        if self.keep:
            self.records.append(line)

    @property
    def digest(self) -> str:
        return self._hash.hexdigest()

    def summary(self, inst: Instance) -> dict[str, Any]:
        good = inst.good
        rounds = {a: self.declare_round.get(a) for a in good}
        nodes = {a: self.declare_node.get(a) for a in good}
        common = (all(r is not None for r in rounds.values())
                  and len(set(rounds.values())) == 1 and len(set(nodes.values())) == 1)
        return {
            "schema_version": 1,
            "declare_round": {str(a): r for a, r in rounds.items()},
            "declare_node": {str(a): v for a, v in nodes.items()},
            "gathered": bool(common),
            "final_round": self.final_round,
            "horizon_exhausted": self.horizon_exhausted,
            "simulated_rounds": self.simulated_rounds,
            "skipped_rounds": self.skipped_rounds,
            "cycle_jumps": self.cycle_jumps,
            "cycled_rounds": self.cycled_rounds,
            "digest": self.digest,
        }


def decompress(records: Sequence[str]) -> list[str]:
    """Expand interval and cycle events into per-round ``R`` records."""
    out: list[str] = []
    by_round: dict[int, list[int]] = {}

    def add(line: str) -> None:
        out.append(line)
        r = int(line.split("|", 2)[1])
        by_round.setdefault(r, []).append(len(out) - 1)

    for line in records:
        kind = line[0]
        if kind == "R":
            add(line)
        elif kind == "I":
            _, first, length, *_ = line.split("|")
            first, length = int(first), int(length)
            template = [out[i] for i in by_round.get(first - 1, [])]
            for r in range(first, first + length):
                for rec in template:
                    parts = rec.split("|")
                    parts[1] = str(r)
                    parts[5] = "W"
                    add("|".join(parts))
        elif kind == "C":
            _, start, period, m = line.split("|")
            start, period, m = int(start), int(period), int(m)
            for k in range(m):
                for r in range(start - period, start):
                    for i in by_round.get(r, []):
                        parts = out[i].split("|")
                        parts[1] = str(r + (k + 1) * period)
                        add("|".join(parts))
    return out


class _Sim:
    def __init__(self, inst: Instance, protocol: ProtocolFactory, adversary: ScriptFactory | None,
                 horizon: int, trace: Trace):
        check_instance(inst)
        if horizon < 0:
            raise ValueError("horizon must be non-negative")
        self.inst = inst
        self.g = inst.graph
        self.horizon = horizon
        self.trace = trace
        n = len(inst.agents)
        self.pos = [a.start_node for a in inst.agents]
        self.awake = [False] * n
        self.declared = [False] * n
        self.entry: list[int | None] = [None] * n
        self.byz = [a.byzantine for a in inst.agents]
        self.behaviors: list[Behavior] = []
        for i, spec in enumerate(inst.agents):
            if spec.byzantine:
                if adversary is None:
                    from .adversary import script_from_spec
                    self.behaviors.append(script_from_spec(i, spec, inst))
                else:
                    self.behaviors.append(adversary(i, spec, inst))
            else:
                self.behaviors.append(protocol(spec, inst))
        self.wakes: dict[int, list[int]] = {}
        for a, r in inst.wake_schedule.items():
            if not self.byz[a]:
                self.wakes.setdefault(r, []).append(a)
        self.good_left = len(inst.good)
        self.sig_at: dict[int, tuple] = {}
        self.observer: Any = None

    def next_wake_after(self, t: int) -> int:
        future = [r for r in self.wakes if r > t]
        return min(future) if future else NEVER

    def do_wakes(self, t: int) -> None:
        for a in self.wakes.get(t, ()):
            if not self.awake[a] and not self.declared[a]:
                self.awake[a] = True
                self.behaviors[a].wake(t)
        if t == 0:
            for a, b in enumerate(self.byz):
                if b and not self.awake[a]:
                    self.awake[a] = True
                    self.behaviors[a].wake(0)
        occupied = {self.pos[a] for a in range(len(self.pos)) if self.awake[a] and not self.declared[a]}
        for a in range(len(self.pos)):
            if not self.awake[a] and not self.declared[a] and self.pos[a] in occupied:
                self.awake[a] = True
                self.behaviors[a].wake(t)

    def active(self) -> list[int]:
        return [a for a in range(len(self.pos)) if self.awake[a] and not self.declared[a]]

    def step(self, t: int, active: list[int]) -> tuple[list[int], dict[int, Announcement], dict[int, Crowd], dict[int, int]]:
        behaviors = self.behaviors
        anns = {a: behaviors[a].announce(t) for a in active}
        groups: dict[int, list[int]] = {}
        for a in active:
            groups.setdefault(self.pos[a], []).append(a)
        crowds: dict[int, Crowd] = {}
        for v, members in groups.items():
            members.sort(key=lambda a: (anns[a].label, a))
            crowds[v] = Crowd(tuple(anns[a] for a in members))
        actions: dict[int, int] = {}
        for a in active:
            v = self.pos[a]
            obs = Observation(t, self.g.degree(v), self.entry[a], crowds[v])
            act = behaviors[a].act(obs)
            if act != WAIT and act != DECLARE and not (isinstance(act, int) and 0 <= act < self.g.degree(v)):
                raise ProtocolFault(a, t, f"illegal action {act!r} at a node of degree {self.g.degree(v)}")
            if act == DECLARE and self.byz[a]:
                act = WAIT
            actions[a] = act
        return active, anns, crowds, actions

    def record(self, t: int, active: list[int], anns: dict[int, Announcement], actions: dict[int, int]) -> list[str]:
        lines = [f"R|{t}|{a}|{self.pos[a]}|{anns[a].state}|{action_text(actions[a])}|{ann_digest(anns[a])}" for a in active]
        for line in lines:
            self.trace.emit(line)
        return lines

    def apply(self, t: int, active: list[int], actions: dict[int, int]) -> bool:
        moved = False
        for a in active:
            act = actions[a]
            if act == WAIT:
                self.entry[a] = None
            elif act == DECLARE:
                self.declared[a] = True
                self.trace.declare_round[a] = t
                self.trace.declare_node[a] = self.pos[a]
                self.good_left -= 1
                moved = True
            else:
                self.pos[a], self.entry[a] = self.g.follow(self.pos[a], act)
                moved = True
        return moved

    def signature(self, t: int) -> tuple | None:
        parts = []
        for a, b in enumerate(self.behaviors):
            if self.declared[a]:
                parts.append(("declared", self.pos[a]))
            elif not self.awake[a]:
                parts.append(("dormant", self.pos[a]))
            else:
                key = b.cycle_key(t)
                if key is None:
                    return None
                parts.append((self.pos[a], self.entry[a], key))
        return tuple(parts)

    def try_cycle(self, t: int) -> int:
        """Return the round to continue from (t itself when no jump applies)."""
        periods = {p for a in self.active() if (p := self.behaviors[a].cycle_anchor(t)) is not None}
        if len(periods) != 1:
            return t
        (period,) = periods
        sig = self.signature(t)
        if sig is None:
            return t
        for r in [r for r in self.sig_at if r < t - 2 * period]:
            del self.sig_at[r]
        prev = self.sig_at.get(t - period)
        self.sig_at[t] = sig
        if prev != sig:
            return t
        room = min(self.behaviors[a].cycle_room(t, period) for a in self.active())
        room = min(room, (self.horizon - t) // period, (self.next_wake_after(t - 1) - t) // period)
        if room < 1:
            return t
        for a in self.active():
            self.behaviors[a].advance(room, period, t)
        self.trace.emit(f"C|{t}|{period}|{room}")
        if self.observer is not None:
            self.observer.on_cycle(t, period, room)
        self.trace.cycle_jumps += 1
        self.trace.cycled_rounds += room * period
        self.sig_at.clear()
        return t + room * period


def run(inst: Instance, protocol: ProtocolFactory, adversary: ScriptFactory | None = None,
        horizon: int = 10_000, keep_records: bool = False) -> Trace:
    """Round-by-round simulation of rounds 0..horizon with a quietness audit."""
    trace = Trace(keep=keep_records)
    sim = _Sim(inst, protocol, adversary, horizon, trace)
    # agent -> (promised end, announcement, observed crowd, observation unchanged since the promise)
    promises: dict[int, list] = {}
    t = 0
    while t <= horizon:
        sim.do_wakes(t)
        active = sim.active()
        active, anns, crowds, actions = sim.step(t, active)
        for a in active:
            pr = promises.get(a)
            if pr is None or t >= pr[0] or not pr[3]:
                continue
            # The announcement at t only depends on observations before t.
            if anns[a] != pr[1]:
                raise CompressionContractViolation(
                    f"agent {a} changed its announcement at round {t} before its promised quiet end {pr[0]}")
            pr[3] = sim.entry[a] is None and crowds[sim.pos[a]].anns == pr[2]
            if pr[3] and actions[a] != WAIT:
                raise CompressionContractViolation(
                    f"agent {a} acted at round {t} before its promised quiet end {pr[0]}")
        sim.record(t, active, anns, actions)
        for a in active:
            pr = promises.get(a)
            if pr is None or t >= pr[0] or not pr[3]:
                promises[a] = [sim.behaviors[a].quiet_until(t), anns[a], crowds[sim.pos[a]].anns, True]
        sim.apply(t, active, actions)
        trace.simulated_rounds += 1
        trace.final_round = t
        if sim.good_left == 0:
            return trace
        t += 1
    trace.horizon_exhausted = True
    return trace


def run_compressed(inst: Instance, protocol: ProtocolFactory, adversary: ScriptFactory | None = None,
                   horizon: int = U64_MAX, keep_records: bool = False, cycles: bool = True,
                   observer: Any = None) -> Trace:
    """Same semantics as :func:`run`, skipping quiet stretches and repeated periods.

    ``observer`` may define ``on_round(t, sim, anns, crowds, actions)``,
    ``on_skip(first, last, sim, crowds)`` and ``on_cycle(t, period, m)``.
    """
    trace = Trace(keep=keep_records)
    sim = _Sim(inst, protocol, adversary, horizon, trace)
    sim.observer = observer
    t = 0
    while t <= horizon:
        if cycles:
            t2 = sim.try_cycle(t)
            if t2 != t:
                t = t2
                if t > horizon:
                    break
        sim.do_wakes(t)
        active = sim.active()
        active, anns, crowds, actions = sim.step(t, active)
        lines = sim.record(t, active, anns, actions)
        if observer is not None:
            observer.on_round(t, sim, anns, crowds, actions)
        moved = sim.apply(t, active, actions)
        trace.simulated_rounds += 1
        trace.final_round = t
        if sim.good_left == 0:
            return trace
        if not moved:
            q = min((sim.behaviors[a].quiet_until(t) for a in active), default=NEVER)
            q = min(q, sim.next_wake_after(t), horizon + 1)
            if q > t + 1:
                first, last = t + 1, q - 1
                for a in active:
                    v = sim.pos[a]
                    sim.behaviors[a].skip(first, last, Observation(first, sim.g.degree(v), None, crowds[v]))
                template = tuple(lines)
                digest = hashlib.sha256("\n".join(x.split("|", 2)[2] for x in template).encode()).hexdigest()[:16]
                trace.emit(f"I|{first}|{last - first + 1}|{digest}")
                if keep_records:
                    trace.intervals.append((first, last - first + 1, template))
                if observer is not None:
                    observer.on_skip(first, last, sim, crowds)
                trace.skipped_rounds += last - first + 1
                trace.final_round = last
                t = q
                continue
        t += 1
    trace.horizon_exhausted = True
    return trace
