"""Byzantine scripts and the plan-following script used by the mirror construction."""

from __future__ import annotations

import random
from typing import Any, Hashable, Mapping, Sequence

from .engine import NEVER, WAIT, Announcement, Behavior, Observation
from .errors import InvalidParameter
from .instance import AgentSpec, Instance
from .seqlog import Cursor, Item


class Script(Behavior):
    """Byzantine behaviour. Awake from round 0; may lie about anything but must move legally."""


class Inert(Script):
    def __init__(self, label: int, state: str = "Idle"):
        self.ann = Announcement(label, state)

    def announce(self, t: int) -> Announcement:
        return self.ann

    def act(self, obs: Observation) -> int:
        return WAIT

    def quiet_until(self, t: int) -> int:
        return NEVER

    def cycle_key(self, t: int) -> Hashable:
        return ("const", self.ann)

    def cycle_room(self, t: int, period: int) -> int:
        return NEVER

    def advance(self, m: int, period: int, t: int) -> None:
        pass


class LabelForger(Inert):
    """Stays put pretending to be a follower in Wait-for-attendees with a forged label."""

    def __init__(self, label: int, target_label: int):
        self.ann = Announcement(target_label, "Wait-for-attendees", "follower")


class OptimistSpoofer(Inert):
    """Stays put announcing the Optimist state forever."""

    def __init__(self, label: int):
        self.ann = Announcement(label, "Optimist")


class StateMimic(Script):
    """Announces a chosen state (and payload) during rounds 0..duration-1, then idles."""

    def __init__(self, label: int, state: str, duration: int, payload: Hashable = None):
        self.mimic = Announcement(label, state, payload)
        self.idle = Announcement(label, "Idle")
        self.duration = duration

    def announce(self, t: int) -> Announcement:
        return self.mimic if t < self.duration else self.idle

    def act(self, obs: Observation) -> int:
        return WAIT

    def quiet_until(self, t: int) -> int:
        return max(t + 1, self.duration) if t < self.duration else NEVER

    def cycle_key(self, t: int) -> Hashable:
        return ("mimic", self.duration) if t < self.duration else ("const", self.idle)

    def cycle_room(self, t: int, period: int) -> int:
        return (self.duration - t) // period if t < self.duration else NEVER

    def advance(self, m: int, period: int, t: int) -> None:
        pass


class RandomWalk(Script):
    """Seeded random walk; between moves it rests a pseudo-random 1..dwell rounds.

    ``dwell=1`` moves every round. Large dwell values keep runs with literal
    round counts tractable.
    """

    def __init__(self, label: int, seed: int, dwell: int = 1):
        if dwell < 1:
            raise InvalidParameter("dwell must be positive")
        self.ann = Announcement(label, "Wander")
        self.rng = random.Random(seed)
        self.dwell = dwell
        self.moves = 0
        self.next_move = 0

    def announce(self, t: int) -> Announcement:
        return self.ann

    def act(self, obs: Observation) -> int:
        if obs.round < self.next_move:
            return WAIT
        port = self.rng.randrange(obs.degree)
        self.moves += 1
        self.next_move = obs.round + self.rng.randint(1, self.dwell)
        return port

    def quiet_until(self, t: int) -> int:
        return max(t + 1, self.next_move)

    def cycle_key(self, t: int) -> Hashable:
        return ("walk", self.next_move, self.moves) if t < self.next_move else None

    def cycle_room(self, t: int, period: int) -> int:
        return max(0, (self.next_move - t) // period)

    def advance(self, m: int, period: int, t: int) -> None:
        pass


class PlanScript(Script):
    """Follows a precomputed per-round plan of (action, announcement) values.

    ``pick`` selects this agent's part of a plan value shared by several agents.
    After the plan ends the agent idles with its last announcement.
    """

    def __init__(self, label: int, items: Sequence[Item], length: int, pick: int):
        self.cursor = Cursor(items, length)
        self.pick = pick
        self.idle = Announcement(label, "Idle")

    def _part(self) -> tuple[int, Announcement]:
        if self.cursor.done:
            return WAIT, self.idle
        value, _ = self.cursor.current()
        return value[self.pick]

    def announce(self, t: int) -> Announcement:
        self._seek(t)
        return self._part()[1]

    def _seek(self, t: int) -> None:
        if t > self.cursor.pos and not self.cursor.done:
            self.cursor.advance(min(t, self.cursor.limit) - self.cursor.pos)

    def act(self, obs: Observation) -> int:
        self._seek(obs.round)
        return self._part()[0]

    def quiet_until(self, t: int) -> int:
        self._seek(t)
        if self.cursor.done:
            return NEVER
        value, left = self.cursor.current()
        return t + left if value[self.pick][0] == WAIT else t + 1

    def cycle_key(self, t: int) -> Hashable | None:
        self._seek(t)
        if self.cursor.done:
            return ("done",)
        fr = self.cursor.repeat_frame(None)
        if fr is None:
            return None
        return ("plan", id(fr[0]), fr[1])

    def cycle_room(self, t: int, period: int) -> int:
        if self.cursor.done:
            return NEVER
        fr = self.cursor.repeat_frame(None)
        return 0 if fr is None or fr[0].body_len != period else fr[2]

    def advance(self, m: int, period: int, t: int) -> None:
        if not self.cursor.done:
            self.cursor.advance(m * period)


BUILTIN_KINDS = ("inert", "random_walk", "label_forger", "state_mimic", "optimist_spoofer")


def builtin_script(kind: str, label: int, params: Mapping[str, Any] | None = None) -> Script:
    p = dict(params or {})
    if kind == "inert":
        return Inert(label)
    if kind == "random_walk":
        return RandomWalk(label, int(p.get("seed", 0)), int(p.get("dwell", 1)))
    if kind == "label_forger":
        return LabelForger(label, int(p.get("target", 0)))
    if kind == "state_mimic":
        return StateMimic(label, str(p.get("state", "Optimist")), int(p.get("duration", 1)), p.get("payload"))
    if kind == "optimist_spoofer":
        return OptimistSpoofer(label)
    raise InvalidParameter(f"unknown script kind {kind!r}")


def script_from_spec(index: int, spec: AgentSpec, inst: Instance) -> Script:
    script = dict(spec.script or {"kind": "inert"})
    kind = script.pop("kind", "inert")
    return builtin_script(kind, spec.label, script)
