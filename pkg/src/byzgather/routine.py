"""Building blocks shared by the protocol state machines.

A :class:`Routine` is a resumable piece of agent logic with absolute round
bookkeeping. :class:`Chain` strings routines together into a :class:`Behavior`:
when a routine finishes, the next one starts in the same round.
"""

from __future__ import annotations

from typing import Callable, Hashable, Sequence

from .engine import DECLARE, NEVER, WAIT, Announcement, Behavior, Observation
from .errors import ProtocolFault
from .exploration import explo_step


class Trail:
    """Edges taken along the exploration sequence from a home node, for backtracking.

    ``stack[k]`` is the port leading back from the (k+1)-th node of the walk.
    The entry port of a forward move is only known at the next observation, so
    it is pushed lazily.
    """

    __slots__ = ("terms", "stack", "pending")

    def __init__(self, terms: Sequence[int]):
        self.terms = terms
        self.stack: list[int] = []
        self.pending = False

    @property
    def depth(self) -> int:
        return len(self.stack) + (1 if self.pending else 0)

    def observe(self, obs: Observation) -> None:
        if self.pending:
            assert obs.entry_port is not None, "forward move without an entry port"
            self.stack.append(obs.entry_port)
            self.pending = False

    def forward(self, degree: int) -> int:
        assert not self.pending
        j = len(self.stack)
        p = self.stack[-1] if self.stack else 0
        self.pending = True
        return explo_step(p, degree, self.terms[j])

    def back(self) -> int:
        assert not self.pending
        return self.stack.pop()

    def key(self) -> tuple:
        return (tuple(self.stack), self.pending)


class Routine:
    """Piece of agent logic; see :class:`byzgather.engine.Behavior` for the hook contract."""

    finished = False

    def start(self, t: int) -> None:
        pass

    def sync(self, t: int) -> None:
        """Apply transitions that are due at the start of round t."""

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


class WaitUntil(Routine):
    """Wait with a constant announcement until an absolute round."""

    def __init__(self, label: int, state: str, end: int, agent_hint: str = ""):
        self.label = label
        self.state = state
        self.end = end
        self.hint = agent_hint

    def start(self, t: int) -> None:
        if t > self.end:
            raise ProtocolFault(-1, t, f"{self.hint} deadline {self.end} already passed")
        self.sync(t)

    def sync(self, t: int) -> None:
        if t >= self.end:
            self.finished = True

    def announce(self, t: int) -> Announcement:
        return Announcement(self.label, self.state)

    def act(self, obs: Observation) -> int:
        return WAIT

    def quiet_until(self, t: int) -> int:
        return max(self.end, t + 1)

    def cycle_key(self, t: int) -> Hashable:
        return ("wait", self.state, self.end)

    def cycle_room(self, t: int, period: int) -> int:
        return max(0, (self.end - t) // period)

    def advance(self, m: int, period: int, t: int) -> None:
        pass


class Idle(Routine):
    """Terminal waiting state."""

    def __init__(self, label: int, state: str):
        self.label = label
        self.state = state

    def announce(self, t: int) -> Announcement:
        return Announcement(self.label, self.state)

    def act(self, obs: Observation) -> int:
        return WAIT

    def quiet_until(self, t: int) -> int:
        return NEVER

    def cycle_key(self, t: int) -> Hashable:
        return ("idle", self.state)

    def cycle_room(self, t: int, period: int) -> int:
        return NEVER

    def advance(self, m: int, period: int, t: int) -> None:
        pass


class Explore(Routine):
    """X-1 forward traversals of the exploration sequence, then one waiting round."""

    def __init__(self, label: int, terms: Sequence[int]):
        self.label = label
        self.trail = Trail(terms)
        self.begin = 0

    def start(self, t: int) -> None:
        self.begin = t

    def sync(self, t: int) -> None:
        if t >= self.begin + len(self.trail.terms) + 1:
            self.finished = True

    def announce(self, t: int) -> Announcement:
        return Announcement(self.label, "Explore")

    def act(self, obs: Observation) -> int:
        self.trail.observe(obs)
        if obs.round - self.begin < len(self.trail.terms):
            return self.trail.forward(obs.degree)
        return WAIT


class Chain(Behavior):
    """Behaviour made of routines produced one after another by ``next_routine``."""

    def __init__(self, label: int, next_routine: Callable[[int], Routine | None]):
        self.label = label
        self.next_routine = next_routine
        self.cur: Routine | None = None
        self.woken = False

    def wake(self, t: int) -> None:
        self.woken = True
        self.cur = self.next_routine(t)
        assert self.cur is not None
        self.cur.start(t)

    def _sync(self, t: int) -> Routine:
        cur = self.cur
        assert cur is not None, "behaviour used before waking"
        while True:
            cur.sync(t)
            if not cur.finished:
                return cur
            nxt = self.next_routine(t)
            if nxt is None:
                raise ProtocolFault(-1, t, "no routine left")
            self.cur = cur = nxt
            cur.start(t)

    def announce(self, t: int) -> Announcement:
        return self._sync(t).announce(t)

    def act(self, obs: Observation) -> int:
        return self.cur.act(obs)

    def quiet_until(self, t: int) -> int:
        return self.cur.quiet_until(t)

    def skip(self, first: int, last: int, obs: Observation) -> None:
        self.cur.skip(first, last, obs)

    def cycle_anchor(self, t: int) -> int | None:
        return self._sync(t).cycle_anchor(t)

    def cycle_key(self, t: int) -> Hashable | None:
        k = self._sync(t).cycle_key(t)
        if k is None:
            return None
        return (self.outer_key(), type(self.cur).__name__, k)

    def outer_key(self) -> Hashable:
        return None

    def cycle_room(self, t: int, period: int) -> int:
        return self.cur.cycle_room(t, period)

    def advance(self, m: int, period: int, t: int) -> None:
        self.cur.advance(m, period, t)


class DeclareOnce(Routine):
    """Declare in the round it starts."""

    def __init__(self, label: int):
        self.label = label

    def announce(self, t: int) -> Announcement:
        return Announcement(self.label, "Declare")

    def act(self, obs: Observation) -> int:
        return DECLARE
