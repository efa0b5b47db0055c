"""The top-level gathering procedure with its LEARN and CHECK-GATHERING steps."""

from __future__ import annotations

from typing import Callable, Hashable, Mapping

from .engine import DECLARE, WAIT, Announcement, Behavior, Observation
from .exploration import provide_sequence
from .group import Group
from .labels import bit, transform
from .merge import Merge
from .routine import Chain, DeclareOnce, Explore, Idle, Routine, WaitUntil
from .timing import GroupTiming, TimingProfile, f_tilde, size_bound_from_gk

LEARNING = "Learning"
OPTIMIST = "Optimist"
PESSIMIST = "Pessimist"
CHECKING = "Check-gathering"
EXHAUSTED = "Exhausted"


def learn_goes_optimist(omega: int, i: int, lstar_len: int, x: int, gamma: int) -> tuple[bool, int]:
    """(goes Optimist, z) for the Learning round."""
    z = max(gamma, x)
    if omega != 0:
        return True, z
    if 2 * i > 3 * lstar_len and z >= 2 and x >= z - f_tilde(z):
        return True, z
    return False, z


def check_flag(omega: int, p: int, threes: int) -> bool:
    """CHECK-GATHERING outcome; p < 2 leaves the threshold undefined and yields False."""
    if omega not in (2, 3) or p < 2:
        return False
    return threes > f_tilde(p)


class Learn(Routine):
    """One Learning round, then 3 T_N rounds as Optimist or Pessimist. Never moves."""

    def __init__(self, label: int, i: int, omega: int, gamma: int, lstar_len: int, T_N: int):
        self.label = label
        self.i = i
        self.omega = omega
        self.gamma = gamma
        self.lstar_len = lstar_len
        self.T_N = T_N
        self.state = LEARNING
        self.l0 = 0
        self.z = gamma
        self.run = 0
        self.longest = 0
        self.result: tuple[int, int] | None = None

    def start(self, t: int) -> None:
        self.l0 = t

    @property
    def end(self) -> int:
        return self.l0 + 1 + 3 * self.T_N

    def sync(self, t: int) -> None:
        if t >= self.end and not self.finished:
            if self.state == OPTIMIST:
                self.result = (0, self.z)
            else:
                self.result = (0 if self.longest >= 2 * self.T_N else 1, self.z)
            self.finished = True

    def announce(self, t: int) -> Announcement:
        return Announcement(self.label, self.state)

    def act(self, obs: Observation) -> int:
        if self.state == LEARNING:
            x = obs.crowd.count_state(LEARNING)
            opt, self.z = learn_goes_optimist(self.omega, self.i, self.lstar_len, x, self.gamma)
            self.state = OPTIMIST if opt else PESSIMIST
        elif self.state == PESSIMIST:
            self._tick(obs, 1)
        return WAIT

    def _tick(self, obs: Observation, n: int) -> None:
        if obs.crowd.count_state(OPTIMIST) > 0:
            self.run += n
            self.longest = max(self.longest, self.run)
        else:
            self.run = 0

    def quiet_until(self, t: int) -> int:
        if t == self.l0:
            return t + 1
        return max(t + 1, self.end)

    def skip(self, first: int, last: int, obs: Observation) -> None:
        if self.state == PESSIMIST:
            self._tick(obs, last - first + 1)

    def cycle_key(self, t: int) -> Hashable | None:
        if self.state == OPTIMIST:
            return ("opt", self.end, self.z)
        return None

    def cycle_room(self, t: int, period: int) -> int:
        return max(0, (self.end - t) // period)

    def advance(self, m: int, period: int, t: int) -> None:
        pass


class Check(Routine):
    """Single CHECK-GATHERING round; declares in that round when the check passes."""

    def __init__(self, label: int, omega: int):
        self.label = label
        self.omega = omega
        self.c0 = 0
        self.flag: bool | None = None

    def start(self, t: int) -> None:
        self.c0 = t

    def sync(self, t: int) -> None:
        if t > self.c0:
            self.finished = True

    def announce(self, t: int) -> Announcement:
        return Announcement(self.label, CHECKING, self.omega)

    def act(self, obs: Observation) -> int:
        crowd = obs.crowd
        threes = len(crowd.labels(state=CHECKING, payload=3))
        self.flag = check_flag(self.omega, len(crowd), threes)
        return DECLARE if self.flag else WAIT


class GatherAgent(Chain):
    """Good agent running the gathering procedure with global knowledge ``gk``."""

    def __init__(self, label: int, gk: int):
        super().__init__(label, self._next)
        self.N = size_bound_from_gk(gk)
        self.seq = provide_sequence(self.N)
        self.X = self.seq.X
        self.profile = TimingProfile(self.N, self.X)
        self.gtiming = GroupTiming(self.X, self.N, self.X)
        self.lstar = transform(label)
        self.i = 1
        self.omega = 0
        self.gamma = 1
        self.rho = 0
        self.r0 = 0
        self.phase = "start"
        self.last: Routine | None = None
        self.group_runs: list[tuple[int, int]] = []   # (i, start round) of every grouping execution

    def _next(self, t: int) -> Routine | None:
        prev, ph = self.cur, self.phase
        X = self.X
        if ph == "start":
            self.r0 = t
            self.phase = "explore"
            return Explore(self.label, self.seq.terms)
        if ph in ("explore", "wait"):
            if ph == "wait":
                self.i += 1
            if self.i > 3 * len(self.lstar):
                self.phase = "exhausted"
                return Idle(self.label, EXHAUSTED)
            if self.i % 3 == 1:
                self.omega = 0
                self.rho = bit(self.lstar, self.i // 3 + 1)
            self.phase = "group"
            self.group_runs.append((self.i, t))
            return Group(self.label, self.gtiming, self.seq.terms, self.rho)
        if ph == "group":
            self.phase = "merge"
            return Merge(self.label, X + self.profile.G, X, self.seq.terms)
        if ph == "merge":
            self.phase = "learn"
            return Learn(self.label, self.i, self.omega, self.gamma, len(self.lstar), self.profile.T_N)
        if ph == "learn":
            assert isinstance(prev, Learn) and prev.result is not None
            self.rho, self.gamma = prev.result
            if self.rho == 0:
                self.omega += 1
            if self.i % 3 == 0:
                self.phase = "check"
                return Check(self.label, self.omega)
            return self._wait()
        if ph == "check":
            return self._wait()
        return None

    def _wait(self) -> Routine:
        self.phase = "wait"
        return WaitUntil(self.label, "Wait", self.r0 + self.profile.deadline(self.i), f"iteration {self.i}")

    def outer_key(self) -> Hashable:
        return (self.phase, self.i, self.omega, self.gamma, self.rho, self.r0)


class RoutineThenDeclare(Chain):
    """Optionally wait ``delay`` rounds after waking, run one routine, then declare in the round it ends."""

    def __init__(self, label: int, make: Callable[[], Routine], delay: int = 0):
        self._make = make
        self._stage = 0
        self.delay = delay
        self.inner: Routine | None = None
        super().__init__(label, self._next)

    def _next(self, t: int) -> Routine | None:
        self._stage += 1
        if self._stage == 1:
            return WaitUntil(self.label, "Delay", t + self.delay)
        if self._stage == 2:
            self.inner = self._make()
            self.started_at = t
            return self.inner
        if self._stage == 3:
            return DeclareOnce(self.label)
        return None

    def outer_key(self) -> Hashable:
        return self._stage


def gather_factory(spec, inst) -> Behavior:
    return GatherAgent(spec.label, inst.gk)


def group_factory(T: int, n: int, bins: Mapping[int, int] | None = None, delays: Mapping[int, int] | None = None):
    """Standalone grouping routine followed by a declaration.

    The bit comes from ``bins`` (by label) or the label parity; ``delays`` holds
    per-label waits between waking and starting.
    """
    seq = provide_sequence(n)
    timing = GroupTiming(T, n, seq.X)
    bins = dict(bins or {})
    delays = dict(delays or {})

    def make(spec, inst) -> Behavior:
        b = bins.get(spec.label, spec.label % 2)
        return RoutineThenDeclare(spec.label, lambda: Group(spec.label, timing, seq.terms, b),
                                  delays.get(spec.label, 0))

    return make


def merge_factory(T: int, n: int, delays: Mapping[int, int] | None = None):
    """Standalone merging routine followed by a declaration; ``delays`` as for :func:`group_factory`."""
    seq = provide_sequence(n)
    delays = dict(delays or {})

    def make(spec, inst) -> Behavior:
        return RoutineThenDeclare(spec.label, lambda: Merge(spec.label, T, seq.X, seq.terms),
                                  delays.get(spec.label, 0))

    return make
