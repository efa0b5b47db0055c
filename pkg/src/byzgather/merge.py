"""The merging routine: Census, Election with list voting, Synchronisation."""

from __future__ import annotations

import math
from typing import Hashable, Sequence

from .engine import WAIT, Announcement, Observation
from .routine import Routine, Trail

CENSUS = "Census"
ELECTION = "Election"
SYNC = "Synchronisation"


def compare_lists(a: Sequence[int], b: Sequence[int]) -> int:
    """-1, 0 or 1: more elements wins, then the lexicographically larger list."""
    ka, kb = (len(a), tuple(a)), (len(b), tuple(b))
    return (ka > kb) - (ka < kb)


def vote_threshold(size: int) -> int:
    """Distinct transmitters needed for a list of ``size`` labels: max(1, ceil(size/4))."""
    return max(1, math.ceil(size / 4))


def sync_threshold(size: int) -> int:
    """Synchronising agents needed to leave early: max(1, ceil(3 size / 4))."""
    return max(1, math.ceil(3 * size / 4))


def _is_label_list(x: object) -> bool:
    return isinstance(x, tuple) and all(isinstance(v, int) and not isinstance(v, bool) for v in x)


class Merge(Routine):
    """One execution of the merging routine with parameters (T, n) where X = X_n."""

    def __init__(self, label: int, T: int, X: int, terms: Sequence[int]):
        if T < 1:
            raise ValueError("T must be positive")
        self.label = label
        self.T = T
        self.X = X
        self.trail = Trail(terms)
        self.state = ""
        self.H: tuple[int, ...] = ()
        self.I: tuple[int, ...] = ()
        self.pi = 0
        self.first_half = False
        self.found = False
        self.m0 = 0
        self.end = 0          # end of the current timed period
        self.move_start = 0

    def start(self, t: int) -> None:
        self.m0 = t
        self.state = "census"
        self.end = t + 1

    def _wait1_len(self) -> int:
        return self.T - 1 if self.first_half else self.T + 2 * self.X - 1

    def _wait2_len(self) -> int:
        return self.T + 2 * self.X - 1 if self.first_half else self.T - 1

    def sync(self, t: int) -> None:
        while t >= self.end and not self.finished:
            st = self.state
            if st == "census":
                self.state, self.end = "wait1", self.end + self._wait1_len()
            elif st == "wait1":
                self.state, self.move_start = "move1", self.end
                self.end += 2 * self.X
            elif st == "move1":
                self.state, self.end = "wait2", self.end + self._wait2_len()
            elif st == "wait2":
                self.state, self.end = "move2", self.end + self.pi
            elif st == "move2":
                if self.H == self.I:
                    self.state, self.end = "wait3s", self.end + self.T + self.X - 1
                else:
                    self.state, self.end = "wait3", self.end + 2 * self.T + self.X - 1
            elif st == "wait3s":
                self.state, self.end = "sync", self.end + 1
            else:
                self.finished = True

    def announce(self, t: int) -> Announcement:
        st = self.state
        if st == "census":
            return Announcement(self.label, CENSUS)
        if st in ("wait1", "wait2"):
            return Announcement(self.label, ELECTION, self.H)
        if st == "sync":
            return Announcement(self.label, SYNC)
        return Announcement(self.label, ELECTION)

    def act(self, obs: Observation) -> int:
        st = self.state
        t = obs.round
        self.trail.observe(obs)
        if st == "census":
            self.H = tuple(sorted(obs.crowd.labels(state=CENSUS)))
            self.first_half = self.label in self.H[: len(self.H) // 2]
            self.I, self.pi, self.found = (), 0, False
            return WAIT
        if st == "move1":
            j = t - self.move_start
            if j < self.X:
                self._vote(obs, j)
                if j < self.X - 1:
                    return self.trail.forward(obs.degree)
                return WAIT
            if j < 2 * self.X - 1:
                return self.trail.back()
            return WAIT
        if st == "move2":
            return self.trail.forward(obs.degree)
        if st == "wait3":
            if obs.crowd.count_state(SYNC) >= sync_threshold(len(self.I)):
                self.end = t + 1
                self.state = "wait3x"
            return WAIT
        return WAIT

    def _vote(self, obs: Observation, j: int) -> None:
        for lst, cnt in obs.crowd.payload_counts(ELECTION).items():
            if not _is_label_list(lst) or cnt < vote_threshold(len(lst)):
                continue
            if not self.found or compare_lists(lst, self.I) > 0:
                self.I, self.pi, self.found = lst, j, True

    def quiet_until(self, t: int) -> int:
        if self.state in ("wait1", "wait2", "wait3s", "wait3"):
            return max(t + 1, self.end)
        return t + 1

    def cycle_key(self, t: int) -> Hashable | None:
        if self.state in ("wait1", "wait2", "wait3s"):
            return ("merge", self.state, self.end, self.H, self.I, self.pi, self.first_half)
        return None

    def cycle_room(self, t: int, period: int) -> int:
        return max(0, (self.end - t) // period)

    def advance(self, m: int, period: int, t: int) -> None:
        pass
