"""The grouping routine: Process phase over S steps, then the Restart replay.

Followers (bin=0) mark their start nodes; searchers (bin=1) build an imperfect
map once and keep revisiting the node of its smallest recorded label. The
routine ends with a replay of the Process prefix up to the round where the
agent saw the most agents not replaying.
"""

from __future__ import annotations

from typing import Hashable, Sequence

from .engine import WAIT, Announcement, Observation
from .errors import ProtocolFault
from .exploration import ImperfectMap, map_index, map_is_useful
from .routine import Routine, Trail
from .seqlog import SeqLog
from .timing import GroupTiming

INVITE = "Invite"
WAIT_ATTENDEES = "Wait-for-attendees"
SEARCH_GROUP = "Search-for-a-group"
FOLLOW_UP = "Follow-up"
SEARCH_INVITATION = "Search-for-an-invitation"
ACCEPT = "Accept-an-invitation"
RESTART = "Restart"
FOLLOWER = "follower"
SEARCHER = "searcher"

# Internal sub-states and the state name they announce.
_NAME = {
    "invite": INVITE,
    "wfa": WAIT_ATTENDEES,
    "sfg_wait": SEARCH_GROUP,
    "sfg_im": SEARCH_GROUP,
    "sfg_walk": SEARCH_GROUP,
    "sfg_idle": SEARCH_GROUP,
    "sfg_back": SEARCH_GROUP,
    "sfg_none": SEARCH_GROUP,
    "sfg_cut": SEARCH_GROUP,
    "sfi_wait": SEARCH_INVITATION,
    "sfi_im": SEARCH_INVITATION,
    "sfi_wait2": SEARCH_INVITATION,
    "aai_walk": ACCEPT,
    "aai_stay": ACCEPT,
    "aai_back": ACCEPT,
    "follow": FOLLOW_UP,
    "restart": RESTART,
}


class Group(Routine):
    """One execution of the grouping routine with parameters (T, n) and bit ``bin_``."""

    def __init__(self, label: int, timing: GroupTiming, terms: Sequence[int], bin_: int):
        if bin_ not in (0, 1):
            raise ValueError("bin must be 0 or 1")
        if len(terms) != timing.X - 1:
            raise ValueError("exploration sequence does not match X")
        self.label = label
        self.tm = timing
        self.bin = bin_
        self.role = SEARCHER if bin_ else FOLLOWER
        self.terms = terms
        self.trail = Trail(terms)
        self.log = SeqLog()
        self.g0 = 0
        self.step = 0
        self.s0 = 0
        self.state = ""
        # Follower variables.
        self.a = 0          # Wait-for-attendees start
        self.cut = 0        # Search-for-a-group cutoff round
        self.k = 0
        self.im_start = 0
        self.pmap: ImperfectMap | None = None
        self.target = 0     # index of the walked-to list
        self.tlabel = 0     # label awaited there
        # Searcher variables.
        self.zmap: ImperfectMap | None = None
        self.arrive = 0
        # Best meeting record: count and offset from g0.
        self.best_count = -1
        self.best_off = 0
        self.replay = None
        self.replay_end = 0
        self._last_name = ""

    # ----------------------------------------------------------------- timing
    def start(self, t: int) -> None:
        self.g0 = t
        self._begin_step(1, t)

    def _begin_step(self, s: int, t: int) -> None:
        self.step = s
        self.s0 = t
        self.trail = Trail(self.terms)
        # Per-step times restart at the step start so that cycle keys stay relative.
        self.a = self.cut = self.im_start = self.arrive = t
        self.k = self.target = self.tlabel = 0
        if self.bin == 0:
            self.state = "invite"
            self.pmap = None
        else:
            self.state = "sfi_wait"

    def sync(self, t: int) -> None:
        tm = self.tm
        while True:
            st = self.state
            if st.startswith("sfg") and st != "sfg_cut" and t >= self.cut:
                if self.trail.depth > 0:
                    self.state = "sfg_cut"
                else:
                    self.state = "follow"
                continue
            if st == "wfa" and t >= self.a + tm.attend_window:
                self.state = "follow"
                continue
            if st == "sfg_wait" and t >= self.im_start:
                self.state = "sfg_im"
                self.pmap = ImperfectMap.empty(tm.X)
                continue
            if st == "sfg_im" and t >= self.im_start + 2 * tm.X:
                self.state = "sfg_decide"
                return
            if st == "sfi_wait" and t >= self.s0 + tm.T:
                if self.step == 1:
                    self.state = "sfi_im"
                    self.im_start = self.s0 + tm.T
                    self.zmap = ImperfectMap.empty(tm.X)
                else:
                    self.state = "sfi_wait2"
                continue
            if (st == "sfi_wait2" and t >= self.s0 + tm.T + 2 * tm.X) or (st == "sfi_im" and t >= self.im_start + 2 * tm.X):
                self._enter_accept(self.s0 + tm.T + 2 * tm.X)
                continue
            if st == "follow" and t >= self.s0 + tm.step_len:
                if self.step < tm.S:
                    self._begin_step(self.step + 1, self.s0 + tm.step_len)
                else:
                    self._enter_restart(self.s0 + tm.step_len)
                continue
            if st == "restart" and t >= self.replay_end:
                self.finished = True
            return

    def _enter_search_group(self, t: int, k: int) -> None:
        tm = self.tm
        self.k = k
        self.cut = t + tm.attend_window - k
        assert self.cut == self.s0 + tm.invite + tm.attend_window
        self.im_start = t + tm.T
        self.state = "sfg_wait"

    def _enter_accept(self, e: int) -> None:
        z = self.zmap
        if z is None or not map_is_useful(z):
            self.state = "follow"
            return
        self.target = map_index(z)
        self.tlabel = z[self.target][0]
        if self.target == 1:
            self.state = "aai_stay"
            self.arrive = e
        else:
            self.state = "aai_walk"

    def _enter_restart(self, t: int) -> None:
        self.state = "restart"
        self.replay = self.log.cursor(self.best_off)
        self.replay_end = t + self.best_off
        if self.best_off == 0:
            self.finished = True

    # ------------------------------------------------------------ announcing
    def announce(self, t: int) -> Announcement:
        self._last_name = _NAME.get(self.state, SEARCH_GROUP)
        return Announcement(self.label, self._last_name, self.role)

    # ---------------------------------------------------------------- acting
    def act(self, obs: Observation) -> int:
        t = obs.round
        if self.state == "restart":
            value, _ = self.replay.current()
            self.replay.advance(1)
            return value
        self.trail.observe(obs)
        crowd = obs.crowd
        count = len(crowd) - crowd.count_state(RESTART)
        if count >= self.best_count:
            self.best_count = count
            self.best_off = t - self.g0
        a = self._decide(obs, t)
        self.log.append(a)
        return a

    def _decide(self, obs: Observation, t: int) -> int:
        tm = self.tm
        st = self.state
        crowd = obs.crowd
        if st == "invite":
            if t == self.s0 + tm.invite - 1:
                if crowd.has_payload(SEARCHER):
                    self.state = "wfa"
                    self.a = t + 1
                else:
                    self._enter_search_group(t + 1, 0)
            return WAIT
        if st == "wfa":
            if not crowd.has_payload(SEARCHER):
                self._enter_search_group(t + 1, t - self.a + 1)
            return WAIT
        if st in ("sfg_im", "sfi_im"):
            return self._im_round(obs, t)
        if st == "sfg_decide":
            return self._sfg_decide(obs)
        if st == "sfg_walk":
            if self.trail.depth < self.target - 1:
                return self.trail.forward(obs.degree)
            self.state = "sfg_idle"
            return self._sfg_idle(obs)
        if st == "sfg_idle":
            return self._sfg_idle(obs)
        if st == "sfg_back":
            port = self.trail.back()
            if self.trail.depth == 0:
                self.state = "sfg_decide"
            return port
        if st == "sfg_cut":
            port = self.trail.back()
            if self.trail.depth == 0:
                self.state = "follow"
            return port
        if st == "aai_walk":
            if self.trail.depth < self.target - 1:
                return self.trail.forward(obs.degree)
            self.state = "aai_stay"
            self.arrive = t
            return WAIT
        if st == "aai_stay":
            if t == self.arrive:
                return WAIT
            present = self.tlabel in crowd.labels(payload=FOLLOWER)
            if not present:
                self.zmap.remove(self.target, self.tlabel)
                return self._aai_leave()
            if t >= self.arrive + tm.attend_window:
                return self._aai_leave()
            return WAIT
        if st == "aai_back":
            port = self.trail.back()
            if self.trail.depth == 0:
                self.state = "follow"
            return port
        if st in ("follow", "sfi_wait", "sfi_wait2", "sfg_wait", "sfg_none"):
            return WAIT
        raise ProtocolFault(-1, t, f"grouping routine in unknown state {st}")

    def _aai_leave(self) -> int:
        if self.trail.depth == 0:
            self.state = "follow"
            return WAIT
        self.state = "aai_back"
        port = self.trail.back()
        if self.trail.depth == 0:
            self.state = "follow"
        return port

    def _im_round(self, obs: Observation, t: int) -> int:
        X = self.tm.X
        j = t - self.im_start
        if j < X:
            if self.state == "sfg_im":
                labels = obs.crowd.labels(state=WAIT_ATTENDEES, payload=FOLLOWER)
                self.pmap.record(j + 1, labels)
            else:
                self.zmap.record(j + 1, obs.crowd.labels(payload=FOLLOWER))
            if j < X - 1:
                return self.trail.forward(obs.degree)
            return WAIT
        if j < 2 * X - 1:
            return self.trail.back()
        return WAIT

    def _sfg_decide(self, obs: Observation) -> int:
        p = self.pmap
        crowd = obs.crowd
        while True:
            if not map_is_useful(p):
                self.state = "sfg_none"
                return WAIT
            i = map_index(p)
            self.target = i
            self.tlabel = p[i][0]
            if i > 1:
                self.state = "sfg_walk"
                return self.trail.forward(obs.degree)
            if self.tlabel in crowd.labels(state=WAIT_ATTENDEES, payload=FOLLOWER):
                self.state = "sfg_idle"
                return WAIT
            p.remove(1, self.tlabel)

    def _sfg_idle(self, obs: Observation) -> int:
        if self.tlabel in obs.crowd.labels(state=WAIT_ATTENDEES, payload=FOLLOWER):
            return WAIT
        self.pmap.remove(self.target, self.tlabel)
        if self.trail.depth == 0:
            self.state = "sfg_decide"
            return self._sfg_decide(obs)
        self.state = "sfg_back"
        port = self.trail.back()
        if self.trail.depth == 0:
            self.state = "sfg_decide"
        return port

    # ----------------------------------------------------------- compression
    def quiet_until(self, t: int) -> int:
        tm = self.tm
        st = self.state
        if st == "restart":
            if self.replay.done:
                return t + 1
            value, left = self.replay.current()
            return t + 1 + left if value == WAIT else t + 1
        nxt = t + 1
        if _NAME.get(st, SEARCH_GROUP) != self._last_name:
            return nxt
        if st == "invite":
            return max(nxt, self.s0 + tm.invite - 1)
        if st == "wfa":
            return max(nxt, self.a + tm.attend_window)
        if st == "sfg_wait":
            return max(nxt, min(self.im_start, self.cut))
        if st in ("sfg_none", "sfg_idle"):
            return max(nxt, self.cut)
        if st == "sfi_wait":
            return max(nxt, self.s0 + tm.T)
        if st == "sfi_wait2":
            return max(nxt, self.s0 + tm.T + 2 * tm.X)
        if st == "aai_stay":
            if t == self.arrive:
                return nxt
            return max(nxt, self.arrive + tm.attend_window)
        if st == "follow":
            return max(nxt, self.s0 + tm.step_len)
        return nxt

    def skip(self, first: int, last: int, obs: Observation) -> None:
        n = last - first + 1
        if self.state == "restart":
            self.replay.advance(n)
            return
        crowd = obs.crowd
        count = len(crowd) - crowd.count_state(RESTART)
        if count >= self.best_count:
            self.best_count = count
            self.best_off = last - self.g0
        self.log.append(WAIT, n)

    def cycle_anchor(self, t: int) -> int | None:
        P = self.tm.step_len
        if self.state == "restart":
            fr = self.replay.repeat_frame(P)
            if fr is not None and fr[1] == 0 and fr[2] >= 1:
                return P
            return None
        if t == self.s0 and self.step >= 3:
            return P
        return None

    def cycle_key(self, t: int) -> Hashable | None:
        P = self.tm.step_len
        if self.state == "restart":
            fr = self.replay.repeat_frame(P)
            if fr is None:
                return None
            return ("restart", id(fr[0]), fr[1], self.replay_end)
        if self.step < 3:
            return None
        b = self.g0 + self.best_off
        best = ("rel", b - t) if b >= t - P else ("abs", b)
        return (
            self.bin, self.state, self.s0 - t, self.a - t, self.cut - t, self.k,
            self.im_start - t, self.arrive - t, self.target, self.tlabel,
            self.pmap.key() if self.pmap is not None else None,
            self.zmap.key() if self.zmap is not None else None,
            self.trail.key(), self.best_count, best,
        )

    def cycle_room(self, t: int, period: int) -> int:
        if self.state == "restart":
            fr = self.replay.repeat_frame(period)
            if fr is None:
                return 0
            return min(fr[2], (self.replay_end - t) // period)
        return self.tm.S - self.step

    def advance(self, m: int, period: int, t: int) -> None:
        shift = m * period
        if self.state == "restart":
            self.replay.advance(shift)
            return
        self.step += m
        self.s0 += shift
        self.a += shift
        self.cut += shift
        self.im_start += shift
        self.arrive += shift
        if self.g0 + self.best_off >= t - period:
            self.best_off += shift
        self.log.repeat_tail(period, m)
