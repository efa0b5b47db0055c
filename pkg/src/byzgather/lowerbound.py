"""Ring instance family and the fooling harness built on a mirror adversary.

The harness records everything one good agent (the subject) observes on the
depth-``j`` instance up to its declaration round k, then plans Byzantine
escorts that reproduce those observations on the depth-``j2`` instance, where
the subject's team sits half a ring away. If the subject declares at round k
there too, it does so without its team: a premature declaration.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Hashable, Sequence

from .adversary import PlanScript
from .engine import DECLARE, NEVER, WAIT, Announcement, Behavior, Observation, ProtocolFactory, run_compressed
from .errors import BudgetExceeded, InvalidParameter, MirrorInfeasible
from .gather import gather_factory
from .graph import make_oriented_ring
from .instance import AgentSpec, Instance
from .seqlog import Item, Rep, Run, SeqLog, item_len, items_len, iter_runs, merged_runs
from .timing import strong_team_min

SUBJECT_LABEL = 1
PEER_LABEL = 2
FIRST_TEAM_LABEL = 3
ESCORT_LABEL_BASE = 1_000_000
RING_NODE_BUDGET = 1 << 20
BASE_NODES = 4
BASE_AGENTS = 2


@dataclass(frozen=True)
class FamilyInstance:
    instance: Instance
    depth: int
    c: int
    prev_agents: int
    prev_nodes: int
    subject: int            # agent index of the subject
    subject_node: int
    byz_per_side: int


def family_sizes(c: int, depth: int) -> list[tuple[int, int, int]]:
    """(ring nodes, Byzantines per node adjacent to the subject, total agents) for depths 0..depth."""
    if c < 1:
        raise InvalidParameter("c must be at least 1")
    if depth < 0:
        raise InvalidParameter("depth must be non-negative")
    out = [(BASE_NODES, 0, BASE_AGENTS)]
    for _ in range(depth):
        n_prev, _, mu_prev = out[-1]
        side = n_prev**c * mu_prev
        f = 2 * side
        out.append((n_prev ** (4 * c), side, 1 + f + strong_team_min(f) - 1))
    return out


def build_family_instance(c: int, depth: int, gk: int = 1) -> FamilyInstance:
    """Depth 0: 4-ring with the subject and its peer opposite each other.

    Depth i: oriented ring of n_{i-1}^{4c} nodes, the subject at node 0,
    n_{i-1}^c * mu_{i-1} Byzantines on each neighbour of node 0 and the rest of
    a strong team on the opposite node. Everyone wakes at round 0.
    """
    sizes = family_sizes(c, depth)
    nodes, side, total = sizes[-1]
    if nodes > RING_NODE_BUDGET:
        raise BudgetExceeded(f"depth {depth} needs a ring of {nodes} nodes")
    ring = make_oriented_ring(nodes)
    prev_nodes, _, prev_agents = sizes[-2] if depth else (0, 0, 0)
    if depth == 0:
        agents = (AgentSpec(SUBJECT_LABEL, 0), AgentSpec(PEER_LABEL, nodes // 2))
        side = 0
    else:
        f = 2 * side
        team = strong_team_min(f) - 1
        agents_l = [AgentSpec(SUBJECT_LABEL, 0)]
        agents_l += [AgentSpec(FIRST_TEAM_LABEL + i, nodes // 2) for i in range(team)]
        for s in range(f):
            node = 1 if s < side else nodes - 1
            agents_l.append(AgentSpec(ESCORT_LABEL_BASE + s, node, True, {"kind": "inert"}))
        agents = tuple(agents_l)
        assert len(agents) == total
    wake = {i: 0 for i, a in enumerate(agents) if not a.byzantine}
    inst = Instance(ring, agents, wake, gk=gk, size_bound=max(nodes, 4))
    return FamilyInstance(inst, depth, c, prev_agents, prev_nodes, 0, 0, side)


# ---------------------------------------------------------------- recording
class SubjectRecorder:
    """Engine observer logging the subject's (degree, entry port, crowd, own announcement, action) per round."""

    def __init__(self, subject: int):
        self.subject = subject
        self.log = SeqLog()
        self.done = False
        self.last_crowd: tuple = ()
        self.last_ann: Announcement | None = None

    def on_round(self, t, sim, anns, crowds, actions) -> None:
        a = self.subject
        if self.done or a not in anns:
            return
        assert self.log.length == t, "subject record out of step"
        v = sim.pos[a]
        self.last_crowd = crowds[v].anns
        self.last_ann = anns[a]
        self.degree = sim.g.degree(v)
        self.log.append((self.degree, sim.entry[a], self.last_crowd, anns[a], actions[a]))
        if actions[a] == DECLARE:
            self.done = True

    def on_skip(self, first, last, sim, crowds) -> None:
        if self.done or not sim.awake[self.subject]:
            return
        self.log.append((self.degree, None, self.last_crowd, self.last_ann, WAIT), last - first + 1)

    def on_cycle(self, t, period, m) -> None:
        if not self.done and self.log.length == t:
            self.log.repeat_tail(period, m)


def record_digest(items: Sequence[Item], limit: int) -> str:
    h = hashlib.sha256()
    for value, count in merged_runs(iter_runs(items, limit)):
        h.update(repr((value, count)).encode())
        h.update(b"\n")
    return h.hexdigest()


# ----------------------------------------------------------- escort planning
def _others(value: tuple) -> tuple[Announcement, ...]:
    crowd, own = value[2], value[3]
    out = list(crowd)
    out.remove(own)
    return tuple(out)


def _displacement(action: int) -> int:
    if action == 0:
        return 1
    if action == 1:
        return -1
    return 0


def _port(m: int) -> int:
    return {1: 0, -1: 1, 0: WAIT}[m]


def _first_value(items: Sequence[Item]) -> Hashable:
    it = items[0]
    while isinstance(it, Rep):
        it = it.body[0]
    return it.value


class EscortPlanner:
    """Offsets of the escorts relative to the subject, planned round by round.

    Every escort shadows the subject on an adjacent node. When the recorded run
    had the peer next to the subject, exactly one escort stands on the subject's
    node announcing what the peer announced; otherwise none does. Escorts cross
    sides only by swapping along an edge with the subject, never by sharing its node.
    """

    def __init__(self, count_per_side: int, labels: Sequence[int]):
        self.n = 2 * count_per_side
        self.fill = tuple(Announcement(l, "Idle") for l in labels)
        self.start = tuple([1] * count_per_side + [-1] * count_per_side)
        self.max_used = 0

    def step(self, offs: tuple[int, ...], value: tuple, nxt: Hashable | None) -> tuple[tuple, tuple[int, ...]]:
        others = _others(value)
        if len(others) > 1:
            raise MirrorInfeasible(f"{len(others)} co-located agents to mirror; the planner handles one")
        zero = [i for i, e in enumerate(offs) if e == 0]
        if len(zero) != len(others):
            raise MirrorInfeasible("escort placement out of step with the record")
        ann = tuple(others[0] if e == 0 else self.fill[i] for i, e in enumerate(offs))
        action = value[4]
        if action == DECLARE or nxt is None:
            return tuple((WAIT, a) for a in ann), offs
        if value[0] != 2:
            raise MirrorInfeasible("the escort planner needs an oriented ring")
        d = _displacement(action)
        need = len(_others(nxt)) > 0
        x = [e - d for e in offs]
        new: list[int | None] = [None] * self.n
        if need:
            pick = zero[0] if zero else None
            if pick is None:
                cands = [i for i in range(self.n) if abs(x[i]) <= 1]
                if not cands:
                    raise MirrorInfeasible("no escort can reach the subject in time")
                pick = min(cands, key=lambda i: (abs(offs[i]), i))
            new[pick] = 0
        plus = sum(1 for e in offs if e > 0)
        minus = sum(1 for e in offs if e < 0)
        for i in range(self.n):
            if new[i] is not None:
                continue
            opts = [y for y in (x[i] - 1, x[i], x[i] + 1) if y != 0]
            best = min(abs(y) for y in opts)
            opts = [y for y in opts if abs(y) == best]
            if len(opts) == 2:
                if offs[i] > 0:
                    y = -1 if plus > minus + 1 else 1
                elif offs[i] < 0:
                    y = 1 if minus > plus + 1 else -1
                else:
                    y = 1 if plus <= minus else -1
                if offs[i] > 0 and y < 0:
                    plus, minus = plus - 1, minus + 1
                elif offs[i] < 0 and y > 0:
                    plus, minus = plus + 1, minus - 1
                elif offs[i] == 0:
                    plus, minus = (plus + 1, minus) if y > 0 else (plus, minus + 1)
            else:
                y = opts[0]
            new[i] = y
        moves = tuple(_port(new[i] - x[i]) for i in range(self.n))
        self.max_used = max(self.max_used, 1 if need else 0)
        return tuple(zip(moves, ann)), tuple(new)  # type: ignore[arg-type]

    def plan(self, items: Sequence[Item], state: tuple, after: Hashable | None) -> tuple[list[Item], tuple]:
        out = SeqLog()
        for idx, it in enumerate(items):
            nxt = _first_value(items[idx + 1:]) if idx + 1 < len(items) else after
            if isinstance(it, Run):
                state = self._plan_run(it.value, it.count, state, nxt, out)
            else:
                state = self._plan_rep(it, state, nxt, out)
        return out.items, state

    def _plan_run(self, value: Hashable, count: int, state: tuple, after: Hashable | None, out: SeqLog) -> tuple:
        i = 0
        while i < count - 1:
            pv, s2 = self.step(state, value, value)
            if s2 == state:
                out.append(pv, count - 1 - i)
                break
            out.append(pv)
            state = s2
            i += 1
        pv, state = self.step(state, value, after)
        out.append(pv)
        return state

    def _plan_rep(self, rep: Rep, state: tuple, after: Hashable | None, out: SeqLog) -> tuple:
        first = _first_value(rep.body)
        left = rep.reps
        # Unroll until the escort configuration at the body boundary repeats.
        for _ in range(8):
            if left == 1:
                break
            body, s2 = self.plan(rep.body, state, first)
            if s2 == state:
                _append_items(out, [Rep(tuple(body), rep.body_len, left - 1)])
                left = 1
                break
            _append_items(out, body)
            state = s2
            left -= 1
        else:
            raise MirrorInfeasible("escort plan does not settle into the recorded period")
        body, state = self.plan(rep.body, state, after)
        _append_items(out, body)
        return state


def _append_items(log: SeqLog, items: Sequence[Item]) -> None:
    for it in items:
        if isinstance(it, Run):
            log.append(it.value, it.count)
        else:
            log.items.append(it)
            log.length += item_len(it)


def plan_escorts(record: Sequence[Item], per_side: int, labels: Sequence[int]) -> tuple[list[Item], int]:
    planner = EscortPlanner(per_side, labels)
    items, _ = planner.plan(record, planner.start, None)
    return items, items_len(items)


# ------------------------------------------------------------------ harness
class DeclareNow(Behavior):
    """Declares in its wake-up round."""

    def __init__(self, label: int):
        self.label = label

    def announce(self, t: int) -> Announcement:
        return Announcement(self.label, "Declare")

    def act(self, obs: Observation) -> int:
        return DECLARE


def declare_now_factory(spec, inst) -> Behavior:
    return DeclareNow(spec.label)


ALGORITHMS: dict[str, ProtocolFactory] = {"gather": gather_factory, "declare-now": declare_now_factory}


@dataclass
class FoolingReport:
    identical: bool | None
    declared_at_k: bool | None
    premature: bool | None
    k: int | None
    inconclusive: bool
    reason: str = ""
    digests: tuple[str, str] = ("", "")
    counting_premise: dict[str, Any] = field(default_factory=dict)
    stats: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.identical and self.declared_at_k and self.premature)

    def to_json(self) -> dict[str, Any]:
        return {
            "schema_version": 1,
            "identical": self.identical,
            "declared_at_k": self.declared_at_k,
            "premature": self.premature,
            "passed": self.passed,
            "k": self.k,
            "inconclusive": self.inconclusive,
            "reason": self.reason,
            "digests": list(self.digests),
            "counting_premise": self.counting_premise,
            "stats": self.stats,
        }

    def summary_line(self) -> str:
        if self.inconclusive:
            return f"inconclusive: {self.reason}"
        yn = lambda b: "yes" if b else "no"  # noqa: E731
        return (f"k={self.k} identical={yn(self.identical)} declared_at_k={yn(self.declared_at_k)} "
                f"premature={yn(self.premature)} -> {'PASS' if self.passed else 'FAIL'}")


def fooling_check(alg: ProtocolFactory | str, gk: int = 1, j: int = 0, j2: int = 1, c: int = 1,
                  horizon: int = NEVER - 1) -> FoolingReport:
    """Record the subject on I_j, mirror it on I_j2 and report whether it is fooled."""
    if isinstance(alg, str):
        if alg not in ALGORITHMS:
            raise InvalidParameter(f"unknown algorithm {alg!r}")
        alg = ALGORITHMS[alg]
    if not j < j2:
        raise InvalidParameter("need j < j2")
    if j != 0:
        raise BudgetExceeded("only the depth-0 instance can be recorded with a single mirrored peer")
    small = build_family_instance(c, j, gk)
    big = build_family_instance(c, j2, gk)

    rec0 = SubjectRecorder(small.subject)
    tr0 = run_compressed(small.instance, alg, horizon=horizon, observer=rec0)
    k = tr0.declare_round.get(small.subject)
    if k is None:
        return FoolingReport(None, None, None, None, True, "subject did not declare within the horizon")

    inst1 = big.instance
    byz = inst1.byzantine
    labels = [inst1.agents[i].label for i in byz]
    plan, length = plan_escorts(rec0.log.items, big.byz_per_side, labels)
    if length != k + 1:
        raise MirrorInfeasible("escort plan length differs from the record")
    slot = {a: s for s, a in enumerate(byz)}

    def mirror(index: int, spec: AgentSpec, inst: Instance) -> Behavior:
        return PlanScript(spec.label, plan, length, slot[index])

    rec1 = SubjectRecorder(big.subject)
    tr1 = run_compressed(inst1, alg, adversary=mirror, horizon=k, observer=rec1)
    d0 = record_digest(rec0.log.items, k + 1)
    d1 = record_digest(rec1.log.items, k + 1) if rec1.log.length >= k + 1 else "short"
    identical = d0 == d1
    k1 = tr1.declare_round.get(big.subject)
    declared_at_k = k1 == k
    node = tr1.declare_node.get(big.subject)
    team = [a for a in inst1.good if a != big.subject]
    premature = declared_at_k and any(
        tr1.declare_round.get(a) != k or tr1.declare_node.get(a) != node for a in team)
    n_prev = family_sizes(c, j)[-1][0]
    return FoolingReport(
        identical, declared_at_k, premature, k, False,
        digests=(d0, d1),
        counting_premise={"k": k, "bound": n_prev**c, "holds": k <= n_prev**c},
        stats={
            "ring_nodes": inst1.graph.node_count,
            "byzantine": len(byz),
            "team": len(team),
            "record_items": len(rec0.log.items),
            "plan_items": len(plan),
            "simulated_rounds": [tr0.simulated_rounds, tr1.simulated_rounds],
            "cycle_jumps": [tr0.cycle_jumps, tr1.cycle_jumps],
        },
    )


# ------------------------------------------------------------ knowledge size
def knowledge_size(n: int) -> int:
    """Smallest g >= 0 with 2^(2^g) >= n, i.e. ceil(log2 log2 n) for n >= 2."""
    if n < 1:
        raise InvalidParameter("n must be positive")
    g = 0
    while 2 ** (2**g) < n:
        g += 1
    return g


def knowledge_size_table(n_values: Sequence[int]) -> list[dict[str, int]]:
    rows = []
    for n in n_values:
        g = knowledge_size(n)
        rows.append({"n": n, "gk": g, "bits": max(1, g.bit_length())})
    return rows
