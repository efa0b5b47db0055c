from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from byzgather.engine import DECLARE, WAIT, Announcement, Behavior, decompress, run, run_compressed
from byzgather.errors import CompressionContractViolation, ProtocolFault
from byzgather.gather import gather_factory
from byzgather.graph import make_oriented_ring, make_path
from byzgather.instance import AgentSpec, Instance
from byzgather.scenarios import engines_agree, random_small_scenario


class Walker(Behavior):
    """Moves through port 0 for ``steps`` rounds, then declares."""

    def __init__(self, label: int, steps: int):
        self.label, self.steps, self.t0 = label, steps, None

    def wake(self, t):
        self.t0 = t

    def announce(self, t):
        return Announcement(self.label, "Walk")

    def act(self, obs):
        return 0 if obs.round - self.t0 < self.steps else DECLARE


class Liar(Behavior):
    """Promises a long quiet stretch but moves anyway."""

    def __init__(self, label):
        self.label = label

    def announce(self, t):
        return Announcement(self.label, "Liar")

    def act(self, obs):
        return 0 if obs.round == 3 else WAIT

    def quiet_until(self, t):
        return t + 10


class Sleeper(Behavior):
    def __init__(self, label, until):
        self.label, self.until = label, until

    def announce(self, t):
        return Announcement(self.label, "Sleep")

    def act(self, obs):
        return DECLARE if obs.round >= self.until else WAIT

    def quiet_until(self, t):
        return max(t + 1, self.until)

    def skip(self, first, last, obs):
        pass


def _inst(graph, agents, wake):
    return Instance(graph, tuple(agents), wake, gk=1, size_bound=max(4, graph.node_count))


def test_walker_positions_and_declare():
    inst = _inst(make_oriented_ring(5), [AgentSpec(1, 0)], {0: 2})
    tr = run(inst, lambda s, i: Walker(s.label, 7), horizon=100, keep_records=True)
    assert tr.declare_round == {0: 9}
    assert tr.declare_node == {0: 7 % 5}
    assert tr.records[0].startswith("R|2|0|0|Walk|M0|")


def test_visit_wakes_dormant_agent():
    # Agent 1 has no wake round; agent 0 walks onto its node at round 2.
    inst = _inst(make_oriented_ring(4), [AgentSpec(1, 0), AgentSpec(2, 2)], {0: 0})
    tr = run(inst, lambda s, i: Walker(s.label, 5), horizon=100)
    assert tr.declare_round == {0: 5, 1: 7}


def test_byzantine_declare_is_ignored_and_awake_from_zero():
    inst = _inst(make_path(2), [AgentSpec(1, 0), AgentSpec(9, 1, True, {"kind": "inert"})], {0: 4})
    tr = run(inst, lambda s, i: Sleeper(s.label, 6), adversary=lambda i, s, inst: Sleeper(s.label, 0),
             horizon=50, keep_records=True)
    assert tr.declare_round == {0: 6}
    assert tr.records[0].startswith("R|0|1|1|Sleep|W|")


def test_illegal_port_is_a_fault():
    class Bad(Walker):
        def act(self, obs):
            return 5
    inst = _inst(make_path(2), [AgentSpec(1, 0)], {0: 0})
    with pytest.raises(ProtocolFault):
        run(inst, lambda s, i: Bad(1, 0))


def test_audit_catches_broken_quiet_promise():
    inst = _inst(make_path(2), [AgentSpec(1, 0)], {0: 0})
    with pytest.raises(CompressionContractViolation):
        run(inst, lambda s, i: Liar(s.label), horizon=20)


def test_compressed_skips_quiet_stretches():
    inst = _inst(make_path(2), [AgentSpec(1, 0), AgentSpec(2, 1)], {0: 0, 1: 0})
    fac = lambda s, i: Sleeper(s.label, 10**15 + s.label)  # noqa: E731
    tr = run_compressed(inst, fac, keep_records=True)
    assert tr.declare_round == {0: 10**15 + 1, 1: 10**15 + 2}
    assert tr.simulated_rounds < 10
    short = run(inst, lambda s, i: Sleeper(s.label, 50 + s.label), horizon=100, keep_records=True)
    fast = run_compressed(inst, lambda s, i: Sleeper(s.label, 50 + s.label), keep_records=True)
    assert decompress(fast.records) == short.records
    assert fast.digest != short.digest


def test_horizon_stops_run():
    inst = _inst(make_path(2), [AgentSpec(1, 0)], {0: 0})
    tr = run_compressed(inst, lambda s, i: Sleeper(s.label, 10**9), horizon=1000)
    assert tr.horizon_exhausted and tr.declare_round == {}
    with pytest.raises(ValueError):
        run(inst, lambda s, i: Sleeper(s.label, 1), horizon=-1)


def test_gather_two_agents_small_ring_summary():
    inst = _inst(make_oriented_ring(4), [AgentSpec(1, 0), AgentSpec(2, 2)], {0: 0, 1: 3})
    tr = run_compressed(inst, gather_factory)
    s = tr.summary(inst)
    assert s["gathered"] and s["final_round"] == 118984338022


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_engines_agree_on_random_scenarios(seed):
    inst, factory, _ = random_small_scenario(seed)
    ok, why = engines_agree(inst, factory, 1500)
    assert ok, why
