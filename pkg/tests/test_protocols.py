from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from byzgather.engine import run_compressed
from byzgather.exploration import provide_sequence
from byzgather.gather import group_factory, merge_factory
from byzgather.graph import make_path
from byzgather.instance import AgentSpec, Instance
from byzgather.scenarios import CellSpec, build_cell, judge, run_cell, run_cell_trace
from byzgather.timing import GroupTiming, merge_time_bound

SCRIPTS = ["inert", "random_walk", "label_forger", "state_mimic", "optimist_spoofer"]


def test_group_two_agents_on_an_edge():
    inst = Instance(make_path(2), (AgentSpec(1, 0), AgentSpec(2, 1)), {0: 0, 1: 0}, gk=0, size_bound=2)
    tr = run_compressed(inst, group_factory(1, 2, {1: 0, 2: 1}))
    rounds = set(tr.declare_round.values())
    assert len(rounds) == 1 and len(set(tr.declare_node.values())) == 1
    X = provide_sequence(2).X
    assert rounds.pop() <= GroupTiming(1, 2, X).group_time_bound


def test_merge_co_located_pair_finishes_together():
    inst = Instance(make_path(2), (AgentSpec(3, 1), AgentSpec(5, 1)), {0: 0, 1: 0}, gk=0, size_bound=2)
    tr = run_compressed(inst, merge_factory(1, 2))
    assert len(set(tr.declare_round.values())) == 1
    assert max(tr.declare_round.values()) < merge_time_bound(1, 2)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 1), st.sampled_from(SCRIPTS), st.integers(0, 3), st.booleans())
def test_merge_guarantee(seed, f, script, extra, long_t):
    size = 2 + seed % 3
    cell = CellSpec("merge", {"kind": "corpus", "size": size, "index": seed}, f, 4 * f + 2 + extra,
                    {"kind": "spread"}, script, seed, T=None if long_t else 1, n=4, labels="random")
    row = run_cell(cell)
    assert row["passed"], row


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(SCRIPTS), st.booleans())
def test_group_guarantee(seed, script, spread):
    f = seed % 2
    x = 2 + f
    cell = CellSpec("group", {"kind": "corpus", "size": 2 + seed % 3, "index": seed}, f, "auto",
                    {"kind": "spread" if spread else "simultaneous"}, script, seed, n=4, x=x, labels="random")
    row = run_cell(cell)
    assert row["passed"], row


def test_judge_reports_gather_bound():
    built = build_cell(CellSpec("gather", {"kind": "ring", "size": 4}, 0))
    verdict = judge(built, run_cell_trace(built))
    assert verdict["passed"] and verdict["premature"] == 0
    assert verdict["exit_round"] <= verdict["bound"]
