from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from byzgather.errors import InvalidParameter, ValidationError
from byzgather.graph import make_oriented_ring
from byzgather.instance import AgentSpec, Instance, check_instance, validate_instance, wake_policy

RING = make_oriented_ring(4)


def test_valid_instance_has_empty_report():
    inst = Instance(RING, (AgentSpec(1, 0), AgentSpec(2, 2), AgentSpec(7, 1, True, {"kind": "inert"})), {0: 0, 1: 5})
    assert validate_instance(inst) == []
    check_instance(inst)


@pytest.mark.parametrize("agents,wake,problem", [
    ((AgentSpec(1, 0), AgentSpec(1, 2)), {0: 0}, "label-collision"),
    ((AgentSpec(0, 0),), {0: 0}, "non-positive-label"),
    ((AgentSpec(1, 4),), {0: 0}, "start-outside-graph"),
    ((AgentSpec(1, 0), AgentSpec(2, 1, True)), {0: 0}, "byzantine-without-script"),
    ((AgentSpec(1, 0),), {3: 0}, "wake-for-unknown-agent"),
    ((AgentSpec(1, 0),), {0: -1}, "negative-wake-round"),
    ((AgentSpec(1, 0),), {}, "no-initial-wake"),
    ((), {}, "no-agents"),
])
def test_each_violation_is_reported(agents, wake, problem):
    inst = Instance(RING, agents, wake)
    report = validate_instance(inst)
    assert any(p.startswith(problem) for p in report), report
    with pytest.raises(ValidationError):
        check_instance(inst)


def test_size_bound_and_gk():
    inst = Instance(RING, (AgentSpec(1, 0),), {0: 0}, gk=-1, size_bound=3)
    assert {"negative-gk", "size-bound-below-graph-size"} <= set(validate_instance(inst))


def test_co_located_later_wake_is_advisory():
    inst = Instance(RING, (AgentSpec(1, 0), AgentSpec(2, 0)), {0: 0, 1: 9})
    assert any(p.startswith("co-located-wake-later") for p in validate_instance(inst))
    check_instance(inst)


def test_wake_policies():
    assert wake_policy("simultaneous", [0, 1]) == {0: 0, 1: 0}
    assert wake_policy("staggered", [0, 1, 2], step=2) == {0: 0, 1: 2, 2: 4}
    assert wake_policy("offsets", [0, 1], [3, 7]) == {0: 3, 1: 7}
    assert wake_policy("latest", [4, 5]) == {4: 0}
    with pytest.raises(InvalidParameter):
        wake_policy("offsets", [0, 1], [3])
    with pytest.raises(InvalidParameter):
        wake_policy("sometimes", [0])


def test_schema_version_checked():
    data = Instance(RING, (AgentSpec(1, 0),), {0: 0}).to_json()
    data["schema_version"] = 2
    with pytest.raises(InvalidParameter):
        Instance.from_json(data)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 10**6), st.integers(0, 3), st.booleans()), min_size=1, max_size=6,
                unique_by=lambda a: a[0]),
       st.integers(0, 5))
def test_json_round_trip(specs, gk):
    agents = tuple(AgentSpec(l, v, b, {"kind": "inert"} if b else None) for l, v, b in specs)
    inst = Instance(RING, agents, {i: i for i in range(len(agents))}, gk=gk, size_bound=8)
    again = Instance.loads(inst.dumps())
    assert again == inst or again.to_json() == inst.to_json()
    assert again.dumps() == inst.dumps()


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.one_of(st.none(), st.integers(0, 5))), min_size=1, max_size=12))
def test_co_located_check_matches_pairwise_definition(agents):
    specs = tuple(AgentSpec(i + 1, v) for i, (v, _) in enumerate(agents))
    wake = {i: r for i, (_, r) in enumerate(agents) if r is not None}
    inst = Instance(RING, specs, wake)
    late = {int(p.split()[2]) for p in validate_instance(inst) if p.startswith("co-located-wake-later")}
    pairwise = {j for j in wake for i in wake
                if i != j and specs[i].start_node == specs[j].start_node and wake[j] > wake[i]}
    assert late == pairwise
