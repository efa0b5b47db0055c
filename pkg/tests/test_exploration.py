from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from byzgather.engine import Crowd, Observation
from byzgather.errors import InvalidParameter
from byzgather.exploration import (ImperfectMap, covers, explo_step, map_index, map_is_useful, provide_sequence,
                                   search_sequence, verify_cover, walk)
from byzgather.graph import corpus, make_oriented_ring
from byzgather.routine import Trail


def test_exit_rule():
    assert explo_step(0, 3, 5) == 2
    assert explo_step(2, 3, 1) == 0
    with pytest.raises(InvalidParameter):
        explo_step(3, 3, 0)


@pytest.mark.parametrize("bound", [2, 3, 4, 5, 6])
def test_provided_sequences_cover_corpus(bound):
    seq = provide_sequence(bound)
    assert verify_cover(seq, corpus(bound)) == []


def test_frozen_lengths():
    # X_n for the bounds used by the simulations.
    assert provide_sequence(4).X == 8
    assert provide_sequence(6).X == 38


def test_search_is_deterministic():
    graphs = corpus(3)
    assert search_sequence(graphs) == search_sequence(graphs)


def test_walk_on_ring():
    # Entering through port 1 and adding 1 leaves through port 0 again.
    assert walk((0, 1, 1), make_oriented_ring(4), 0) == [0, 1, 2, 3]
    assert walk((0, 0, 0), make_oriented_ring(4), 0) == [0, 1, 0, 1]
    assert covers((0, 1, 1), make_oriented_ring(4), 2)
    assert not covers((0, 0, 0), make_oriented_ring(4), 2)


def _trail_round_trip(g, start, terms):
    t = Trail(terms)
    v = start
    for _ in terms:
        p = t.forward(g.degree(v))
        v, entry = g.follow(v, p)
        t.observe(Observation(0, g.degree(v), entry, Crowd(())))
    while t.depth:
        v, entry = g.follow(v, t.back())
    return v


@settings(max_examples=20, deadline=None)
@given(st.data())
def test_trail_backtracks_to_start(data):
    graphs = corpus(5)
    g = graphs[data.draw(st.integers(0, len(graphs) - 1))]
    start = data.draw(st.integers(0, g.node_count - 1))
    terms = data.draw(st.lists(st.integers(0, 11), max_size=40))
    assert _trail_round_trip(g, start, terms) == start


def test_imperfect_map_index():
    m = ImperfectMap.empty(4)
    assert not map_is_useful(m)
    with pytest.raises(InvalidParameter):
        map_index(m)
    m.record(3, [7, 5])
    m.record(2, [9])
    m.record(4, [5])
    assert map_index(m) == 3
    m.remove(3, 5)
    assert map_index(m) == 4
    assert m[3] == [7]
