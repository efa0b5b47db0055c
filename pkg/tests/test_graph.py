from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from byzgather.errors import CorpusTooLarge, InvalidParameter
from byzgather.graph import PortGraph, corpus, make_oriented_ring, make_path


def _is_consistent(g: PortGraph) -> bool:
    return all(g.follow(*g.follow(v, p)) == (v, p) for v in range(g.node_count) for p in range(g.degree(v)))


def test_oriented_ring_ports():
    g = make_oriented_ring(5)
    for v in range(5):
        assert g.follow(v, 0) == ((v + 1) % 5, 1)
        assert g.follow(v, 1) == ((v - 1) % 5, 0)


def test_path_degrees():
    g = make_path(4)
    assert [g.degree(v) for v in range(4)] == [1, 2, 2, 1]
    assert _is_consistent(g)


def test_invalid_graphs_rejected():
    with pytest.raises(InvalidParameter):
        PortGraph((((1, 0),), ((0, 1),)))  # asymmetric entry port
    with pytest.raises(InvalidParameter):
        PortGraph(((), ()))  # disconnected
    with pytest.raises(InvalidParameter):
        make_oriented_ring(2)


def test_corpus_counts_and_consistency():
    graphs = corpus(4)
    sizes = [g.node_count for g in graphs]
    assert sizes == sorted(sizes) and set(sizes) == {2, 3, 4}
    assert len({g.digest for g in graphs}) == len(graphs)
    assert all(_is_consistent(g) for g in graphs)
    assert corpus(4) == graphs


def test_corpus_bound():
    with pytest.raises(CorpusTooLarge):
        corpus(7)


def test_json_round_trip():
    for g in corpus(4):
        assert PortGraph.from_json(g.to_json()) == g


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=3, max_value=200))
def test_ring_is_consistent(n):
    assert _is_consistent(make_oriented_ring(n))
