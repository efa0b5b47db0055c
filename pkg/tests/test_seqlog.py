from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from byzgather.seqlog import Cursor, Rep, Run, SeqLog, items_len, iter_runs, merged_runs


def _expand(items):
    out = []
    for value, count in iter_runs(items):
        out.extend([value] * count)
    return out


def test_append_merges_runs():
    log = SeqLog()
    log.append("a", 2)
    log.append("a")
    log.append("b", 0)
    log.append("b")
    assert log.items == [Run("a", 3), Run("b", 1)]
    assert log.length == 4


def test_repeat_tail():
    log = SeqLog()
    for v in "xab":
        log.append(v)
    log.repeat_tail(2, 3)
    assert _expand(log.items) == list("xabababab")
    assert log.length == 9


def test_cursor_repeat_frame():
    items = [Run("x", 1), Rep((Run("a", 2), Run("b", 1)), 3, 4)]
    cur = Cursor(items, items_len(items))
    cur.advance(5)
    fr = cur.repeat_frame(3)
    assert fr is not None and fr[1] == 1 and fr[2] == 2
    assert cur.current() == ("a", 1)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abc"), st.integers(1, 5)), min_size=1, max_size=12),
       st.integers(1, 4), st.integers(1, 5), st.lists(st.integers(0, 7), max_size=10))
def test_cursor_matches_expansion(runs, period, m, steps):
    log = SeqLog()
    for v, c in runs:
        log.append(v, c)
    if period <= log.length:
        log.repeat_tail(period, m)
    flat = _expand(log.items)
    assert len(flat) == log.length
    cur = log.cursor()
    pos = 0
    for k in steps:
        k = min(k, log.length - pos)
        cur.advance(k)
        pos += k
        if cur.done:
            break
        value, left = cur.current()
        assert value == flat[pos]
        assert flat[pos:pos + left] == [value] * left


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("ab"), st.integers(1, 3)), max_size=10))
def test_merged_runs_are_maximal(runs):
    merged = list(merged_runs(iter(runs)))
    assert all(a[0] != b[0] for a, b in zip(merged, merged[1:]))
    assert sum(c for _, c in merged) == sum(c for _, c in runs)
