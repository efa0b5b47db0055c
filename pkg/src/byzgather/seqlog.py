"""Run-length encoded per-round sequences with repeat blocks.

Used for the action log replayed by the grouping routine and for the
observation records compared by the fooling harness. A log is a list of items:

* ``Run(value, count)``: ``count`` consecutive rounds with the same value;
* ``Rep(body, body_len, reps)``: ``reps`` copies of a tuple of items.

Repeat blocks let a log cover ~10^12 rounds with a handful of items.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Hashable, Iterator, Sequence, Union


@dataclass(frozen=True)
class Run:
    value: Hashable
    count: int


@dataclass(frozen=True)
class Rep:
    body: tuple["Item", ...]
    body_len: int
    reps: int


Item = Union[Run, Rep]


def item_len(item: Item) -> int:
    return item.count if isinstance(item, Run) else item.body_len * item.reps


def items_len(items: Sequence[Item]) -> int:
    return sum(item_len(i) for i in items)


class SeqLog:
    """Append-only hierarchical run-length log."""

    __slots__ = ("items", "length")

    def __init__(self) -> None:
        self.items: list[Item] = []
        self.length = 0

    def append(self, value: Hashable, count: int = 1) -> None:
        if count <= 0:
            return
        last = self.items[-1] if self.items else None
        if isinstance(last, Run) and last.value == value:
            self.items[-1] = Run(value, last.count + count)
        else:
            self.items.append(Run(value, count))
        self.length += count

    def tail(self, n: int) -> tuple[Item, ...]:
        """Items covering exactly the last ``n`` rounds."""
        if n > self.length:
            raise ValueError("tail longer than the log")
        return _tail(self.items, n)

    def repeat_tail(self, period: int, m: int) -> None:
        """Append ``m`` further copies of the last ``period`` rounds."""
        if m <= 0:
            return
        body = self.tail(period)
        last = self.items[-1] if self.items else None
        if isinstance(last, Rep) and last.body == body:
            self.items[-1] = Rep(body, period, last.reps + m)
        else:
            self.items.append(Rep(body, period, m))
        self.length += period * m

    def runs(self, limit: int | None = None) -> Iterator[tuple[Hashable, int]]:
        return iter_runs(self.items, limit)

    def cursor(self, limit: int | None = None) -> "Cursor":
        return Cursor(self.items, self.length if limit is None else limit)


def _tail(items: Sequence[Item], n: int) -> tuple[Item, ...]:
    out: list[Item] = []
    k = len(items) - 1
    while n > 0:
        it = items[k]
        ln = item_len(it)
        if ln <= n:
            out.append(it)
            n -= ln
        elif isinstance(it, Run):
            out.append(Run(it.value, n))
            n = 0
        else:
            full, rest = divmod(n, it.body_len)
            if full:
                out.append(Rep(it.body, it.body_len, full))
            if rest:
                out.extend(reversed(_tail(it.body, rest)))
            n = 0
        k -= 1
    out.reverse()
    return tuple(out)


def iter_runs(items: Sequence[Item], limit: int | None = None) -> Iterator[tuple[Hashable, int]]:
    """Flatten into (value, count) runs, stopping after ``limit`` rounds."""
    remaining = [limit]

    def walk(seq: Sequence[Item]) -> Iterator[tuple[Hashable, int]]:
        for it in seq:
            if remaining[0] is not None and remaining[0] <= 0:
                return
            if isinstance(it, Run):
                c = it.count if remaining[0] is None else min(it.count, remaining[0])
                if remaining[0] is not None:
                    remaining[0] -= c
                yield it.value, c
            else:
                for _ in range(it.reps):
                    if remaining[0] is not None and remaining[0] <= 0:
                        return
                    yield from walk(it.body)

    return walk(items)


def merged_runs(runs: Iterator[tuple[Hashable, int]]) -> Iterator[tuple[Hashable, int]]:
    """Coalesce adjacent equal values so that equal sequences give equal streams."""
    cur, cnt = None, 0
    started = False
    for v, c in runs:
        if started and v == cur:
            cnt += c
        else:
            if started:
                yield cur, cnt
            cur, cnt, started = v, c, True
    if started:
        yield cur, cnt


class Cursor:
    """Position inside a log prefix; large moves cost O(depth * log items)."""

    __slots__ = ("items", "limit", "pos", "_stack", "_prefix")

    def __init__(self, items: Sequence[Item], limit: int):
        self.items = tuple(items)
        self.limit = limit
        self.pos = 0
        self._prefix: dict[int, tuple[list[int], Sequence[Item]]] = {}
        # Frames: [items, index, offset in rounds inside items[index]]
        self._stack: list[list] = []
        self._descend(self.items, 0)

    def _sums(self, items: Sequence[Item]) -> list[int]:
        entry = self._prefix.get(id(items))
        if entry is None or entry[1] is not items:
            acc = [0]
            for it in items:
                acc.append(acc[-1] + item_len(it))
            entry = (acc, items)
            self._prefix[id(items)] = entry
        return entry[0]

    def _descend(self, items: Sequence[Item], offset: int) -> None:
        while True:
            sums = self._sums(items)
            if offset >= sums[-1]:
                self._stack.append([items, len(items), 0])
                return
            idx = bisect_right(sums, offset) - 1
            off = offset - sums[idx]
            self._stack.append([items, idx, off])
            it = items[idx]
            if isinstance(it, Run):
                return
            items, offset = it.body, off % it.body_len

    @property
    def done(self) -> bool:
        return self.pos >= self.limit

    def current(self) -> tuple[Hashable, int]:
        """(value, rounds left in this run, clipped at the limit)."""
        items, idx, off = self._stack[-1]
        it = items[idx]
        assert isinstance(it, Run)
        return it.value, min(it.count - off, self.limit - self.pos)

    def advance(self, k: int) -> None:
        if k <= 0:
            return
        if self.pos + k > self.limit:
            raise ValueError("advance past the replay limit")
        self.pos += k
        top = self._stack[-1]
        it = top[0][top[1]] if top[1] < len(top[0]) else None
        if isinstance(it, Run) and top[2] + k < it.count:
            top[2] += k
            return
        self._stack.clear()
        self._descend(self.items, self.pos)

    def repeat_frame(self, period: int | None) -> tuple[Rep, int, int] | None:
        """Outermost enclosing repeat with body length ``period`` (any when None).

        Returns (node, offset in body, full reps left).
        """
        for items, idx, off in self._stack:
            it = items[idx] if idx < len(items) else None
            if isinstance(it, Rep) and (period is None or it.body_len == period):
                rep_index, inner = divmod(off, it.body_len)
                return it, inner, it.reps - rep_index - 1
        return None
