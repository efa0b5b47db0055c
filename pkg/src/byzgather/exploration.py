"""Exploration sequences, the exit-port rule and imperfect maps.

A sequence x_1..x_k is applied from a start node with entry port 0; after
entering a node of degree d through port p the agent leaves through
(p + x_i) mod d. Sequences are built by a deterministic greedy search and
verified by replay over the graph corpus. X_n is the sequence length plus one.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidParameter, NoSequenceFound
from .graph import CORPUS_MAX_NODES, PortGraph, corpus, corpus_digest

SEARCH_BUDGET = 5000


def explo_step(entry_port: int, degree: int, term: int) -> int:
    """Exit port (entry_port + term) mod degree."""
    assert degree > 0, "isolated node"
    if not 0 <= entry_port < degree:
        raise InvalidParameter(f"entry port {entry_port} outside 0..{degree - 1}")
    return (entry_port + term) % degree


@dataclass(frozen=True)
class ExploSeq:
    bound: int
    terms: tuple[int, ...]
    provenance: str = "searched"

    @property
    def X(self) -> int:
        return len(self.terms) + 1


def walk(terms: Sequence[int], graph: PortGraph, start: int) -> list[int]:
    """Nodes visited (with repetition) when applying ``terms`` from ``start``."""
    v, p = start, 0
    out = [v]
    for x in terms:
        v, p = graph.follow(v, explo_step(p, graph.degree(v), x))
        out.append(v)
    return out


def covers(terms: Sequence[int], graph: PortGraph, start: int) -> bool:
    return len(set(walk(terms, graph, start))) == graph.node_count


def verify_cover(seq: ExploSeq, graphs: Iterable[PortGraph]) -> list[tuple[str, int]]:
    """(graph digest, start) pairs the sequence fails to cover; empty when it is valid."""
    failures = []
    for g in graphs:
        if g.node_count > seq.bound:
            continue
        for s in range(g.node_count):
            if not covers(seq.terms, g, s):
                failures.append((g.digest, s))
    return failures


class _Flat:
    """All corpus graphs flattened into one node table for vectorised search."""

    def __init__(self, graphs: Sequence[PortGraph]):
        self.maxdeg = max(max(g.degree(v) for v in range(g.node_count)) for g in graphs)
        base = []
        total = 0
        for g in graphs:
            base.append(total)
            total += g.node_count
        self.deg = np.zeros(total, dtype=np.int64)
        self.nxt = np.zeros((total, self.maxdeg), dtype=np.int64)
        self.ent = np.zeros((total, self.maxdeg), dtype=np.int64)
        self.local = np.zeros(total, dtype=np.int64)
        self.size = np.zeros(total, dtype=np.int64)
        # dist_mask[v, m]: distance from v to the closest node of its graph outside mask m.
        self.dist_mask = np.zeros((total, 1 << max(g.node_count for g in graphs)), dtype=np.int64)
        starts = []
        for g, b in zip(graphs, base):
            n = g.node_count
            dist = _all_pairs(g)
            for v in range(n):
                gid = b + v
                self.deg[gid] = g.degree(v)
                self.local[gid] = v
                self.size[gid] = n
                for i, (u, j) in enumerate(g.adjacency[v]):
                    self.nxt[gid, i] = b + u
                    self.ent[gid, i] = j
                for m in range(1 << n):
                    outside = [dist[v][u] for u in range(n) if not (m >> u) & 1]
                    self.dist_mask[gid, m] = min(outside) if outside else 0
                starts.append(gid)
        self.starts = np.array(starts, dtype=np.int64)


def _all_pairs(g: PortGraph) -> list[list[int]]:
    n = g.node_count
    out = []
    for s in range(n):
        d = [-1] * n
        d[s] = 0
        frontier = [s]
        while frontier:
            nf = []
            for v in frontier:
                for u, _ in g.adjacency[v]:
                    if d[u] < 0:
                        d[u] = d[v] + 1
                        nf.append(u)
            frontier = nf
        out.append(d)
    return out


def search_sequence(graphs: Sequence[PortGraph], budget: int = SEARCH_BUDGET) -> tuple[int, ...]:
    """Greedy cover search.

    Each term maximises the number of instances reaching a new node, then
    minimises the summed distance to unvisited nodes. When no term makes
    progress, the search follows a shortest path of the first unfinished
    instance until that instance reaches a new node, which bounds the length.
    """
    if all(g.node_count == 1 for g in graphs):
        return ()
    flat = _Flat(graphs)
    modulus = math.lcm(*range(1, flat.maxdeg + 1))
    node = flat.starts.copy()
    port = np.zeros_like(node)
    mask = (1 << flat.local[node]).astype(np.int64)
    full = (1 << flat.size[node]) - 1
    terms: list[int] = []
    target = -1
    candidates = np.arange(modulus, dtype=np.int64)
    while True:
        live = mask != full
        if not live.any():
            return tuple(terms)
        if len(terms) >= budget:
            raise NoSequenceFound(f"no covering sequence within {budget} terms")
        idx = np.nonzero(live)[0]
        cur_pot = int(flat.dist_mask[node[idx], mask[idx]].sum())
        if target >= 0 and mask[target] == full:
            target = -1
        if target < 0:
            exits = (port[idx][None, :] + candidates[:, None]) % flat.deg[node[idx]][None, :]
            nn = flat.nxt[node[idx][None, :], exits]
            nm = mask[idx][None, :] | (1 << flat.local[nn])
            gain = (nm != mask[idx][None, :]).sum(axis=1)
            pot = flat.dist_mask[nn, nm].sum(axis=1)
            order = np.lexsort((candidates, pot, -gain))
            best = int(order[0])
            if gain[best] > 0 or pot[best] < cur_pot:
                x = int(candidates[best])
            else:
                target = int(idx[0])
        if target >= 0:
            x = _toward_unvisited(flat, int(node[target]), int(port[target]), int(mask[target]))
        exits = (port + x) % flat.deg[node]
        new_node = flat.nxt[node, exits]
        port = flat.ent[node, exits]
        node = new_node
        mask = mask | (1 << flat.local[node])
        terms.append(x)


def _toward_unvisited(flat: _Flat, v: int, p: int, m: int) -> int:
    d = int(flat.deg[v])
    want = int(flat.dist_mask[v, m]) - 1
    for q in range(d):
        u = int(flat.nxt[v, q])
        if int(flat.dist_mask[u, m | (1 << int(flat.local[u]))]) <= max(want, 0) or not (m >> int(flat.local[u])) & 1:
            return (q - p) % d
    raise AssertionError("no neighbour closer to an unvisited node")


def _cache_dir() -> Path:
    return Path(os.environ.get("BYZGATHER_CACHE_DIR", Path.home() / ".cache" / "byzgather"))


def corpus_for_bound(bound: int) -> tuple[PortGraph, ...]:
    return corpus(min(bound, CORPUS_MAX_NODES))


@lru_cache(maxsize=None)
def provide_sequence(bound: int) -> ExploSeq:
    """Covering sequence for every corpus graph with at most ``bound`` nodes.

    Bounds above the corpus limit reuse the largest corpus; coverage beyond it
    is not claimed. Results are cached on disk keyed by (bound, corpus digest).
    """
    if bound < 2:
        raise InvalidParameter("bound must be at least 2")
    graphs = corpus_for_bound(bound)
    key = f"seq-{min(bound, CORPUS_MAX_NODES)}-{corpus_digest(graphs)}.json"
    path = _cache_dir() / key
    if path.exists():
        terms = tuple(json.loads(path.read_text())["terms"])
    else:
        terms = search_sequence(graphs)
        _atomic_write(path, json.dumps({"bound": bound, "terms": list(terms)}))
    seq = ExploSeq(bound, terms)
    failures = verify_cover(seq, graphs)
    if failures:
        raise NoSequenceFound(f"cached sequence fails on {len(failures)} instances")
    return seq


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


class ImperfectMap:
    """Lists L_1..L_X of claimed labels, one per exploration step (1-based)."""

    __slots__ = ("lists",)

    def __init__(self, lists: Sequence[Iterable[int]]):
        self.lists = [sorted(set(labels)) for labels in lists]

    @classmethod
    def empty(cls, X: int) -> "ImperfectMap":
        return cls([[] for _ in range(X)])

    def __len__(self) -> int:
        return len(self.lists)

    def __getitem__(self, j: int) -> list[int]:
        return self.lists[j - 1]

    def record(self, j: int, labels: Iterable[int]) -> None:
        self.lists[j - 1] = sorted(set(self.lists[j - 1]).union(labels))

    def remove(self, j: int, label: int) -> None:
        self.lists[j - 1] = [x for x in self.lists[j - 1] if x != label]

    def key(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(lst) for lst in self.lists)

    def copy(self) -> "ImperfectMap":
        return ImperfectMap(self.lists)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ImperfectMap) and self.lists == other.lists

    def __repr__(self) -> str:
        return f"ImperfectMap({self.lists})"


def map_is_useful(m: ImperfectMap) -> bool:
    return any(m.lists)


def map_index(m: ImperfectMap) -> int:
    """Smallest j whose list holds the smallest label present anywhere in the map."""
    if not map_is_useful(m):
        raise InvalidParameter("map_index needs a useful map")
    smallest = min(lst[0] for lst in m.lists if lst)
    for j, lst in enumerate(m.lists, start=1):
        if lst and lst[0] == smallest:
            return j
    raise AssertionError("unreachable")
