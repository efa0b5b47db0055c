"""Port-numbered anonymous graphs and the verification corpus.

Node ids exist only inside the simulator. Agent code receives a degree and an
entry port, never a :class:`PortGraph`.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import random
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import networkx as nx

from .errors import CorpusTooLarge, InvalidParameter

CORPUS_MAX_NODES = 6
# Port numberings sampled per graph once full enumeration becomes too large.
SAMPLES_PER_GRAPH = 3
CORPUS_SEED = 20240601


@dataclass(frozen=True)
class PortGraph:
    """``adjacency[v][i] == (u, j)``: port i of v leads to u, arriving through port j."""

    adjacency: tuple[tuple[tuple[int, int], ...], ...]

    def __post_init__(self) -> None:
        problems = self.problems()
        if problems:
            raise InvalidParameter("; ".join(problems))

    @property
    def node_count(self) -> int:
        return len(self.adjacency)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def follow(self, v: int, port: int) -> tuple[int, int]:
        """Traverse port ``port`` of ``v``; returns (neighbour, entry port)."""
        return self.adjacency[v][port]

    def problems(self) -> list[str]:
        out: list[str] = []
        n = len(self.adjacency)
        if n == 0:
            return ["empty graph"]
        for v, ports in enumerate(self.adjacency):
            seen = set()
            for i, (u, j) in enumerate(ports):
                if not 0 <= u < n:
                    out.append(f"node {v} port {i} leads outside the graph")
                    continue
                if u == v:
                    out.append(f"self-loop at node {v}")
                if u in seen:
                    out.append(f"parallel edges between {v} and {u}")
                seen.add(u)
                back = self.adjacency[u]
                if not 0 <= j < len(back) or back[j] != (v, i):
                    out.append(f"port {i} of node {v} is not reciprocated")
        if not out and n > 1:
            reached = {0}
            stack = [0]
            while stack:
                v = stack.pop()
                for u, _ in self.adjacency[v]:
                    if u not in reached:
                        reached.add(u)
                        stack.append(u)
            if len(reached) != n:
                out.append("graph is not connected")
        return out

    def to_json(self) -> list[list[list[int]]]:
        return [[[u, j] for u, j in ports] for ports in self.adjacency]

    @classmethod
    def from_json(cls, data: Sequence[Sequence[Sequence[int]]]) -> "PortGraph":
        return cls(tuple(tuple((int(u), int(j)) for u, j in ports) for ports in data))

    @cached_property
    def digest(self) -> str:
        raw = json.dumps(self.to_json(), separators=(",", ":")).encode()
        return hashlib.sha256(raw).hexdigest()[:16]


def from_neighbour_orders(orders: Sequence[Sequence[int]]) -> PortGraph:
    """Build a graph where ``orders[v]`` lists v's neighbours in port order."""
    adjacency = []
    for v, nbrs in enumerate(orders):
        adjacency.append(tuple((u, list(orders[u]).index(v)) for u in nbrs))
    return PortGraph(tuple(adjacency))


def make_oriented_ring(size: int) -> PortGraph:
    """Ring whose port 0 always points clockwise (to v+1) and port 1 anticlockwise."""
    if size < 3:
        raise InvalidParameter("a ring needs at least 3 nodes")
    return PortGraph(tuple(((((v + 1) % size), 1), (((v - 1) % size), 0)) for v in range(size)))


def make_path(size: int) -> PortGraph:
    if size < 2:
        raise InvalidParameter("a path needs at least 2 nodes")
    orders = [[u for u in (v - 1, v + 1) if 0 <= u < size] for v in range(size)]
    return from_neighbour_orders(orders)


def _connected_atlas(size: int) -> list[nx.Graph]:
    return [g for g in nx.graph_atlas_g() if g.number_of_nodes() == size and nx.is_connected(g)]


def _all_numberings(g: nx.Graph) -> Iterator[PortGraph]:
    nodes = sorted(g.nodes())
    per_node = [list(itertools.permutations(sorted(g.neighbors(v)))) for v in nodes]
    for choice in itertools.product(*per_node):
        yield from_neighbour_orders(choice)


def _sampled_numberings(g: nx.Graph, rng: random.Random, k: int) -> list[PortGraph]:
    nodes = sorted(g.nodes())
    out = [from_neighbour_orders([sorted(g.neighbors(v)) for v in nodes])]
    for _ in range(k - 1):
        orders = []
        for v in nodes:
            nbrs = sorted(g.neighbors(v))
            rng.shuffle(nbrs)
            orders.append(nbrs)
        out.append(from_neighbour_orders(orders))
    return out


def enumerate_graphs(max_nodes: int, corpus_bound: int = CORPUS_MAX_NODES) -> Iterator[PortGraph]:
    """Deterministic corpus of connected port-numbered graphs with 2..max_nodes nodes.

    Sizes up to 3 come with every port numbering. Larger sizes contribute the
    sorted-neighbour numbering plus seeded random numberings, and every ring is
    also included with its oriented numbering.
    """
    if max_nodes < 1:
        raise InvalidParameter("max_nodes must be positive")
    if max_nodes > corpus_bound:
        raise CorpusTooLarge(f"max_nodes={max_nodes} exceeds the corpus bound {corpus_bound}")
    rng = random.Random(CORPUS_SEED)
    for size in range(2, max_nodes + 1):
        seen: set[str] = set()
        for g in _connected_atlas(size):
            graphs = list(_all_numberings(g)) if size <= 3 else _sampled_numberings(g, rng, SAMPLES_PER_GRAPH)
            for pg in graphs:
                if pg.digest not in seen:
                    seen.add(pg.digest)
                    yield pg
        if size >= 3:
            ring = make_oriented_ring(size)
            if ring.digest not in seen:
                seen.add(ring.digest)
                yield ring


def corpus(max_nodes: int) -> tuple[PortGraph, ...]:
    return tuple(enumerate_graphs(max_nodes))


def corpus_digest(graphs: Sequence[PortGraph]) -> str:
    h = hashlib.sha256()
    for g in graphs:
        h.update(g.digest.encode())
    return h.hexdigest()[:16]
