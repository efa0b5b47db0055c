"""Problem instances: graph, agents, wake schedule and global knowledge."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .errors import InvalidParameter, ValidationError
from .graph import PortGraph

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class AgentSpec:
    label: int
    start_node: int
    byzantine: bool = False
    script: Mapping[str, Any] | None = None

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"label": self.label, "start": self.start_node, "byzantine": self.byzantine}
        if self.script is not None:
            out["script"] = dict(self.script)
        return out

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "AgentSpec":
        script = data.get("script")
        return cls(int(data["label"]), int(data["start"]), bool(data.get("byzantine", False)),
                   dict(script) if script is not None else None)


@dataclass(frozen=True)
class Instance:
    graph: PortGraph
    agents: tuple[AgentSpec, ...]
    wake_schedule: Mapping[int, int] = field(default_factory=dict)
    gk: int = 1
    size_bound: int = 4

    @property
    def good(self) -> list[int]:
        return [i for i, a in enumerate(self.agents) if not a.byzantine]

    @property
    def byzantine(self) -> list[int]:
        return [i for i, a in enumerate(self.agents) if a.byzantine]

    def to_json(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "graph": self.graph.to_json(),
            "agents": [a.to_json() for a in self.agents],
            "wake": {str(k): v for k, v in sorted(self.wake_schedule.items())},
            "gk": self.gk,
            "size_bound": self.size_bound,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "Instance":
        if data.get("schema_version") != SCHEMA_VERSION:
            raise InvalidParameter(f"unsupported schema_version {data.get('schema_version')!r}")
        return cls(
            graph=PortGraph.from_json(data["graph"]),
            agents=tuple(AgentSpec.from_json(a) for a in data["agents"]),
            wake_schedule={int(k): int(v) for k, v in data.get("wake", {}).items()},
            gk=int(data.get("gk", 1)),
            size_bound=int(data.get("size_bound", 4)),
        )

    @classmethod
    def loads(cls, text: str) -> "Instance":
        return cls.from_json(json.loads(text))


def validate_instance(inst: Instance) -> list[str]:
    """List of violated invariants; empty iff the instance is valid."""
    report: list[str] = []
    n = inst.graph.node_count
    if not inst.agents:
        report.append("no-agents")
    labels = [a.label for a in inst.agents]
    if len(set(labels)) != len(labels):
        report.append("label-collision")
    for i, a in enumerate(inst.agents):
        if a.label < 1:
            report.append(f"non-positive-label: agent {i}")
        if not 0 <= a.start_node < n:
            report.append(f"start-outside-graph: agent {i}")
        if a.byzantine and a.script is None:
            report.append(f"byzantine-without-script: agent {i}")
    for k, r in inst.wake_schedule.items():
        if not 0 <= k < len(inst.agents):
            report.append(f"wake-for-unknown-agent: {k}")
        elif r < 0:
            report.append(f"negative-wake-round: agent {k}")
    if not any(k in inst.wake_schedule for k in inst.good):
        report.append("no-initial-wake")
    if inst.gk < 0:
        report.append("negative-gk")
    if n > inst.size_bound:
        report.append("size-bound-below-graph-size")
    # Wake closure: an agent sharing a start node with an earlier-woken one wakes with it.
    earliest: dict[int, int] = {}
    for i, a in enumerate(inst.agents):
        r = inst.wake_schedule.get(i)
        if r is not None and (a.start_node not in earliest or r < inst.wake_schedule[earliest[a.start_node]]):
            earliest[a.start_node] = i
    for j, b in enumerate(inst.agents):
        i = earliest.get(b.start_node)
        if i is not None and j in inst.wake_schedule and inst.wake_schedule[j] > inst.wake_schedule[i]:
            report.append(f"co-located-wake-later: agent {j} after agent {i} (engine wakes it earlier)")
    return report


def check_instance(inst: Instance) -> None:
    """Raise :class:`ValidationError` for hard violations; the co-located wake note is advisory."""
    hard = [p for p in validate_instance(inst) if not p.startswith("co-located-wake-later")]
    if hard:
        raise ValidationError(hard)


def wake_policy(kind: str, good: Sequence[int], offsets: Sequence[int] | None = None, step: int = 0) -> dict[int, int]:
    """Wake schedule generators.

    simultaneous: every good agent at round 0. staggered: good agent number j
    at round j*step. offsets: explicit per-good-agent rounds. latest: only the
    first good agent; the others wake when first visited.
    """
    if kind == "simultaneous":
        return {a: 0 for a in good}
    if kind == "staggered":
        return {a: j * step for j, a in enumerate(good)}
    if kind == "offsets":
        if offsets is None or len(offsets) != len(good):
            raise InvalidParameter("offsets policy needs one round per good agent")
        return {a: r for a, r in zip(good, offsets)}
    if kind == "latest":
        return {good[0]: 0}
    raise InvalidParameter(f"unknown wake policy {kind!r}")
