"""Suite cells: instance construction from a few knobs and per-protocol verdicts.

A suite file is a JSON matrix; every combination of its lists becomes a cell.
Cells are deterministic functions of their parameters (the seed only places
agents and seeds random-walk scripts).
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import random
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping, Sequence

from .adversary import BUILTIN_KINDS
from .engine import Trace, decompress, run, run_compressed
from .errors import InvalidParameter
from .exploration import provide_sequence
from .gather import gather_factory, group_factory, merge_factory
from .graph import PortGraph, corpus, make_oriented_ring, make_path
from .instance import AgentSpec, Instance, wake_policy
from .timing import GroupTiming, TimingProfile, merge_time_bound, size_bound_from_gk, strong_team_min

PROTOCOLS = ("gather", "group", "merge")
BYZ_LABEL_BASE = 100


@dataclass(frozen=True)
class CellSpec:
    protocol: str
    graph: Mapping[str, Any]
    f: int
    good: int | str = "auto"
    wake: Mapping[str, Any] = field(default_factory=lambda: {"kind": "simultaneous"})
    script: str = "inert"
    seed: int = 0
    gk: int | None = None
    T: int | None = None
    n: int | None = None
    x: int = 2
    labels: str = "sequential"

    @property
    def name(self) -> str:
        g = self.graph
        gname = f"{g.get('kind')}{g.get('size')}" + (f"#{g['index']}" if "index" in g else "")
        w = self.wake.get("kind", "?") + (f"({self.wake['step']})" if "step" in self.wake else "")
        return f"{self.protocol}|{gname}|f={self.f}|good={self.good}|{w}|{self.script}|seed={self.seed}"


def build_graph(desc: Mapping[str, Any]) -> PortGraph:
    kind = desc.get("kind", "ring")
    size = int(desc.get("size", 4))
    if kind == "ring":
        return make_oriented_ring(size)
    if kind == "path":
        return make_path(size)
    if kind == "corpus":
        graphs = [g for g in corpus(size) if g.node_count == size]
        return graphs[int(desc.get("index", 0)) % len(graphs)]
    if kind == "explicit":
        return PortGraph.from_json(desc["adjacency"])
    raise InvalidParameter(f"unknown graph kind {kind!r}")


def _good_count(cell: CellSpec) -> int:
    if isinstance(cell.good, int):
        return cell.good
    if cell.good not in ("auto", "strong"):
        return int(cell.good)
    if cell.protocol == "gather" or cell.good == "strong":
        return strong_team_min(cell.f)
    if cell.protocol == "group":
        return (cell.x - 1) * (cell.f + 1) + 1
    return 4 * cell.f + 2


@dataclass
class BuiltCell:
    spec: CellSpec
    instance: Instance
    factory: Any
    T: int = 0
    n: int = 0
    X: int = 0
    starts: dict[int, int] = field(default_factory=dict)   # good agent -> round it starts the routine


def _script_params(cell: CellSpec, good_labels: Sequence[int], rng: random.Random, gk: int, T: int, X: int, n: int) -> dict:
    kind = cell.script
    p: dict[str, Any] = {"kind": kind}
    if kind == "random_walk":
        p["seed"] = rng.randrange(1 << 30)
        if cell.protocol == "gather":
            N = size_bound_from_gk(gk)
            p["dwell"] = max(1, GroupTiming(X, N, X).process_len // 4)
        elif cell.protocol == "group":
            p["dwell"] = max(1, GroupTiming(T, n, X).process_len // 4)
        else:
            p["dwell"] = 1
    elif kind == "label_forger":
        p["target"] = min(good_labels)
    elif kind == "state_mimic":
        if cell.protocol == "gather":
            prof = TimingProfile(size_bound_from_gk(gk), X)
            p.update(state="Optimist", duration=prof.deadline(3))
        elif cell.protocol == "group":
            p.update(state="Search-for-an-invitation", payload="searcher", duration=GroupTiming(T, n, X).process_len)
        else:
            p.update(state="Synchronisation", duration=merge_time_bound(T, X))
    elif kind not in BUILTIN_KINDS:
        raise InvalidParameter(f"unknown script {kind!r}")
    return p


def build_cell(cell: CellSpec) -> BuiltCell:
    """Deterministic instance for a cell."""
    if cell.protocol not in PROTOCOLS:
        raise InvalidParameter(f"unknown protocol {cell.protocol!r}")
    g = build_graph(cell.graph)
    size = g.node_count
    rng = random.Random(f"{cell.name}")
    k = _good_count(cell)
    if cell.labels == "random":
        labels = sorted(rng.sample(range(1, max(64, 2 * k)), k))
    else:
        labels = list(range(1, k + 1))
    gk = cell.gk if cell.gk is not None else next(i for i in range(6) if size_bound_from_gk(i) >= size)
    n = cell.n if cell.n is not None else max(2, size)
    X = provide_sequence(size_bound_from_gk(gk) if cell.protocol == "gather" else n).X
    T = cell.T if cell.T is not None else X

    agents: list[AgentSpec] = []
    starts: dict[int, int] = {}
    delays: dict[int, int] = {}
    wake: dict[int, int]
    if cell.protocol == "merge":
        core = 4 * cell.f + 2
        home = rng.randrange(size)
        for j, l in enumerate(labels):
            agents.append(AgentSpec(l, home if j < core else rng.randrange(size)))
            if j >= core:
                delays[l] = rng.randrange(T)
        wake = {i: 0 for i in range(k)}
    else:
        for l in labels:
            agents.append(AgentSpec(l, rng.randrange(size)))
        wk = dict(cell.wake)
        kind = wk.pop("kind", "simultaneous")
        if cell.protocol == "group":
            # Start spread below T through per-agent delays after a common wake-up.
            wake = {i: 0 for i in range(k)}
            spread = int(wk.get("spread", T - 1 if kind != "simultaneous" else 0))
            for l in labels:
                delays[l] = rng.randint(0, min(spread, T - 1))
        else:
            wake = wake_policy(kind, list(range(k)), wk.get("offsets"), int(wk.get("step", 0)))
    for b in range(cell.f):
        params = _script_params(cell, labels, rng, gk, T, X, n)
        start = agents[0].start_node if cell.protocol == "merge" and b == 0 else rng.randrange(size)
        agents.append(AgentSpec(BYZ_LABEL_BASE + b, start, True, params))

    inst = Instance(g, tuple(agents), wake, gk=gk, size_bound=max(size, n))
    if cell.protocol == "gather":
        factory = gather_factory
    elif cell.protocol == "group":
        bins = {l: rng.randrange(2) for l in labels}
        bins[labels[0]], bins[labels[-1]] = 0, 1
        factory = group_factory(T, n, bins, delays)
    else:
        factory = merge_factory(T, n, delays)
    for i, a in enumerate(agents):
        if not a.byzantine:
            starts[i] = delays.get(a.label, 0)
    return BuiltCell(cell, inst, factory, T, n, X, starts)


def run_cell_trace(built: BuiltCell, engine: str = "compressed", horizon: int | None = None,
                   keep_records: bool = False) -> Trace:
    if engine == "compressed":
        kw = {} if horizon is None else {"horizon": horizon}
        return run_compressed(built.instance, built.factory, keep_records=keep_records, **kw)
    if engine == "uncompressed":
        return run(built.instance, built.factory, horizon=10_000 if horizon is None else horizon,
                   keep_records=keep_records)
    raise InvalidParameter(f"unknown engine {engine!r}")


def _wake_rounds(built: BuiltCell, tr: Trace) -> dict[int, int]:
    return {a: built.instance.wake_schedule.get(a, 0) for a in built.instance.good}


def judge(built: BuiltCell, tr: Trace) -> dict[str, Any]:
    """Verdict for one finished run according to the protocol's guarantee."""
    inst = built.instance
    good = inst.good
    rounds = {a: tr.declare_round.get(a) for a in good}
    nodes = {a: tr.declare_node.get(a) for a in good}
    exits = Counter((rounds[a], nodes[a]) for a in good if rounds[a] is not None)
    best = exits.most_common(1)[0] if exits else ((None, None), 0)
    out: dict[str, Any] = {
        "declared": sum(1 for r in rounds.values() if r is not None),
        "largest_common_exit": best[1],
        "exit_round": best[0][0],
        "exit_node": best[0][1],
        "final_round": tr.final_round,
        "horizon_exhausted": tr.horizon_exhausted,
    }
    p = built.spec.protocol
    if p == "gather":
        all_common = best[1] == len(good)
        premature = 0 if all_common else sum(1 for r in rounds.values() if r is not None)
        prof = TimingProfile(size_bound_from_gk(inst.gk), built.X)
        lmin = min(inst.agents[a].label for a in good)
        bound = prof.liveness_bound(lmin.bit_length())
        first = min(_wake_rounds(built, tr).values())
        out.update(premature=premature, bound=bound, within_bound=best[0][0] is not None and best[0][0] - first <= bound)
        out["passed"] = all_common and premature == 0 and out["within_bound"]
    elif p == "group":
        G = GroupTiming(built.T, built.n, built.X).group_time_bound
        x, f = built.spec.x, built.spec.f
        first = min(built.starts.values())
        durations_ok = all(rounds[a] is not None and rounds[a] - built.starts[a] <= G for a in good)
        out.update(need=x - f, bound=G, durations_ok=durations_ok,
                   within_bound=best[0][0] is not None and best[0][0] - first <= G)
        out["passed"] = best[1] >= x - f and durations_ok and out["within_bound"]
    else:
        first = min(built.starts.values())
        bound = merge_time_bound(built.T, built.X)
        out.update(bound=bound, within_bound=best[0][0] is not None and best[0][0] < first + bound)
        out["passed"] = best[1] == len(good) and out["within_bound"]
    return out


def run_cell(cell: CellSpec) -> dict[str, Any]:
    t0 = time.perf_counter()
    built = build_cell(cell)
    tr = run_cell_trace(built)
    row = {"cell": cell.name, **judge(built, tr), "digest": tr.digest,
           "simulated_rounds": tr.simulated_rounds, "seconds": round(time.perf_counter() - t0, 3)}
    return row


def expand_suite(data: Mapping[str, Any]) -> list[CellSpec]:
    """Cells of a suite matrix; scalar entries act as one-element lists."""
    if not data:
        return []
    if "cells" in data:
        return [CellSpec(**c) for c in data["cells"]]

    def lst(key: str, default: Any) -> list:
        v = data.get(key, default)
        return list(v) if isinstance(v, list) else [v]

    protocols = lst("protocol", "gather")
    out = []
    for protocol, graph, f, good, wake, seed in itertools.product(
            protocols, lst("graphs", {"kind": "ring", "size": 4}), lst("f", 0), lst("good", "auto"),
            lst("wake", {"kind": "simultaneous"}), lst("seeds", 0)):
        scripts = lst("scripts", "inert") if f > 0 else ["inert"]
        for script in scripts:
            out.append(CellSpec(protocol, graph, f, good, wake, script, seed,
                                data.get("gk"), data.get("T"), data.get("n"), data.get("x", 2),
                                data.get("labels", "sequential")))
    return out


def run_suite(data: Mapping[str, Any], workers: int = 1) -> list[dict[str, Any]]:
    cells = expand_suite(data)
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_cell, cells))
    return [run_cell(c) for c in cells]


def rows_to_csv(rows: Sequence[Mapping[str, Any]]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    keys = sorted({k for r in rows for k in r})
    w = csv.DictWriter(buf, fieldnames=keys)
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def cell_to_json(cell: CellSpec) -> str:
    return json.dumps(asdict(cell), sort_keys=True)


def random_small_scenario(seed: int, max_nodes: int = 4) -> tuple[Instance, Any, str]:
    """Small random instance (1..3 good agents, 0..1 Byzantine, any protocol) for engine cross-checks."""
    rng = random.Random(seed)
    g = rng.choice(corpus(max_nodes))
    size = g.node_count
    protocol = rng.choice(PROTOCOLS)
    k, f = rng.randint(1, 3), rng.randint(0, 1)
    labels = rng.sample(range(1, 32), k)
    agents = [AgentSpec(l, rng.randrange(size)) for l in labels]
    for b in range(f):
        script = {"kind": rng.choice(BUILTIN_KINDS), "seed": rng.randrange(99), "dwell": rng.randint(1, 50),
                  "target": labels[0], "state": "Optimist", "duration": rng.randint(1, 3000)}
        agents.append(AgentSpec(BYZ_LABEL_BASE + b, rng.randrange(size), True, script))
    wake = {i: rng.randrange(20) for i in range(k)}
    bound = max(max_nodes, 2)
    gk = next(i for i in range(6) if size_bound_from_gk(i) >= bound)
    inst = Instance(g, tuple(agents), wake, gk=gk, size_bound=bound)
    T = rng.randint(1, provide_sequence(bound).X)
    factory = {"gather": gather_factory, "group": group_factory(T, bound), "merge": merge_factory(T, bound)}[protocol]
    return inst, factory, protocol


def engines_agree(inst: Instance, factory: Any, horizon: int) -> tuple[bool, str]:
    """Run both engines to ``horizon`` and compare the per-round records after decompression."""
    plain = run(inst, factory, horizon=horizon, keep_records=True)
    fast = run_compressed(inst, factory, horizon=horizon, keep_records=True)
    expanded = decompress(fast.records)
    if expanded != plain.records:
        for i, (x, y) in enumerate(zip(plain.records, expanded)):
            if x != y:
                return False, f"record {i}: {x} != {y}"
        return False, f"lengths {len(plain.records)} != {len(expanded)}"
    if (plain.declare_round, plain.declare_node) != (fast.declare_round, fast.declare_node):
        return False, "declarations differ"
    return True, ""
