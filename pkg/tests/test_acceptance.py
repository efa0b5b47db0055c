"""Acceptance criteria 1-9, each at its stated tolerance.

Every scenario run here is memoised by name with its trace digest; criterion 8
re-runs all of them twice more and requires identical digests.
"""

from __future__ import annotations

import time
from typing import Callable

from byzgather.engine import run_compressed
from byzgather.exploration import corpus_for_bound, provide_sequence, verify_cover
from byzgather.gather import gather_factory
from byzgather.graph import make_oriented_ring
from byzgather.instance import AgentSpec, Instance
from byzgather.labels import check_separation
from byzgather.lowerbound import fooling_check
from byzgather.routine import Trail
from byzgather.engine import Crowd, Observation
from byzgather.scenarios import CellSpec, engines_agree, random_small_scenario, run_cell
from byzgather.timing import GroupTiming, TimingProfile, f_tilde, size_bound_from_gk, strong_team_min

SCRIPTS = ["inert", "random_walk", "label_forger", "state_mimic", "optimist_spoofer"]

# name -> (thunk returning (result, digest), first result, first digest)
_SCENARIOS: dict[str, tuple[Callable, object, str]] = {}


def _scenario(name: str, thunk: Callable[[], tuple[object, str]]):
    if name not in _SCENARIOS:
        result, digest = thunk()
        _SCENARIOS[name] = (thunk, result, digest)
    return _SCENARIOS[name][1]


# ------------------------------------------------------------------ criterion 1
GK1 = 1
X_4 = provide_sequence(size_bound_from_gk(GK1)).X
WAKE_OFFSETS = (0, 3, X_4 - 1)


def _c1_cases():
    cases = []
    for d in range(4):
        pairs = [(0, 0)] if d == 0 else [(0, w) for w in WAKE_OFFSETS] + [(w, 0) for w in WAKE_OFFSETS if w]
        for w1, w2 in pairs:
            cases.append((d, w1, w2))
    return cases


def _c1_run(d: int, w1: int, w2: int):
    inst = Instance(make_oriented_ring(4), (AgentSpec(1, 0), AgentSpec(2, d)), {0: w1, 1: w2},
                    gk=GK1, size_bound=4)
    t0 = time.perf_counter()
    tr = run_compressed(inst, gather_factory)
    return (tr.summary(inst), time.perf_counter() - t0, min(w1, w2)), tr.digest


def _c1_thunk(case):
    return lambda: _c1_run(*case)


def test_criterion_1(record_property):
    bound = TimingProfile(4, X_4).liveness_bound((1).bit_length())
    worst, slowest = 0, 0.0
    for case in _c1_cases():
        summary, secs, first = _scenario(f"c1-{case}", _c1_thunk(case))
        assert summary["gathered"], (case, summary)
        total = summary["final_round"] - first
        assert total <= bound, (case, total, bound)
        assert secs <= 300, (case, secs)
        worst, slowest = max(worst, total), max(slowest, secs)
    record_property("detail", f"{len(_c1_cases())} runs, max rounds {worst} <= {bound}, slowest {slowest:.2f}s")


# ------------------------------------------------------------------ criteria 2-4
C2_GRAPHS = [{"kind": "ring", "size": 4}, {"kind": "corpus", "size": 6, "index": 0},
             {"kind": "corpus", "size": 6, "index": 57}]
C2_CELLS = [CellSpec("gather", g, 1, strong_team_min(1), w, s)
            for g in C2_GRAPHS for w in ({"kind": "simultaneous"}, {"kind": "staggered", "step": 2}) for s in SCRIPTS]

C3_GRAPHS = [{"kind": "corpus", "size": s, "index": i} for s, i in ((2, 0), (3, 1), (4, 5), (5, 11), (6, 23))]
C3_WAKES = ({"kind": "simultaneous"}, {"kind": "spread"})
C3_CELLS = ([CellSpec("group", g, 0, "auto", w, "inert", 0, n=6, x=2, labels="random")
             for g in C3_GRAPHS for w in C3_WAKES]
            + [CellSpec("group", C3_GRAPHS[(j + 2) % 5], 1, "auto", w, s, j, n=6, x=3, labels="random")
               for j, s in enumerate(SCRIPTS) for w in C3_WAKES])

X_6 = provide_sequence(6).X
C4_CELLS = [CellSpec("merge", C2_GRAPHS[seed], f, 4 * f + 2 + seed + 1, {"kind": "spread"}, s, seed,
                     T=T, n=6, labels="random")
            for f in (0, 1) for T in (1, X_6) for s in (SCRIPTS if f else ["inert"]) for seed in range(3)]


def _cell_thunk(cell: CellSpec):
    def thunk():
        row = run_cell(cell)
        return row, row["digest"]
    return thunk


def _run_cells(cells):
    return [_scenario(c.name + f"|T={c.T}|x={c.x}", _cell_thunk(c)) for c in cells]


def test_criterion_2(record_property):
    assert len(C2_CELLS) == 30
    t0 = time.perf_counter()
    rows = _run_cells(C2_CELLS)
    elapsed = time.perf_counter() - t0
    failed = [r["cell"] for r in rows if not r["passed"]]
    premature = sum(r["premature"] for r in rows)
    record_property("detail", f"{len(rows) - len(failed)}/{len(rows)} cells, {premature} premature, {elapsed:.0f}s")
    assert not failed, failed
    assert premature == 0
    assert elapsed <= 3600


def test_criterion_3(record_property):
    assert len(C3_CELLS) == 20
    rows = _run_cells(C3_CELLS)
    failed = [(r["cell"], r["largest_common_exit"], r["need"]) for r in rows if not r["passed"]]
    record_property("detail", f"{len(rows) - len(failed)}/{len(rows)} cells")
    assert not failed, failed


def test_criterion_4(record_property):
    rows = _run_cells(C4_CELLS)
    failed = [r["cell"] for r in rows if not r["passed"]]
    record_property("detail", f"{len(rows) - len(failed)}/{len(rows)} cells")
    assert not failed, failed


# ------------------------------------------------------------------ criteria 5-7
def _oracle_bits(label: int) -> str:
    half = "10" + "".join(ch + ch for ch in bin(label)[2:]) + "01"
    return half + half


def test_criterion_5(record_property):
    failures = []
    pairs = 0
    for b in range(2, 64):
        for a in range(1, b):
            pairs += 1
            c = a.bit_length()
            try:
                i, j = check_separation(a, b)
            except LookupError:
                failures.append((a, b))
                continue
            ta, tb = _oracle_bits(a), _oracle_bits(b)
            if not (i <= 2 * c + 4 < j <= 4 * c + 8 and ta[i - 1] != tb[i - 1] and ta[j - 1] != tb[j - 1]):
                failures.append((a, b))
    record_property("detail", f"{pairs} pairs, {len(failures)} failures")
    assert not failures


def test_criterion_6(record_property):
    for p in range(2, 10_001):
        best = max(y for y in range(0, 50) if (5 * y + 1) * (y + 1) + 1 <= p)
        assert f_tilde(p) == best, p
    for f in range(101):
        assert strong_team_min(f) == 5 * f * f + 6 * f + 2
    gt = GroupTiming(10, 4, 10)
    assert (gt.S, gt.H, gt.step_len) == (1601, 264253, 264353)
    record_property("detail", "f_tilde p<=10^4, strong_team_min f<=100, GroupTiming(10,4,10)")


def _backtrack_returns(g, start, terms) -> bool:
    trail = Trail(terms)
    v = start
    for _ in terms:
        v, entry = g.follow(v, trail.forward(g.degree(v)))
        trail.observe(Observation(0, g.degree(v), entry, Crowd(())))
    while trail.depth:
        v, _ = g.follow(v, trail.back())
    return v == start


def test_criterion_7(record_property):
    checked = 0
    for bound in range(2, 7):
        seq = provide_sequence(bound)
        graphs = corpus_for_bound(bound)
        assert verify_cover(seq, graphs) == []
        for g in graphs:
            for s in range(g.node_count):
                assert _backtrack_returns(g, s, seq.terms), (bound, g.digest, s)
                checked += 1
    record_property("detail", f"covers and backtracks on {checked} (graph, start) pairs")


# ------------------------------------------------------------------ criterion 9
def _fool_thunk():
    rep = fooling_check("gather", gk=1, j=0, j2=1, c=1)
    return rep, "|".join([str(rep.k), *rep.digests])


def test_criterion_9(record_property):
    rep = _scenario("c9-fooling", _fool_thunk)
    record_property("detail", rep.summary_line())
    assert not rep.inconclusive
    assert rep.identical and rep.declared_at_k and rep.premature


# ------------------------------------------------------------------ criterion 8
def _all_acceptance_scenarios():
    out = {f"c1-{case}": _c1_thunk(case) for case in _c1_cases()}
    for c in C2_CELLS + C3_CELLS + C4_CELLS:
        out[c.name + f"|T={c.T}|x={c.x}"] = _cell_thunk(c)
    out["c9-fooling"] = _fool_thunk
    return out


def test_criterion_8(record_property):
    mismatches = []
    for seed in range(50):
        inst, factory, protocol = random_small_scenario(seed)
        ok, why = engines_agree(inst, factory, 10_000)
        if not ok:
            mismatches.append((seed, protocol, why))
    assert not mismatches, mismatches

    unstable = []
    scenarios = _all_acceptance_scenarios()
    for name, thunk in scenarios.items():
        _scenario(name, thunk)
        first = _SCENARIOS[name][2]
        for _ in range(2):
            if thunk()[1] != first:
                unstable.append(name)
                break
    record_property("detail", f"50/50 engine cross-checks, {len(scenarios) - len(unstable)}/{len(scenarios)} "
                              "scenarios reproduce over 3 runs")
    assert not unstable, unstable
