"""Command line entry point: ``byzgather run | suite | fool``.

Exit codes:

* 0: success (run: every good agent declared at one common round and node);
* 1: completed but the outcome failed (not gathered, a suite cell failed, fooling check failed);
* 2: invalid input (instance validation, bad parameters);
* 3: configuration too large for 64-bit round counters, or no exploration sequence;
* 4: horizon exhausted before every good agent declared, or an inconclusive fooling check;
* 5: protocol fault;
* 6: compression contract violation;
* 7: mirror construction infeasible or over budget.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

from .engine import run, run_compressed
from .errors import ByzGatherError
from .exploration import provide_sequence
from .gather import gather_factory, group_factory, merge_factory
from .instance import Instance, validate_instance
from .lowerbound import fooling_check
from .scenarios import rows_to_csv, run_suite
from .timing import U64_MAX

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_HORIZON = 0, 1, 2, 4


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def _reseed(inst: Instance, seed: int | None) -> Instance:
    if seed is None:
        return inst
    agents = []
    for i, a in enumerate(inst.agents):
        if a.byzantine and a.script and a.script.get("kind") == "random_walk":
            a = replace(a, script={**a.script, "seed": seed + i})
        agents.append(a)
    return replace(inst, agents=tuple(agents))


def _factory(args: argparse.Namespace, inst: Instance):
    if args.protocol == "gather":
        return gather_factory
    n = args.n if args.n is not None else inst.size_bound
    T = args.T if args.T is not None else provide_sequence(n).X
    if args.protocol == "group":
        return group_factory(T, n)
    return merge_factory(T, n)


def cmd_run(args: argparse.Namespace) -> int:
    try:
        inst = Instance.loads(Path(args.instance).read_text())
    except (OSError, ValueError, KeyError, TypeError) as e:
        print(f"cannot read instance: {e}", file=sys.stderr)
        return EXIT_INVALID
    report = [p for p in validate_instance(inst) if not p.startswith("co-located-wake-later")]
    if report:
        print(json.dumps({"valid": False, "report": report}, indent=2))
        return EXIT_INVALID
    inst = _reseed(inst, args.seed)
    factory = _factory(args, inst)
    keep = args.trace_out is not None
    if args.engine == "uncompressed":
        tr = run(inst, factory, horizon=args.horizon if args.horizon is not None else 10_000, keep_records=keep)
    else:
        tr = run_compressed(inst, factory, horizon=args.horizon if args.horizon is not None else U64_MAX,
                            keep_records=keep)
    summary = tr.summary(inst)
    summary["protocol"] = args.protocol
    summary["engine"] = args.engine
    text = json.dumps(summary, indent=2)
    if args.summary_out:
        _write(args.summary_out, text + "\n")
    else:
        print(text)
    if keep:
        _write(args.trace_out, "\n".join(tr.records) + "\n")
    if summary["gathered"]:
        return EXIT_OK
    return EXIT_HORIZON if tr.horizon_exhausted else EXIT_FAILED


def cmd_suite(args: argparse.Namespace) -> int:
    try:
        data = json.loads(Path(args.suite).read_text() or "{}")
    except (OSError, ValueError) as e:
        print(f"cannot read suite: {e}", file=sys.stderr)
        return EXIT_INVALID
    rows = run_suite(data, workers=args.workers)
    failed = [r for r in rows if not r.get("passed")]
    report: dict[str, Any] = {"schema_version": 1, "cells": len(rows), "failed": len(failed), "rows": rows}
    out = Path(args.out_dir)
    _write(str(out / "suite.json"), json.dumps(report, indent=2) + "\n")
    _write(str(out / "suite.csv"), rows_to_csv(rows))
    for r in rows:
        print(f"{'PASS' if r.get('passed') else 'FAIL'} {r['cell']} ({r['seconds']}s)")
    print(f"{len(rows) - len(failed)}/{len(rows)} cells passed")
    return EXIT_FAILED if failed else EXIT_OK


def cmd_fool(args: argparse.Namespace) -> int:
    horizon = args.horizon if args.horizon is not None else U64_MAX
    rep = fooling_check(args.alg, gk=args.gk, j=args.j, j2=args.j2, c=args.c, horizon=horizon)
    text = json.dumps(rep.to_json(), indent=2)
    if args.out:
        _write(args.out, text + "\n")
    else:
        print(text)
    print(rep.summary_line())
    if rep.inconclusive:
        return EXIT_HORIZON
    return EXIT_OK if rep.passed else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="byzgather", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one instance")
    r.add_argument("--instance", required=True)
    r.add_argument("--protocol", choices=("gather", "group", "merge"), default="gather")
    r.add_argument("--engine", choices=("compressed", "uncompressed"), default="compressed")
    r.add_argument("--horizon", type=int)
    r.add_argument("--trace-out")
    r.add_argument("--summary-out")
    r.add_argument("--seed", type=int, help="reseeds random_walk scripts; protocol logic is seed-free")
    r.add_argument("--T", type=int, help="delay parameter for the group and merge protocols (default X_n)")
    r.add_argument("--n", type=int, help="size bound for the group and merge protocols (default: instance size_bound)")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("suite", help="run a matrix of cells")
    s.add_argument("suite")
    s.add_argument("--out-dir", default="suite-out")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_suite)

    f = sub.add_parser("fool", help="fooling check on the ring family")
    f.add_argument("--alg", choices=("gather", "declare-now"), default="gather")
    f.add_argument("--gk", type=int, default=1)
    f.add_argument("--j", type=int, default=0)
    f.add_argument("--j2", type=int, default=1)
    f.add_argument("--c", type=int, default=1)
    f.add_argument("--horizon", type=int)
    f.add_argument("--out")
    f.set_defaults(func=cmd_fool)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ByzGatherError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
