"""Command-line interface: solve one instance, benchmark a directory,
or verify run-to-run determinism.

Exit codes: 0 on success, 2 on determinism violation, 1 on internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .bnb import solve_sequential
from .config import SolverConfig
from .harness import (
    report_from_result, run_benchmark, thread_idle_rate, verify_determinism,
)
from .model import parse_mps
from .parallel import solve_parallel


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("-k", "--threads", type=int, default=1,
                   help="worker count (default 1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time-limit", type=float, default=None, metavar="SECONDS")
    p.add_argument("--node-limit", type=int, default=None)
    p.add_argument("--gap-abs", type=float, default=None)
    p.add_argument("--gap-rel", type=float, default=None)
    p.add_argument("--balancer", dest="balancer", action="store_true", default=None,
                   help="enable the learned load balancer (default on)")
    p.add_argument("--no-balancer", dest="balancer", action="store_false")
    p.add_argument("--executor", choices=("serial", "thread", "process"),
                   default=None)
    p.add_argument("--config", type=Path, default=None, metavar="JSON",
                   help="JSON file overriding SolverConfig fields")
    p.add_argument("--jsonl", type=Path, default=None,
                   help="write machine-readable records to this path")


def _build_config(args) -> SolverConfig:
    config = SolverConfig()
    if args.config is not None:
        overrides = json.loads(args.config.read_text())
        balancer_over = overrides.pop("balancer", None)
        config = config.replace(**overrides)
        if balancer_over is not None:
            config = config.replace(
                balancer=dataclasses.replace(config.balancer, **balancer_over))
    config = config.replace(seed=args.seed, num_workers=args.threads)
    if args.time_limit is not None:
        config = config.replace(time_limit_s=args.time_limit)
    if args.node_limit is not None:
        config = config.replace(node_limit=args.node_limit)
    if args.gap_abs is not None:
        config = config.replace(opt_gap_abs=args.gap_abs)
    if args.gap_rel is not None:
        config = config.replace(opt_gap_rel=args.gap_rel)
    if args.balancer is not None:
        config = config.replace(
            balancer=dataclasses.replace(config.balancer, enabled=args.balancer))
    if args.executor is not None:
        config = config.replace(executor=args.executor)
    return config


def _cmd_solve(args) -> int:
    config = _build_config(args)
    model = parse_mps(Path(args.instance).read_text())
    if args.sequential:
        result = solve_sequential(model, config)
    else:
        result = solve_parallel(model, config)
    report = report_from_result(model.name or Path(args.instance).stem, result)
    obj = "-" if report.objective is None else f"{report.objective:.10g}"
    print(f"instance   {report.instance}")
    print(f"status     {report.status}")
    print(f"objective  {obj}")
    print(f"wall time  {report.wall_time:.3f}s")
    print(f"nodes      {report.nodes}")
    print(f"iterations {report.lp_iterations}")
    print(f"event hash {report.event_hash}")
    if len(report.threads) > 1:
        print(f"{'thread':<10} {'work(s)':>9} {'wait(s)':>9} {'dives':>7} {'idle%':>7}")
        for i, t in enumerate(report.threads):
            name = "master" if i == 0 else f"worker {i}"
            idle = thread_idle_rate(t) if t.work_time + t.wait_time > 0 else 0.0
            print(f"{name:<10} {t.work_time:>9.2f} {t.wait_time:>9.2f} "
                  f"{t.dives:>7} {idle:>7.2f}")
    if result.solution is not None:
        values = ", ".join(f"x{j}={v:.6g}" for j, v in
                           enumerate(result.solution.values))
        print(f"solution   {values}")
    if args.jsonl:
        with open(args.jsonl, "w") as fh:
            fh.write(json.dumps(report.to_dict()) + "\n")
    return 0


def _cmd_bench(args) -> int:
    config = _build_config(args)
    ks = [int(x) for x in args.k_values.split(",") if x.strip()]
    report = run_benchmark(args.directory, config, k_values=ks,
                           determinism_reps=args.reps)
    sys.stdout.write(report.render_text())
    if args.jsonl:
        report.write_jsonl(args.jsonl)
    return 0 if report.deterministic() else 2


def _cmd_verify(args) -> int:
    config = _build_config(args)
    model = parse_mps(Path(args.instance).read_text())
    rep = verify_determinism(model, config, repetitions=args.reps)
    for i, h in enumerate(rep.hashes):
        print(f"run {i}: {h}")
    if rep.deterministic:
        print(f"deterministic: yes ({args.reps} runs, K={config.num_workers})")
        return 0
    print("deterministic: NO")
    if rep.first_divergence is not None:
        run, idx, got, expected = rep.first_divergence
        print(f"first divergence in run {run} at event {idx}:")
        print(f"  expected: {expected}")
        print(f"  got:      {got}")
    return 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="detmip",
        description="Deterministic parallel branch-and-bound MIP solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one MPS instance")
    p_solve.add_argument("instance", type=Path)
    p_solve.add_argument("--sequential", action="store_true",
                         help="use the sequential driver (ignores -k)")
    _add_common(p_solve)
    p_solve.set_defaults(fn=_cmd_solve)

    p_bench = sub.add_parser("bench", help="benchmark a directory of MPS files")
    p_bench.add_argument("directory", type=Path)
    p_bench.add_argument("--k-values", default="2,4,8",
                         help="comma-separated worker counts (default 2,4,8)")
    p_bench.add_argument("--reps", type=int, default=0,
                         help="determinism repetitions per configuration")
    _add_common(p_bench)
    p_bench.set_defaults(fn=_cmd_bench)

    p_verify = sub.add_parser("verify", help="verify run-to-run determinism")
    p_verify.add_argument("instance", type=Path)
    p_verify.add_argument("--reps", type=int, default=5)
    _add_common(p_verify)
    p_verify.set_defaults(fn=_cmd_verify)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:  # surface a clean message, nonzero exit
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
