"""Benchmark harness: metrics, determinism verification, suite reports.

Metric definitions: speedup is the serial/parallel wall-time ratio; a
thread's idle rate is wait/(wait+work), reported per thread, with the
aggregate sum(wait)/sum(work) ratio emitted as a secondary column for
transparency (the two differ; the per-thread form matches published
utilization tables).  Wall-clock figures are isolated in clearly marked
fields; everything else in a report is deterministic.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

from .config import SolverConfig
from .engine import SolveResult, WorkerClock
from .model import MipModel, parse_mps
from .parallel import solve_parallel


class MetricError(Exception):
    pass


class NonPositiveTime(MetricError):
    pass


class ZeroDuration(MetricError):
    pass


class NonPositiveValue(MetricError):
    pass


@dataclass(frozen=True)
class ThreadStats:
    """Per-thread utilization; times are wall-clock, reporting only."""

    work_time: float
    wait_time: float
    work_units: int
    dives: int

    @classmethod
    def from_clock(cls, clock: WorkerClock) -> "ThreadStats":
        return cls(work_time=clock.work_seconds, wait_time=clock.wait_seconds,
                   work_units=clock.work_units, dives=clock.dives)


@dataclass
class RunReport:
    instance: str
    status: str
    objective: float | None
    wall_time: float
    nodes: int
    lp_iterations: int
    threads: list[ThreadStats]
    event_hash: str
    speedup: float | None = None

    def to_dict(self) -> dict:
        return {
            "instance": self.instance, "status": self.status,
            "objective": self.objective, "wall_time": self.wall_time,
            "nodes": self.nodes, "lp_iterations": self.lp_iterations,
            "event_hash": self.event_hash, "speedup": self.speedup,
            "threads": [
                {"work_time": t.work_time, "wait_time": t.wait_time,
                 "work_units": t.work_units, "dives": t.dives,
                 "idle_rate": thread_idle_rate(t) if t.work_time + t.wait_time > 0 else None}
                for t in self.threads
            ],
        }


def speedup(t_serial: float, t_parallel: float) -> float:
    """Serial over parallel wall time."""
    if t_serial <= 0 or t_parallel <= 0:
        raise NonPositiveTime("times must be strictly positive")
    return t_serial / t_parallel


def thread_idle_rate(stats: ThreadStats) -> float:
    """Percent of a thread's phase time spent waiting: 100 * W / (W + E)."""
    total = stats.work_time + stats.wait_time
    if total <= 0:
        raise ZeroDuration("thread has no recorded time")
    return 100.0 * stats.wait_time / total


def aggregate_idle_ratio(threads) -> float:
    """Secondary aggregate form: 100 * sum(W_i) / sum(E_i)."""
    total_work = sum(t.work_time for t in threads)
    total_wait = sum(t.wait_time for t in threads)
    if total_work <= 0:
        raise ZeroDuration("no recorded execution time")
    return 100.0 * total_wait / total_work


def geometric_mean(values) -> float:
    vals = list(values)
    if not vals:
        raise NonPositiveValue("geometric mean of an empty sequence")
    logs = []
    for v in vals:
        if v <= 0:
            raise NonPositiveValue(f"non-positive value {v}")
        logs.append(math.log(v))
    return math.exp(sum(logs) / len(logs))


def report_from_result(instance: str, result: SolveResult,
                       serial_time: float | None = None) -> RunReport:
    return RunReport(
        instance=instance, status=result.status.value,
        objective=result.objective, wall_time=result.wall_seconds,
        nodes=result.stats.nodes_explored,
        lp_iterations=result.stats.lp_iterations_total,
        threads=[ThreadStats.from_clock(c) for c in result.worker_clocks],
        event_hash=result.event_hash,
        speedup=(speedup(serial_time, result.wall_seconds)
                 if serial_time is not None else None),
    )


# -- determinism verification ---------------------------------------------------------


@dataclass
class DeterminismReport:
    deterministic: bool
    hashes: list[str]
    first_divergence: tuple | None = None   # (run index, record index, got, expected)


def verify_determinism(model: MipModel, config: SolverConfig,
                       repetitions: int = 5) -> DeterminismReport:
    """Run solve_parallel repeatedly and compare event logs bit for bit."""
    if repetitions < 2:
        raise ValueError("repetitions must be >= 2")
    logs: list[list[str]] = []
    hashes: list[str] = []
    for _ in range(repetitions):
        result = solve_parallel(model, config)
        logs.append(result.event_log)
        hashes.append(result.event_hash)
    if len(set(hashes)) == 1:
        return DeterminismReport(True, hashes)
    reference = logs[0]
    for run in range(1, repetitions):
        if hashes[run] == hashes[0]:
            continue
        for idx in range(max(len(reference), len(logs[run]))):
            a = reference[idx] if idx < len(reference) else "<missing>"
            b = logs[run][idx] if idx < len(logs[run]) else "<missing>"
            if a != b:
                return DeterminismReport(False, hashes, (run, idx, b, a))
    return DeterminismReport(False, hashes)


# -- benchmark suite -------------------------------------------------------------------


@dataclass
class InstanceOutcome:
    name: str
    error: str | None = None
    serial: RunReport | None = None
    parallel: dict = field(default_factory=dict)        # K -> RunReport
    determinism: dict = field(default_factory=dict)     # K -> bool
    objectives_agree: bool = True


@dataclass
class SuiteReport:
    outcomes: list[InstanceOutcome]
    k_values: list[int]
    geo_speedup: dict = field(default_factory=dict)     # K -> geometric mean
    importances: list = field(default_factory=list)     # (feature, |weight|)

    def deterministic(self) -> bool:
        return all(all(v for v in o.determinism.values())
                   for o in self.outcomes if o.error is None)

    def render_text(self) -> str:
        lines = []
        header = (f"{'instance':<18} {'status':<11} {'objective':>14} "
                  f"{'serial(s)':>10}")
        for k in self.k_values:
            header += f" {'K=' + str(k) + '(s)':>9} {'spd':>6} {'det':>4}"
        lines.append(header)
        lines.append("-" * len(header))
        for o in self.outcomes:
            if o.error is not None:
                lines.append(f"{o.name:<18} ERROR: {o.error}")
                continue
            obj = "-" if o.serial.objective is None else f"{o.serial.objective:.6g}"
            row = (f"{o.name:<18} {o.serial.status:<11} {obj:>14} "
                   f"{o.serial.wall_time:>10.3f}")
            for k in self.k_values:
                rep = o.parallel.get(k)
                if rep is None:
                    row += f" {'-':>9} {'-':>6} {'-':>4}"
                else:
                    det = "ok" if o.determinism.get(k, True) else "FAIL"
                    spd = f"{rep.speedup:.2f}" if rep.speedup else "-"
                    row += f" {rep.wall_time:>9.3f} {spd:>6} {det:>4}"
            if not o.objectives_agree:
                row += "  OBJECTIVE-MISMATCH"
            lines.append(row)
        for k, gm in sorted(self.geo_speedup.items()):
            lines.append(f"geometric mean speedup K={k}: {gm:.2f}")
        if self.importances:
            lines.append("balancer feature importance (|standardized stage-1 weight|):")
            for name, w in self.importances:
                lines.append(f"  {name:<22} {w:.4f}")
        return "\n".join(lines) + "\n"

    def write_jsonl(self, path):
        with open(path, "w") as fh:
            for o in self.outcomes:
                row = {"instance": o.name, "error": o.error,
                       "objectives_agree": o.objectives_agree,
                       "determinism": {str(k): v for k, v in o.determinism.items()}}
                if o.serial is not None:
                    row["serial"] = o.serial.to_dict()
                    row["parallel"] = {str(k): r.to_dict()
                                       for k, r in o.parallel.items()}
                fh.write(json.dumps(row) + "\n")


def run_benchmark(instance_dir, config: SolverConfig,
                  k_values=(2, 4, 8), determinism_reps: int = 0) -> SuiteReport:
    """Serial + parallel runs per MPS instance, name-sorted, failures isolated.

    The serial baseline is solve_parallel with one worker so both sides run
    identical policies; pass ``determinism_reps`` >= 2 to also hash-check
    every parallel configuration.
    """
    paths = sorted(Path(instance_dir).glob("*.mps"))
    outcomes: list[InstanceOutcome] = []
    importances: list = []
    for path in paths:
        outcome = InstanceOutcome(name=path.stem)
        try:
            model = parse_mps(path.read_text())
        except Exception as exc:
            outcome.error = f"{type(exc).__name__}: {exc}"
            outcomes.append(outcome)
            continue
        try:
            serial_res = solve_parallel(model, config.replace(num_workers=1))
            outcome.serial = report_from_result(path.stem, serial_res)
            for k in k_values:
                kconf = config.replace(num_workers=k)
                res = solve_parallel(model, kconf)
                outcome.parallel[k] = report_from_result(
                    path.stem, res, serial_time=serial_res.wall_seconds)
                if res.objective is not None and serial_res.objective is not None:
                    if abs(res.objective - serial_res.objective) > 1e-6:
                        outcome.objectives_agree = False
                elif (res.objective is None) != (serial_res.objective is None):
                    outcome.objectives_agree = False
                if determinism_reps >= 2:
                    det = verify_determinism(model, kconf, determinism_reps)
                    outcome.determinism[k] = det.deterministic
                if res.balancer.stage1.weights is not None:
                    importances = res.balancer.stage1_importances()
        except Exception as exc:
            outcome.error = f"{type(exc).__name__}: {exc}"
        outcomes.append(outcome)

    report = SuiteReport(outcomes=outcomes, k_values=list(k_values),
                         importances=importances)
    for k in k_values:
        speedups = [o.parallel[k].speedup for o in outcomes
                    if o.error is None and k in o.parallel and o.parallel[k].speedup]
        if speedups:
            report.geo_speedup[k] = geometric_mean(speedups)
    return report
