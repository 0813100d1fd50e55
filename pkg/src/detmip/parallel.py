"""Deterministic data-parallel master-worker solver.

Fork-join rounds with a full barrier between phases: replicate the global
state, dive concurrently on private replicas, consolidate the slot-indexed
records in fixed worker order, synchronize the global state, broadcast, and
select nodes into private queues.  No control decision anywhere reads a
clock; the only time source feeds the reporting path, so the event log is
bit-identical across repetitions regardless of machine load or executor.
"""

from __future__ import annotations

from .bnb import DiveRecord, SelectionResult, SolveStatus, TreeNode, WorkerState
from .config import SolverConfig
from .engine import (
    SearchState, SolveResult, WorkerClock, WorkerSlot, broadcast, consolidate,
    global_sync, make_worker_view, merge_dive_record, parallel_dive_phase,
    parallel_node_selection, replicate, run_solve,
)
from .model import MipModel

GlobalState = SearchState

__all__ = [
    "DiveRecord", "GlobalState", "SearchState", "SolveResult", "SolveStatus",
    "SelectionResult", "TreeNode", "WorkerClock", "WorkerSlot", "WorkerState",
    "broadcast", "consolidate", "global_sync", "make_worker_view",
    "merge_dive_record", "parallel_dive_phase", "parallel_node_selection",
    "replicate", "solve_parallel",
]


def solve_parallel(model: MipModel, config: SolverConfig | None = None,
                   initial_domain=None) -> SolveResult:
    """Solve with ``config.num_workers`` workers under the round protocol.

    With one worker the exploration matches :func:`detmip.bnb.solve_sequential`
    exactly; at any worker count the event-log hash is the determinism
    certificate.
    """
    config = config or SolverConfig()
    if config.num_workers < 1:
        raise ValueError("num_workers must be >= 1")
    return run_solve(model, config, worker_count=config.num_workers,
                     executor=config.executor, initial_domain=initial_domain)
