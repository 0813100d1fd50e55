"""Primal heuristics: randomized rounding, RENS, RINS, and the root scheme.

Randomness is counter-based (seed, trial, variable index), so outcomes are
pure functions of their inputs no matter how the work is scheduled.  Every
candidate is verified against the ORIGINAL model before it is reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import lp as lp_mod
from .domain import Domain, propagate
from .model import MipModel, Tolerances, check_feasible
from .rng import uniform01

INF = math.inf


class HeuristicTag(str, Enum):
    ROUNDING = "ROUNDING"
    RENS = "RENS"
    RINS = "RINS"


_TAG_ORDER = {HeuristicTag.ROUNDING: 0, HeuristicTag.RENS: 1, HeuristicTag.RINS: 2}


@dataclass(frozen=True)
class HeuristicOutcome:
    found: bool
    solution: np.ndarray | None       # raw point; objective in internal MIN sense
    objective: float                  # +inf when not found
    heuristic_tag: HeuristicTag
    seed_used: int
    work_units: int


def _not_found(tag: HeuristicTag, seed: int, work: int) -> HeuristicOutcome:
    return HeuristicOutcome(False, None, INF, tag, seed, work)


def _complete_point(model: MipModel, domain: Domain, int_values: dict[int, float],
                    tol: Tolerances, iter_limit: int = 10_000):
    """Fix integers, re-optimize continuous variables, verify feasibility.

    Returns (point, internal_objective, lp_iterations) or (None, inf, iters).
    """
    lo = domain.lower.copy()
    hi = domain.upper.copy()
    for j, v in int_values.items():
        if v < lo[j] - tol.int_tol or v > hi[j] + tol.int_tol:
            return None, INF, 0
        lo[j] = hi[j] = v
    work = 0
    has_cont = len(int_values) < model.num_vars
    if has_cont:
        try:
            res = lp_mod.solve_lp(model.dense_matrix, model.rhs, model.objective,
                                  lo, hi, warm=None, iter_limit=iter_limit)
        except lp_mod.NumericalFailure:
            return None, INF, 0
        work = res.iterations
        if res.status is not lp_mod.LpStatus.OPTIMAL:
            return None, INF, work
        point = res.primal.copy()
        for j, v in int_values.items():
            point[j] = v  # exact integers, no simplex dust
    else:
        point = np.zeros(model.num_vars)
        for j, v in int_values.items():
            point[j] = v
    if not check_feasible(model, point, tol).feasible:
        return None, INF, work
    return point, float(model.objective @ point), work


def randomized_rounding(model: MipModel, domain: Domain, lp_point: np.ndarray,
                        seed: int, trials: int = 10,
                        tol: Tolerances | None = None) -> HeuristicOutcome:
    """Round each fractional integer up with probability equal to its fraction.

    Draws are keyed by (seed, trial, variable), the rounded point is repaired
    by propagation, and continuous variables are re-optimized with the
    integers fixed.  First feasible trial wins.
    """
    tol = tol or Tolerances()
    work = 0
    for trial in range(trials):
        int_values: dict[int, float] = {}
        for j in model.integer_set:
            v = lp_point[j]
            frac = v - math.floor(v)
            if frac <= tol.int_tol or frac >= 1.0 - tol.int_tol:
                int_values[j] = float(round(v))
            elif uniform01(seed, trial, j) < frac:
                int_values[j] = float(math.ceil(v))
            else:
                int_values[j] = float(math.floor(v))
        repaired = domain.copy()
        ok = True
        for j, v in int_values.items():
            if v < repaired.lower[j] - tol.int_tol or v > repaired.upper[j] + tol.int_tol:
                ok = False
                break
            repaired.set_lower(j, v, "FIX")
            repaired.set_upper(j, v, "FIX")
            if repaired.infeasible:
                ok = False
                break
        if ok:
            ok = propagate(repaired, model, tol=tol).status.value != "INFEASIBLE"
        if not ok:
            continue
        point, obj, lp_work = _complete_point(model, domain, int_values, tol)
        work += lp_work
        if point is not None:
            return HeuristicOutcome(True, point, obj, HeuristicTag.ROUNDING, seed, work)
    return _not_found(HeuristicTag.ROUNDING, seed, work)


def rens(model: MipModel, domain: Domain, lp_point: np.ndarray,
         node_budget: int, config, seed: int = 0,
         tol: Tolerances | None = None) -> HeuristicOutcome:
    """Sub-MIP with every integer restricted to floor/ceil of its LP value."""
    tol = tol or Tolerances()
    if node_budget <= 0:
        return _not_found(HeuristicTag.RENS, seed, 0)
    sub = domain.child()
    for j in model.integer_set:
        v = lp_point[j]
        sub.set_lower(j, math.floor(v + tol.int_tol), "FIX")
        sub.set_upper(j, math.ceil(v - tol.int_tol), "FIX")
        if sub.infeasible:
            return _not_found(HeuristicTag.RENS, seed, 0)
    return _subsolve(model, sub, node_budget, config, seed, HeuristicTag.RENS, tol)


def rins(model: MipModel, domain: Domain, lp_point: np.ndarray,
         incumbent: np.ndarray, incumbent_obj: float, node_budget: int,
         config, seed: int = 0, tol: Tolerances | None = None) -> HeuristicOutcome:
    """Fix integers where incumbent and LP agree; improve over the incumbent."""
    tol = tol or Tolerances()
    if node_budget <= 0:
        return _not_found(HeuristicTag.RINS, seed, 0)
    sub = domain.child()
    for j in model.integer_set:
        inc = round(incumbent[j])
        if abs(lp_point[j] - inc) <= tol.int_tol:
            sub.set_lower(j, inc, "FIX")
            sub.set_upper(j, inc, "FIX")
            if sub.infeasible:
                return _not_found(HeuristicTag.RINS, seed, 0)
    out = _subsolve(model, sub, node_budget, config, seed, HeuristicTag.RINS, tol)
    if out.found and out.objective < incumbent_obj - 1e-12:
        return out
    return _not_found(HeuristicTag.RINS, seed, out.work_units)


def _subsolve(model, sub_domain, node_budget, config, seed, tag, tol):
    from .bnb import solve_sequential  # deferred: bnb drives the dives that call us

    sub_config = config.subsolve_config(node_budget, seed)
    result = solve_sequential(model, sub_config, initial_domain=sub_domain)
    work = result.stats.lp_iterations_total
    if result.incumbent is None:
        return _not_found(tag, seed, work)
    point = result.incumbent
    if not check_feasible(model, point, tol).feasible:
        return _not_found(tag, seed, work)
    return HeuristicOutcome(True, point, float(model.objective @ point),
                            tag, seed, work)


def parallel_root_heuristics(model: MipModel, domain: Domain, lp_point: np.ndarray,
                             worker_count: int, seeds, config,
                             run_tasks=None, tol: Tolerances | None = None
                             ) -> HeuristicOutcome:
    """Root scheme: one rounding task per seed plus one RENS task.

    Tasks are sharded task-index-mod-worker and merged by (objective, tag
    order, task index), so the outcome is a pure function of the seeds list
    and identical for every worker count.  Work units are summed over tasks.
    """
    tol = tol or Tolerances()
    tasks = [("round", s) for s in seeds] + [("rens", seeds[0] if seeds else 0)]

    def run_one(task):
        kind, seed = task
        if kind == "round":
            return randomized_rounding(model, domain, lp_point, seed,
                                       trials=config.rounding_trials, tol=tol)
        return rens(model, domain, lp_point, config.rens_node_budget,
                    config, seed=seed, tol=tol)

    def run_shard(indices):
        return {t: run_one(tasks[t]) for t in indices}

    shards = [[t for t in range(len(tasks)) if t % worker_count == w]
              for w in range(worker_count)]
    shards = [s for s in shards if s]
    if run_tasks is None:
        shard_results = [run_shard(s) for s in shards]
    else:
        shard_results = run_tasks([(run_shard, (s,)) for s in shards])

    by_task: dict[int, HeuristicOutcome] = {}
    for res in shard_results:
        by_task.update(res)

    total_work = sum(out.work_units for out in by_task.values())
    best: HeuristicOutcome | None = None
    best_key = None
    for t in range(len(tasks)):
        out = by_task[t]
        if not out.found:
            continue
        key = (out.objective, _TAG_ORDER[out.heuristic_tag], t)
        if best is None or key < best_key:
            best, best_key = out, key
    if best is None:
        tag = HeuristicTag.ROUNDING
        return HeuristicOutcome(False, None, INF, tag,
                                seeds[0] if seeds else 0, total_work)
    return HeuristicOutcome(True, best.solution, best.objective,
                            best.heuristic_tag, best.seed_used, total_work)
