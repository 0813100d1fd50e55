"""The round engine shared by the sequential and parallel entry points.

One round is: conflict/cut aging, adaptive limits, barrier-phased dives,
fixed-order consolidation, global synchronization, broadcast, node selection.
The sequential solver is this protocol with one worker and the serial runner,
so parallel runs at K=1 must match it node for node; at any K the event log
is a pure function of (model, config) because every cross-worker flow is
slot-ordered and every adaptive decision is driven by work units.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import bnb
from .balance import WorkloadModel, adjust_parameters, assign_nodes, detect_critical, extract_features
from .bnb import (
    DiveRecord, NodeQueue, Pseudocosts, SelectionResult, SolveStatus,
    SolverStats, TreeNode, WorkerState, binding_cut_ids_of, build_view, dive,
    evaluate_node, make_hint,
)
from .config import DiveParameters, SolverConfig
from .conflict import ConflictPool, conflict_age, conflict_propagate, derive_conflict
from .domain import Domain, propagate, prune_queue
from .heuristics import parallel_root_heuristics
from .lp import LpStatus, NumericalFailure, solve_lp
from .model import MipModel, Solution, Tolerances, check_feasible
from .rng import derive_seed
from .runners import ThreadRunner, make_runner
from .separation import CutPool, parallel_separate_root, pool_add, pool_age

INF = math.inf

EVENT_LOG_VERSION = "evlog-v1"

# test-only hooks: never set in production code paths
EVENT_CHAOS: Callable | None = None
PHASE_RECORDER: Callable | None = None

_ROOT_LP_LIMIT = 200_000


@dataclass
class WorkerClock:
    """Wall-clock accounting per worker; reporting only, never control."""

    work_seconds: float = 0.0
    wait_seconds: float = 0.0
    work_units: int = 0
    dives: int = 0


@dataclass
class WorkerSlot:
    """Master-side bookkeeping for one worker."""

    worker_index: int
    params: DiveParameters
    view: WorkerState | None = None
    installed: TreeNode | None = None
    predicted: float | None = None
    features: object | None = None
    predicted_load: float = 0.0
    clock: WorkerClock = field(default_factory=WorkerClock)


class SearchState:
    """Global solver state (the master's view of the search)."""

    def __init__(self, model: MipModel, config: SolverConfig,
                 initial_domain: Domain | None = None):
        self.model = model
        self.config = config
        self.tol = Tolerances(config.int_tol, config.feas_tol,
                              config.opt_gap_abs, config.opt_gap_rel)
        self.domain = initial_domain.copy() if initial_domain is not None \
            else Domain.from_model(model)
        self.cut_pool = CutPool(config.cut_max_age, config.cut_pool_capacity)
        self.conflict_pool = ConflictPool(config.conflict_max_age,
                                          config.conflict_pool_capacity)
        self.pseudocosts = Pseudocosts(model.num_vars)
        self.queue = NodeQueue()
        self.stats = SolverStats()
        self.incumbent: np.ndarray | None = None
        self.incumbent_obj = INF
        self.next_node_id = 0
        self.dive_sequence = 0
        self.round_index = 0
        self.global_lower_bound = -INF
        self.lp_iter_limit = config.lp_iter_limit_base
        self.balancer = WorkloadModel(config.balancer)
        self.fired_conflicts: set = set()
        self.binding_cuts: set = set()
        self.event_records: list[str] = [EVENT_LOG_VERSION]
        self.status: SolveStatus | None = None
        self.finished = False
        self.retrain_total = 0
        self.restart_count = 0
        self.fixed_at_restart = 0
        self.nodes_at_restart = 0
        self.start_time = time.perf_counter()

    # -- logging -------------------------------------------------------------

    def log(self, *fields):
        parts = []
        for f in fields:
            if isinstance(f, float):
                parts.append(float(f).hex())
            elif f is None:
                parts.append("-")
            else:
                parts.append(str(f))
        record = "|".join(parts)
        if EVENT_CHAOS is not None:
            record = EVENT_CHAOS(record)
        self.event_records.append(record)

    def event_hash(self) -> str:
        h = hashlib.sha256()
        for rec in self.event_records:
            h.update(rec.encode())
            h.update(b"\n")
        return h.hexdigest()

    # -- incumbents ----------------------------------------------------------

    def offer_incumbent(self, values: np.ndarray, internal_obj: float,
                        node_id: int) -> bool:
        if internal_obj >= self.incumbent_obj - 0.0:
            return False
        if not check_feasible(self.model, values, self.tol).feasible:
            return False
        self.incumbent = np.array(values, dtype=float)
        self.incumbent_obj = float(internal_obj)
        self.stats.incumbent_history.append((node_id, float(internal_obj)))
        return True

    # -- policy / termination --------------------------------------------------

    def policy(self) -> str:
        if self.incumbent is not None and math.isfinite(self.global_lower_bound):
            gap = self.incumbent_obj - self.global_lower_bound
            if gap < (self.config.estimate_switch_factor
                      * self.tol.opt_gap_rel * abs(self.incumbent_obj)):
                return "estimate"
        return "bound"

    def gap_closed(self) -> bool:
        if self.incumbent is None:
            return False
        gap = self.incumbent_obj - self.global_lower_bound
        return gap <= max(self.tol.opt_gap_abs,
                          self.tol.opt_gap_rel * abs(self.incumbent_obj))

    def hit_limits(self) -> bool:
        cfg = self.config
        if cfg.node_limit is not None and self.stats.nodes_explored >= cfg.node_limit:
            return True
        if (cfg.time_limit_s is not None
                and time.perf_counter() - self.start_time > cfg.time_limit_s):
            return True
        return False

    def finish(self, status: SolveStatus):
        self.status = status
        self.finished = True

    def digest(self) -> bytes:
        """Canonical bytes of the deterministic state core (no wall-clock)."""
        payload = (
            self.domain.signature(),
            self.queue.signature(),
            self.cut_pool.signature(),
            self.conflict_pool.signature(),
            self.pseudocosts.signature(),
            None if self.incumbent is None else tuple(float(v).hex()
                                                      for v in self.incumbent),
            float(self.incumbent_obj).hex(),
            float(self.global_lower_bound).hex(),
            self.next_node_id, self.dive_sequence,
            self.stats.nodes_explored, self.stats.lp_iterations_total,
            self.stats.leaves, self.stats.dives,
            tuple((nid, float(o).hex()) for nid, o in self.stats.incumbent_history),
        )
        return repr(payload).encode()


@dataclass
class SolveResult:
    status: SolveStatus
    solution: Solution | None
    stats: SolverStats
    event_log: list[str]
    event_hash: str
    bound: float                       # final global lower bound, internal sense
    incumbent: np.ndarray | None       # raw values (internal representation)
    wall_seconds: float
    worker_clocks: list[WorkerClock]
    balancer: WorkloadModel
    objective: float | None = None     # original sense
    final_domain: Domain | None = None
    cut_pool: CutPool | None = None
    conflict_pool: ConflictPool | None = None


# -- replication / broadcast -------------------------------------------------------


def make_worker_view(state: SearchState, worker_index: int,
                     params: DiveParameters) -> WorkerState:
    return WorkerState(
        worker_index=worker_index,
        domain=Domain(state.domain.lower, state.domain.upper),
        cut_pool=state.cut_pool.truncated(state.config.broadcast_top_recent),
        conflict_pool=state.conflict_pool.truncated(state.config.broadcast_top_recent),
        pseudocosts=state.pseudocosts.copy(),
        incumbent=None if state.incumbent is None else state.incumbent.copy(),
        incumbent_obj=state.incumbent_obj,
        lp_iter_limit=state.lp_iter_limit,
        params=params,
        local_cuts=[],
    )


def replicate(state: SearchState, worker_count: int,
              params_list=None) -> list[WorkerState]:
    """K deep, independent replicas of the shareable state."""
    if params_list is None:
        params_list = [state.config.dive] * worker_count
    return [make_worker_view(state, w, params_list[w]) for w in range(worker_count)]


def broadcast(state: SearchState, slots: list[WorkerSlot]):
    """Replace every worker's replicated read-set with the global version."""
    for slot in slots:
        slot.view = make_worker_view(state, slot.worker_index, slot.params)


# -- root processing -----------------------------------------------------------------


def _trivial_heuristics(state: SearchState):
    """Cheapest deterministic candidates: all-lower-bound and all-zero points."""
    model, tol = state.model, state.tol
    candidates = []
    if np.all(np.isfinite(state.domain.lower)):
        candidates.append(state.domain.lower.copy())
    candidates.append(np.zeros(model.num_vars))
    for point in candidates:
        if check_feasible(model, point, tol).feasible:
            state.offer_incumbent(point, float(model.objective @ point), -1)


def root_phase(state: SearchState, worker_count: int, root_runner=None) -> None:
    """Presolve-lite, trivial heuristics, root LP with separation rounds,
    root heuristics, and the root node install into the queue."""
    model, config, tol = state.model, state.config, state.tol

    prop = propagate(state.domain, model, config.propagate_max_rounds, tol)
    if prop.status.value == "INFEASIBLE":
        state.finish(SolveStatus.INFEASIBLE)
        state.log("root", "infeasible-presolve")
        return

    _trivial_heuristics(state)

    lp = None
    rows = rhs = keys = None
    warm = None
    for sep_round in range(config.root_separation_rounds + 1):
        rows, rhs, keys = build_view(model, state.cut_pool, [])
        try:
            lp = solve_lp(rows, rhs, model.objective, state.domain.lower,
                          state.domain.upper, warm=warm, iter_limit=_ROOT_LP_LIMIT)
        except NumericalFailure:
            lp = solve_lp(rows, rhs, model.objective, state.domain.lower,
                          state.domain.upper, warm=None, iter_limit=_ROOT_LP_LIMIT)
        state.stats.lp_iterations_total += lp.iterations
        if sep_round == 0:
            state.stats.nodes_explored += 1
        if lp.status is LpStatus.INFEASIBLE:
            state.finish(SolveStatus.INFEASIBLE)
            state.log("root", "infeasible-lp")
            return
        if lp.status is LpStatus.UNBOUNDED:
            state.finish(SolveStatus.UNBOUNDED)
            state.log("root", "unbounded-lp")
            return
        warm = lp.basis

        fractional = [
            j for j in model.integer_set
            if tol.int_tol < (lp.primal[j] - math.floor(lp.primal[j])) < 1.0 - tol.int_tol
        ]
        if not fractional or sep_round == config.root_separation_rounds:
            break
        cuts = parallel_separate_root(
            model, state.domain, lp, rows, rhs, worker_count,
            run_tasks=None if root_runner is None else root_runner.map,
            violation_min=config.cut_violation_min,
            coef_drop=config.cut_coef_drop, tol=tol)
        if pool_add(state.cut_pool, cuts) == 0:
            break
        warm = None  # row set changed; statuses re-keyed below via fresh solve

    pool_age(state.cut_pool, binding_cut_ids_of(lp, keys, model.num_vars))

    # max() keeps the bound monotone when a restart re-runs the root
    state.global_lower_bound = max(state.global_lower_bound, lp.objective)

    if not fractional:
        snapped = lp.primal.copy()
        for j in model.integer_set:
            snapped[j] = round(snapped[j])
        state.offer_incumbent(snapped, float(model.objective @ snapped), -1)

    if config.heuristics_enabled and fractional:
        seeds = [derive_seed(config.seed, 0, w) for w in range(worker_count)]
        out = parallel_root_heuristics(
            model, state.domain, lp.primal, worker_count, seeds, config,
            run_tasks=None if root_runner is None else root_runner.map, tol=tol)
        state.stats.lp_iterations_total += out.work_units
        if out.found:
            state.offer_incumbent(out.solution, out.objective, -1)

    if state.gap_closed():
        state.finish(SolveStatus.OPTIMAL)
        state.log("root", float(state.global_lower_bound),
                  float(state.incumbent_obj), len(state.cut_pool.cuts),
                  state.stats.nodes_explored, state.stats.lp_iterations_total)
        return

    root = TreeNode(
        id=state.next_node_id, parent_id=None, depth=0,
        lower_bound=lp.objective,
        estimate=bnb._estimate(lp.objective, lp, fractional, state.pseudocosts),
        branch_journal=(),
        basis_hint=make_hint(lp.basis, model.num_vars, keys),
        creation_lp_iterations=lp.iterations,
        creation_fractional_vars=len(fractional),
    )
    state.next_node_id += 1
    state.queue.push(root)
    state.log("root", float(state.global_lower_bound),
              float(state.incumbent_obj), len(state.cut_pool.cuts),
              state.stats.nodes_explored, state.stats.lp_iterations_total)


# -- consolidation -------------------------------------------------------------------


def merge_dive_record(state: SearchState, slot: WorkerSlot, rec: DiveRecord):
    """Fold one worker's dive into the global state (called in slot order)."""
    if rec.error is not None:
        # failed dive: return the start node to the queue with a fresh basis
        node = slot.installed
        state.queue.push(replace(node, id=state.next_node_id, basis_hint=None))
        state.next_node_id += 1
        slot.installed = None
        slot.predicted = None
        slot.features = None
        return

    base = state.next_node_id
    state.next_node_id += rec.nodes_created
    state.dive_sequence += 1
    state.stats.dives += 1
    state.stats.nodes_explored += rec.nodes_evaluated
    state.stats.lp_iterations_total += rec.lp_iterations
    state.stats.leaves += rec.leaves

    if rec.incumbent is not None:
        node_id = (rec.start_node_id if rec.incumbent_local_node is None
                   else base + rec.incumbent_local_node)
        state.offer_incumbent(rec.incumbent, rec.incumbent_obj, node_id)

    for node in rec.open_nodes:
        state.queue.push(replace(node, id=base + node.id))

    pool_add(state.cut_pool, rec.new_cuts)
    state.conflict_pool.add(rec.new_conflicts)
    for e in rec.domain_deductions:
        if e.which == "L":
            state.domain.set_lower(e.var, e.new, "GLOBAL")
        else:
            state.domain.set_upper(e.var, e.new, "GLOBAL")
    for var, direction, val in rec.pseudocost_deltas:
        state.pseudocosts.add(var, direction, val)
    state.fired_conflicts |= rec.fired_conflict_ids
    state.binding_cuts |= rec.binding_cut_ids

    if state.config.balancer.enabled and slot.predicted is not None:
        outcome = state.balancer.record_outcome(
            slot.features, slot.predicted, max(1.0, float(rec.work_units)))
        if outcome == "RETRAIN_TRIGGERED":
            state.retrain_total += 1

    slot.clock.work_units += rec.work_units
    slot.clock.dives += 1
    slot.installed = None
    slot.predicted = None
    slot.features = None


def consolidate(state: SearchState, slots: list[WorkerSlot],
                records: list[DiveRecord | None]):
    """Merge the slot-indexed record array in strictly ascending worker order."""
    for slot, rec in zip(slots, records):
        if rec is not None:
            merge_dive_record(state, slot, rec)


# -- global synchronization ------------------------------------------------------------


def global_sync(state: SearchState, slots: list[WorkerSlot]) -> bool:
    """Propagate, prune, update the bound, decide termination, log the round."""
    model, config, tol = state.model, state.config, state.tol

    if not state.domain.infeasible:
        for _ in range(10):
            p1 = propagate(state.domain, model, config.propagate_max_rounds, tol)
            if p1.status.value == "INFEASIBLE":
                break
            p2 = conflict_propagate(state.domain, state.conflict_pool, tol,
                                    state.fired_conflicts)
            if p2.status.value == "INFEASIBLE" or p2.tightenings == 0:
                break
    if state.domain.infeasible:
        state.queue.nodes.clear()

    prune_queue(state.queue, state.domain, state.incumbent_obj, tol)

    if len(state.queue):
        bound = state.queue.min_lower_bound()
    elif state.incumbent is not None:
        bound = state.incumbent_obj
    else:
        bound = INF
    if bound > state.global_lower_bound:
        state.global_lower_bound = bound

    state.log("round", state.round_index, float(state.global_lower_bound),
              None if state.incumbent is None else float(state.incumbent_obj),
              len(state.queue), state.stats.nodes_explored,
              state.stats.lp_iterations_total, state.stats.leaves,
              state.stats.dives,
              ":".join(str(s.clock.work_units) for s in slots),
              state.retrain_total)

    if state.hit_limits():
        state.finish(SolveStatus.LIMIT)
        return True
    if len(state.queue) == 0:
        state.finish(SolveStatus.OPTIMAL if state.incumbent is not None
                     else SolveStatus.INFEASIBLE)
        return True
    if state.gap_closed():
        state.finish(SolveStatus.OPTIMAL)
        return True

    if config.restart_enabled:
        fixed_now = state.domain.fixed_count(model.integer_set)
        if bnb.check_restart(state.stats,
                             fixed_now - state.fixed_at_restart,
                             len(model.integer_set),
                             state.stats.nodes_explored - state.nodes_at_restart,
                             config):
            _perform_restart(state, slots)
            return state.finished
    return False


def _perform_restart(state: SearchState, slots: list[WorkerSlot]):
    state.restart_count += 1
    state.fixed_at_restart = state.domain.fixed_count(state.model.integer_set)
    state.nodes_at_restart = state.stats.nodes_explored
    state.queue.nodes.clear()
    state.log("restart", state.restart_count)
    root_phase(state, len(slots))


# -- node selection ------------------------------------------------------------------


def select_for_worker(view: WorkerState, model: MipModel, config: SolverConfig,
                      tol: Tolerances, nodes: list[TreeNode], policy: str,
                      best_known_obj: float) -> SelectionResult:
    """Pop/evaluate from a private queue until a dive start is prepared.

    Pruned nodes are discarded (with conflicts derived on infeasibility),
    LP-limited nodes are re-queued, the surviving node receives one separation
    round and a stored basis; anything never popped is returned unselected.
    """
    t0 = time.perf_counter()
    res = SelectionResult(worker_index=view.worker_index)
    remaining = list(nodes)
    best_known = best_known_obj
    consumed = []

    while remaining:
        node = min(remaining, key=lambda nd: NodeQueue._key(nd, policy))
        remaining.remove(node)
        consumed.append(node.id)
        ev = evaluate_node(view, model, config, tol, node, best_known,
                           view.lp_iter_limit)
        res.nodes_evaluated += 1
        if ev.lp is not None:
            res.lp_iterations += ev.iterations
            res.work_units += ev.iterations
            res.binding_cut_ids = res.binding_cut_ids | binding_cut_ids_of(
                ev.lp, ev.row_keys, model.num_vars)
        res.fired_conflict_ids = res.fired_conflict_ids | ev.fired_ids
        if ev.pc_delta is not None:
            var, d, val = ev.pc_delta
            view.pseudocosts.add(var, d, val)
            res.pseudocost_deltas.append((var, d, val))
        if not node.branch_journal and ev.journal_added:
            res.domain_deductions.extend(ev.journal_added)

        if ev.outcome is bnb.NodeOutcome.SUBOPTIMAL:
            res.requeue.append(replace(
                node, branch_journal=node.branch_journal + ev.journal_added,
                basis_hint=make_hint(ev.lp.basis, model.num_vars, ev.row_keys)))
            continue
        if ev.outcome is bnb.NodeOutcome.PRUNED_INFEASIBLE:
            res.leaves += 1
            res.pruned += 1
            conflict = derive_conflict(node.branch_journal + ev.journal_added)
            if conflict is not None:
                res.new_conflicts.append(conflict)
            continue
        if ev.outcome is bnb.NodeOutcome.PRUNED_BOUND:
            res.leaves += 1
            res.pruned += 1
            continue
        if ev.outcome is bnb.NodeOutcome.INTEGER_FEASIBLE:
            res.leaves += 1
            if ev.candidate_obj < res.incumbent_obj and ev.candidate_obj < best_known:
                res.incumbent = ev.candidate
                res.incumbent_obj = ev.candidate_obj
                res.incumbent_node_id = node.id
                best_known = ev.candidate_obj
            continue

        # FRACTIONAL: one separation round, store the basis, install
        rows, rhs, keys = bnb.worker_view_matrices(view, model)
        cuts = parallel_separate_root(
            model, view.domain, ev.lp, rows, rhs, 1,
            violation_min=max(config.cut_violation_min,
                              view.params.cut_violation_threshold),
            coef_drop=config.cut_coef_drop, tol=tol)
        res.local_cuts = list(cuts)
        res.installed = replace(
            node, branch_journal=node.branch_journal + ev.journal_added,
            basis_hint=make_hint(ev.lp.basis, model.num_vars, ev.row_keys))
        break

    res.consumed_ids = tuple(consumed)
    res.unselected = remaining
    res.wall_seconds = time.perf_counter() - t0
    return res


def _apply_selection(state: SearchState, slot: WorkerSlot, res: SelectionResult,
                     predicted_map: dict, features_map: dict):
    state.stats.nodes_explored += res.nodes_evaluated
    state.stats.lp_iterations_total += res.lp_iterations
    state.stats.leaves += res.leaves
    slot.clock.work_units += res.work_units
    if res.incumbent is not None:
        state.offer_incumbent(res.incumbent, res.incumbent_obj,
                              res.incumbent_node_id)
    state.conflict_pool.add(res.new_conflicts)
    for e in res.domain_deductions:
        if e.which == "L":
            state.domain.set_lower(e.var, e.new, "GLOBAL")
        else:
            state.domain.set_upper(e.var, e.new, "GLOBAL")
    for var, direction, val in res.pseudocost_deltas:
        state.pseudocosts.add(var, direction, val)
    state.fired_conflicts |= res.fired_conflict_ids
    state.binding_cuts |= res.binding_cut_ids
    for node in res.requeue:
        state.queue.push(node)
    for node in res.unselected:
        state.queue.push(node)
    if res.installed is not None:
        pool_add(state.cut_pool, res.local_cuts)
        slot.view.local_cuts = list(res.local_cuts)
        slot.installed = res.installed
        if state.config.balancer.enabled:
            nid = res.installed.id
            slot.features = features_map.get(nid)
            slot.predicted = predicted_map.get(nid)
            if slot.features is None:
                slot.features = extract_features(res.installed, slot.view, state)
                slot.predicted = state.balancer.predict(slot.features, False)


def parallel_node_selection(state: SearchState, slots: list[WorkerSlot],
                            runner) -> None:
    """Deal, balance, per-worker select, return unselected, serial fallback."""
    config = state.config
    K = len(slots)
    policy = state.policy()
    top = state.queue.pop_top(K * config.pool_factor, policy)
    private: dict[int, list[TreeNode]] = {w: [] for w in range(K)}
    for rank, node in enumerate(top):
        private[rank % K].append(node)

    predicted_map: dict[int, float] = {}
    features_map: dict[int, object] = {}
    if config.balancer.enabled and top:
        stage1 = []
        for rank, node in enumerate(top):
            feats = extract_features(node, slots[rank % K].view, state)
            features_map[node.id] = feats
            stage1.append(state.balancer.predict(feats, False))
        rr_loads = [sum(stage1[r] for r in range(len(top)) if r % K == w)
                    for w in range(K)]
        flagged, rebalance = detect_critical(stage1, rr_loads,
                                             config.balancer.rebalance_fraction)
        for rank, node in enumerate(top):
            pred = (state.balancer.predict(features_map[node.id], True)
                    if rank in flagged else stage1[rank])
            predicted_map[node.id] = pred
        if rebalance:
            by_id = {node.id: node for node in top}
            assignment, loads = assign_nodes(
                [(node.id, predicted_map[node.id]) for node in top], K)
            private = {w: [by_id[nid] for nid in assignment[w]] for w in range(K)}
        for w in range(K):
            slots[w].predicted_load = sum(predicted_map[node.id]
                                          for node in private[w])
    else:
        for w in range(K):
            slots[w].predicted_load = 0.0

    if PHASE_RECORDER is not None:
        PHASE_RECORDER("pre_selection", state, slots,
                       {"private": private, "policy": policy})

    tasks = []
    task_slots = []
    for w in range(K):
        if private[w]:
            tasks.append((_selection_task,
                          (slots[w].view, state.model, config, state.tol,
                           private[w], policy, state.incumbent_obj)))
            task_slots.append(slots[w])
    results = runner.map(tasks) if tasks else []

    phase_wall = max((r.wall_seconds for r in results), default=0.0)
    for slot, res in zip(task_slots, results):
        slot.clock.work_seconds += res.wall_seconds
        slot.clock.wait_seconds += max(0.0, phase_wall - res.wall_seconds)
        _apply_selection(state, slot, res, predicted_map, features_map)

    # serial fallback, ascending worker index (step 51)
    for slot in slots:
        if slot.installed is not None:
            continue
        while len(state.queue):
            node = state.queue.pop_best(policy)
            res = select_for_worker(slot.view, state.model, config, state.tol,
                                    [node], policy, state.incumbent_obj)
            _apply_selection(state, slot, res, predicted_map, features_map)
            if slot.installed is not None:
                break

    state.log("select", state.round_index,
              ",".join(str(s.installed.id) if s.installed else "-" for s in slots),
              len(state.queue))


def _selection_task(view, model, config, tol, nodes, policy, best_known):
    return select_for_worker(view, model, config, tol, nodes, policy, best_known)


def _dive_task(view, model, config, tol, node, dive_seq, heur_seed):
    try:
        return dive(view, model, config, tol, node, dive_seq, heur_seed)
    except bnb.UnboundedRelaxation:
        raise
    except NumericalFailure as exc:
        return DiveRecord(worker_index=view.worker_index,
                          start_node_id=node.id, error=str(exc))


# -- the round -----------------------------------------------------------------------


def parallel_dive_phase(state: SearchState, slots: list[WorkerSlot],
                        runner) -> list[DiveRecord | None]:
    """Barrier-phased concurrent dives; records addressed by worker slot."""
    tasks = []
    task_slots = []
    active = [s for s in slots if s.installed is not None]
    for i, slot in enumerate(active):
        seq = state.dive_sequence + i
        seed = derive_seed(state.config.seed, state.round_index, slot.worker_index)
        tasks.append((_dive_task, (slot.view, state.model, state.config,
                                   state.tol, slot.installed, seq, seed)))
        task_slots.append(slot)
    results = runner.map(tasks) if tasks else []

    phase_wall = max((r.wall_seconds for r in results), default=0.0)
    records: list[DiveRecord | None] = [None] * len(slots)
    for slot, rec in zip(task_slots, results):
        slot.clock.work_seconds += rec.wall_seconds
        slot.clock.wait_seconds += max(0.0, phase_wall - rec.wall_seconds)
        records[slot.worker_index] = rec
    return records


def run_round(state: SearchState, slots: list[WorkerSlot], runner) -> bool:
    """One full engine round; True when the search finished."""
    state.round_index += 1

    conflict_age(state.conflict_pool, state.fired_conflicts)
    state.fired_conflicts = set()
    pool_age(state.cut_pool, state.binding_cuts)
    state.binding_cuts = set()

    avg = state.stats.lp_iterations_total / max(1, state.stats.nodes_explored)
    state.lp_iter_limit = max(state.config.lp_iter_limit_base, int(2 * avg))
    if state.config.balancer.enabled and len(slots) > 1:
        new_params = adjust_parameters([s.predicted_load for s in slots],
                                       [s.params for s in slots],
                                       state.config.clamps)
        for slot, params in zip(slots, new_params):
            slot.params = params
            if slot.view is not None:
                slot.view.params = params
    for slot in slots:
        if slot.view is not None:
            slot.view.lp_iter_limit = state.lp_iter_limit

    records = parallel_dive_phase(state, slots, runner)
    if PHASE_RECORDER is not None:
        PHASE_RECORDER("pre_consolidate", state, slots, {"records": records})
    consolidate(state, slots, records)

    if global_sync(state, slots):
        return True

    broadcast(state, slots)
    parallel_node_selection(state, slots, runner)
    return False


# -- drivers --------------------------------------------------------------------------


def run_solve(model: MipModel, config: SolverConfig, worker_count: int,
              executor: str, initial_domain: Domain | None = None) -> SolveResult:
    t0 = time.perf_counter()
    state = SearchState(model, config, initial_domain)
    slots = [WorkerSlot(worker_index=w, params=config.dive)
             for w in range(worker_count)]

    state.log("header", model.name, worker_count, config.seed,
              int(config.balancer.enabled))

    runner = make_runner(executor, worker_count)
    # root-phase task sharding never crosses processes: closures stay local
    root_runner = runner if executor in ("serial", "thread") else \
        ThreadRunner(worker_count)
    try:
        try:
            root_phase(state, worker_count, root_runner)
        finally:
            if root_runner is not runner:
                root_runner.close()  # no live helper threads when a pool forks
        if not state.finished:
            broadcast(state, slots)
            parallel_node_selection(state, slots, runner)
            while not state.finished:
                run_round(state, slots, runner)
    except bnb.UnboundedRelaxation:
        state.finish(SolveStatus.UNBOUNDED)
    finally:
        runner.close()

    state.log("final", state.status.value,
              None if state.incumbent is None else float(state.incumbent_obj),
              state.stats.nodes_explored, state.stats.lp_iterations_total)

    solution = None
    objective = None
    if state.incumbent is not None:
        solution = model.make_solution(state.incumbent, state.tol)
        objective = solution.objective
    return SolveResult(
        status=state.status, solution=solution, stats=state.stats,
        event_log=list(state.event_records), event_hash=state.event_hash(),
        bound=state.global_lower_bound, incumbent=state.incumbent,
        wall_seconds=time.perf_counter() - t0,
        worker_clocks=[s.clock for s in slots],
        balancer=state.balancer, objective=objective,
        final_domain=state.domain, cut_pool=state.cut_pool,
        conflict_pool=state.conflict_pool,
    )
