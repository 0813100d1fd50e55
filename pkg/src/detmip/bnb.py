"""Branch-and-bound engine: nodes, queue, dives, and the sequential driver.

The dive and node-selection operations are written against the
:class:`WorkerState` abstraction (a full replica of the shareable solver
state), so the parallel driver reuses them unchanged.  The sequential solver
is the same round protocol run over a single worker view: conflict aging,
adaptive limits, one dive, consolidation, global synchronization, view
refresh, node selection.  Node ids are assigned centrally at consolidation in
exploration order and break every tie in the search.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import lp as lp_mod
from .config import DiveParameters, SolverConfig
from .conflict import ConflictPool, conflict_propagate, derive_conflict
from .domain import BoundChange, BranchDir, Domain, propagate
from .heuristics import randomized_rounding, rens, rins
from .model import MipModel, Tolerances, check_feasible
from .separation import CutPool

INF = math.inf


class NoFractional(Exception):
    pass


class UnboundedRelaxation(Exception):
    """A node LP is unbounded, so the MIP itself has no finite optimum."""


class NodeOutcome(str, Enum):
    PRUNED_BOUND = "PRUNED_BOUND"
    PRUNED_INFEASIBLE = "PRUNED_INFEASIBLE"
    INTEGER_FEASIBLE = "INTEGER_FEASIBLE"
    FRACTIONAL = "FRACTIONAL"
    SUBOPTIMAL = "SUBOPTIMAL"


class SolveStatus(str, Enum):
    OPTIMAL = "OPTIMAL"
    INFEASIBLE = "INFEASIBLE"
    LIMIT = "LIMIT"
    UNBOUNDED = "UNBOUNDED"


# -- basis hints -----------------------------------------------------------------


@dataclass(frozen=True)
class BasisHint:
    """Warm-start statuses keyed by row identity so cut churn stays harmless."""

    struct_status: tuple[int, ...]
    slack_status: tuple[tuple[tuple, int], ...]   # ((kind, idx), status)


def make_hint(basis: lp_mod.Basis, n: int, row_keys: tuple) -> BasisHint:
    return BasisHint(
        struct_status=tuple(basis.var_status[:n]),
        slack_status=tuple(zip(row_keys, basis.var_status[n:])),
    )


def hint_to_basis(hint: BasisHint, row_keys: tuple) -> lp_mod.Basis:
    lookup = dict(hint.slack_status)
    statuses = list(hint.struct_status)
    for key in row_keys:
        statuses.append(lookup.get(key, int(lp_mod.VarStatus.BASIC)))
    return lp_mod.Basis(var_status=tuple(statuses), basic_vars=())


# -- tree nodes and queue -----------------------------------------------------------


@dataclass(frozen=True)
class TreeNode:
    id: int
    parent_id: int | None
    depth: int
    lower_bound: float
    estimate: float
    branch_journal: tuple[BoundChange, ...]
    basis_hint: BasisHint | None = None
    branch_var: int | None = None
    branch_dir: BranchDir | None = None
    branch_frac: float = 0.0
    parent_lp_obj: float = -INF
    creation_lp_iterations: int = 0
    creation_fractional_vars: int = 0
    parent_work_units: int = 0
    parent_open_children: int = 0

    def signature(self) -> tuple:
        return (self.id, self.lower_bound, self.estimate, self.depth,
                tuple((e.var, e.which, e.new) for e in self.branch_journal))


class NodeQueue:
    """Open-node list; pop order is a pure function of contents and policy."""

    def __init__(self):
        self.nodes: list[TreeNode] = []

    def __len__(self):
        return len(self.nodes)

    def push(self, node: TreeNode):
        self.nodes.append(node)

    @staticmethod
    def _key(node: TreeNode, policy: str):
        primary = node.estimate if policy == "estimate" else node.lower_bound
        return (primary, node.id)

    def pop_best(self, policy: str) -> TreeNode | None:
        if not self.nodes:
            return None
        best = min(self.nodes, key=lambda nd: self._key(nd, policy))
        self.nodes.remove(best)
        return best

    def pop_top(self, count: int, policy: str) -> list[TreeNode]:
        ranked = sorted(self.nodes, key=lambda nd: self._key(nd, policy))[:count]
        for nd in ranked:
            self.nodes.remove(nd)
        return ranked

    def retain(self, keep) -> int:
        before = len(self.nodes)
        self.nodes = [nd for nd in self.nodes if keep(nd)]
        return before - len(self.nodes)

    def min_lower_bound(self) -> float:
        if not self.nodes:
            return INF
        return min(nd.lower_bound for nd in self.nodes)

    def signature(self) -> tuple:
        return tuple(nd.signature() for nd in
                     sorted(self.nodes, key=lambda nd: nd.id))


class Pseudocosts:
    """Per-variable average objective degradation per unit of branching."""

    def __init__(self, n: int):
        self.up_sum = np.zeros(n)
        self.up_count = np.zeros(n, dtype=int)
        self.down_sum = np.zeros(n)
        self.down_count = np.zeros(n, dtype=int)

    def add(self, var: int, direction: BranchDir, per_unit: float):
        per_unit = max(0.0, per_unit)
        if direction is BranchDir.UP:
            self.up_sum[var] += per_unit
            self.up_count[var] += 1
        else:
            self.down_sum[var] += per_unit
            self.down_count[var] += 1

    def avg(self, var: int, direction: BranchDir) -> float:
        if direction is BranchDir.UP:
            c = self.up_count[var]
            return self.up_sum[var] / c if c else 0.0
        c = self.down_count[var]
        return self.down_sum[var] / c if c else 0.0

    def has_both(self, var: int) -> bool:
        return self.up_count[var] >= 1 and self.down_count[var] >= 1

    def copy(self) -> "Pseudocosts":
        dup = Pseudocosts(self.up_sum.shape[0])
        dup.up_sum = self.up_sum.copy()
        dup.up_count = self.up_count.copy()
        dup.down_sum = self.down_sum.copy()
        dup.down_count = self.down_count.copy()
        return dup

    def signature(self) -> tuple:
        return (tuple(self.up_sum.tolist()), tuple(self.up_count.tolist()),
                tuple(self.down_sum.tolist()), tuple(self.down_count.tolist()))


@dataclass
class SolverStats:
    nodes_explored: int = 0
    lp_iterations_total: int = 0
    leaves: int = 0
    dives: int = 0
    incumbent_history: list = field(default_factory=list)   # (node id, internal obj)


# -- worker replica -------------------------------------------------------------------


@dataclass
class WorkerState:
    """Replica of the shareable solver state owned by one worker."""

    worker_index: int
    domain: Domain
    cut_pool: CutPool
    conflict_pool: ConflictPool
    pseudocosts: Pseudocosts
    incumbent: np.ndarray | None
    incumbent_obj: float
    lp_iter_limit: int
    params: DiveParameters
    local_cuts: list = field(default_factory=list)
    _view_cache: tuple | None = field(default=None, repr=False, compare=False)

    def read_set_hash(self) -> str:
        """Hash of the replicated read-set (excludes worker-specific params)."""
        h = hashlib.sha256()
        payload = (
            self.domain.signature(),
            self.cut_pool.signature(),
            self.conflict_pool.signature(),
            self.pseudocosts.signature(),
            None if self.incumbent is None else tuple(float(v).hex() for v in self.incumbent),
            float(self.incumbent_obj).hex(),
            self.lp_iter_limit,
        )
        h.update(repr(payload).encode())
        return h.hexdigest()


@dataclass
class DiveRecord:
    """Everything one dive produced; a pure function of the pre-dive state."""

    worker_index: int
    nodes_created: int = 0
    open_nodes: list = field(default_factory=list)        # local ids in .id
    incumbent: np.ndarray | None = None
    incumbent_obj: float = INF
    incumbent_local_node: int | None = None               # None = the start node
    start_node_id: int = -1
    new_cuts: list = field(default_factory=list)
    new_conflicts: list = field(default_factory=list)
    domain_deductions: list = field(default_factory=list)
    pseudocost_deltas: list = field(default_factory=list)  # (var, dir, per-unit)
    fired_conflict_ids: frozenset = frozenset()
    binding_cut_ids: frozenset = frozenset()
    nodes_evaluated: int = 0
    lp_iterations: int = 0
    leaves: int = 0
    work_units: int = 0
    wall_seconds: float = 0.0
    error: str | None = None


@dataclass
class SelectionResult:
    worker_index: int
    installed: TreeNode | None = None
    local_cuts: list = field(default_factory=list)
    requeue: list = field(default_factory=list)
    unselected: list = field(default_factory=list)
    consumed_ids: tuple = ()
    incumbent: np.ndarray | None = None
    incumbent_obj: float = INF
    incumbent_node_id: int | None = None
    new_conflicts: list = field(default_factory=list)
    domain_deductions: list = field(default_factory=list)
    pseudocost_deltas: list = field(default_factory=list)
    fired_conflict_ids: frozenset = frozenset()
    binding_cut_ids: frozenset = frozenset()
    nodes_evaluated: int = 0
    lp_iterations: int = 0
    leaves: int = 0
    work_units: int = 0
    pruned: int = 0
    wall_seconds: float = 0.0


# -- LP view assembly ------------------------------------------------------------------


def build_view(model: MipModel, cut_pool: CutPool, local_cuts) -> tuple:
    """(rows, rhs, row_keys) for the LP a worker actually solves."""
    n = model.num_vars
    rows = [model.dense_matrix]
    rhs = [model.rhs]
    keys = [("m", i) for i in range(model.num_cons)]
    for cut in cut_pool.cuts:
        rows.append(cut.dense(n).reshape(1, n))
        rhs.append(np.array([cut.rhs]))
        keys.append(("c", cut.id))
    for k, cut in enumerate(local_cuts):
        rows.append(cut.dense(n).reshape(1, n))
        rhs.append(np.array([cut.rhs]))
        keys.append(("x", k))
    view_rows = np.vstack(rows) if len(rows) > 1 else model.dense_matrix
    view_rhs = np.concatenate(rhs) if len(rhs) > 1 else model.rhs
    return view_rows, np.asarray(view_rhs), tuple(keys)


def worker_view_matrices(view: WorkerState, model: MipModel) -> tuple:
    """build_view with a per-replica cache; pools only change between rounds."""
    stamp = (len(view.cut_pool.cuts), view.cut_pool._next_id, len(view.local_cuts))
    if view._view_cache is not None and view._view_cache[0] == stamp:
        return view._view_cache[1]
    built = build_view(model, view.cut_pool, view.local_cuts)
    view._view_cache = (stamp, built)
    return built


def binding_cut_ids_of(lp: lp_mod.LpResult, row_keys: tuple, n: int) -> frozenset:
    """Pool cuts whose slack is nonbasic at zero in the solved LP."""
    out = set()
    for pos, key in enumerate(row_keys):
        if key[0] != "c":
            continue
        if lp.basis.var_status[n + pos] == lp_mod.VarStatus.AT_LOWER:
            out.add(key[1])
    return frozenset(out)


# -- node evaluation ---------------------------------------------------------------------


@dataclass
class EvalResult:
    outcome: NodeOutcome
    lp: lp_mod.LpResult | None
    node_domain: Domain | None
    journal_added: tuple = ()
    fractional: tuple = ()
    candidate: np.ndarray | None = None
    candidate_obj: float = INF
    iterations: int = 0
    row_keys: tuple = ()
    pc_delta: tuple | None = None        # (var, dir, per-unit) observed here
    fired_ids: frozenset = frozenset()


def evaluate_node(view: WorkerState, model: MipModel, config: SolverConfig,
                  tol: Tolerances, node: TreeNode, best_known_obj: float,
                  iter_limit: int) -> EvalResult:
    """Replay, propagate, LP-solve one node; classify the outcome."""
    node_domain = view.domain.child()
    if not node_domain.replay(node.branch_journal):
        return EvalResult(NodeOutcome.PRUNED_INFEASIBLE, None, node_domain)

    fired: set = set()
    for _ in range(10):  # alternate linear and conflict propagation to a fixed point
        p1 = propagate(node_domain, model, config.propagate_max_rounds, tol)
        if p1.status.value == "INFEASIBLE":
            return EvalResult(NodeOutcome.PRUNED_INFEASIBLE, None, node_domain,
                              journal_added=tuple(node_domain.journal),
                              fired_ids=frozenset(fired))
        p2 = conflict_propagate(node_domain, view.conflict_pool, tol, fired)
        if p2.status.value == "INFEASIBLE":
            return EvalResult(NodeOutcome.PRUNED_INFEASIBLE, None, node_domain,
                              journal_added=tuple(node_domain.journal),
                              fired_ids=frozenset(fired))
        if p2.tightenings == 0:
            break

    rows, rhs, row_keys = worker_view_matrices(view, model)
    warm = hint_to_basis(node.basis_hint, row_keys) if node.basis_hint else None
    try:
        lp = lp_mod.solve_lp(rows, rhs, model.objective, node_domain.lower,
                             node_domain.upper, warm=warm, iter_limit=iter_limit)
    except lp_mod.NumericalFailure:
        # re-solve from a scratch basis, surfacing a second failure unchanged
        lp = lp_mod.solve_lp(rows, rhs, model.objective, node_domain.lower,
                             node_domain.upper, warm=None, iter_limit=iter_limit)

    pc_delta = None
    if (lp.status is lp_mod.LpStatus.OPTIMAL and node.branch_var is not None
            and math.isfinite(node.parent_lp_obj) and node.branch_frac > tol.int_tol):
        per_unit = max(0.0, lp.objective - node.parent_lp_obj) / node.branch_frac
        pc_delta = (node.branch_var, node.branch_dir, per_unit)

    base = dict(lp=lp, node_domain=node_domain,
                journal_added=tuple(node_domain.journal),
                iterations=lp.iterations, row_keys=row_keys,
                pc_delta=pc_delta, fired_ids=frozenset(fired))

    if lp.status is lp_mod.LpStatus.INFEASIBLE:
        return EvalResult(NodeOutcome.PRUNED_INFEASIBLE, **base)
    if lp.status is lp_mod.LpStatus.ITERATION_LIMIT:
        return EvalResult(NodeOutcome.SUBOPTIMAL, **base)
    if lp.status is lp_mod.LpStatus.UNBOUNDED:
        raise UnboundedRelaxation("node LP relaxation is unbounded")

    if lp.objective >= best_known_obj - tol.opt_gap_abs:
        return EvalResult(NodeOutcome.PRUNED_BOUND, **base)

    fractional = tuple(
        j for j in model.integer_set
        if tol.int_tol < (lp.primal[j] - math.floor(lp.primal[j])) < 1.0 - tol.int_tol
    )
    if not fractional:
        snapped = lp.primal.copy()
        for j in model.integer_set:
            snapped[j] = round(snapped[j])
        if check_feasible(model, snapped, tol).feasible:
            return EvalResult(NodeOutcome.INTEGER_FEASIBLE, candidate=snapped,
                              candidate_obj=float(model.objective @ snapped), **base)
        # snapping broke a row: branch on the largest residual fraction instead
        fractional = tuple(
            j for j in model.integer_set
            if 1e-12 < (lp.primal[j] - math.floor(lp.primal[j])) < 1.0 - 1e-12
        )
        if not fractional:
            return EvalResult(NodeOutcome.PRUNED_INFEASIBLE, **base)
    return EvalResult(NodeOutcome.FRACTIONAL, fractional=fractional, **base)


def select_branch_var(lp: lp_mod.LpResult, model: MipModel,
                      pseudocosts: Pseudocosts, fractional=None,
                      tol: Tolerances | None = None) -> tuple[int, float]:
    """Branching variable and pivot value.

    When every fractional candidate has pseudocost observations in both
    directions the product score decides; otherwise most-fractional.  All
    ties fall to the lowest variable index.
    """
    tol = tol or Tolerances()
    if fractional is None:
        fractional = tuple(
            j for j in model.integer_set
            if tol.int_tol < (lp.primal[j] - math.floor(lp.primal[j])) < 1.0 - tol.int_tol
        )
    if not fractional:
        raise NoFractional("no fractional integer variable at this node")
    if all(pseudocosts.has_both(j) for j in fractional):
        def score(j):
            f = lp.primal[j] - math.floor(lp.primal[j])
            return (pseudocosts.avg(j, BranchDir.DOWN) * f
                    * pseudocosts.avg(j, BranchDir.UP) * (1.0 - f))
        best = max(fractional, key=lambda j: (score(j), -j))
    else:
        def dist(j):
            f = lp.primal[j] - math.floor(lp.primal[j])
            return min(f, 1.0 - f)
        best = max(fractional, key=lambda j: (dist(j), -j))
    return best, float(lp.primal[best])


def _estimate(lb: float, lp: lp_mod.LpResult, fractional, pseudocosts: Pseudocosts) -> float:
    est = lb
    for j in fractional:
        f = lp.primal[j] - math.floor(lp.primal[j])
        est += min(pseudocosts.avg(j, BranchDir.UP),
                   pseudocosts.avg(j, BranchDir.DOWN)) * min(f, 1.0 - f)
    return est


# -- the dive -------------------------------------------------------------------------


def dive(view: WorkerState, model: MipModel, config: SolverConfig, tol: Tolerances,
         start_node: TreeNode, dive_seq: int, heur_seed: int) -> DiveRecord:
    """Depth-first plunge from ``start_node`` on the worker's private replica."""
    t0 = time.perf_counter()
    rec = DiveRecord(worker_index=view.worker_index, start_node_id=start_node.id)
    params = view.params
    budget = params.iter_budget
    best_known = min(view.incumbent_obj, INF)
    pc = view.pseudocosts  # mutated locally; deltas replayed at consolidation
    heur_allowed = config.heuristics_enabled and (
        dive_seq % params.heuristic_cadence == 0 or view.incumbent is None)
    did_heuristics = False
    stack: list[TreeNode] = []      # open siblings of this plunge
    local_counter = 0
    current = start_node
    current_local: int | None = None   # None = the globally-identified start node
    depth_local = 0

    def note_incumbent(values, obj, local_idx):
        nonlocal best_known
        if obj < rec.incumbent_obj and obj < best_known:
            rec.incumbent = values
            rec.incumbent_obj = obj
            rec.incumbent_local_node = local_idx
            best_known = obj

    while True:
        ev = evaluate_node(view, model, config, tol, current, best_known,
                           view.lp_iter_limit)
        rec.nodes_evaluated += 1
        rec.lp_iterations += ev.iterations
        rec.work_units += ev.iterations
        budget -= ev.iterations
        rec.fired_conflict_ids = rec.fired_conflict_ids | ev.fired_ids
        if ev.pc_delta is not None:
            var, d, val = ev.pc_delta
            pc.add(var, d, val)
            rec.pseudocost_deltas.append((var, d, val))
        if ev.lp is not None:
            rec.binding_cut_ids = rec.binding_cut_ids | binding_cut_ids_of(
                ev.lp, ev.row_keys, model.num_vars)
        if not current.branch_journal and ev.journal_added:
            # deductions at a branch-free node hold globally
            rec.domain_deductions.extend(ev.journal_added)

        if ev.outcome is NodeOutcome.SUBOPTIMAL:
            requeued = replace(current, id=local_counter,
                               branch_journal=current.branch_journal + ev.journal_added,
                               basis_hint=make_hint(ev.lp.basis, model.num_vars, ev.row_keys))
            local_counter += 1
            rec.open_nodes.append(requeued)
            break

        if ev.outcome in (NodeOutcome.PRUNED_BOUND, NodeOutcome.PRUNED_INFEASIBLE,
                          NodeOutcome.INTEGER_FEASIBLE):
            rec.leaves += 1
            if ev.outcome is NodeOutcome.PRUNED_INFEASIBLE:
                conflict = derive_conflict(
                    current.branch_journal + ev.journal_added)
                if conflict is not None:
                    rec.new_conflicts.append(conflict)
            elif ev.outcome is NodeOutcome.INTEGER_FEASIBLE:
                note_incumbent(ev.candidate, ev.candidate_obj, current_local)
            if not stack:
                break  # cannot backtrack in this plunge
            current = stack.pop()
            current_local = current.id
            continue

        # FRACTIONAL
        node_full_journal = current.branch_journal + ev.journal_added
        lp = ev.lp
        if heur_allowed and not did_heuristics:
            did_heuristics = True
            outs = [randomized_rounding(model, ev.node_domain, lp.primal, heur_seed,
                                        trials=config.rounding_trials, tol=tol)]
            outs.append(rens(model, ev.node_domain, lp.primal,
                             config.rens_node_budget, config, seed=heur_seed, tol=tol))
            inc = rec.incumbent if rec.incumbent is not None else view.incumbent
            inc_obj = min(rec.incumbent_obj, view.incumbent_obj)
            if inc is not None:
                outs.append(rins(model, ev.node_domain, lp.primal, inc, inc_obj,
                                 config.rins_node_budget, config, seed=heur_seed, tol=tol))
            for out in outs:
                rec.work_units += out.work_units
                rec.lp_iterations += out.work_units
                if out.found:
                    note_incumbent(out.solution, out.objective, current_local)

        if budget <= 0 or depth_local >= params.max_depth:
            frontier = replace(current, id=local_counter,
                               branch_journal=node_full_journal,
                               basis_hint=make_hint(lp.basis, model.num_vars, ev.row_keys))
            local_counter += 1
            rec.open_nodes.append(frontier)
            break

        var, pivot = select_branch_var(lp, model, pc, ev.fractional, tol)
        frac = pivot - math.floor(pivot)
        hint = make_hint(lp.basis, model.num_vars, ev.row_keys)
        children = {}
        for direction in (BranchDir.DOWN, BranchDir.UP):
            entry = BoundChange(
                var, "U" if direction is BranchDir.DOWN else "L",
                float(ev.node_domain.upper[var] if direction is BranchDir.DOWN
                      else ev.node_domain.lower[var]),
                float(math.floor(pivot) if direction is BranchDir.DOWN
                      else math.ceil(pivot)),
                "BRANCH")
            children[direction] = TreeNode(
                id=local_counter,
                parent_id=start_node.id,
                depth=current.depth + 1,
                lower_bound=max(current.lower_bound, lp.objective),
                estimate=_estimate(max(current.lower_bound, lp.objective),
                                   lp, ev.fractional, pc),
                branch_journal=node_full_journal + (entry,),
                basis_hint=hint,
                branch_var=var,
                branch_dir=direction,
                branch_frac=frac if direction is BranchDir.DOWN else 1.0 - frac,
                parent_lp_obj=lp.objective,
                creation_lp_iterations=lp.iterations,
                creation_fractional_vars=len(ev.fractional),
            )
            local_counter += 1
        chosen_dir = BranchDir.UP if frac > 0.5 else BranchDir.DOWN
        sibling_dir = BranchDir.DOWN if chosen_dir is BranchDir.UP else BranchDir.UP
        stack.append(children[sibling_dir])
        current = children[chosen_dir]
        current_local = current.id
        depth_local += 1

    rec.open_nodes.extend(stack)
    rec.open_nodes.sort(key=lambda nd: nd.id)
    rec.nodes_created = local_counter
    # creating-dive statistics for the balancer features
    rec.open_nodes = [
        replace(nd, parent_work_units=rec.work_units,
                parent_open_children=len(rec.open_nodes))
        for nd in rec.open_nodes
    ]
    rec.wall_seconds = time.perf_counter() - t0
    return rec


# -- restarts and the sequential driver ---------------------------------------------


def check_restart(stats: SolverStats, fixings_since_restart: int,
                  num_integers: int, nodes_since_restart: int,
                  config: SolverConfig) -> bool:
    """Restart when enough integers were globally fixed early in the search."""
    if not config.restart_enabled or num_integers == 0:
        return False
    if fixings_since_restart < config.restart_fix_fraction * num_integers:
        return False
    return nodes_since_restart <= config.restart_node_cap


def solve_sequential(model: MipModel, config: SolverConfig | None = None,
                     initial_domain=None):
    """Single-threaded staged solve: the round protocol over one worker view.

    The parallel solver runs the identical protocol, so a parallel run with
    one worker matches this node for node.
    """
    from .engine import run_solve

    config = config or SolverConfig()
    return run_solve(model, config, worker_count=1, executor="serial",
                     initial_domain=initial_domain)
