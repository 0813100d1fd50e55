"""Cutting planes: Gomory mixed-integer and knapsack cover cuts, cut pool.

Cuts live in structural space as <= rows and never mutate the model; node LPs
see them as appended rows on a throwaway view.  Gomory derivation complements
nonbasic variables against the GLOBAL domain bounds, so every generated cut is
valid for all integer-feasible points of the global domain even when derived
inside the tree; cuts not sufficiently violated by the deriving LP point are
discarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .domain import Domain
from .lp import LpResult, LpStatus, NotOptimal, VarStatus, tableau_row
from .model import MipModel, Tolerances

INF = math.inf


@dataclass(frozen=True)
class Cut:
    """Sparse <= inequality: sum(coeffs[j] * x[j]) <= rhs. id -1 = unpooled."""

    coeffs: tuple[tuple[int, float], ...]   # (var, coefficient), ascending var
    rhs: float
    origin: str                             # GOMORY | COVER
    age: int = 0
    times_binding: int = 0
    id: int = -1

    def pattern(self) -> tuple:
        return self.coeffs

    def violation(self, point: np.ndarray) -> float:
        act = sum(c * point[j] for j, c in self.coeffs)
        return act - self.rhs

    def dense(self, n: int) -> np.ndarray:
        row = np.zeros(n)
        for j, c in self.coeffs:
            row[j] = c
        return row


class CutPool:
    """Ordered cut pool: sequential ids, dedup, deterministic eviction."""

    def __init__(self, max_age: int = 10, capacity: int = 1000):
        self.cuts: list[Cut] = []
        self.max_age = max_age
        self.capacity = capacity
        self._next_id = 0

    def copy(self) -> "CutPool":
        dup = CutPool(self.max_age, self.capacity)
        dup.cuts = [replace(c) for c in self.cuts]
        dup._next_id = self._next_id
        return dup

    def truncated(self, top_recent: int) -> "CutPool":
        """Most recent ``top_recent`` cuts by id (the broadcast relevance filter)."""
        dup = CutPool(self.max_age, self.capacity)
        dup.cuts = [replace(c) for c in self.cuts[-top_recent:]]
        dup._next_id = self._next_id
        return dup

    def signature(self) -> tuple:
        return tuple((c.id, c.age, c.times_binding, c.coeffs, c.rhs) for c in self.cuts)


def pool_add(pool: CutPool, cuts) -> int:
    """Assign ids, reject near-duplicates, evict deterministically over capacity."""
    accepted = 0
    for cut in cuts:
        if _is_duplicate(pool, cut):
            continue
        pool.cuts.append(replace(cut, id=pool._next_id, age=0))
        pool._next_id += 1
        accepted += 1
    while len(pool.cuts) > pool.capacity:
        # evict oldest age, then lowest usefulness, then highest id
        victim = max(pool.cuts, key=lambda c: (c.age, -c.times_binding, c.id))
        pool.cuts.remove(victim)
    return accepted


def _is_duplicate(pool: CutPool, cut: Cut) -> bool:
    for existing in pool.cuts:
        if existing.pattern() != cut.pattern():
            continue
        if abs(existing.rhs - cut.rhs) <= 1e-9:
            return True
    return False


def pool_age(pool: CutPool, binding_ids) -> int:
    """Age non-binding cuts, refresh binding ones, evict past max_age."""
    binding = set(binding_ids)
    kept: list[Cut] = []
    evicted = 0
    for c in pool.cuts:
        if c.id in binding:
            kept.append(replace(c, age=0, times_binding=c.times_binding + 1))
        elif c.age + 1 > pool.max_age:
            evicted += 1
        else:
            kept.append(replace(c, age=c.age + 1))
    pool.cuts = kept
    return evicted


# -- Gomory mixed-integer cuts -------------------------------------------------

def generate_gomory(lp: LpResult, view_rows: np.ndarray, view_rhs: np.ndarray,
                    model: MipModel, domain: Domain, max_cuts: int = 8,
                    violation_min: float = 1e-4, coef_drop: float = 1e-10,
                    tol: Tolerances | None = None) -> list[Cut]:
    """Gomory MI cuts from tableau rows of fractional integer basic variables.

    ``view_rows``/``view_rhs`` are the rows the LP actually solved (model rows
    plus any active cut rows); ``domain`` supplies the global bounds used for
    complementing.  Fractional variables are visited ascending; every returned
    cut is violated by ``lp.primal`` by at least ``violation_min``.
    """
    tol = tol or Tolerances()
    if lp.status is not LpStatus.OPTIMAL:
        raise NotOptimal(f"LP status is {lp.status.value}")
    cuts: list[Cut] = []
    status = lp.basis.var_status
    for j in model.integer_set:
        if len(cuts) >= max_cuts:
            break
        if status[j] != VarStatus.BASIC:
            continue
        frac = lp.primal[j] - math.floor(lp.primal[j])
        if frac <= tol.int_tol or frac >= 1.0 - tol.int_tol:
            continue
        cut = _gomory_from_row(lp, view_rows, view_rhs, model, domain, j,
                               coef_drop, tol)
        if cut is not None and cut.violation(lp.primal) >= violation_min:
            cuts.append(cut)
    return cuts


def _gomory_from_row(lp, view_rows, view_rhs, model, domain, basic_var,
                     coef_drop, tol):
    n = model.num_vars
    m = view_rows.shape[0]
    row = tableau_row(lp, view_rows, view_rhs, basic_var)
    status = lp.basis.var_status

    # canonical form  x0 + sum(alpha_k * t_k) = beta  over shifted nonbasics t >= 0
    shifts = []  # (k, alpha, shift_bound, side, is_integer_t)
    beta = row.rhs
    for k in range(n + m):
        if k == basic_var or status[k] == VarStatus.BASIC:
            continue
        a = row.coeffs[k]
        if abs(a) <= coef_drop:
            continue
        if status[k] == VarStatus.FREE_NONBASIC:
            return None  # cannot complement a doubly-unbounded variable
        if k < n:
            gl, gu = domain.lower[k], domain.upper[k]
            integral_t = bool(model.integer_mask[k])
        else:
            gl, gu = 0.0, INF
            integral_t = False  # slack of a continuous-data row
        if status[k] == VarStatus.AT_LOWER:
            if gl == -INF:
                return None
            beta -= a * gl
            shifts.append((k, a, gl, "L", integral_t))
        else:
            if gu == INF:
                return None
            beta -= a * gu
            shifts.append((k, -a, gu, "U", integral_t))

    f0 = beta - math.floor(beta)
    if f0 <= 1e-6 or f0 >= 1.0 - 1e-6:
        return None

    # GMI coefficients on the shifted variables:  sum(gamma_k t_k) >= f0
    gammas = []
    for k, alpha, bound, side, integral_t in shifts:
        if integral_t:
            fk = alpha - math.floor(alpha)
            gamma = fk if fk <= f0 else f0 * (1.0 - fk) / (1.0 - f0)
        else:
            gamma = alpha if alpha >= 0 else f0 * (-alpha) / (1.0 - f0)
        gammas.append(gamma)

    # substitute t back to structural space, collecting a >= inequality
    coeffs = np.zeros(n)
    rhs_val = f0
    for (k, alpha, bound, side, _), gamma in zip(shifts, gammas):
        if gamma == 0.0:
            continue
        if k < n:
            if side == "L":     # t = x_k - bound
                coeffs[k] += gamma
                rhs_val += gamma * bound
            else:               # t = bound - x_k
                coeffs[k] -= gamma
                rhs_val -= gamma * bound
        else:                   # slack of view row i: t = s = rhs_i - A_i . x
            i = k - n
            coeffs -= gamma * view_rows[i]
            rhs_val -= gamma * view_rhs[i]

    # flip >= to the pool's <= convention
    le_coeffs = -coeffs
    le_rhs = -rhs_val
    return _finalize_cut(le_coeffs, le_rhs, "GOMORY", domain, coef_drop)


def _finalize_cut(coeffs: np.ndarray, rhs: float, origin: str, domain: Domain,
                  coef_drop: float) -> Cut | None:
    """Drop tiny coefficients, relaxing the rhs so validity is preserved."""
    entries = []
    for j in range(coeffs.shape[0]):
        c = coeffs[j]
        if c == 0.0:
            continue
        if abs(c) < coef_drop:
            worst = max(c * domain.lower[j], c * domain.upper[j])
            if not math.isfinite(worst):
                entries.append((j, float(c)))  # unbounded side: must keep it
            else:
                rhs += worst
            continue
        entries.append((j, float(c)))
    if not entries or not math.isfinite(rhs):
        return None
    return Cut(coeffs=tuple(entries), rhs=float(rhs), origin=origin)


# -- knapsack cover cuts -------------------------------------------------------

def generate_cover(row: np.ndarray, rhs: float, lp_point: np.ndarray,
                   binary_mask, violation_min: float = 1e-4) -> Cut | None:
    """Violated minimal cover cut for one <= row over its binary support.

    Binary variables with negative coefficients are complemented; any other
    variable with a nonzero coefficient is relaxed out through its bound
    contribution (no cut when that bound is infinite).
    """
    binary = set(int(j) for j in binary_mask)
    items = []   # (var, weight, complemented)
    budget = float(rhs)
    n = row.shape[0]
    for j in range(n):
        a = row[j]
        if a == 0.0:
            continue
        if j in binary:
            if a > 0:
                items.append((j, a, False))
            else:
                items.append((j, -a, True))   # x -> 1 - y
                budget -= a
        else:
            return None  # caller restricts rows to binary support
    if len(items) < 2:
        return None

    def frac_value(item):
        j, _, comp = item
        return 1.0 - lp_point[j] if comp else lp_point[j]

    # greedy cover: take items by descending LP value, index tie-break
    order = sorted(items, key=lambda it: (-frac_value(it), it[0]))
    cover = []
    weight = 0.0
    for it in order:
        cover.append(it)
        weight += it[1]
        if weight > budget + 1e-9:
            break
    else:
        return None  # all items fit: no cover exists

    # minimalize: drop items (ascending LP value, descending index) while still a cover
    for it in sorted(cover, key=lambda it: (frac_value(it), -it[0])):
        if weight - it[1] > budget + 1e-9:
            cover.remove(it)
            weight -= it[1]

    lhs_value = sum(frac_value(it) for it in cover)
    cut_rhs = float(len(cover) - 1)
    if lhs_value - cut_rhs < violation_min:
        return None

    coeffs = {}
    for j, _, comp in cover:
        if comp:      # (1 - x_j) term
            coeffs[j] = coeffs.get(j, 0.0) - 1.0
            cut_rhs -= 1.0
        else:
            coeffs[j] = coeffs.get(j, 0.0) + 1.0
    entries = tuple(sorted((j, c) for j, c in coeffs.items() if c != 0.0))
    return Cut(coeffs=entries, rhs=cut_rhs, origin="COVER")


def cover_candidate_rows(model: MipModel, domain: Domain) -> list[int]:
    """Rows whose nonzero support is entirely {0,1}-bounded integer variables."""
    dense = model.dense_matrix
    binaries = {j for j in model.integer_set
                if domain.lower[j] == 0.0 and domain.upper[j] == 1.0}
    rows = []
    for i in range(model.num_cons):
        nz = np.nonzero(dense[i])[0]
        if nz.size >= 2 and all(int(j) in binaries for j in nz):
            rows.append(i)
    return rows


# -- parallel root separation ---------------------------------------------------

def parallel_separate_root(model: MipModel, domain: Domain, lp: LpResult,
                           view_rows: np.ndarray, view_rhs: np.ndarray,
                           worker_count: int, run_tasks=None,
                           violation_min: float = 1e-4, coef_drop: float = 1e-10,
                           tol: Tolerances | None = None) -> list[Cut]:
    """Sharded root separation whose output equals sequential execution.

    Tasks (one Gomory task per fractional integer variable, one cover task per
    candidate row) are sharded task-index-mod-worker; results are reassembled
    in task order, so the cut list is a pure function of the inputs and is
    identical for every worker count and any completion timing.
    """
    tol = tol or Tolerances()
    if lp.status is not LpStatus.OPTIMAL:
        raise NotOptimal(f"LP status is {lp.status.value}")

    tasks = []
    status = lp.basis.var_status
    for j in model.integer_set:
        if status[j] != VarStatus.BASIC:
            continue
        frac = lp.primal[j] - math.floor(lp.primal[j])
        if tol.int_tol < frac < 1.0 - tol.int_tol:
            tasks.append(("gomory", j))
    dense = model.dense_matrix
    for i in cover_candidate_rows(model, domain):
        tasks.append(("cover", i))
    if not tasks:
        return []

    def run_one(task):
        kind, idx = task
        if kind == "gomory":
            cut = _gomory_from_row(lp, view_rows, view_rhs, model, domain, idx,
                                   coef_drop, tol)
            if cut is not None and cut.violation(lp.primal) >= violation_min:
                return [cut]
            return []
        cut = generate_cover(dense[idx], float(model.rhs[idx]), lp.primal,
                             [j for j in model.integer_set
                              if domain.lower[j] == 0.0 and domain.upper[j] == 1.0],
                             violation_min)
        return [cut] if cut is not None else []

    def run_shard(indices):
        out = {}
        for t in indices:
            out[t] = run_one(tasks[t])
        return out

    shards = [[t for t in range(len(tasks)) if t % worker_count == w]
              for w in range(worker_count)]
    shards = [s for s in shards if s]
    if run_tasks is None:
        shard_results = [run_shard(s) for s in shards]
    else:
        shard_results = run_tasks([(run_shard, (s,)) for s in shards])

    by_task: dict[int, list[Cut]] = {}
    for res in shard_results:
        by_task.update(res)
    cuts: list[Cut] = []
    for t in range(len(tasks)):
        cuts.extend(by_task.get(t, []))
    return cuts
