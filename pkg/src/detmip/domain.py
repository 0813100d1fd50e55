"""Variable-domain management: bound journals, propagation, branching, pruning.

A :class:`Domain` owns mutable per-variable bounds plus an ordered journal of
every change, so any node's domain can be replayed exactly from its parent.
Propagation is activity-based tightening over the normalized <= rows, rounding
integer bounds, iterated to a fixed point with a deterministic (ascending row)
revisit order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import MipModel, Tolerances

INF = math.inf


class DomainError(Exception):
    pass


class NotFractional(DomainError):
    pass


class NotInteger(DomainError):
    pass


class BranchDir(str, Enum):
    DOWN = "DOWN"
    UP = "UP"


class PropStatus(str, Enum):
    REDUCED = "REDUCED"
    UNCHANGED = "UNCHANGED"
    INFEASIBLE = "INFEASIBLE"


@dataclass(frozen=True)
class BoundChange:
    var: int
    which: str     # "L" or "U"
    old: float
    new: float
    reason: str    # BRANCH | PROP | CONFLICT | GLOBAL | FIX


@dataclass(frozen=True)
class PropResult:
    status: PropStatus
    rounds: int
    tightenings: int


class Domain:
    """Mutable bounds with a change journal; owned by exactly one state."""

    def __init__(self, lower: np.ndarray, upper: np.ndarray,
                 journal: list[BoundChange] | None = None, infeasible: bool = False):
        self.lower = np.array(lower, dtype=float)
        self.upper = np.array(upper, dtype=float)
        self.journal: list[BoundChange] = list(journal or [])
        self.infeasible = infeasible

    @classmethod
    def from_model(cls, model: MipModel) -> "Domain":
        d = cls(model.lower, model.upper)
        if np.any(d.lower > d.upper):
            d.infeasible = True
        return d

    def copy(self) -> "Domain":
        return Domain(self.lower, self.upper, self.journal, self.infeasible)

    def child(self) -> "Domain":
        """Copy with an empty journal: changes recorded relative to here."""
        return Domain(self.lower, self.upper, [], self.infeasible)

    def set_lower(self, var: int, value: float, reason: str) -> bool:
        if value <= self.lower[var] + 1e-12:
            return False
        self.journal.append(BoundChange(var, "L", float(self.lower[var]), float(value), reason))
        self.lower[var] = value
        if value > self.upper[var] + 1e-9:
            self.infeasible = True
        return True

    def set_upper(self, var: int, value: float, reason: str) -> bool:
        if value >= self.upper[var] - 1e-12:
            return False
        self.journal.append(BoundChange(var, "U", float(self.upper[var]), float(value), reason))
        self.upper[var] = value
        if value < self.lower[var] - 1e-9:
            self.infeasible = True
        return True

    def replay(self, entries) -> bool:
        """Apply journal entries from another lineage; False on conflict."""
        for e in entries:
            if e.which == "L":
                self.set_lower(e.var, e.new, e.reason)
            else:
                self.set_upper(e.var, e.new, e.reason)
            if self.infeasible:
                return False
        return True

    def fixed_count(self, integer_set) -> int:
        return sum(1 for j in integer_set if self.lower[j] == self.upper[j])

    def signature(self) -> tuple:
        return (tuple(self.lower.tolist()), tuple(self.upper.tolist()), self.infeasible)


def propagate(domain: Domain, model: MipModel, max_rounds: int = 100,
              tol: Tolerances | None = None) -> PropResult:
    """Activity-based bound tightening to a fixed point over all <= rows."""
    tol = tol or Tolerances()
    if domain.infeasible:
        return PropResult(PropStatus.INFEASIBLE, 0, 0)

    dense = model.dense_matrix
    int_mask = model.integer_mask
    support = model.row_support
    tight_total = 0
    rounds = 0
    changed = True
    while changed and rounds < max_rounds:
        changed = False
        rounds += 1
        for i in range(model.num_cons):
            nz = support[i]
            if nz.size == 0:
                if 0.0 > model.rhs[i] + tol.feas_tol:
                    domain.infeasible = True
                    return PropResult(PropStatus.INFEASIBLE, rounds, tight_total)
                continue
            a = dense[i, nz]
            contrib = np.where(a > 0, a * domain.lower[nz], a * domain.upper[nz])
            finite = np.isfinite(contrib)
            inf_count = int(nz.size - finite.sum())
            min_act = float(contrib[finite].sum())
            if inf_count == 0 and min_act > model.rhs[i] + tol.feas_tol:
                domain.infeasible = True
                return PropResult(PropStatus.INFEASIBLE, rounds, tight_total)
            if inf_count > 1:
                continue  # no finite residual activity for any variable
            if inf_count == 1:
                residual = np.full(nz.size, INF)
                residual[~finite] = min_act  # only the infinite contributor deduces
            else:
                residual = min_act - contrib
            with np.errstate(invalid="ignore"):
                limits = (model.rhs[i] - residual) / a
            for k in range(nz.size):
                if not math.isfinite(residual[k]):
                    continue
                j = int(nz[k])
                limit = limits[k]
                if a[k] > 0:
                    new_up = math.floor(limit + tol.int_tol) if int_mask[j] else limit
                    if new_up < domain.upper[j] - 1e-9:
                        if domain.set_upper(j, new_up, "PROP"):
                            tight_total += 1
                            changed = True
                else:
                    new_lo = math.ceil(limit - tol.int_tol) if int_mask[j] else limit
                    if new_lo > domain.lower[j] + 1e-9:
                        if domain.set_lower(j, new_lo, "PROP"):
                            tight_total += 1
                            changed = True
                if domain.infeasible:
                    return PropResult(PropStatus.INFEASIBLE, rounds, tight_total)
    status = PropStatus.REDUCED if tight_total else PropStatus.UNCHANGED
    return PropResult(status, rounds, tight_total)


def apply_branch(domain: Domain, var: int, direction: BranchDir, pivot: float,
                 model: MipModel, tol: Tolerances | None = None) -> Domain:
    """Child domain with the complementary bound of one branching decision."""
    tol = tol or Tolerances()
    if var not in model.integer_set:
        raise NotInteger(f"variable {var} is not integer")
    frac = pivot - math.floor(pivot)
    if frac <= tol.int_tol or frac >= 1.0 - tol.int_tol:
        raise NotFractional(f"pivot {pivot} is integral within tolerance")
    child = domain.child()
    if direction is BranchDir.DOWN:
        child.set_upper(var, math.floor(pivot), "BRANCH")
    else:
        child.set_lower(var, math.ceil(pivot), "BRANCH")
    return child


def journal_conflicts(entries, global_domain: Domain, tol: Tolerances) -> bool:
    """True when any journal bound is incompatible with the global domain."""
    for e in entries:
        if e.which == "L" and e.new > global_domain.upper[e.var] + tol.feas_tol:
            return True
        if e.which == "U" and e.new < global_domain.lower[e.var] - tol.feas_tol:
            return True
    return False


def prune_queue(queue, global_domain: Domain, incumbent_obj: float,
                tol: Tolerances | None = None) -> int:
    """Drop queue nodes dominated by the incumbent or outside the global domain."""
    tol = tol or Tolerances()

    def keep(node) -> bool:
        if node.lower_bound >= incumbent_obj - tol.opt_gap_abs:
            return False
        if journal_conflicts(node.branch_journal, global_domain, tol):
            return False
        return True

    return queue.retain(keep)
