"""Conflict learning: branch-path no-goods with a deduplicating, aging pool.

When a dive path proves infeasible, the negation of its branching decisions
becomes a disjunction ("no-good") that every feasible point must satisfy.
Unit propagation over the pool turns almost-violated no-goods into bound
tightenings; fully violated ones signal infeasibility.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .domain import Domain, PropResult, PropStatus
from .model import Tolerances


@dataclass(frozen=True)
class ConflictLiteral:
    var: int
    kind: str      # "GE" or "LE"
    value: float


@dataclass
class ConflictConstraint:
    """Disjunction of bound literals; at least one must hold. id -1 = unpooled."""

    literals: tuple[ConflictLiteral, ...]
    age: int = 0
    id: int = -1

    def key(self) -> tuple:
        return tuple((l.var, l.kind, l.value) for l in self.literals)


def derive_conflict(journal, reason: str = "infeasible") -> ConflictConstraint | None:
    """No-good forbidding the branch combination of an infeasible path.

    Repeated branches on one variable merge per (var, side): the negation of a
    conjunction is the union of the negated literals, so the WEAKEST negation
    per side is kept.  Returns None for a branch-free (root) infeasibility.
    """
    merged: dict[tuple[int, str], float] = {}
    order: list[tuple[int, str]] = []
    for e in journal:
        if e.reason != "BRANCH":
            continue
        if e.which == "U":   # branch x <= F  ->  literal x >= F+1
            key = (e.var, "GE")
            lit_val = e.new + 1.0
        else:                # branch x >= C  ->  literal x <= C-1
            key = (e.var, "LE")
            lit_val = e.new - 1.0
        if key not in merged:
            merged[key] = lit_val
            order.append(key)
        else:
            # weakest literal wins the disjunction: smallest GE / largest LE
            if key[1] == "GE":
                merged[key] = min(merged[key], lit_val)
            else:
                merged[key] = max(merged[key], lit_val)
    if not merged:
        return None
    literals = tuple(ConflictLiteral(var, kind, merged[(var, kind)])
                     for var, kind in order)
    return ConflictConstraint(literals=literals)


class ConflictPool:
    """Ordered no-good pool mirroring CutPool semantics (dedup, aging)."""

    def __init__(self, max_age: int = 20, capacity: int = 500):
        self.constraints: list[ConflictConstraint] = []
        self.max_age = max_age
        self.capacity = capacity
        self._next_id = 0
        self._keys: set[tuple] = set()

    def add(self, conflicts) -> int:
        accepted = 0
        for c in conflicts:
            key = c.key()
            if key in self._keys:
                continue
            pooled = replace(c, id=self._next_id, age=0)
            self._next_id += 1
            self.constraints.append(pooled)
            self._keys.add(key)
            accepted += 1
        while len(self.constraints) > self.capacity:
            victim = max(self.constraints, key=lambda c: (c.age, c.id))
            self.constraints.remove(victim)
            self._keys.discard(victim.key())
        return accepted

    def copy(self) -> "ConflictPool":
        dup = ConflictPool(self.max_age, self.capacity)
        dup.constraints = [replace(c) for c in self.constraints]
        dup._next_id = self._next_id
        dup._keys = set(self._keys)
        return dup

    def truncated(self, top_recent: int) -> "ConflictPool":
        dup = ConflictPool(self.max_age, self.capacity)
        dup.constraints = [replace(c) for c in self.constraints[-top_recent:]]
        dup._next_id = self._next_id
        dup._keys = {c.key() for c in dup.constraints}
        return dup

    def signature(self) -> tuple:
        return tuple((c.id, c.age, c.key()) for c in self.constraints)


def conflict_age(pool: ConflictPool, useful_ids) -> int:
    """Age non-useful constraints, refresh useful ones, evict the expired."""
    useful = set(useful_ids)
    kept: list[ConflictConstraint] = []
    evicted = 0
    for c in pool.constraints:
        if c.id in useful:
            kept.append(replace(c, age=0))
        elif c.age + 1 > pool.max_age:
            evicted += 1
            pool._keys.discard(c.key())
        else:
            kept.append(replace(c, age=c.age + 1))
    pool.constraints = kept
    return evicted


def conflict_propagate(domain: Domain, pool: ConflictPool,
                       tol: Tolerances | None = None,
                       fired_ids: set | None = None) -> PropResult:
    """Unit propagation over no-goods, ascending id, to a fixed point."""
    tol = tol or Tolerances()
    if domain.infeasible:
        return PropResult(PropStatus.INFEASIBLE, 0, 0)
    tightenings = 0
    rounds = 0
    changed = True
    while changed:
        changed = False
        rounds += 1
        for c in pool.constraints:
            satisfied = False
            undetermined = []
            for lit in c.literals:
                if lit.kind == "GE":
                    if domain.lower[lit.var] >= lit.value - tol.int_tol:
                        satisfied = True
                        break
                    if domain.upper[lit.var] < lit.value - tol.int_tol:
                        continue  # certainly violated
                else:
                    if domain.upper[lit.var] <= lit.value + tol.int_tol:
                        satisfied = True
                        break
                    if domain.lower[lit.var] > lit.value + tol.int_tol:
                        continue
                undetermined.append(lit)
            if satisfied:
                continue
            if not undetermined:
                domain.infeasible = True
                if fired_ids is not None:
                    fired_ids.add(c.id)
                return PropResult(PropStatus.INFEASIBLE, rounds, tightenings)
            if len(undetermined) == 1:
                lit = undetermined[0]
                did = (domain.set_lower(lit.var, lit.value, "CONFLICT")
                       if lit.kind == "GE"
                       else domain.set_upper(lit.var, lit.value, "CONFLICT"))
                if did:
                    tightenings += 1
                    changed = True
                    if fired_ids is not None:
                        fired_ids.add(c.id)
                    if domain.infeasible:
                        return PropResult(PropStatus.INFEASIBLE, rounds, tightenings)
    status = PropStatus.REDUCED if tightenings else PropStatus.UNCHANGED
    return PropResult(status, rounds, tightenings)
