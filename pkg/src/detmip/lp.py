"""Dense bounded-variable primal simplex with deterministic pivoting.

The solver works on the equality form  A x + s = b  with structural bounds
l <= x <= u and slack bounds 0 <= s < inf.  Nonbasic variables sit at a bound
(or at 0 when free); the basis plus the status vector fully determine the
iterate, so every iteration refactorizes the basis and recomputes the point.
That costs a few extra flops at desk scale and buys exact reproducibility:
the result is a pure function of (matrix, bounds, costs, warm basis).

Pivot selection is Dantzig pricing with all ties broken by lowest variable
index; if the objective stalls for n+m consecutive pivots the solver switches
permanently to Bland's rule, which guarantees termination.  Phase 1 minimizes
the composite infeasibility sum (no big-M constants).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np
import scipy.linalg as sla

INF = math.inf

_RCOST_TOL = 1e-9
_PIVOT_TOL = 1e-10
_SINGULAR_TOL = 1e-11
_FEAS_TOL = 1e-7
_STALL_EPS = 1e-12


class LpError(Exception):
    pass


class NumericalFailure(LpError):
    """Basis singular beyond recovery; caller should re-solve from scratch."""


class NotBasic(LpError):
    pass


class NotOptimal(LpError):
    pass


class VarStatus(IntEnum):
    BASIC = 0
    AT_LOWER = 1
    AT_UPPER = 2
    FREE_NONBASIC = 3


# plain ints for the hot loops (enum attribute access is slow in bulk)
_BASIC = int(VarStatus.BASIC)
_AT_LOWER = int(VarStatus.AT_LOWER)
_AT_UPPER = int(VarStatus.AT_UPPER)
_FREE = int(VarStatus.FREE_NONBASIC)


class LpStatus(str, Enum):
    OPTIMAL = "OPTIMAL"
    INFEASIBLE = "INFEASIBLE"
    UNBOUNDED = "UNBOUNDED"
    ITERATION_LIMIT = "ITERATION_LIMIT"


@dataclass(frozen=True)
class Basis:
    """Status per variable (structurals then slacks) plus the basic order.

    ``basic_vars`` lists the basic variable indices ascending; position i in
    that tuple is row i of the tableau.  len(basic_vars) == row count.
    """

    var_status: tuple[int, ...]
    basic_vars: tuple[int, ...]


@dataclass(frozen=True)
class LpResult:
    status: LpStatus
    objective: float
    primal: np.ndarray          # structural variables only, length n
    basis: Basis
    iterations: int
    full_point: np.ndarray      # structurals + slacks, length n+m
    lower: np.ndarray           # bounds the solve used (n+m, read-only)
    upper: np.ndarray


class _Core:
    """Scratch state for one solve; single-threaded by construction."""

    def __init__(self, dense_rows: np.ndarray, rhs: np.ndarray,
                 cost: np.ndarray, lower: np.ndarray, upper: np.ndarray):
        self.m, n = dense_rows.shape
        self.n = n
        self.total = n + self.m
        self.F = np.hstack([dense_rows, np.eye(self.m)]) if self.m else dense_rows.copy()
        self.b = rhs
        self.c = np.concatenate([cost, np.zeros(self.m)])
        self.lo = np.concatenate([lower, np.zeros(self.m)])
        self.hi = np.concatenate([upper, np.full(self.m, INF)])
        self.status = np.empty(self.total, dtype=np.int8)
        self.iterations = 0
        self.bland = False
        self._stall = 0
        self._best_merit = INF

    # -- basis handling ---------------------------------------------------

    def scratch_basis(self):
        st = np.full(self.total, _FREE, dtype=np.int8)
        st[np.isfinite(self.hi)] = _AT_UPPER
        st[np.isfinite(self.lo)] = _AT_LOWER   # lower preferred when both finite
        st[self.n:] = _BASIC
        self.status = st

    def load_basis(self, basis: Basis):
        st = np.array(basis.var_status, dtype=np.int8)
        if st.shape != (self.total,):
            raise NumericalFailure("warm basis has wrong dimension")
        # Bounds may have changed since the basis was stored.
        lo_inf = ~np.isfinite(self.lo)
        hi_inf = ~np.isfinite(self.hi)
        bad = ((st == _AT_LOWER) & lo_inf) | ((st == _AT_UPPER) & hi_inf) \
            | ((st == _FREE) & ~(lo_inf & hi_inf))
        if np.any(bad):
            repl = np.full(self.total, _FREE, dtype=np.int8)
            repl[~hi_inf] = _AT_UPPER
            repl[~lo_inf] = _AT_LOWER
            st[bad] = repl[bad]
        self.status = st
        self._repair_basic_count()

    def _repair_basic_count(self):
        basic = np.nonzero(self.status == _BASIC)[0]
        excess = basic.shape[0] - self.m
        if excess > 0:
            for j in basic[::-1][:excess]:   # demote highest indices first
                self.status[j] = _AT_LOWER if self.lo[j] != -INF else (
                    _AT_UPPER if self.hi[j] != INF else _FREE)
        elif excess < 0:
            nonbasic = np.nonzero(self.status != _BASIC)[0]
            slacks_first = np.concatenate([nonbasic[nonbasic >= self.n],
                                           nonbasic[nonbasic < self.n]])
            for j in slacks_first[:-excess]:
                self.status[j] = _BASIC

    def basic_list(self) -> np.ndarray:
        return np.nonzero(self.status == _BASIC)[0]

    # -- iterate reconstruction -------------------------------------------

    def factorize(self, basic) -> tuple | None:
        if self.m == 0:
            return None
        B = self.F[:, basic]
        try:
            with warnings.catch_warnings():
                # exact singularity is detected below and surfaced as our error
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                lu, piv = sla.lu_factor(B, check_finite=False)
        except Exception as exc:  # LinAlgError on exact singularity
            raise NumericalFailure("singular basis") from exc
        if np.any(np.abs(np.diag(lu)) < _SINGULAR_TOL):
            raise NumericalFailure("numerically singular basis")
        return (lu, piv)

    def point(self, basic, fac) -> np.ndarray:
        x = np.zeros(self.total)
        at_lo = self.status == _AT_LOWER
        at_hi = self.status == _AT_UPPER
        x[at_lo] = self.lo[at_lo]
        x[at_hi] = self.hi[at_hi]
        if self.m:
            rhs_eff = self.b - self.F @ x
            xb = sla.lu_solve(fac, rhs_eff, check_finite=False)
            x[basic] = xb
        return x

    # -- pricing ----------------------------------------------------------

    def reduced_costs(self, basic, fac, basic_cost: np.ndarray) -> np.ndarray:
        if self.m:
            y = sla.lu_solve(fac, basic_cost, trans=1, check_finite=False)
            return self.cvec - self.F.T @ y
        return self.cvec.copy()

    def choose_entering(self, red: np.ndarray) -> tuple[int, int] | None:
        """Return (variable, direction) or None when priced out."""
        movable = (self.status != _BASIC) & (self.lo != self.hi)
        up_ok = movable & (((self.status == _AT_LOWER) & (red < -_RCOST_TOL))
                           | ((self.status == _FREE) & (red < -_RCOST_TOL)))
        dn_ok = movable & (((self.status == _AT_UPPER) & (red > _RCOST_TOL))
                           | ((self.status == _FREE) & (red > _RCOST_TOL)))
        any_ok = up_ok | dn_ok
        if not np.any(any_ok):
            return None
        if self.bland:
            j = int(np.argmax(any_ok))  # first improving index
        else:
            score = np.where(any_ok, np.abs(red), -INF)
            j = int(np.argmax(score))   # argmax takes the lowest index on ties
        return j, (1 if up_ok[j] else -1)

    def note_merit(self, merit: float):
        if merit < self._best_merit - _STALL_EPS:
            self._best_merit = merit
            self._stall = 0
        else:
            self._stall += 1
            if self._stall > self.total:
                self.bland = True


def _nonbasic_status(lo: float, hi: float) -> int:
    if lo != -INF:
        return VarStatus.AT_LOWER
    if hi != INF:
        return VarStatus.AT_UPPER
    return VarStatus.FREE_NONBASIC


def solve_lp(dense_rows: np.ndarray, rhs: np.ndarray, cost: np.ndarray,
             lower: np.ndarray, upper: np.ndarray,
             warm: Basis | None = None, iter_limit: int = 100_000) -> LpResult:
    """Minimize cost.x subject to dense_rows.x <= rhs and lower <= x <= upper.

    Raises :class:`NumericalFailure` when the (warm) basis goes singular; the
    caller decides whether to retry from a scratch basis.
    """
    if iter_limit < 1:
        raise ValueError("iter_limit must be >= 1")
    dense_rows = np.asarray(dense_rows, dtype=float)
    if dense_rows.ndim != 2:
        dense_rows = dense_rows.reshape(0, len(cost))
    core = _Core(dense_rows, np.asarray(rhs, dtype=float),
                 np.asarray(cost, dtype=float),
                 np.asarray(lower, dtype=float), np.asarray(upper, dtype=float))
    if np.any(core.lo > core.hi):
        return _result(core, LpStatus.INFEASIBLE)

    if warm is not None:
        core.load_basis(warm)
    else:
        core.scratch_basis()

    status = _phase1(core, iter_limit)
    if status is not None:
        return _result(core, status)
    status = _phase2(core, iter_limit)
    return _result(core, status)


def _phase1(core: _Core, iter_limit: int) -> LpStatus | None:
    """Drive the composite infeasibility sum to zero; None means feasible."""
    while True:
        basic = core.basic_list()
        fac = core.factorize(basic)
        x = core.point(basic, fac)
        sigma = np.zeros(len(basic))
        infeas = 0.0
        for i, j in enumerate(basic):
            if x[j] < core.lo[j] - _FEAS_TOL:
                sigma[i] = -1.0
                infeas += core.lo[j] - x[j]
            elif x[j] > core.hi[j] + _FEAS_TOL:
                sigma[i] = 1.0
                infeas += x[j] - core.hi[j]
        if infeas <= _FEAS_TOL:
            return None
        if core.iterations >= iter_limit:
            return LpStatus.ITERATION_LIMIT
        core.note_merit(infeas)
        core.cvec = np.zeros(core.total)
        red = core.reduced_costs(basic, fac, sigma)
        entering = core.choose_entering(red)
        if entering is None:
            return LpStatus.INFEASIBLE
        q, direction = entering
        w = sla.lu_solve(fac, core.F[:, q], check_finite=False) if core.m else np.zeros(0)
        _pivot_phase1(core, basic, x, w, q, direction)
        core.iterations += 1


def _ratio_test(core: _Core, basic, x, w, direction, phase1: bool):
    """First breakpoint along the entering ray.

    Returns (t, position, bound) for the blocking basic variable, or
    (inf, -1, 0) when nothing blocks.  Minimum ratio wins; ties within the
    pivot tolerance go to the lowest variable index (basic is ascending).
    """
    if len(basic) == 0:
        return INF, -1, 0.0
    delta = -direction * w
    lo = core.lo[basic]
    hi = core.hi[basic]
    xb = x[basic]
    moving_up = delta > _PIVOT_TOL
    moving_dn = delta < -_PIVOT_TOL
    if phase1:
        below = xb < lo - _FEAS_TOL
        above = xb > hi + _FEAS_TOL
        inside = ~below & ~above
        # infeasible variables block where they regain feasibility;
        # feasible ones block at the bound they are moving toward
        blocks_at_lo = (below & moving_up) | (inside & moving_dn & np.isfinite(lo))
        blocks_at_hi = (above & moving_dn) | (inside & moving_up & np.isfinite(hi))
    else:
        blocks_at_lo = moving_dn & np.isfinite(lo)
        blocks_at_hi = moving_up & np.isfinite(hi)
    target = np.where(blocks_at_lo, lo, hi)
    blocks = blocks_at_lo | blocks_at_hi
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(blocks, (target - xb) / delta, INF)
    t = np.maximum(t, 0.0)
    t_min = t.min()
    if not math.isfinite(t_min):
        return INF, -1, 0.0
    pos = int(np.argmax(t <= t_min + _PIVOT_TOL))  # lowest index among ties
    return float(t[pos]), pos, float(target[pos])


def _pivot_phase1(core: _Core, basic, x, w, q, direction):
    # First breakpoint along the ray: feasible basics block at their bounds,
    # infeasible basics block when they reach the bound they violate.
    t_best, leave_pos, leave_bound = _ratio_test(core, basic, x, w, direction,
                                                 phase1=True)
    t_flip = core.hi[q] - core.lo[q] if core.status[q] != _FREE else INF
    if t_flip < t_best - _PIVOT_TOL:
        core.status[q] = _AT_UPPER if direction > 0 else _AT_LOWER
        return
    if leave_pos < 0:
        # merit strictly decreases and is bounded below, so a breakpoint exists
        raise NumericalFailure("phase-1 ray without breakpoint")
    leaver = basic[leave_pos]
    core.status[q] = _BASIC
    core.status[leaver] = (_AT_LOWER if leave_bound == core.lo[leaver]
                           else _AT_UPPER)


def _phase2(core: _Core, iter_limit: int) -> LpStatus:
    core._best_merit = INF
    core._stall = 0
    while True:
        basic = core.basic_list()
        fac = core.factorize(basic)
        x = core.point(basic, fac)
        merit = float(core.c @ x)
        core.note_merit(merit)
        core.cvec = core.c
        red = core.reduced_costs(basic, fac, core.c[basic])
        entering = core.choose_entering(red)
        if entering is None:
            return LpStatus.OPTIMAL
        if core.iterations >= iter_limit:
            return LpStatus.ITERATION_LIMIT
        q, direction = entering
        w = sla.lu_solve(fac, core.F[:, q], check_finite=False) if core.m else np.zeros(0)

        t_best, leave_pos, leave_bound = _ratio_test(core, basic, x, w,
                                                     direction, phase1=False)
        t_flip = core.hi[q] - core.lo[q] if core.status[q] != _FREE else INF
        if leave_pos < 0 and t_flip == INF:
            return LpStatus.UNBOUNDED
        core.iterations += 1
        if t_flip < t_best - _PIVOT_TOL:
            core.status[q] = _AT_UPPER if direction > 0 else _AT_LOWER
            continue
        leaver = basic[leave_pos]
        core.status[q] = _BASIC
        core.status[leaver] = (_AT_LOWER if leave_bound == core.lo[leaver]
                               else _AT_UPPER)


def _result(core: _Core, status: LpStatus) -> LpResult:
    try:
        basic = core.basic_list()
        fac = core.factorize(basic)
        x = core.point(basic, fac)
    except NumericalFailure:
        x = np.zeros(core.total)
        basic = core.basic_list()
    objective = float(core.c @ x)
    if status is LpStatus.INFEASIBLE:
        objective = INF
    elif status is LpStatus.UNBOUNDED:
        objective = -INF
    lo = core.lo.copy()
    hi = core.hi.copy()
    lo.setflags(write=False)
    hi.setflags(write=False)
    primal = x[:core.n].copy()
    primal.setflags(write=False)
    full = x.copy()
    full.setflags(write=False)
    return LpResult(
        status=status, objective=objective, primal=primal,
        basis=Basis(var_status=tuple(int(s) for s in core.status),
                    basic_vars=tuple(int(j) for j in basic)),
        iterations=core.iterations, full_point=full, lower=lo, upper=hi,
    )


def solve_model_lp(model, bounds_override, warm: Basis | None = None,
                   iter_limit: int = 100_000) -> LpResult:
    """LP relaxation of a model under overridden bounds (integrality dropped)."""
    return solve_lp(model.dense_matrix, model.rhs, model.objective,
                    bounds_override.lower, bounds_override.upper,
                    warm=warm, iter_limit=iter_limit)


@dataclass(frozen=True)
class TableauRow:
    """Row of B^-1 [A | I]: coeffs over structurals+slacks with its rhs.

    Every point satisfying the equality system A x + s = b satisfies
    coeffs . (x, s) == rhs exactly (it is a linear identity).
    """

    coeffs: np.ndarray
    rhs: float
    basic_var: int


def tableau_row(result: LpResult, dense_rows: np.ndarray, rhs: np.ndarray,
                basic_var: int) -> TableauRow:
    """Tableau row expressing ``basic_var`` in terms of nonbasic variables."""
    if result.status is not LpStatus.OPTIMAL:
        raise NotOptimal(f"LP status is {result.status.value}")
    basic = list(result.basis.basic_vars)
    if basic_var not in basic:
        raise NotBasic(f"variable {basic_var} is not basic")
    m, n = dense_rows.shape
    F = np.hstack([dense_rows, np.eye(m)])
    B = F[:, basic]
    pos = basic.index(basic_var)
    e = np.zeros(m)
    e[pos] = 1.0
    try:
        z = np.linalg.solve(B.T, e)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("singular basis in tableau extraction") from exc
    coeffs = F.T @ z
    coeffs[basic_var] = 1.0  # exact by construction; clear rounding dust
    row_rhs = float(z @ rhs)
    coeffs.setflags(write=False)
    return TableauRow(coeffs=coeffs, rhs=row_rhs, basic_var=basic_var)
