"""Shared test helpers: instance generators, fixture loading, validity oracles."""

from __future__ import annotations

import itertools
import math
from pathlib import Path

import numpy as np

from detmip.model import MipModel, Tolerances

FIXTURE_DIR = Path(__file__).parent / "fixtures"


def random_mip(seed: int, allow_continuous: bool = False,
               feasible_only: bool = False) -> MipModel:
    """Small random MIP with enumerable integer grid (product of spans <= ~1e5)."""
    rng = np.random.default_rng(seed)
    n_int = int(rng.integers(2, 9))
    n_cont = int(rng.integers(0, 3)) if allow_continuous else 0
    n = n_int + n_cont
    m = int(rng.integers(1, 8))
    A = np.round(rng.uniform(-4, 5, (m, n)), 1)
    A[rng.random((m, n)) < 0.3] = 0.0
    lo = np.zeros(n)
    hi = np.empty(n)
    budget = 80_000 if n_cont == 0 else 600
    span = 1
    for j in range(n_int):
        s = int(rng.integers(1, 6))
        while span * (s + 1) > budget and s > 1:
            s -= 1
        span *= s + 1
        hi[j] = float(s)
    for j in range(n_int, n):
        hi[j] = float(rng.integers(2, 6))
    x0 = np.floor(rng.uniform(lo, hi + 0.999))
    slackiness = rng.uniform(0.0, 2.0, m)
    if not feasible_only and rng.random() < 0.15:
        slackiness = slackiness - 4.0  # likely infeasible
    b = A @ x0 + np.round(slackiness, 2)
    c = np.round(rng.uniform(-5, 5, n), 1)
    sense = "MAX" if rng.random() < 0.4 else "MIN"
    senses = ["LE"] * m
    for i in range(m):
        if rng.random() < 0.2:
            senses[i] = "GE"
            b[i] = (A[i] @ x0) - abs(slackiness[i])
    return MipModel.build(c, A, senses, b, lo, hi, list(range(n_int)),
                          objective_sense=sense, name=f"rand{seed}")


def market_split(seed: int, n: int = 14, m: int = 3) -> MipModel:
    """Equality-knapsack instances that resist cuts and heuristics."""
    rng = np.random.default_rng(seed)
    A = rng.integers(0, 50, (m, n)).astype(float)
    d = np.floor(A.sum(axis=1) / 2.0)
    c = rng.integers(1, 10, n).astype(float)
    return MipModel.build(c, A, ["EQ"] * m, d, np.zeros(n), np.ones(n),
                          list(range(n)), objective_sense="MAX",
                          name=f"msplit{seed}_{n}")


def hard_knapsack(seed: int, n: int = 22) -> MipModel:
    """Strongly correlated knapsack: profits = weights + 10, half capacity."""
    rng = np.random.default_rng(seed)
    w = rng.integers(20, 70, n).astype(float)
    p = w + 10.0
    cap = math.floor(w.sum() / 2.0)
    return MipModel.build(p, [w], ["LE"], [cap], np.zeros(n), np.ones(n),
                          list(range(n)), objective_sense="MAX",
                          name=f"hardknap{seed}_{n}")


def fixture_paths() -> list[Path]:
    return sorted(FIXTURE_DIR.glob("*.mps"))


def fixture_models() -> list[MipModel]:
    from detmip.model import parse_mps

    return [parse_mps(p.read_text()) for p in fixture_paths()]


def enumerate_integer_points(model: MipModel, tol: Tolerances | None = None,
                             cap: int = 1 << 17):
    """All feasible points of pure-integer models; full grids must be small."""
    tol = tol or Tolerances()
    ints = list(model.integer_set)
    assert len(ints) == model.num_vars, "pure-integer models only"
    total = 1
    for j in ints:
        total *= int(model.upper[j] - model.lower[j]) + 1
        assert total <= cap, "grid too large for enumeration"
    ranges = [np.arange(model.lower[j], model.upper[j] + 0.5) for j in ints]
    out = []
    dense = model.dense_matrix
    for assign in itertools.product(*ranges):
        x = np.array(assign, dtype=float)
        if model.num_cons == 0 or np.all(dense @ x <= model.rhs + tol.feas_tol):
            out.append(x)
    return out


def max_cut_activity(model: MipModel, cut, assignment: dict[int, float]):
    """Maximize the cut lhs over the continuous part with integers fixed.

    Returns None when that integer assignment is infeasible.
    """
    from scipy.optimize import linprog

    INF = math.inf
    obj = np.zeros(model.num_vars)
    for j, c in cut.coeffs:
        obj[j] = -c  # linprog minimizes
    bounds = []
    for j in range(model.num_vars):
        if j in assignment:
            bounds.append((assignment[j], assignment[j]))
        else:
            lo = None if model.lower[j] == -INF else model.lower[j]
            hi = None if model.upper[j] == INF else model.upper[j]
            bounds.append((lo, hi))
    res = linprog(obj, A_ub=model.dense_matrix if model.num_cons else None,
                  b_ub=model.rhs if model.num_cons else None,
                  bounds=bounds, method="highs")
    if not res.success:
        return None
    return -res.fun


def assert_cut_valid(model: MipModel, cut, tol: Tolerances | None = None):
    """Brute-force: no integer-feasible point violates the cut beyond feas_tol."""
    tol = tol or Tolerances()
    ints = list(model.integer_set)
    ranges = [np.arange(model.lower[j], model.upper[j] + 0.5) for j in ints]
    pure = len(ints) == model.num_vars
    dense = model.dense_matrix
    for assign in itertools.product(*ranges):
        if pure:
            x = np.array(assign, dtype=float)
            if model.num_cons and not np.all(dense @ x <= model.rhs + tol.feas_tol):
                continue
            violation = cut.violation(x)
        else:
            act = max_cut_activity(model, cut, dict(zip(ints, assign)))
            if act is None:
                continue
            violation = act - cut.rhs
        assert violation <= tol.feas_tol, (
            f"cut {cut.coeffs} <= {cut.rhs} violated by {violation} at {assign}")
