"""Bounded-variable simplex: correctness vs vertex enumeration, warm starts,
determinism, tableau extraction."""

import itertools
import math

import numpy as np
import pytest

from detmip import lp as L

INF = math.inf


def vertex_enum(A, b, c, lo, hi):
    """Optimal value by enumerating candidate vertices (finite bounds only)."""
    m, n = A.shape
    rows = [(A[i], b[i]) for i in range(m)]
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        rows.append((e, hi[j]))
        rows.append((-e, -lo[j]))
    best = INF
    for subset in itertools.combinations(range(len(rows)), n):
        M = np.array([rows[i][0] for i in subset])
        v = np.array([rows[i][1] for i in subset])
        try:
            x = np.linalg.solve(M, v)
        except np.linalg.LinAlgError:
            continue
        if (np.all(A @ x <= b + 1e-9) and np.all(x >= lo - 1e-9)
                and np.all(x <= hi + 1e-9)):
            best = min(best, float(c @ x))
    return best


def random_lp(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    m = int(rng.integers(0, 6))
    A = np.round(rng.uniform(-3, 3, (m, n)), 1)
    lo = np.round(rng.uniform(-3, 0, n), 1)
    hi = lo + np.round(rng.uniform(0.5, 4, n), 1)
    x0 = rng.uniform(lo, hi)
    b = A @ x0 + np.round(rng.uniform(0, 2, m), 2)
    c = np.round(rng.uniform(-2, 2, n), 1)
    return A, b, c, lo, hi


class TestSolveLp:
    def test_two_var_vertex(self):
        # min -x-y st x+y<=1, x,y in [0,1]: optimum -1; the deterministic
        # pivot rule (lowest index on ties) lands on vertex (1, 0)
        res = L.solve_lp(np.array([[1.0, 1.0]]), np.array([1.0]),
                         np.array([-1.0, -1.0]), np.zeros(2), np.ones(2))
        assert res.status is L.LpStatus.OPTIMAL
        assert res.objective == pytest.approx(-1.0, abs=1e-9)
        assert np.array_equal(res.primal, [1.0, 0.0])

    def test_no_rows_bound_optimum(self):
        res = L.solve_lp(np.zeros((0, 1)), np.zeros(0), np.array([1.0]),
                         np.array([0.0]), np.array([INF]))
        assert res.status is L.LpStatus.OPTIMAL
        assert res.objective == 0.0
        assert res.primal[0] == 0.0

    def test_unbounded(self):
        res = L.solve_lp(np.zeros((0, 1)), np.zeros(0), np.array([-1.0]),
                         np.array([0.0]), np.array([INF]))
        assert res.status is L.LpStatus.UNBOUNDED

    def test_iteration_limit_returns_partial_basis(self):
        A = np.array([[1.0, 1.0, 1.0], [1.0, -1.0, 0.0]])
        res = L.solve_lp(A, np.array([2.0, 0.5]), np.array([-3.0, -2.0, -1.0]),
                         np.zeros(3), np.full(3, 4.0), iter_limit=1)
        assert res.status is L.LpStatus.ITERATION_LIMIT
        assert res.iterations == 1
        full = L.solve_lp(A, np.array([2.0, 0.5]), np.array([-3.0, -2.0, -1.0]),
                          np.zeros(3), np.full(3, 4.0))
        assert full.iterations > 1
        resumed = L.solve_lp(A, np.array([2.0, 0.5]), np.array([-3.0, -2.0, -1.0]),
                             np.zeros(3), np.full(3, 4.0), warm=res.basis)
        assert resumed.status is L.LpStatus.OPTIMAL
        assert resumed.objective == pytest.approx(full.objective, abs=1e-9)

    def test_infeasible(self):
        res = L.solve_lp(np.array([[-1.0], [1.0]]), np.array([-2.0, 1.0]),
                         np.array([0.0]), np.array([0.0]), np.array([10.0]))
        assert res.status is L.LpStatus.INFEASIBLE

    def test_iter_limit_precondition(self):
        with pytest.raises(ValueError):
            L.solve_lp(np.zeros((0, 1)), np.zeros(0), np.array([1.0]),
                       np.array([0.0]), np.array([1.0]), iter_limit=0)

    def test_matches_vertex_enumeration(self):
        for seed in range(120):
            A, b, c, lo, hi = random_lp(seed)
            res = L.solve_lp(A, b, c, lo, hi)
            ref = vertex_enum(A, b, c, lo, hi)
            assert res.status is L.LpStatus.OPTIMAL
            assert res.objective == pytest.approx(ref, abs=1e-7), seed

    def test_optimal_primal_is_feasible(self):
        for seed in range(60):
            A, b, c, lo, hi = random_lp(seed)
            res = L.solve_lp(A, b, c, lo, hi)
            if res.status is not L.LpStatus.OPTIMAL:
                continue
            x = res.primal
            if A.shape[0]:
                assert np.all(A @ x <= b + 1e-6)
            assert np.all(x >= lo - 1e-9) and np.all(x <= hi + 1e-9)

    def test_bit_identical_repeats(self):
        A, b, c, lo, hi = random_lp(5)
        r1 = L.solve_lp(A, b, c, lo, hi)
        r2 = L.solve_lp(A, b, c, lo, hi)
        assert r1.basis == r2.basis
        assert np.array_equal(r1.primal, r2.primal)
        assert r1.objective == r2.objective
        assert r1.iterations == r2.iterations

    def test_warm_equals_cold_after_bound_change(self):
        for seed in range(60):
            A, b, c, lo, hi = random_lp(seed)
            if A.shape[1] < 2:
                continue
            cold = L.solve_lp(A, b, c, lo, hi)
            if cold.status is not L.LpStatus.OPTIMAL:
                continue
            hi2 = hi.copy()
            hi2[0] = lo[0] + 0.5 * (hi[0] - lo[0])
            cold2 = L.solve_lp(A, b, c, lo, hi2)
            warm2 = L.solve_lp(A, b, c, lo, hi2, warm=cold.basis)
            assert warm2.status == cold2.status
            if cold2.status is L.LpStatus.OPTIMAL:
                assert warm2.objective == pytest.approx(cold2.objective, abs=1e-9)

    def test_child_bound_monotone(self):
        for seed in range(40):
            A, b, c, lo, hi = random_lp(seed)
            parent = L.solve_lp(A, b, c, lo, hi)
            if parent.status is not L.LpStatus.OPTIMAL:
                continue
            hi2 = hi.copy()
            hi2[0] = 0.5 * (lo[0] + hi[0])
            child = L.solve_lp(A, b, c, lo, hi2, warm=parent.basis)
            if child.status is L.LpStatus.OPTIMAL:
                assert child.objective >= parent.objective - 1e-9

    def test_fixed_variables_do_not_cycle(self):
        res = L.solve_lp(np.array([[1.0, 1.0]]), np.array([3.0]),
                         np.array([-1.0, -1.0]), np.array([1.0, 0.0]),
                         np.array([1.0, 5.0]))
        assert res.status is L.LpStatus.OPTIMAL
        assert res.primal[0] == 1.0
        assert res.objective == pytest.approx(-3.0)


class TestTableauRow:
    def test_identity_basis_row(self):
        # slack basic: requesting it returns the bound-shifted constraint row
        A = np.array([[2.0, 3.0]])
        b = np.array([12.0])
        res = L.solve_lp(A, b, np.array([0.0, 0.0]), np.zeros(2), np.ones(2) * 4)
        slack = 2
        assert slack in res.basis.basic_vars
        row = L.tableau_row(res, A, b, slack)
        assert np.allclose(row.coeffs, [2.0, 3.0, 1.0])
        assert row.rhs == pytest.approx(12.0)

    def test_not_basic(self):
        A = np.array([[1.0, 1.0]])
        res = L.solve_lp(A, np.array([1.0]), np.array([-1.0, -1.0]),
                         np.zeros(2), np.ones(2))
        nonbasic = [j for j in range(3) if j not in res.basis.basic_vars][0]
        with pytest.raises(L.NotBasic):
            L.tableau_row(res, A, np.array([1.0]), nonbasic)

    def test_not_optimal(self):
        A = np.array([[1.0, 1.0, 1.0], [1.0, -1.0, 0.0]])
        res = L.solve_lp(A, np.array([2.0, 0.5]), np.array([-3.0, -2.0, -1.0]),
                         np.zeros(3), np.full(3, 4.0), iter_limit=1)
        with pytest.raises(L.NotOptimal):
            L.tableau_row(res, A, np.array([2.0, 0.5]), 0)

    def test_row_identity_at_all_vertices(self):
        # r . (x, s) == rhs for every vertex of the polytope
        A = np.array([[1.0, 2.0], [3.0, 1.0]])
        b = np.array([4.0, 6.0])
        lo = np.zeros(2)
        hi = np.full(2, 3.0)
        res = L.solve_lp(A, b, np.array([-1.0, -1.0]), lo, hi)
        assert res.status is L.LpStatus.OPTIMAL
        for bv in res.basis.basic_vars:
            row = L.tableau_row(res, A, b, bv)
            for x in itertools.product(np.linspace(0, 3, 4), repeat=2):
                x = np.array(x)
                if np.all(A @ x <= b + 1e-12):
                    s = b - A @ x
                    full = np.concatenate([x, s])
                    assert row.coeffs @ full == pytest.approx(row.rhs, abs=1e-8)
