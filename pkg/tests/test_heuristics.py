"""Randomized rounding, RENS, RINS, and the parallel root scheme."""

import itertools

import numpy as np
import pytest

from detmip import lp as L
from detmip.config import SolverConfig
from detmip.domain import Domain
from detmip.heuristics import (
    HeuristicTag, parallel_root_heuristics, randomized_rounding, rens, rins,
)
from detmip.model import MipModel, brute_force_optimum, check_feasible
from detmip.runners import ThreadRunner

CONFIG = SolverConfig()


def lp_point(model):
    res = L.solve_lp(model.dense_matrix, model.rhs, model.objective,
                     model.lower, model.upper)
    assert res.status is L.LpStatus.OPTIMAL
    return res.primal


def knapsack():
    return MipModel.build([-5, -4, -3], [[2, 3, 1]], ["LE"], [4],
                          [0, 0, 0], [2, 2, 2], [0, 1, 2], name="k3")


class TestRandomizedRounding:
    def test_integral_point_found_immediately(self):
        m = knapsack()
        point = np.array([1.0, 0.0, 2.0])
        out = randomized_rounding(m, Domain.from_model(m), point, seed=7)
        assert out.found
        assert check_feasible(m, out.solution).feasible
        assert out.objective == pytest.approx(m.objective @ point)

    def test_bit_identical_repeats(self):
        m = knapsack()
        point = lp_point(m)
        a = randomized_rounding(m, Domain.from_model(m), point, seed=3)
        b = randomized_rounding(m, Domain.from_model(m), point, seed=3)
        assert a.found == b.found
        assert a.objective == b.objective
        assert a.work_units == b.work_units
        if a.found:
            assert np.array_equal(a.solution, b.solution)

    def test_impossible_rounding_reports_not_found(self):
        # 2x >= 1 and 2x <= 1 force x = 0.5; both roundings are infeasible
        m = MipModel.build([1.0], [[2.0], [-2.0]], ["LE", "LE"], [1.0, -1.0],
                           [0.0], [1.0], [0])
        point = np.array([0.5])
        assert brute_force_optimum(m).status.value == "INFEASIBLE"
        out = randomized_rounding(m, Domain.from_model(m), point, seed=0,
                                  trials=10)
        assert not out.found

    def test_continuous_reoptimized(self):
        # one integer, one continuous; rounding must re-solve the LP remainder
        m = MipModel.build([-1.0, -1.0], [[1.0, 1.0]], ["LE"], [2.5],
                           [0.0, 0.0], [2.0, 5.0], [0], name="mix")
        point = np.array([1.5, 1.0])
        out = randomized_rounding(m, Domain.from_model(m), point, seed=1)
        assert out.found
        j = round(out.solution[0])
        assert out.solution[1] == pytest.approx(2.5 - j, abs=1e-7)


class TestRens:
    def test_all_integral_point_fixes_everything(self):
        m = knapsack()
        point = np.array([1.0, 0.0, 2.0])
        out = rens(m, Domain.from_model(m), point, node_budget=50, config=CONFIG)
        assert out.found
        assert np.array_equal(np.round(out.solution), point)

    def test_matches_brute_force_over_corners(self):
        # max 5x+4y st 2x+3y <= 7: LP vertex (3, 1/3) is fractional in y
        m = MipModel.build([-5.0, -4.0], [[2.0, 3.0]], ["LE"], [7.0],
                           [0, 0], [3, 3], [0, 1], name="fr2")
        point = lp_point(m)
        fracs = [j for j in m.integer_set if 1e-6 < point[j] % 1 < 1 - 1e-6]
        assert fracs
        out = rens(m, Domain.from_model(m), point, node_budget=200, config=CONFIG)
        # enumerate the restricted corner assignments directly
        best = np.inf
        ranges = [(np.floor(point[j]), np.ceil(point[j])) for j in m.integer_set]
        for assign in itertools.product(*ranges):
            x = np.array(assign, dtype=float)
            if np.all(m.dense_matrix @ x <= m.rhs + 1e-9):
                best = min(best, float(m.objective @ x))
        if best < np.inf:
            assert out.found and out.objective == pytest.approx(best, abs=1e-6)
        else:
            assert not out.found

    def test_zero_budget(self):
        m = knapsack()
        out = rens(m, Domain.from_model(m), lp_point(m), node_budget=0,
                   config=CONFIG)
        assert not out.found and out.work_units == 0


class TestRins:
    def test_full_agreement_reports_not_found(self):
        m = knapsack()
        inc = np.array([1.0, 0.0, 2.0])
        out = rins(m, Domain.from_model(m), inc, inc,
                   float(m.objective @ inc), node_budget=50, config=CONFIG)
        assert not out.found

    def test_single_disagreement_matches_enumeration(self):
        m = knapsack()
        inc = np.array([0.0, 0.0, 2.0])  # feasible but suboptimal
        point = inc.copy()
        point[0] = 0.5  # disagree on variable 0 only
        out = rins(m, Domain.from_model(m), point, inc,
                   float(m.objective @ inc), node_budget=100, config=CONFIG)
        # residual sub-MIP: x1, x2 fixed, x0 in {0,1,2}; best improving value
        best = np.inf
        for v in (0.0, 1.0, 2.0):
            x = np.array([v, 0.0, 2.0])
            if np.all(m.dense_matrix @ x <= m.rhs + 1e-9):
                best = min(best, float(m.objective @ x))
        if best < float(m.objective @ inc) - 1e-12:
            assert out.found and out.objective == pytest.approx(best, abs=1e-6)
        else:
            assert not out.found

    def test_no_improvement_not_found(self):
        m = knapsack()
        oracle = brute_force_optimum(m).solution
        inc = oracle.values
        out = rins(m, Domain.from_model(m), lp_point(m), inc,
                   float(m.objective @ inc), node_budget=100, config=CONFIG)
        assert not out.found  # incumbent already optimal


class TestParallelRootHeuristics:
    def test_single_worker_matches_sequential_pieces(self):
        m = knapsack()
        d = Domain.from_model(m)
        point = lp_point(m)
        merged = parallel_root_heuristics(m, d, point, 1, [11], CONFIG)
        assert merged.found
        round_out = randomized_rounding(m, d, point, 11,
                                        trials=CONFIG.rounding_trials)
        rens_out = rens(m, d, point, CONFIG.rens_node_budget, CONFIG, seed=11)
        candidates = [o for o in (round_out, rens_out) if o.found]
        best = min(o.objective for o in candidates)
        assert merged.objective == pytest.approx(best, abs=1e-9)

    def test_equal_objective_tie_prefers_earlier_task(self):
        m = knapsack()
        d = Domain.from_model(m)
        point = np.array([1.0, 0.0, 2.0])  # integral: every task finds it
        merged = parallel_root_heuristics(m, d, point, 2, [5, 6], CONFIG)
        assert merged.found
        assert merged.heuristic_tag is HeuristicTag.ROUNDING
        assert merged.seed_used == 5  # task 0 wins the tie

    def test_identical_across_worker_counts(self):
        m = knapsack()
        d = Domain.from_model(m)
        point = lp_point(m)
        seeds = [1, 2]
        outs = {}
        for k in (2, 4):
            runner = ThreadRunner(k)
            try:
                outs[k] = parallel_root_heuristics(m, d, point, k, seeds,
                                                   CONFIG, run_tasks=runner.map)
            finally:
                runner.close()
        a, b = outs[2], outs[4]
        assert a.found == b.found and a.objective == b.objective
        assert a.heuristic_tag == b.heuristic_tag and a.seed_used == b.seed_used

    def test_found_solutions_pass_original_model_check(self):
        m = knapsack()
        d = Domain.from_model(m)
        out = parallel_root_heuristics(m, d, lp_point(m), 3, [1, 2, 3], CONFIG)
        if out.found:
            assert check_feasible(m, out.solution).feasible
