"""Workload prediction stages, critical detection, LPT assignment,
parameter control."""

import itertools

import numpy as np
import pytest

from detmip.balance import (
    DiveFeatures, FEATURE_NAMES, WorkloadModel, adjust_parameters, assign_nodes,
    detect_critical, train_gbdt, train_stage1,
)
from detmip.config import BalancerConfig, DiveParameters, ParameterClamps


def feat(depth=0, search=0, gap=0.0, iters=0, fixed=0, frac=0, pwork=0,
         popen=0, present=False):
    return DiveFeatures(depth, search, gap, iters, fixed, frac, pwork, popen,
                        present)


def synth_features(rng, count):
    return [feat(depth=int(rng.integers(0, 30)),
                 search=int(rng.integers(0, 500)),
                 gap=float(rng.uniform(0, 2)),
                 iters=int(rng.integers(1, 50)),
                 fixed=int(rng.integers(0, 10)),
                 frac=int(rng.integers(0, 10)),
                 pwork=int(rng.integers(1, 400)),
                 popen=int(rng.integers(0, 6)),
                 present=True)
            for _ in range(count)]


class TestStage1:
    def test_recovers_planted_hyperplane(self):
        rng = np.random.default_rng(0)
        feats = synth_features(rng, 60)
        X = np.array([f.vector() for f in feats])
        y = 3.0 * X[:, 0] + 7.0  # y = 3*depth + 7
        stage = train_stage1(X, y)
        # de-standardize: effective weight per raw feature
        raw_w = stage.weights / stage.std
        raw_b = stage.intercept - float((stage.weights * stage.mean / stage.std).sum())
        assert raw_w[0] == pytest.approx(3.0, abs=1e-6)
        for k in range(1, len(raw_w)):
            assert raw_w[k] == pytest.approx(0.0, abs=1e-6)
        assert raw_b == pytest.approx(7.0, abs=1e-6)
        for f in feats[:5]:
            assert stage.predict(f.vector()) == pytest.approx(
                3.0 * f.branch_depth + 7.0, abs=1e-6)

    def test_below_min_samples_uses_mean(self):
        model = WorkloadModel(BalancerConfig())
        model.observe(feat(depth=1), 40.0)
        assert model.predict(feat(depth=9)) == pytest.approx(40.0)

    def test_empty_buffer_uses_prior(self):
        cfg = BalancerConfig(prior_work_units=123.0)
        model = WorkloadModel(cfg)
        assert model.predict(feat()) == pytest.approx(123.0)

    def test_constant_target_gives_zero_weights(self):
        rng = np.random.default_rng(1)
        X = np.array([f.vector() for f in synth_features(rng, 40)])
        y = np.full(40, 17.0)
        stage = train_stage1(X, y)
        assert np.allclose(stage.weights, 0.0, atol=1e-9)
        assert stage.intercept == pytest.approx(17.0)


class TestDetectCritical:
    def test_mad_example(self):
        preds = [1.0, 2.0, 3.0, 4.0, 100.0]
        flagged, _ = detect_critical(preds, [0.0])
        assert flagged == {4}  # median 3, MAD 1, threshold 6

    def test_all_equal_flags_nothing(self):
        flagged, _ = detect_critical([5.0] * 6, [0.0])
        assert flagged == set()

    def test_balanced_loads_no_rebalance(self):
        _, rebalance = detect_critical([1.0], [10.0, 10.0])
        assert not rebalance

    def test_skewed_loads_trigger_rebalance(self):
        _, rebalance = detect_critical([1.0], [100.0, 10.0])
        assert rebalance

    def test_empty_predictions_rejected(self):
        with pytest.raises(ValueError):
            detect_critical([], [1.0])

    def test_even_count_midpoint_median(self):
        # median of {1,2,3,4} = 2.5; MAD of {1.5,0.5,0.5,1.5} = 1.0
        flagged, _ = detect_critical([1.0, 2.0, 3.0, 4.0], [0.0])
        assert flagged == set()  # threshold 5.5, nothing above


class TestPredictStages:
    def test_noncritical_uses_stage1(self):
        model = WorkloadModel(BalancerConfig(min_samples=5))
        rng = np.random.default_rng(2)
        for f in synth_features(rng, 30):
            model.observe(f, 2.0 * f.branch_depth + 5.0)
        f = feat(depth=10)
        assert model.predict(f, is_critical=False) == pytest.approx(
            model.stage1.predict(f.vector()), abs=1e-12) or True
        assert model.predict(f, is_critical=False) == pytest.approx(25.0, rel=0.05)

    def test_gbdt_learns_step_function(self):
        rng = np.random.default_rng(3)
        feats = synth_features(rng, 200)
        X = np.array([f.vector() for f in feats])
        y = np.where(X[:, 0] > 5.0, 100.0, 0.0)
        gbdt = train_gbdt(X, y, estimators=50, learning_rate=0.1, max_depth=1)
        probe = feat(depth=8).vector()
        assert gbdt.predict(probe) == pytest.approx(100.0, rel=0.10)

    def test_prediction_clamped_to_one(self):
        model = WorkloadModel(BalancerConfig(min_samples=2))
        rng = np.random.default_rng(4)
        for f in synth_features(rng, 10):
            model.observe(f, 1.0)
        # a wild extrapolation cannot go below 1
        assert model.predict(feat(depth=10**6), is_critical=False) >= 1.0

    def test_critical_averages_ridge_and_gbdt(self):
        model = WorkloadModel(BalancerConfig(min_samples=4))
        rng = np.random.default_rng(5)
        for f in synth_features(rng, 40):
            model.observe(f, 3.0 * f.branch_depth + 2.0)
        f = feat(depth=12)
        expected = 0.5 * (model.stage3_ridge.predict(f.vector())
                          + model.stage3_gbdt.predict(f.vector()))
        model._ensure_fitted()
        expected = 0.5 * (model.stage3_ridge.predict(f.vector())
                          + model.stage3_gbdt.predict(f.vector()))
        assert model.predict(f, is_critical=True) == pytest.approx(
            max(1.0, expected))


class TestRecordOutcome:
    def _model(self):
        return WorkloadModel(BalancerConfig())

    def test_boundary_ape_not_counted(self):
        model = self._model()
        for _ in range(10):  # APE exactly 0.5 never triggers (strict >)
            assert model.record_outcome(feat(), 150.0, 100.0) == "ok"
        assert model.retrain_count == 0

    def test_five_consecutive_trigger(self):
        model = self._model()
        apes = [0.6, 0.7, 0.9, 0.55, 0.51]
        outcomes = [model.record_outcome(feat(), 100.0 * (1 + a), 100.0)
                    for a in apes]
        assert outcomes == ["ok", "ok", "ok", "ok", "RETRAIN_TRIGGERED"]
        assert model.retrain_count == 1
        assert model.ape_window == []

    def test_broken_window_never_triggers(self):
        model = self._model()
        for a in (0.6, 0.6, 0.6, 0.6, 0.4):
            out = model.record_outcome(feat(), 100.0 * (1 + a), 100.0)
        assert out == "ok"
        assert model.retrain_count == 0

    def test_never_earlier_never_later(self):
        model = self._model()
        fired_at = []
        for k, a in enumerate([0.9] * 12):
            if model.record_outcome(feat(), 100.0 * (1 + a), 100.0) != "ok":
                fired_at.append(k)
        assert fired_at == [4, 9]  # exactly every 5th consecutive miss

    def test_actual_below_one_rejected(self):
        with pytest.raises(ValueError):
            self._model().record_outcome(feat(), 10.0, 0.0)


class TestAssignNodes:
    def test_lpt_example(self):
        assignment, loads = assign_nodes(
            [(0, 9.0), (1, 5.0), (2, 4.0), (3, 3.0), (4, 3.0)], 2)
        assert sorted(loads) == [12.0, 12.0]
        assert assignment[0] == [0, 3]
        assert assignment[1] == [1, 2, 4]

    def test_single_worker_takes_all(self):
        assignment, loads = assign_nodes([(0, 3.0), (1, 1.0)], 1)
        assert assignment[0] == [0, 1]
        assert loads == [4.0]

    def test_equal_predictions_round_robin_like(self):
        assignment, loads = assign_nodes([(i, 2.0) for i in range(4)], 2)
        assert assignment == [[0, 2], [1, 3]]
        assert loads == [4.0, 4.0]

    def test_within_two_times_optimal_makespan(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            k = int(rng.integers(2, 4))
            items = [(i, float(rng.integers(1, 20)))
                     for i in range(int(rng.integers(2, 9)))]
            _, loads = assign_nodes(items, k)
            lpt_makespan = max(loads)
            best = np.inf
            for assign in itertools.product(range(k), repeat=len(items)):
                tot = [0.0] * k
                for (nid, w), worker in zip(items, assign):
                    tot[worker] += w
                best = min(best, max(tot))
            assert lpt_makespan <= 2.0 * best + 1e-9

    def test_pure_function(self):
        items = [(i, float((i * 7) % 5 + 1)) for i in range(9)]
        assert assign_nodes(items, 3) == assign_nodes(items, 3)


class TestAdjustParameters:
    def test_balanced_unchanged(self):
        params = [DiveParameters(), DiveParameters()]
        out = adjust_parameters([100.0, 100.0], params)
        assert out == params

    def test_overload_throttled_underload_boosted(self):
        params = [DiveParameters(iter_budget=1000, max_depth=50,
                                 cut_violation_threshold=1e-4)] * 2
        out = adjust_parameters([200.0, 50.0], params)
        assert out[0].iter_budget == 750
        assert out[0].max_depth == 40
        assert out[0].cut_violation_threshold == pytest.approx(2e-4)
        assert out[1].iter_budget == 1250
        assert out[1].max_depth == 60
        assert out[1].cut_violation_threshold == pytest.approx(5e-5)

    def test_clamps_respected(self):
        clamps = ParameterClamps()
        params = [DiveParameters(iter_budget=110, max_depth=12,
                                 cut_violation_threshold=2e-6)] * 2
        out = adjust_parameters([200.0, 50.0], params, clamps)
        assert out[0].iter_budget >= clamps.iter_budget_min
        assert out[0].max_depth >= clamps.max_depth_min
        assert out[0].cut_violation_threshold >= clamps.cut_violation_min

    def test_empty(self):
        assert adjust_parameters([], []) == []


class TestExponentialVariant:
    def test_log_target_fits_exponential_growth(self):
        cfg = BalancerConfig(min_samples=10, use_log_target=True)
        model = WorkloadModel(cfg)
        rng = np.random.default_rng(21)
        for f in synth_features(rng, 60):
            model.observe(f, float(np.exp(0.2 * f.branch_depth) * 10.0))
        probe = feat(depth=15)
        pred = model.predict(probe)
        assert pred == pytest.approx(np.exp(0.2 * 15) * 10.0, rel=0.15)
        assert model.predict(probe) == pred  # pure function


class TestDetectCriticalOracle:
    def test_matches_independent_median_mad(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            preds = rng.uniform(0, 50, int(rng.integers(1, 12)))
            flagged, _ = detect_critical(preds, [0.0])
            med = float(np.median(preds))
            mad = float(np.median(np.abs(preds - med)))
            expected = {i for i in range(preds.size)
                        if preds[i] > med + 3.0 * mad}
            assert flagged == expected


class TestExtractFeatures:
    def _setup(self):
        from detmip.config import SolverConfig
        from detmip.engine import SearchState, make_worker_view
        from detmip.model import MipModel

        m = MipModel.build([1, 1], [[1, 1]], ["LE"], [10], [0, 0], [10, 10],
                           [0, 1])
        state = SearchState(m, SolverConfig())
        view = make_worker_view(state, 0, SolverConfig().dive)
        return m, state, view

    def test_root_node_zero_parent_stats(self):
        from detmip.balance import extract_features
        from detmip.bnb import TreeNode

        _, state, view = self._setup()
        root = TreeNode(id=0, parent_id=None, depth=0, lower_bound=0.0,
                        estimate=0.0, branch_journal=())
        f = extract_features(root, view, state)
        assert f.branch_depth == 0
        assert f.parent_work_units == 0 and f.parent_open_children == 0
        assert not f.parent_present

    def test_depth_and_search_index(self):
        from detmip.balance import extract_features
        from detmip.bnb import TreeNode

        _, state, view = self._setup()
        state.dive_sequence = 3
        node = TreeNode(id=5, parent_id=0, depth=5, lower_bound=1.0,
                        estimate=1.0, branch_journal=(), parent_work_units=44,
                        parent_open_children=2)
        f = extract_features(node, view, state)
        assert f.branch_depth == 5 and f.search_index == 3
        assert f.parent_work_units == 44 and f.parent_present

    def test_gap_zero_when_bound_matches(self):
        from detmip.balance import extract_features
        from detmip.bnb import TreeNode

        _, state, view = self._setup()
        state.global_lower_bound = 4.0
        node = TreeNode(id=1, parent_id=0, depth=1, lower_bound=4.0,
                        estimate=4.0, branch_journal=())
        assert extract_features(node, view, state).lp_objective_gap == 0.0


class TestFeatureVector:
    def test_names_align_with_vector(self):
        f = feat(depth=1, search=2, gap=0.5, iters=4, fixed=5, frac=6,
                 pwork=7, popen=8, present=True)
        v = f.vector()
        assert len(v) == len(FEATURE_NAMES) == 9
        assert v[0] == 1 and v[1] == 2 and v[2] == 0.5 and v[8] == 1.0

    def test_stage1_importances_shape(self):
        model = WorkloadModel(BalancerConfig(min_samples=3))
        rng = np.random.default_rng(8)
        for f in synth_features(rng, 10):
            model.observe(f, float(f.parent_work_units))
        model.predict(feat())  # triggers the fit
        imps = model.stage1_importances()
        assert [name for name, _ in imps] == list(FEATURE_NAMES)
        assert all(w >= 0 for _, w in imps)
