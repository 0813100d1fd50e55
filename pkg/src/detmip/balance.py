"""Learned load balancing: dive workload prediction and parameter control.

The predictor estimates how many work units (LP iterations) the dive started
from a node will consume.  Stage 1 is ordinary least squares on standardized
features; stage 2 flags critical nodes by a median/MAD outlier test and
decides whether cross-worker rebalancing is needed; stage 3 averages ridge
regression and a from-scratch gradient-boosted tree ensemble for critical
nodes; stage 4 watches absolute percentage error and retrains after five
consecutive misses above 50%.

Everything here is a pure function of deterministic inputs; the balancer only
runs in single-coordinator phases between barriers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import BalancerConfig, DiveParameters, ParameterClamps

FEATURE_NAMES = (
    "branch_depth",
    "search_index",
    "lp_objective_gap",
    "iteration_count",
    "fixed_vars",
    "fractional_vars",
    "parent_work_units",
    "parent_open_children",
    "parent_present",
)


@dataclass(frozen=True)
class DiveFeatures:
    branch_depth: int
    search_index: int
    lp_objective_gap: float
    iteration_count: int
    fixed_vars: int
    fractional_vars: int
    parent_work_units: int
    parent_open_children: int
    parent_present: bool

    def vector(self) -> np.ndarray:
        return np.array([
            self.branch_depth, self.search_index, self.lp_objective_gap,
            self.iteration_count, self.fixed_vars, self.fractional_vars,
            self.parent_work_units, self.parent_open_children,
            1.0 if self.parent_present else 0.0,
        ], dtype=float)


def extract_features(node, worker, global_state) -> DiveFeatures:
    """Feature vector for one candidate node from local and global signals.

    Creation-time statistics (LP iterations, fractional count, parent dive
    stats) are cached on the node; fixed-variable counts come from replaying
    the node's journal onto the worker's current domain view; the gap and the
    search index come from the global state.
    """
    glb = global_state.global_lower_bound
    if math.isfinite(glb) and math.isfinite(node.lower_bound):
        gap = abs(node.lower_bound - glb) / max(1.0, abs(glb))
    else:
        gap = 0.0
    node_domain = worker.domain.child()
    node_domain.replay(node.branch_journal)
    fixed = node_domain.fixed_count(global_state.model.integer_set)
    return DiveFeatures(
        branch_depth=node.depth,
        search_index=global_state.dive_sequence,
        lp_objective_gap=gap,
        iteration_count=node.creation_lp_iterations,
        fixed_vars=fixed,
        fractional_vars=node.creation_fractional_vars,
        parent_work_units=node.parent_work_units,
        parent_open_children=node.parent_open_children,
        parent_present=node.parent_id is not None,
    )


# -- regression stages ---------------------------------------------------------


@dataclass
class LinearStage:
    weights: np.ndarray | None = None     # on standardized features
    intercept: float = 0.0
    mean: np.ndarray | None = None
    std: np.ndarray | None = None

    def predict(self, x: np.ndarray) -> float:
        if self.weights is None:
            return self.intercept
        z = (x - self.mean) / self.std
        return float(z @ self.weights + self.intercept)


@dataclass(frozen=True)
class TreeNodeSplit:
    feature: int
    threshold: float
    left: "TreeNodeSplit | float"
    right: "TreeNodeSplit | float"


@dataclass
class GbdtStage:
    base: float = 0.0
    trees: list = field(default_factory=list)
    learning_rate: float = 0.1
    mean: np.ndarray | None = None
    std: np.ndarray | None = None

    def predict(self, x: np.ndarray) -> float:
        if self.mean is None:
            return self.base
        z = (x - self.mean) / self.std
        out = self.base
        for tree in self.trees:
            out += self.learning_rate * _tree_eval(tree, z)
        return float(out)


def _tree_eval(node, z):
    while isinstance(node, TreeNodeSplit):
        node = node.left if z[node.feature] <= node.threshold else node.right
    return node


def _standardize(X: np.ndarray):
    """Center/scale; constant columns map to zero and carry no weight."""
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    varying = std >= 1e-12
    std = np.where(varying, std, 1.0)
    return (X - mean) / std, mean, std, varying


def train_stage1(X: np.ndarray, y: np.ndarray,
                 ridge_fallback: float = 1e-6) -> LinearStage:
    """OLS on standardized features via normal equations; ridge on rank loss."""
    Z, mean, std, varying = _standardize(X)
    n = Z.shape[0]
    Zv = Z[:, varying]
    d = Zv.shape[1]
    A = np.hstack([Zv, np.ones((n, 1))])
    G = A.T @ A
    rhs = A.T @ y
    if np.linalg.matrix_rank(G) < d + 1:
        G = G + ridge_fallback * np.eye(d + 1)
    w = np.linalg.solve(G, rhs)
    weights = np.zeros(X.shape[1])
    weights[varying] = w[:d]
    return LinearStage(weights=weights, intercept=float(w[d]), mean=mean, std=std)


def train_ridge(X: np.ndarray, y: np.ndarray, lam: float = 1.0) -> LinearStage:
    Z, mean, std, varying = _standardize(X)
    n = Z.shape[0]
    Zv = Z[:, varying]
    d = Zv.shape[1]
    A = np.hstack([Zv, np.ones((n, 1))])
    penalty = lam * np.eye(d + 1)
    penalty[d, d] = 0.0  # intercept unpenalized
    w = np.linalg.solve(A.T @ A + penalty, A.T @ y)
    weights = np.zeros(X.shape[1])
    weights[varying] = w[:d]
    return LinearStage(weights=weights, intercept=float(w[d]), mean=mean, std=std)


def _best_split(Z: np.ndarray, r: np.ndarray):
    """Best squared-error split; ties to lower feature index, lower threshold."""
    n, d = Z.shape
    best = None  # (sse, feature, threshold)
    total_sum = r.sum()
    for f in range(d):
        order = np.argsort(Z[:, f], kind="stable")
        zs = Z[order, f]
        rs = r[order]
        csum = np.cumsum(rs)
        for i in range(n - 1):
            if zs[i + 1] - zs[i] < 1e-12:
                continue
            left_n = i + 1
            right_n = n - left_n
            left_mean = csum[i] / left_n
            right_mean = (total_sum - csum[i]) / right_n
            sse = -(left_n * left_mean * left_mean + right_n * right_mean * right_mean)
            thr = 0.5 * (zs[i] + zs[i + 1])
            if best is None or sse < best[0] - 1e-15:
                best = (sse, f, thr, left_mean, right_mean)
    return best


def _fit_tree(Z: np.ndarray, r: np.ndarray, depth: int):
    if depth == 0 or Z.shape[0] < 2:
        return float(r.mean()) if r.size else 0.0
    found = _best_split(Z, r)
    if found is None:
        return float(r.mean())
    _, f, thr, left_mean, right_mean = found
    mask = Z[:, f] <= thr
    if depth == 1:
        return TreeNodeSplit(f, thr, float(left_mean), float(right_mean))
    return TreeNodeSplit(f, thr,
                         _fit_tree(Z[mask], r[mask], depth - 1),
                         _fit_tree(Z[~mask], r[~mask], depth - 1))


def train_gbdt(X: np.ndarray, y: np.ndarray, estimators: int = 50,
               learning_rate: float = 0.1, max_depth: int = 1) -> GbdtStage:
    """Boosted shallow regression trees, squared loss, deterministic splits."""
    Z, mean, std, _ = _standardize(X)
    base = float(y.mean())
    pred = np.full(y.shape, base)
    trees = []
    for _ in range(estimators):
        r = y - pred
        if np.max(np.abs(r)) < 1e-12:
            break
        tree = _fit_tree(Z, r, max_depth)
        trees.append(tree)
        pred += learning_rate * np.array([_tree_eval(tree, z) for z in Z])
    return GbdtStage(base=base, trees=trees, learning_rate=learning_rate,
                     mean=mean, std=std)


# -- the staged model -----------------------------------------------------------


class WorkloadModel:
    """Multi-stage workload predictor with bounded training buffer."""

    def __init__(self, config: BalancerConfig | None = None):
        self.config = config or BalancerConfig()
        self.buffer: list[tuple[np.ndarray, float]] = []
        self.stage1 = LinearStage(intercept=self.config.prior_work_units)
        self.stage3_ridge = LinearStage(intercept=self.config.prior_work_units)
        self.stage3_gbdt = GbdtStage(base=self.config.prior_work_units)
        self.ape_window: list[float] = []
        self.retrain_count = 0
        self._fitted = False

    # buffer -----------------------------------------------------------------

    def observe(self, features: DiveFeatures | np.ndarray, actual: float):
        x = features.vector() if isinstance(features, DiveFeatures) else np.asarray(features, float)
        self.buffer.append((x, float(actual)))
        if len(self.buffer) > self.config.buffer_capacity:
            del self.buffer[0: len(self.buffer) - self.config.buffer_capacity]

    def _matrices(self):
        X = np.array([x for x, _ in self.buffer])
        y = np.array([t for _, t in self.buffer])
        if self.config.use_log_target:
            y = np.log(np.maximum(y, 1.0))
        return X, y

    def fit(self):
        X, y = self._matrices()
        self.stage1 = train_stage1(X, y, self.config.stage1_ridge_fallback)
        self.stage3_ridge = train_ridge(X, y, self.config.ridge_lambda)
        self.stage3_gbdt = train_gbdt(X, y, self.config.gbdt_estimators,
                                      self.config.gbdt_learning_rate,
                                      self.config.gbdt_max_depth)
        self._fitted = True

    def _ensure_fitted(self) -> bool:
        if self._fitted:
            return True
        if len(self.buffer) >= self.config.min_samples:
            self.fit()
            return True
        return False

    def mean_target(self) -> float:
        if not self.buffer:
            return self.config.prior_work_units
        return float(np.mean([t for _, t in self.buffer]))

    # prediction ---------------------------------------------------------------

    def predict(self, features: DiveFeatures | np.ndarray, is_critical: bool = False) -> float:
        x = features.vector() if isinstance(features, DiveFeatures) else np.asarray(features, float)
        if not self._ensure_fitted():
            return max(1.0, self.mean_target())
        if is_critical:
            raw = 0.5 * (self.stage3_ridge.predict(x) + self.stage3_gbdt.predict(x))
        else:
            raw = self.stage1.predict(x)
        if self.config.use_log_target:
            raw = math.exp(min(raw, 50.0))
        return max(1.0, float(raw))

    # quality monitoring ---------------------------------------------------------

    def record_outcome(self, features: DiveFeatures | np.ndarray,
                       predicted: float, actual: float) -> str:
        """Track APE; five consecutive values strictly above the threshold retrain."""
        if actual < 1.0:
            raise ValueError("actual work units must be >= 1")
        ape = abs(predicted - actual) / actual
        if ape > self.config.ape_threshold:
            self.ape_window.append(ape)
        else:
            self.ape_window.clear()
        self.observe(features, actual)
        if len(self.ape_window) >= self.config.ape_window:
            self.ape_window.clear()
            if len(self.buffer) >= 2:
                self.fit()
            self.retrain_count += 1
            return "RETRAIN_TRIGGERED"
        return "ok"

    def stage1_importances(self) -> list[tuple[str, float]]:
        """|standardized stage-1 coefficient| per feature, for reporting."""
        if self.stage1.weights is None:
            return [(name, 0.0) for name in FEATURE_NAMES]
        return [(name, abs(float(w)))
                for name, w in zip(FEATURE_NAMES, self.stage1.weights)]

    def signature(self) -> tuple:
        return (len(self.buffer), self.retrain_count, tuple(self.ape_window))


# -- stage 2: critical detection -------------------------------------------------


def _median(values: np.ndarray) -> float:
    """Deterministic midpoint median (sorted average of the two middles)."""
    s = np.sort(values)
    n = s.shape[0]
    if n % 2 == 1:
        return float(s[n // 2])
    return float(0.5 * (s[n // 2 - 1] + s[n // 2]))


def detect_critical(predictions, per_worker_loads, rebalance_fraction: float = 0.25):
    """Flag predictions above median + 3 MAD; decide cross-worker rebalancing.

    Returns (flagged index set, rebalance flag).
    """
    preds = np.asarray(list(predictions), dtype=float)
    if preds.size == 0:
        raise ValueError("detect_critical needs at least one prediction")
    med = _median(preds)
    mad = _median(np.abs(preds - med))
    threshold = med + 3.0 * mad
    flagged = {i for i in range(preds.size) if preds[i] > threshold}

    loads = np.asarray(list(per_worker_loads), dtype=float)
    rebalance = False
    if loads.size:
        mean = float(loads.mean())
        if mean > 0.0:
            rebalance = bool(np.any(np.abs(loads - mean) > rebalance_fraction * mean))
    return flagged, rebalance


# -- assignment and parameter control ---------------------------------------------


def assign_nodes(candidates, worker_count: int):
    """Longest-processing-time-first assignment of (node_id, predicted_work).

    Sort by predicted work descending (ties by node id ascending); each item
    goes to the worker with the smallest current load (ties by worker index).
    Returns (assignment list per worker, loads per worker).
    """
    items = sorted(candidates, key=lambda it: (-it[1], it[0]))
    assignment: list[list] = [[] for _ in range(worker_count)]
    loads = [0.0] * worker_count
    for node_id, work in items:
        w = min(range(worker_count), key=lambda i: (loads[i], i))
        assignment[w].append(node_id)
        loads[w] += work
    return assignment, loads


def adjust_parameters(worker_loads, current: list[DiveParameters],
                      clamps: ParameterClamps | None = None) -> list[DiveParameters]:
    """Throttle overloaded workers, boost underutilized ones, clamp everything.

    Loads are predicted work units; wall-clock never feeds this rule.
    """
    clamps = clamps or ParameterClamps()
    loads = np.asarray(list(worker_loads), dtype=float)
    if loads.size == 0:
        return []
    mean = float(loads.mean())
    out = []
    for load, params in zip(loads, current):
        budget = params.iter_budget
        depth = params.max_depth
        thr = params.cut_violation_threshold
        if mean > 0.0 and load > 1.25 * mean:
            budget = int(budget * 0.75)
            depth = depth - 10
            thr = thr * 2.0
        elif mean > 0.0 and load < 0.75 * mean:
            budget = int(budget * 1.25)
            depth = depth + 10
            thr = thr * 0.5
        out.append(DiveParameters(
            iter_budget=int(min(max(budget, clamps.iter_budget_min), clamps.iter_budget_max)),
            max_depth=int(min(max(depth, clamps.max_depth_min), clamps.max_depth_max)),
            heuristic_cadence=params.heuristic_cadence,
            cut_violation_threshold=float(min(max(thr, clamps.cut_violation_min),
                                              clamps.cut_violation_max)),
        ))
    return out
