"""Solver configuration: one flat record of every tunable constant.

Every adaptive decision in the engine is driven by deterministic quantities
(work units = LP iterations), so the values here fully determine a run
together with the instance and the seed.  Wall-clock enters only through
``time_limit_s``, and runs that hit it are excluded from determinism claims.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field


@dataclass(frozen=True)
class DiveParameters:
    """Per-worker dive controls; tuned between rounds by the load balancer."""

    iter_budget: int = 2000
    max_depth: int = 100
    heuristic_cadence: int = 8
    cut_violation_threshold: float = 1e-4


@dataclass(frozen=True)
class ParameterClamps:
    """Hard ranges the balancer may never push DiveParameters out of."""

    iter_budget_min: int = 100
    iter_budget_max: int = 1_000_000
    max_depth_min: int = 10
    max_depth_max: int = 100
    cut_violation_min: float = 1e-6
    cut_violation_max: float = 1e-1


@dataclass(frozen=True)
class BalancerConfig:
    enabled: bool = True
    min_samples: int = 20
    prior_work_units: float = 100.0
    stage1_ridge_fallback: float = 1e-6
    ridge_lambda: float = 1.0
    gbdt_estimators: int = 50
    gbdt_learning_rate: float = 0.1
    gbdt_max_depth: int = 1
    buffer_capacity: int = 4096
    ape_threshold: float = 0.5
    ape_window: int = 5
    rebalance_fraction: float = 0.25
    use_log_target: bool = False  # exponential-regression variant of stage 1


@dataclass(frozen=True)
class SolverConfig:
    """Full run configuration for the sequential and parallel solvers."""

    seed: int = 0
    num_workers: int = 1
    executor: str = "thread"  # serial | thread | process

    # termination
    node_limit: int | None = None
    time_limit_s: float | None = None

    # tolerances (mirrors model.Tolerances defaults)
    int_tol: float = 1e-6
    feas_tol: float = 1e-6
    opt_gap_abs: float = 1e-9
    opt_gap_rel: float = 1e-6

    # propagation
    propagate_max_rounds: int = 100

    # cut machinery
    cut_max_age: int = 10
    cut_pool_capacity: int = 1000
    cut_violation_min: float = 1e-4
    cut_coef_drop: float = 1e-10
    root_separation_rounds: int = 5
    node_gomory_max: int = 8

    # conflict machinery
    conflict_max_age: int = 20
    conflict_pool_capacity: int = 500

    # heuristics
    heuristics_enabled: bool = True
    rounding_trials: int = 10
    rens_node_budget: int = 100
    rins_node_budget: int = 50

    # restart rule (off by default)
    restart_enabled: bool = False
    restart_fix_fraction: float = 0.2
    restart_node_cap: int = 1000

    # node selection
    estimate_switch_factor: float = 10.0

    # LP control
    lp_iter_limit_base: int = 1000

    # parallel protocol
    pool_factor: int = 4
    broadcast_top_recent: int = 200

    dive: DiveParameters = field(default_factory=DiveParameters)
    clamps: ParameterClamps = field(default_factory=ParameterClamps)
    balancer: BalancerConfig = field(default_factory=BalancerConfig)

    def replace(self, **kwargs) -> "SolverConfig":
        return dataclasses.replace(self, **kwargs)

    def subsolve_config(self, node_budget: int, seed: int) -> "SolverConfig":
        """Configuration for heuristic sub-MIPs: cheap, sequential, no recursion."""
        return self.replace(
            seed=seed,
            num_workers=1,
            executor="serial",
            node_limit=node_budget,
            time_limit_s=None,
            heuristics_enabled=False,
            root_separation_rounds=0,
            restart_enabled=False,
            balancer=dataclasses.replace(self.balancer, enabled=False),
        )
