"""detmip: a deterministic data-parallel branch-and-bound MIP solver.

Self-contained mixed-integer programming solver built around a bounded-variable
primal simplex, activity-based propagation, Gomory and cover cuts, branch-path
conflict learning, primal heuristics, and a barrier-phased master-worker
engine whose runs are bit-reproducible at any thread count.  A learned load
balancer predicts per-dive work and steers node assignment and dive
parameters.
"""

from .bnb import SolveStatus, solve_sequential
from .config import BalancerConfig, DiveParameters, SolverConfig
from .model import (
    BruteForceResult, BruteForceStatus, MipModel, ObjSense, RowSense, Solution,
    Tolerances, brute_force_optimum, check_feasible, objective_value, parse_mps,
)
from .parallel import solve_parallel

__version__ = "0.1.0"

__all__ = [
    "BalancerConfig", "BruteForceResult", "BruteForceStatus", "DiveParameters",
    "MipModel", "ObjSense", "RowSense", "Solution", "SolveStatus",
    "SolverConfig", "Tolerances", "brute_force_optimum", "check_feasible",
    "objective_value", "parse_mps", "solve_parallel", "solve_sequential",
]
