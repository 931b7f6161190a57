"""Trajectory optimizers: iLQR-style DDP and a first-order baseline."""

from .baseline import fd_control_gradient, first_order_baseline
from .costs import QuadraticCost, StlCost
from .lqr import LqrSolution, riccati
from .solver import (Expansion, Gains, SolveResult, SolverConfig, Trajectory,
                     backward_pass, expand, final_gains, rollout, solve)

__all__ = [
    "fd_control_gradient", "first_order_baseline", "LqrSolution", "riccati", "QuadraticCost", "StlCost",
    "Expansion", "Gains", "SolveResult", "SolverConfig", "Trajectory",
    "backward_pass", "expand", "final_gains", "rollout", "solve",
]
