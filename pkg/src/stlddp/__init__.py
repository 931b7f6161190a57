"""Trajectory synthesis for Signal Temporal Logic specifications with DDP.

The pipeline: parse a specification (:mod:`stlddp.stl`), compile it into
smooth per-timestep running costs (:mod:`stlddp.costgen`), minimize them
with iLQR (:mod:`stlddp.ddp`) over a dynamics model
(:mod:`stlddp.dynamics`), and certify the result against the exact
semantics.
"""

__version__ = "0.1.0"

from .costgen import (Certificate, RunningCostTable, Verdict, check_soundness,
                      compile, eval_running_cost)
from .ddp import SolveResult, SolverConfig, first_order_baseline, rollout, solve
from .dynamics import (PlanarArmParams, double_integrator, planar_arm,
                       single_integrator)
from .smoothing import SmoothParams, smooth_max, smooth_min
from .stl import Signal, exact_robustness, parse_formula, parse_spec

__all__ = [
    "Certificate", "RunningCostTable", "Verdict", "check_soundness", "compile",
    "eval_running_cost", "SolveResult", "SolverConfig", "first_order_baseline", "rollout",
    "solve", "PlanarArmParams", "double_integrator", "planar_arm", "single_integrator",
    "SmoothParams", "smooth_max", "smooth_min", "Signal", "exact_robustness",
    "parse_formula", "parse_spec",
]
