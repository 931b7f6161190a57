"""Gradient descent on the same total cost, for timing comparisons.

The gradient with respect to the whole control sequence comes from central
finite differences through the rollout: all ``2 (T+1) m`` perturbed control
sequences are simulated as one batch.
"""

from __future__ import annotations

import time

import numpy as np

from ..costgen import check_soundness
from ..dynamics import DynamicsModel
from ..errors import SingularMassMatrix
from ..smoothing import SmoothParams
from .costs import StlCost
from .solver import SolveResult, SolverConfig, as_cost, rollout


def _batch_cost(model: DynamicsModel, x0, Us, cost) -> np.ndarray:
    B, N, _ = Us.shape
    X = np.empty((B, N, model.n))
    X[:, 0] = x0
    for t in range(N - 1):
        X[:, t + 1] = model.step(X[:, t], Us[:, t])
    totals = np.sum(cost.values(X, Us), axis=-1)
    return np.where(np.all(np.isfinite(X), axis=(1, 2)), totals, np.inf)


def fd_control_gradient(model: DynamicsModel, x0, U, cost, h: float) -> np.ndarray:
    """Central-difference gradient of the total cost with respect to ``U``."""
    N, m = U.shape
    E = h * np.eye(N * m).reshape(N * m, N, m)
    Us = np.concatenate([U + E, U - E])
    J = _batch_cost(model, x0, Us, cost)
    return ((J[:N * m] - J[N * m:]) / (2 * h)).reshape(N, m)


def first_order_baseline(model: DynamicsModel, cost, x0, U_init,
                         config: SolverConfig = SolverConfig(),
                         params: SmoothParams = SmoothParams(),
                         armijo: float = 1e-4) -> SolveResult:
    """Steepest descent with backtracking (Armijo) line search.

    Stops when an accepted step lowers the cost by less than
    ``config.cost_tolerance``, when the gradient vanishes, when no step size
    decreases the cost, or at ``config.max_iterations``.
    """
    start = time.perf_counter()
    cost = as_cost(model, cost, params, config)
    x0 = np.asarray(x0, dtype=float)
    traj = rollout(model, x0, U_init, cost)
    history = [traj.cost]
    step = 1.0
    converged = False
    stop = "max_iterations"
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        g = fd_control_gradient(model, x0, traj.U, cost, config.fd_step)
        g2 = float(np.sum(g * g))
        if g2 < config.cost_tolerance ** 2:
            converged = True
            stop = "zero_gradient"
            break
        accepted = None
        s = step * 2.0
        for _ in range(60):
            U_new = traj.U - s * g
            try:
                cand = rollout(model, x0, U_new, cost)
            except (FloatingPointError, SingularMassMatrix):
                cand = None
            if cand is not None and cand.cost <= traj.cost - armijo * s * g2:
                accepted = cand
                break
            s *= 0.5
        if accepted is None:
            stop = "line_search_exhausted"
            converged = True
            break
        step = s
        improvement = traj.cost - accepted.cost
        traj = accepted
        history.append(traj.cost)
        if improvement < config.cost_tolerance:
            converged = True
            stop = "cost_decrease_below_tolerance"
            break
    certificate = None
    if isinstance(cost, StlCost):
        certificate = check_soundness(cost.table, traj.Y, cost.params)
    return SolveResult(traj, None, iterations, converged, history, certificate, stop,
                       time.perf_counter() - start, 0.0, solver="first_order")
