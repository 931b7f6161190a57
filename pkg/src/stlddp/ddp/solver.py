"""iLQR (Gauss-Newton DDP) over a running cost ``sum_t l_t(x_t, u_t)``.

Each iteration linearizes the dynamics along the nominal trajectory, runs a
Levenberg-Marquardt regularized backward pass for the feedback law
``u = u_bar + alpha * k + K (x - x_bar)``, and line-searches over ``alpha``.
Dynamics second derivatives are dropped, so this is iLQR rather than full
second-order DDP.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..costgen import Certificate, RunningCostTable, check_soundness
from ..dynamics import DynamicsModel
from ..errors import (DimensionMismatch, NonFiniteState, NotPositiveDefinite,
                      SingularMassMatrix)
from ..smoothing import SmoothParams
from .costs import StlCost

log = logging.getLogger(__name__)


def _default_alphas() -> tuple:
    return tuple(0.5 ** i for i in range(11))


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 100
    cost_tolerance: float = 1e-6  # absolute cost decrease that counts as converged
    line_search_alphas: tuple = field(default_factory=_default_alphas)
    reg_init: float = 1e-6
    reg_min: float = 1e-9
    reg_max: float = 1e10
    reg_scale: float = 10.0
    derivative_mode: str = "finite_difference"  # or "analytic" (if the model has it)
    fd_step: float = 1e-5
    acceptance_ratio: float = 0.01
    control_weight: float = 0.0  # 0.5 * r * |u|^2 added to STL costs only

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.line_search_alphas)
        object.__setattr__(self, "line_search_alphas", alphas)
        if not alphas or alphas[0] != 1.0 or any(b >= a for a, b in zip(alphas, alphas[1:])):
            raise ValueError("line_search_alphas must start at 1 and strictly decrease")
        if any(not 0 < a <= 1 for a in alphas):
            raise ValueError("line_search_alphas must lie in (0, 1]")
        if not self.reg_min <= self.reg_init <= self.reg_max:
            raise ValueError("need reg_min <= reg_init <= reg_max")
        if self.reg_scale <= 1:
            raise ValueError("reg_scale must exceed 1")
        if self.derivative_mode not in ("finite_difference", "analytic"):
            raise ValueError(f"unknown derivative_mode {self.derivative_mode!r}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States ``X (T+1, n)``, controls ``U (T+1, m)``, outputs ``Y (T+1, p)``."""

    X: np.ndarray
    U: np.ndarray
    Y: np.ndarray
    costs: np.ndarray
    cost: float


@dataclass(frozen=True, eq=False)
class Gains:
    K: np.ndarray  # (T+1, m, n)
    k: np.ndarray  # (T+1, m)
    expected: tuple  # (linear, quadratic) predicted change coefficients


@dataclass(eq=False)
class SolveResult:
    trajectory: Trajectory
    gains: Optional[Gains]
    iterations: int
    converged: bool
    cost_history: list
    certificate: Optional[Certificate]
    stop_reason: str
    wall_time: float
    regularization: float
    solver: str = "ddp"


@dataclass(frozen=True, eq=False)
class Expansion:
    fx: np.ndarray
    fu: np.ndarray
    lx: np.ndarray
    lu: np.ndarray
    lxx: np.ndarray
    luu: np.ndarray
    lux: np.ndarray


def as_cost(model: DynamicsModel, cost, params: SmoothParams, config: SolverConfig):
    if isinstance(cost, RunningCostTable):
        if cost.spec.output_dim != model.p:
            raise DimensionMismatch(
                f"specification predicates have dimension {cost.spec.output_dim}, "
                f"model output has {model.p}")
        return StlCost(cost, model, params, config.control_weight)
    return cost


def rollout(model: DynamicsModel, x0, U, cost=None) -> Trajectory:
    """Simulate ``x_{t+1} = f(x_t, u_t)`` for ``t = 0..T-1``.

    ``U`` holds ``T+1`` controls; ``u_T`` only enters the last output.

    Raises:
        NonFiniteState: the state left the finite range.
    """
    x0 = np.asarray(x0, dtype=float)
    U = np.asarray(U, dtype=float)
    if x0.shape != (model.n,):
        raise DimensionMismatch(f"x0 must have shape ({model.n},), got {x0.shape}")
    if U.ndim != 2 or U.shape[1] != model.m:
        raise DimensionMismatch(f"U must have shape (T+1, {model.m}), got {U.shape}")
    N = U.shape[0]
    if cost is not None and N != cost.horizon + 1:
        raise DimensionMismatch(f"U has {N} steps, cost expects {cost.horizon + 1}")
    X = np.empty((N, model.n))
    X[0] = x0
    for t in range(N - 1):
        X[t + 1] = model.step(X[t], U[t])
        if not np.all(np.isfinite(X[t + 1])):
            raise NonFiniteState("rollout diverged", t + 1)
    Y = model.output(X, U)
    costs = cost.values(X, U) if cost is not None else np.zeros(N)
    return Trajectory(X, U, Y, costs, float(np.sum(costs)))


def _forward(model, traj: Trajectory, gains: Gains, alpha: float, cost) -> Trajectory:
    N = traj.U.shape[0]
    X = np.empty_like(traj.X)
    U = np.empty_like(traj.U)
    X[0] = traj.X[0]
    for t in range(N):
        U[t] = traj.U[t] + alpha * gains.k[t] + gains.K[t] @ (X[t] - traj.X[t])
        if t < N - 1:
            X[t + 1] = model.step(X[t], U[t])
            if not np.all(np.isfinite(X[t + 1])):
                raise NonFiniteState("line-search rollout diverged", t + 1)
    Y = model.output(X, U)
    costs = cost.values(X, U)
    return Trajectory(X, U, Y, costs, float(np.sum(costs)))


def expand(model: DynamicsModel, traj: Trajectory, cost, config: SolverConfig) -> Expansion:
    """Dynamics Jacobians and cost quadratization at every step."""
    fx, fu, gx, gu = model.jacobians(traj.X, traj.U, config.derivative_mode, config.fd_step)
    lx, lu, lxx, luu, lux = cost.expand(traj.X, traj.U, gx, gu)
    return Expansion(fx, fu, lx, lu, lxx, luu, lux)


def backward_pass(traj: Trajectory, d: Expansion, reg: float) -> Gains:
    """Riccati-like recursion from t = T down to 0.

    Returns feedback/feedforward gains and the coefficients ``(a, b)`` of the
    predicted cost change ``alpha * a + alpha^2 * b`` for a step ``alpha``.

    Raises:
        NotPositiveDefinite: ``Q_uu + reg*I`` failed Cholesky at some step.
    """
    N, m = traj.U.shape
    n = traj.X.shape[1]
    K = np.zeros((N, m, n))
    k = np.zeros((N, m))
    Vx = np.zeros(n)
    Vxx = np.zeros((n, n))
    dv1 = dv2 = 0.0
    eye = np.eye(m)
    for t in range(N - 1, -1, -1):
        if t == N - 1:
            Qx, Qu = d.lx[t], d.lu[t]
            Qxx, Quu, Qux = d.lxx[t], d.luu[t], d.lux[t]
        else:
            fx, fu = d.fx[t], d.fu[t]
            VxxFx = Vxx @ fx
            Qx = d.lx[t] + fx.T @ Vx
            Qu = d.lu[t] + fu.T @ Vx
            Qxx = d.lxx[t] + fx.T @ VxxFx
            Quu = d.luu[t] + fu.T @ Vxx @ fu
            Qux = d.lux[t] + fu.T @ VxxFx
        Quu_reg = 0.5 * (Quu + Quu.T) + reg * eye
        try:
            np.linalg.cholesky(Quu_reg)
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite(t) from None
        sol = np.linalg.solve(Quu_reg, np.column_stack([Qu, Qux]))
        k[t] = -sol[:, 0]
        K[t] = -sol[:, 1:]
        dv1 += k[t] @ Qu
        dv2 += 0.5 * k[t] @ Quu @ k[t]
        Vx = Qx + K[t].T @ Quu @ k[t] + K[t].T @ Qu + Qux.T @ k[t]
        Vxx = Qxx + K[t].T @ Quu @ K[t] + K[t].T @ Qux + Qux.T @ K[t]
        Vxx = 0.5 * (Vxx + Vxx.T)
    return Gains(K, k, (float(dv1), float(dv2)))


def final_gains(model, traj: Trajectory, cost, config: SolverConfig, reg: float) -> Optional[Gains]:
    """Feedback gains about ``traj`` itself, escalating regularization as needed."""
    d = expand(model, traj, cost, config)
    while reg <= config.reg_max:
        try:
            return backward_pass(traj, d, reg)
        except NotPositiveDefinite:
            reg *= config.reg_scale
    return None


def solve(model: DynamicsModel, cost, x0, U_init, config: SolverConfig = SolverConfig(),
          params: SmoothParams = SmoothParams()) -> SolveResult:
    """Minimize the total running cost from ``x0`` starting at ``U_init``.

    ``cost`` is a :class:`RunningCostTable` (wrapped as an STL cost) or any
    object with ``values``/``expand``/``horizon``. The loop stops when an
    accepted step (or the predicted improvement) falls below
    ``cost_tolerance``, at ``max_iterations``, or when the line search fails
    even at maximum regularization. The best trajectory found is returned,
    with a satisfaction certificate when the cost came from a table.
    """
    start = time.perf_counter()
    cost = as_cost(model, cost, params, config)
    traj = rollout(model, x0, U_init, cost)
    reg = config.reg_init
    history = [traj.cost]
    converged = False
    stop = "max_iterations"
    gains = None
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        d = expand(model, traj, cost, config)
        accepted = None
        while accepted is None:
            try:
                gains = backward_pass(traj, d, reg)
            except NotPositiveDefinite:
                reg *= config.reg_scale
                if reg > config.reg_max:
                    break
                continue
            a, b = gains.expected
            if -a < config.cost_tolerance:
                converged = True
                break
            for alpha in config.line_search_alphas:
                try:
                    cand = _forward(model, traj, gains, alpha, cost)
                except (NonFiniteState, SingularMassMatrix):
                    continue
                expected = -(alpha * a + alpha * alpha * b)
                actual = traj.cost - cand.cost
                if expected > 0 and actual >= config.acceptance_ratio * expected:
                    accepted = cand
                    break
            if accepted is None:
                reg *= config.reg_scale
                if reg > config.reg_max:
                    break
        if converged:
            stop = "predicted_improvement_below_tolerance"
            break
        if accepted is None:
            stop = "line_search_exhausted"
            break
        improvement = traj.cost - accepted.cost
        traj = accepted
        history.append(traj.cost)
        reg = max(reg / config.reg_scale, config.reg_min)
        log.debug("iter %d cost %.6g reg %.1e", iterations, traj.cost, reg)
        if improvement < config.cost_tolerance:
            converged = True
            stop = "cost_decrease_below_tolerance"
            break
    if stop != "predicted_improvement_below_tolerance":
        gains = final_gains(model, traj, cost, config, reg)
    certificate = None
    if isinstance(cost, StlCost):
        certificate = check_soundness(cost.table, traj.Y, cost.params)
    return SolveResult(traj, gains, iterations, converged, history, certificate, stop,
                       time.perf_counter() - start, reg)
