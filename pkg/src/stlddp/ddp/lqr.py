"""Finite-horizon discrete LQR by the Riccati recursion.

Used as the reference answer for linear-quadratic problems: with
``x+ = A x + B u`` and cost ``sum_{t<T} (x'Qx + u'Ru)/2 + x_T'Qf x_T/2``
the optimal cost is ``x0' P_0 x0 / 2``. The terminal control ``u_T`` only
adds ``u_T'R u_T/2`` and is zero at the optimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class LqrSolution:
    cost: float
    K: np.ndarray  # (T, m, n), u_t = -K_t x_t
    P: np.ndarray  # (T+1, n, n)
    X: np.ndarray  # (T+1, n)
    U: np.ndarray  # (T+1, m), last row zero


def riccati(A, B, Q, R, Qf, x0, horizon: int) -> LqrSolution:
    A, B, Q, R, Qf = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (A, B, Q, R, Qf))
    x0 = np.asarray(x0, dtype=float)
    n, m = B.shape
    P = np.empty((horizon + 1, n, n))
    K = np.empty((horizon, m, n))
    P[horizon] = Qf
    for t in range(horizon - 1, -1, -1):
        Pn = P[t + 1]
        K[t] = np.linalg.solve(R + B.T @ Pn @ B, B.T @ Pn @ A)
        Pt = Q + A.T @ Pn @ (A - B @ K[t])
        P[t] = 0.5 * (Pt + Pt.T)
    X = np.empty((horizon + 1, n))
    U = np.zeros((horizon + 1, m))
    X[0] = x0
    for t in range(horizon):
        U[t] = -K[t] @ X[t]
        X[t + 1] = A @ X[t] + B @ U[t]
    return LqrSolution(float(0.5 * x0 @ P[0] @ x0), K, P, X, U)
