"""Running-cost objects consumed by the trajectory optimizers.

A cost provides ``values(X, U)`` (batch-aware, shape ``(..., T+1)``) and
``expand(X, U, gx, gu)`` returning the per-step quadratic expansion
``(l_x, l_u, l_xx, l_uu, l_ux)``.
"""

from __future__ import annotations

import numpy as np

from ..costgen import RunningCostTable, evaluate_trajectory
from ..dynamics import DynamicsModel
from ..smoothing import SmoothParams


class StlCost:
    """Compiled STL running cost, optionally plus ``0.5 * r * |u|^2``.

    The effort term keeps the optimization bounded when avoid-style terms
    reward moving arbitrarily far away; it never enters the certificate.
    Output-map curvature is dropped (exact for linear output maps).
    """

    def __init__(self, table: RunningCostTable, model: DynamicsModel,
                 params: SmoothParams = SmoothParams(), control_weight: float = 0.0):
        if control_weight < 0:
            raise ValueError("control_weight must be non-negative")
        self.table = table
        self.model = model
        self.params = params
        self.control_weight = float(control_weight)

    @property
    def horizon(self) -> int:
        return self.table.horizon

    def values(self, X, U) -> np.ndarray:
        Y = self.model.output(X, U)
        v = evaluate_trajectory(self.table, Y, self.params, derivatives=False).values
        if self.control_weight:
            v = v + 0.5 * self.control_weight * np.sum(np.asarray(U) ** 2, axis=-1)
        return v

    def expand(self, X, U, gx, gu):
        Y = self.model.output(X, U)
        c = evaluate_trajectory(self.table, Y, self.params, derivatives=True)
        lx = np.einsum("tpi,tp->ti", gx, c.grads)
        lu = np.einsum("tpj,tp->tj", gu, c.grads)
        Hgx = c.hess @ gx
        lxx = np.swapaxes(gx, 1, 2) @ Hgx
        luu = np.swapaxes(gu, 1, 2) @ c.hess @ gu
        lux = np.swapaxes(gu, 1, 2) @ Hgx
        if self.control_weight:
            lu = lu + self.control_weight * U
            luu = luu + self.control_weight * np.eye(U.shape[-1])
        return lx, lu, lxx, luu, lux


class QuadraticCost:
    """``0.5 x'Q x + 0.5 u'R u`` per step, with ``Qf`` replacing ``Q`` at t = T."""

    def __init__(self, Q, R, horizon: int, Qf=None):
        self.Q = np.atleast_2d(np.asarray(Q, dtype=float))
        self.R = np.atleast_2d(np.asarray(R, dtype=float))
        self.Qf = self.Q if Qf is None else np.atleast_2d(np.asarray(Qf, dtype=float))
        self._horizon = int(horizon)

    @property
    def horizon(self) -> int:
        return self._horizon

    def _state_weights(self) -> np.ndarray:
        W = np.broadcast_to(self.Q, (self._horizon + 1,) + self.Q.shape).copy()
        W[-1] = self.Qf
        return W

    def values(self, X, U) -> np.ndarray:
        W = self._state_weights()
        xs = 0.5 * np.einsum("...ti,tij,...tj->...t", X, W, X)
        us = 0.5 * np.einsum("...ti,ij,...tj->...t", U, self.R, U)
        return xs + us

    def expand(self, X, U, gx=None, gu=None):
        W = self._state_weights()
        N, m = U.shape
        lx = np.einsum("tij,tj->ti", W, X)
        lu = U @ self.R.T
        luu = np.broadcast_to(self.R, (N, m, m)).copy()
        lux = np.zeros((N, m, X.shape[1]))
        return lx, lu, W, luu, lux
