"""Discrete-time dynamics ``x+ = f(x, u)``, ``y = g(x, u)`` with Jacobians.

Models evaluate on single vectors or on batches with arbitrary leading
dimensions, which lets finite differences and the first-order baseline
perturb many inputs in one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import NonFiniteState, SingularMassMatrix


class DynamicsModel:
    """Base class: subclasses set ``n``, ``m``, ``p``, ``dt`` and ``name``.

    Override :meth:`analytic_jacobians` (and set ``has_analytic_jacobians``)
    when closed-form derivatives exist.
    """

    name = "model"
    n: int
    m: int
    p: int
    dt: float
    has_analytic_jacobians = False

    def step(self, x, u) -> np.ndarray:
        raise NotImplementedError

    def output(self, x, u) -> np.ndarray:
        raise NotImplementedError

    def analytic_jacobians(self, x, u):
        raise NotImplementedError(f"{self.name} has no analytic Jacobians")

    def jacobians(self, x, u, mode: str = "finite_difference", h: float = 1e-5):
        """``(f_x, f_u, g_x, g_u)`` by finite differences or in closed form.

        ``mode="analytic"`` falls back to finite differences when the model
        has no analytic Jacobians.
        """
        if mode == "analytic" and self.has_analytic_jacobians:
            return self.analytic_jacobians(x, u)
        return fd_jacobians(self, x, u, h)

    def to_dict(self) -> dict:
        return {"name": self.name, "dt": self.dt}


class LinearSystem(DynamicsModel):
    """``x+ = A x + B u``, ``y = C x + D u`` (``C = I``, ``D = 0`` by default)."""

    name = "linear"
    has_analytic_jacobians = True

    def __init__(self, A, B, C=None, D=None, dt: float = 1.0):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.B = np.atleast_2d(np.asarray(B, dtype=float))
        self.n, self.m = self.B.shape
        if self.A.shape != (self.n, self.n):
            raise ValueError(f"A must be ({self.n},{self.n}), got {self.A.shape}")
        self.C = np.eye(self.n) if C is None else np.atleast_2d(np.asarray(C, dtype=float))
        self.p = self.C.shape[0]
        self.D = np.zeros((self.p, self.m)) if D is None else np.atleast_2d(np.asarray(D, dtype=float))
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.dt = float(dt)

    def step(self, x, u):
        return x @ self.A.T + u @ self.B.T

    def output(self, x, u):
        return x @ self.C.T + u @ self.D.T

    def analytic_jacobians(self, x, u):
        batch = np.shape(x)[:-1]
        return tuple(np.broadcast_to(M, batch + M.shape).copy()
                     for M in (self.A, self.B, self.C, self.D))


def single_integrator(dt: float, dim: int = 2) -> LinearSystem:
    """Planar point robot ``x+ = x + u dt``, ``y = x``."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    model = LinearSystem(np.eye(dim), dt * np.eye(dim), dt=dt)
    model.name = "single_integrator"
    return model


def double_integrator(dt: float, dim: int = 2) -> LinearSystem:
    """State ``(position, velocity)``, control acceleration, output position."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    I, Z = np.eye(dim), np.zeros((dim, dim))
    A = np.block([[I, dt * I], [Z, I]])
    B = np.vstack([Z, dt * I])
    C = np.hstack([I, Z])
    model = LinearSystem(A, B, C, dt=dt)
    model.name = "double_integrator"
    return model


def fd_jacobians(model: DynamicsModel, x, u, h: float = 1e-5):
    """Central-difference ``(f_x, f_u, g_x, g_u)`` at ``(x, u)``.

    ``x`` may be ``(n,)`` or ``(..., n)``; all perturbations are evaluated in
    one batched call per map.

    Raises:
        NonFiniteState: a perturbed evaluation was not finite.
    """
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    x = np.asarray(x)
    u = np.asarray(u)
    n, m = x.shape[-1], u.shape[-1]
    Ex = h * np.eye(n)
    Eu = h * np.eye(m)
    xs = x[..., None, :]
    us = u[..., None, :]
    # perturbation index sits on axis -2
    x_pert = np.concatenate([xs + Ex, xs - Ex,
                             np.broadcast_to(xs, x.shape[:-1] + (2 * m, n))], axis=-2)
    u_pert = np.concatenate([np.broadcast_to(us, u.shape[:-1] + (2 * n, m)),
                             us + Eu, us - Eu], axis=-2)
    F = model.step(x_pert, u_pert)
    G = model.output(x_pert, u_pert)
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(G))):
        raise NonFiniteState("finite-difference evaluation", 0)

    def split(V):
        dx = (V[..., :n, :] - V[..., n:2 * n, :]) / (2 * h)
        du = (V[..., 2 * n:2 * n + m, :] - V[..., 2 * n + m:, :]) / (2 * h)
        return np.swapaxes(dx, -1, -2), np.swapaxes(du, -1, -2)

    fx, fu = split(F)
    gx, gu = split(G)
    return fx, fu, gx, gu


@dataclass(frozen=True)
class PlanarArmParams:
    """Planar serial arm with revolute joints.

    Joint angles are relative; the first is measured from the horizontal x
    axis and gravity acts along -y. ``com`` is the distance from each joint
    to its link's center of mass and ``inertias`` are rotational inertias
    about that center (thin rods, ``m l^2 / 12``, when omitted).
    """

    lengths: tuple = (0.4, 0.35, 0.25)
    masses: tuple = (1.0, 0.8, 0.5)
    com: tuple = (0.2, 0.175, 0.125)
    inertias: Optional[tuple] = None
    gravity: float = 9.81

    def __post_init__(self):
        for f in ("lengths", "masses", "com"):
            object.__setattr__(self, f, tuple(float(v) for v in getattr(self, f)))
        if self.inertias is None:
            object.__setattr__(self, "inertias", tuple(
                m * l * l / 12.0 for m, l in zip(self.masses, self.lengths)))
        else:
            object.__setattr__(self, "inertias", tuple(float(v) for v in self.inertias))
        k = len(self.lengths)
        if not (len(self.masses) == len(self.com) == len(self.inertias) == k):
            raise ValueError("lengths, masses, com and inertias need one entry per link")
        if any(l <= 0 for l in self.lengths):
            raise ValueError("link lengths must be positive")
        if any(m < 0 for m in self.masses) or any(i < 0 for i in self.inertias):
            raise ValueError("masses and inertias must be non-negative")
        if any(c < 0 or c > l for c, l in zip(self.com, self.lengths)):
            raise ValueError("centers of mass must lie on their links")

    @property
    def links(self) -> int:
        return len(self.lengths)


class PlanarArm(DynamicsModel):
    """Torque-controlled planar arm, ``M q'' + C q' + tau_g = tau``.

    State ``x = (q, q')``, control ``u = tau``, output ``y = q``. Integration
    is forward Euler: ``q+ = q + q' dt`` and ``q'+ = q' + q'' dt``.
    """

    name = "planar_arm"
    max_condition = 1e12

    def __init__(self, params: PlanarArmParams = PlanarArmParams(), dt: float = 0.005):
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.params = params
        self.dt = float(dt)
        k = params.links
        self.n, self.m, self.p = 2 * k, k, k
        lengths, com = np.array(params.lengths), np.array(params.com)
        # L[i, j]: lever of link j's direction in the position of center i
        L = np.tril(np.broadcast_to(lengths, (k, k)), -1) + np.diag(com)
        masses = np.array(params.masses)
        self._W = np.einsum("i,ij,ik->jk", masses, L, L)
        self._w = masses @ L
        self._S = np.triu(np.ones((k, k)))  # S[j, k] = 1 if k >= j
        inert = np.array(params.inertias)
        idx = np.arange(k)
        self._Icum = np.array([[inert[max(a, b):].sum() for b in idx] for a in idx])

    def to_dict(self) -> dict:
        p = self.params
        return {"name": self.name, "dt": self.dt,
                "params": {"lengths": list(p.lengths), "masses": list(p.masses),
                           "com": list(p.com), "inertias": list(p.inertias),
                           "gravity": p.gravity}}

    @staticmethod
    def _angles(q):
        return np.cumsum(q, axis=-1)

    def mass_matrix(self, q) -> np.ndarray:
        th = self._angles(np.asarray(q))
        cos_d = np.cos(th[..., :, None] - th[..., None, :])
        return self._S @ (self._W * cos_d) @ self._S.T + self._Icum

    def mass_matrix_derivatives(self, q) -> np.ndarray:
        """``dM[..., r, :, :] = dM/dq_r``."""
        th = self._angles(np.asarray(q))
        sin_d = np.sin(th[..., :, None] - th[..., None, :])
        S = self._S
        # d(theta_a - theta_b)/dq_r = S[r, a] - S[r, b]
        diff = S[:, :, None] - S[:, None, :]
        inner = -(self._W * sin_d)[..., None, :, :] * diff
        return S @ inner @ S.T

    def coriolis_matrix(self, q, qd) -> np.ndarray:
        """Christoffel-symbol form: ``C_kj = sum_i G_kji qd_i``."""
        dM = self.mass_matrix_derivatives(q)  # [r, a, b] = dM_ab/dq_r
        # G_kji = 0.5 (dM_kj/dq_i + dM_ki/dq_j - dM_ij/dq_k)
        t1 = np.einsum("...ikj,...i->...kj", dM, qd)
        t2 = np.einsum("...jki,...i->...kj", dM, qd)
        t3 = np.einsum("...kij,...i->...kj", dM, qd)
        return 0.5 * (t1 + t2 - t3)

    def gravity_torque(self, q) -> np.ndarray:
        th = self._angles(np.asarray(q))
        return self.params.gravity * (np.cos(th) * self._w) @ self._S.T

    def kinetic_energy(self, q, qd) -> np.ndarray:
        return 0.5 * np.einsum("...i,...ij,...j->...", qd, self.mass_matrix(q), qd)

    def forward_kinematics(self, q) -> np.ndarray:
        th = self._angles(np.asarray(q))
        l = np.array(self.params.lengths)
        return np.stack([np.sum(l * np.cos(th), -1), np.sum(l * np.sin(th), -1)], -1)

    def end_effector_jacobian(self, q) -> np.ndarray:
        th = self._angles(np.asarray(q))
        l = np.array(self.params.lengths)
        dx = (-l * np.sin(th)) @ self._S.T
        dy = (l * np.cos(th)) @ self._S.T
        return np.stack([dx, dy], axis=-2)

    def acceleration(self, q, qd, tau) -> np.ndarray:
        M = self.mass_matrix(q)
        check = np.real(M)
        eig = np.linalg.eigvalsh(check)
        if np.any(eig[..., 0] <= 0) or np.any(eig[..., -1] > self.max_condition * eig[..., 0]):
            raise SingularMassMatrix("arm mass matrix is singular or ill-conditioned")
        C = self.coriolis_matrix(q, qd)
        rhs = tau - np.einsum("...ij,...j->...i", C, qd) - self.gravity_torque(q)
        return np.linalg.solve(M, rhs[..., None])[..., 0]

    def step(self, x, u):
        x = np.asarray(x)
        k = self.m
        q, qd = x[..., :k], x[..., k:]
        q, qd, u = np.broadcast_arrays(q, qd, np.asarray(u))
        qdd = self.acceleration(q, qd, u)
        return np.concatenate([q + qd * self.dt, qd + qdd * self.dt], axis=-1)

    def output(self, x, u):
        x = np.asarray(x)
        y = x[..., :self.m]
        return np.broadcast_to(y, np.broadcast_shapes(y.shape, np.shape(u)[:-1] + (self.m,))).copy()


def planar_arm(params: PlanarArmParams = PlanarArmParams(), dt: float = 0.005) -> PlanarArm:
    return PlanarArm(params, dt)


def gravity_torque(params: PlanarArmParams, q) -> np.ndarray:
    """Joint torques that hold the arm still at configuration ``q``."""
    return PlanarArm(params, 1.0).gravity_torque(q)


def inverse_kinematics(arm: PlanarArm, target: Sequence[float], q_seed: Sequence[float],
                       damping: float = 1e-2, tol: float = 1e-3, max_iter: int = 500) -> np.ndarray:
    """Damped least-squares IK for the end-effector position.

    Raises:
        ValueError: the final position error exceeds ``tol``.
    """
    target = np.asarray(target, dtype=float)
    q = np.array(q_seed, dtype=float)
    for _ in range(max_iter):
        err = target - arm.forward_kinematics(q)
        if np.linalg.norm(err) < tol * 1e-3:
            break
        J = arm.end_effector_jacobian(q)
        q = q + J.T @ np.linalg.solve(J @ J.T + damping ** 2 * np.eye(2), err)
    err = np.linalg.norm(target - arm.forward_kinematics(q))
    if err > tol:
        raise ValueError(f"IK did not reach target {target.tolist()} (error {err:.2e} m)")
    return q
