"""Smooth min/max operators and smooth robustness of state formulas.

Both operators under-approximate their exact counterparts::

    smooth_min(a) = -(1/k1) log sum_i exp(-k1 a_i)               <= min(a)
    smooth_max(a) = sum_i a_i exp(k2 a_i) / sum_i exp(k2 a_i)     <= max(a)

and both are evaluated after shifting by the extreme argument so that large
``k * a`` cannot overflow. Values carry a gradient and Hessian with respect
to the output vector ``y``; every array may carry leading batch dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyArgumentList
from .stl.formula import And, NegPred, Not, Or, Pred
from .stl.predicates import AffinePredicate, BallPredicate, BoxPredicate


@dataclass(frozen=True)
class SmoothParams:
    """Sharpness of the smooth min (``k1``) and smooth max (``k2``)."""

    k1: float = 10.0
    k2: float = 10.0

    def __post_init__(self):
        if not (self.k1 > 0 and self.k2 > 0):
            raise ValueError(f"k1 and k2 must be positive, got k1={self.k1}, k2={self.k2}")

    def scaled(self, factor: float) -> "SmoothParams":
        return SmoothParams(self.k1 * factor, self.k2 * factor)


@dataclass(frozen=True, eq=False)
class SmoothValue:
    """A scalar (or batch of scalars) with optional gradient and Hessian in y.

    Shapes: ``value (...)``, ``grad (..., p)``, ``hess (..., p, p)``.
    ``grad``/``hess`` are ``None`` on the value-only path.
    """

    value: np.ndarray
    grad: Optional[np.ndarray] = None
    hess: Optional[np.ndarray] = None

    @property
    def has_derivatives(self) -> bool:
        return self.grad is not None

    def __neg__(self) -> "SmoothValue":
        if self.grad is None:
            return SmoothValue(-self.value)
        return SmoothValue(-self.value, -self.grad, -self.hess)

    def scale(self, c: float) -> "SmoothValue":
        if self.grad is None:
            return SmoothValue(c * self.value)
        return SmoothValue(c * self.value, c * self.grad, c * self.hess)

    @staticmethod
    def zero(p: int, batch: tuple = (), derivatives: bool = True) -> "SmoothValue":
        value = np.zeros(batch)
        if not derivatives:
            return SmoothValue(value)
        return SmoothValue(value, np.zeros(batch + (p,)), np.zeros(batch + (p, p)))


def _symmetrize(h: np.ndarray) -> np.ndarray:
    return 0.5 * (h + np.swapaxes(h, -1, -2))


def _stack(args: Sequence[SmoothValue]):
    if len(args) == 0:
        raise EmptyArgumentList("smooth min/max needs at least one argument")
    values = np.stack(np.broadcast_arrays(*[np.asarray(a.value, dtype=float) for a in args]))
    derivs = all(a.grad is not None for a in args)
    if not derivs:
        return values, None, None
    grads = np.stack(np.broadcast_arrays(*[a.grad for a in args]))
    hesses = np.stack(np.broadcast_arrays(*[a.hess for a in args]))
    return values, grads, hesses


def _k(params, which: str) -> float:
    if isinstance(params, SmoothParams):
        return getattr(params, which)
    k = float(params)
    if not k > 0:
        raise ValueError(f"sharpness must be positive, got {k}")
    return k


def smooth_min(args: Sequence[SmoothValue], params: SmoothParams | float) -> SmoothValue:
    """Log-sum-exp smooth minimum with sharpness ``k1``.

    A single argument is returned unchanged.
    """
    k = _k(params, "k1")
    if len(args) == 1:
        return args[0]
    V, G, H = _stack(args)
    vmin = V.min(axis=0)
    e = np.exp(-k * (V - vmin))
    total = e.sum(axis=0)
    value = vmin - np.log(total) / k
    if G is None:
        return SmoothValue(value)
    w = e / total
    grad = np.einsum("i...,i...p->...p", w, G)
    hess = np.einsum("i...,i...pq->...pq", w, H)
    second = np.einsum("i...,i...p,i...q->...pq", w, G, G)
    hess = hess - k * (second - grad[..., :, None] * grad[..., None, :])
    return SmoothValue(value, grad, _symmetrize(hess))


def smooth_max(args: Sequence[SmoothValue], params: SmoothParams | float) -> SmoothValue:
    """Softmax-weighted mean with sharpness ``k2``.

    A single argument is returned unchanged. The value is clipped to the true
    maximum so the under-approximation survives floating-point rounding.
    """
    k = _k(params, "k2")
    if len(args) == 1:
        return args[0]
    V, G, H = _stack(args)
    vmax = V.max(axis=0)
    e = np.exp(k * (V - vmax))
    w = e / e.sum(axis=0)
    value = np.minimum(np.sum(w * V, axis=0), vmax)
    if G is None:
        return SmoothValue(value)
    c = V - value
    d = w * (1.0 + k * c)
    grad = np.einsum("i...,i...p->...p", d, G)
    gbar = np.einsum("i...,i...p->...p", w, G)
    hbar = np.einsum("i...,i...p->...p", w * c, G)
    diag = np.einsum("i...,i...p,i...q->...pq", w * (2.0 + k * c), G, G)
    cross = (2.0 * gbar[..., :, None] * gbar[..., None, :]
             + k * (hbar[..., :, None] * gbar[..., None, :]
                    + gbar[..., :, None] * hbar[..., None, :]))
    hess = np.einsum("i...,i...pq->...pq", d, H) + k * diag - k * cross
    return SmoothValue(value, grad, _symmetrize(hess))


def _affine_values(A: np.ndarray, b: np.ndarray, y: np.ndarray, sign: float,
                   derivatives: bool) -> list[SmoothValue]:
    vals = sign * (y @ A.T - b)
    batch = vals.shape[:-1]
    p = y.shape[-1]
    out = []
    for i in range(A.shape[0]):
        if derivatives:
            g = np.broadcast_to(sign * A[i], batch + (p,))
            out.append(SmoothValue(vals[..., i], g, np.zeros(batch + (p, p))))
        else:
            out.append(SmoothValue(vals[..., i]))
    return out


def predicate_smooth(pred, y, params: SmoothParams, negated: bool = False,
                     derivatives: bool = True) -> SmoothValue:
    """Smooth robustness of ``pred`` (or its negation) at ``y``.

    Affine and ball predicates are already smooth and are returned exactly. A
    box is the conjunction of its bound constraints, so it goes through
    ``smooth_min``; its negation is the disjunction of the negated constraints
    and goes through ``smooth_max``.
    """
    y = np.asarray(y, dtype=float)
    sign = -1.0 if negated else 1.0
    if isinstance(pred, AffinePredicate):
        A, b = pred.affine_rows()
        return _affine_values(A, b, y, sign, derivatives)[0]
    if isinstance(pred, BallPredicate):
        if not derivatives:
            return SmoothValue(sign * pred.value(y))
        v, g, h = pred.derivatives(y)
        return SmoothValue(sign * v, sign * g, sign * h)
    if isinstance(pred, BoxPredicate):
        pred.value(y)  # dimension check
        A, b = pred.affine_rows()
        atoms = _affine_values(A, b, y, sign, derivatives)
        return smooth_max(atoms, params) if negated else smooth_min(atoms, params)
    raise TypeError(f"unknown predicate type {type(pred).__name__}")


def smooth_state_robustness(psi, y, params: SmoothParams = SmoothParams(),
                            derivatives: bool = True) -> SmoothValue:
    """Smooth robustness of a state formula at output ``y`` (or a batch).

    Conjunctions use :func:`smooth_min`, disjunctions :func:`smooth_max`, and
    negation is applied at the predicate level.
    """
    if isinstance(psi, Pred):
        return predicate_smooth(psi.pred, y, params, False, derivatives)
    if isinstance(psi, NegPred):
        return predicate_smooth(psi.pred, y, params, True, derivatives)
    if isinstance(psi, Not) and isinstance(psi.child, Pred):
        return predicate_smooth(psi.child.pred, y, params, True, derivatives)
    if isinstance(psi, And):
        return smooth_min([smooth_state_robustness(c, y, params, derivatives)
                           for c in psi.children], params)
    if isinstance(psi, Or):
        return smooth_max([smooth_state_robustness(c, y, params, derivatives)
                           for c in psi.children], params)
    raise TypeError(f"not an in-fragment state formula: {type(psi).__name__}")
