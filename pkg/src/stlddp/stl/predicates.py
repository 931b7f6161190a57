"""Predicate functions mu(y) whose sign decides an atomic proposition.

Three kinds are supported. All evaluation routines accept a single output
vector of shape ``(p,)`` or a batch of shape ``(..., p)``.

* affine: ``a . y - b``
* ball:   ``r - sqrt(|y - c|^2 + eps^2) + eps``
* box:    per-dimension bounds, i.e. the conjunction of ``y_i - lo_i >= 0`` and
  ``hi_i - y_i >= 0`` over the constrained dimensions
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from ..errors import DimensionMismatch

DEFAULT_BALL_EPS = 1e-3


def _as_tuple(values: Sequence[float]) -> tuple:
    return tuple(float(v) for v in np.asarray(values, dtype=float).ravel())


def _check_dim(y: np.ndarray, p: int, name: str) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim == 0 or y.shape[-1] != p:
        raise DimensionMismatch(
            f"predicate {name!r} expects output dimension {p}, got shape {y.shape}")
    return y


@dataclass(frozen=True)
class AffinePredicate:
    """``mu(y) = a . y - b``."""

    name: str
    a: tuple
    b: float

    def __init__(self, name: str, a: Sequence[float], b: float):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "a", _as_tuple(a))
        object.__setattr__(self, "b", float(b))
        if len(self.a) == 0:
            raise ValueError("affine predicate needs at least one coefficient")

    kind = "affine"

    @property
    def dim(self) -> int:
        return len(self.a)

    def affine_rows(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([self.a]), np.array([self.b])

    def value(self, y) -> np.ndarray:
        y = _check_dim(y, self.dim, self.name)
        return y @ np.asarray(self.a) - self.b


@dataclass(frozen=True)
class BallPredicate:
    """``mu(y) = r - sqrt(|y - c|^2 + eps^2) + eps``, positive inside the ball.

    ``eps`` smooths the norm at the center; ``eps = 0`` recovers the plain
    Euclidean ball but then has no Hessian at ``y = c``.
    """

    name: str
    center: tuple
    radius: float
    eps: float = DEFAULT_BALL_EPS

    def __init__(self, name: str, center: Sequence[float], radius: float,
                 eps: float = DEFAULT_BALL_EPS):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "center", _as_tuple(center))
        object.__setattr__(self, "radius", float(radius))
        object.__setattr__(self, "eps", float(eps))
        if not self.radius > 0:
            raise ValueError(f"ball {name!r}: radius must be positive, got {radius}")
        if not self.eps >= 0:
            raise ValueError(f"ball {name!r}: eps must be non-negative, got {eps}")

    kind = "ball"

    @property
    def dim(self) -> int:
        return len(self.center)

    def value(self, y) -> np.ndarray:
        y = _check_dim(y, self.dim, self.name)
        d = y - np.asarray(self.center)
        s = np.sqrt(np.sum(d * d, axis=-1) + self.eps ** 2)
        return self.radius - s + self.eps

    def derivatives(self, y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Value, gradient and Hessian with respect to ``y``.

        At the exact center with ``eps = 0`` the norm is not differentiable;
        zero gradient and Hessian are returned there.
        """
        y = _check_dim(y, self.dim, self.name)
        d = y - np.asarray(self.center)
        s = np.sqrt(np.sum(d * d, axis=-1) + self.eps ** 2)
        value = self.radius - s + self.eps
        safe = np.where(s > 0, s, 1.0)[..., None]
        grad = np.where(s[..., None] > 0, -d / safe, 0.0)
        outer = d[..., :, None] * d[..., None, :]
        eye = np.eye(self.dim)
        hess = -(eye / safe[..., None] - outer / safe[..., None] ** 3)
        hess = np.where(s[..., None, None] > 0, hess, 0.0)
        return value, grad, hess


@dataclass(frozen=True)
class BoxPredicate:
    """Axis-aligned box; positive strictly inside.

    ``None`` (or an infinite bound) leaves that side unconstrained. The box is
    the conjunction of one affine constraint per finite bound, so its exact
    robustness is the minimum of those constraint values.
    """

    name: str
    lower: tuple
    upper: tuple

    def __init__(self, name: str, lower: Sequence[Optional[float]],
                 upper: Sequence[Optional[float]]):
        lo = tuple(-math.inf if v is None else float(v) for v in lower)
        hi = tuple(math.inf if v is None else float(v) for v in upper)
        if len(lo) != len(hi):
            raise ValueError(f"box {name!r}: lower and upper have different lengths")
        for i, (l, h) in enumerate(zip(lo, hi)):
            if math.isfinite(l) and math.isfinite(h) and not l < h:
                raise ValueError(f"box {name!r}: lower[{i}]={l} must be < upper[{i}]={h}")
        if not any(math.isfinite(v) for v in lo + hi):
            raise ValueError(f"box {name!r} constrains no dimension")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    kind = "box"

    @property
    def dim(self) -> int:
        return len(self.lower)

    def affine_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """Rows ``(A, b)`` such that the box is ``A y - b >= 0`` row-wise."""
        rows, offsets = [], []
        for i in range(self.dim):
            if math.isfinite(self.lower[i]):
                row = np.zeros(self.dim)
                row[i] = 1.0
                rows.append(row)
                offsets.append(self.lower[i])
            if math.isfinite(self.upper[i]):
                row = np.zeros(self.dim)
                row[i] = -1.0
                rows.append(row)
                offsets.append(-self.upper[i])
        return np.array(rows), np.array(offsets)

    def value(self, y) -> np.ndarray:
        y = _check_dim(y, self.dim, self.name)
        A, b = self.affine_rows()
        return np.min(y @ A.T - b, axis=-1)

    def contains(self, y) -> np.ndarray:
        return self.value(y) > 0


Predicate = Union[AffinePredicate, BallPredicate, BoxPredicate]


def eval_predicate(pred: Predicate, y) -> np.ndarray | float:
    """Exact predicate value ``mu(y)``; a float for a single vector."""
    v = pred.value(y)
    return float(v) if np.ndim(v) == 0 else v


def predicate_from_dict(name: str, entry: dict) -> Predicate:
    """Build a predicate from its JSON form.

    ``{"kind": "affine", "a": [...], "b": 0.0}``,
    ``{"kind": "ball", "center": [...], "radius": r, "eps": 1e-3}`` or
    ``{"kind": "box", "lower": [...], "upper": [...]}``.
    """
    kind = entry.get("kind")
    if kind == "affine":
        return AffinePredicate(name, entry["a"], entry.get("b", 0.0))
    if kind == "ball":
        return BallPredicate(name, entry["center"], entry["radius"],
                             entry.get("eps", DEFAULT_BALL_EPS))
    if kind == "box":
        return BoxPredicate(name, entry["lower"], entry["upper"])
    raise ValueError(f"predicate {name!r}: unknown kind {kind!r}")


def predicate_to_dict(pred: Predicate) -> dict:
    if isinstance(pred, AffinePredicate):
        return {"kind": "affine", "a": list(pred.a), "b": pred.b}
    if isinstance(pred, BallPredicate):
        return {"kind": "ball", "center": list(pred.center), "radius": pred.radius,
                "eps": pred.eps}
    return {"kind": "box",
            "lower": [None if math.isinf(v) else v for v in pred.lower],
            "upper": [None if math.isinf(v) else v for v in pred.upper]}
