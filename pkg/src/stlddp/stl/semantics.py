"""Exact quantitative (robustness) semantics with true min/max.

All evaluators accept signals of shape ``(T+1, p)`` or batches
``(..., T+1, p)``. Time bounds are sample indices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, HorizonExceeded, LengthMismatch
from .formula import (And, Always, Eventually, Not, NegPred, Or, Pred,
                      Specification, Until)


@dataclass(frozen=True, eq=False)
class Signal:
    """Output samples ``y_0..y_T`` of a trajectory.

    ``dt`` is carried as metadata only; all semantics index samples directly.
    """

    samples: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        if samples.ndim != 2:
            raise DimensionMismatch(f"signal samples must be 2-D (T+1, p), got {samples.shape}")
        if samples.shape[0] == 0:
            raise LengthMismatch("robustness of an empty signal is undefined")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def horizon(self) -> int:
        return self.samples.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def __len__(self) -> int:
        return self.samples.shape[0]


def state_robustness(psi, Y) -> np.ndarray:
    """Robustness of a state formula at every sample: shape ``Y.shape[:-1]``."""
    if isinstance(psi, Pred):
        return psi.pred.value(Y)
    if isinstance(psi, NegPred):
        return -psi.pred.value(Y)
    if isinstance(psi, Not):
        return -state_robustness(psi.child, Y)
    if isinstance(psi, And):
        return np.min([state_robustness(c, Y) for c in psi.children], axis=0)
    if isinstance(psi, Or):
        return np.max([state_robustness(c, Y) for c in psi.children], axis=0)
    raise TypeError(f"not a state formula: {type(psi).__name__}")


def _window(phi, t: int, N: int) -> tuple[int, int]:
    lo, hi = t + phi.t1, t + phi.t2
    if hi > N - 1:
        raise HorizonExceeded(
            f"formula needs samples up to t={hi} but the signal ends at t={N - 1}")
    return lo, hi


def path_robustness(phi, Y, t: int = 0) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    N = Y.shape[-2]
    lo, hi = _window(phi, t, N)
    if isinstance(phi, Always):
        return np.min(state_robustness(phi.body, Y)[..., lo:hi + 1], axis=-1)
    if isinstance(phi, Eventually):
        return np.max(state_robustness(phi.body, Y)[..., lo:hi + 1], axis=-1)
    if isinstance(phi, Until):
        r1 = state_robustness(phi.left, Y)[..., lo:hi + 1]
        r2 = state_robustness(phi.right, Y)[..., lo:hi + 1]
        # best psi1 robustness over [lo, t') for each candidate t'
        prefix = np.minimum.accumulate(r1, axis=-1)
        inf = np.full(prefix.shape[:-1] + (1,), np.inf)
        guard = np.concatenate([inf, prefix[..., :-1]], axis=-1)
        return np.max(np.minimum(r2, guard), axis=-1)
    raise TypeError(f"not a path formula: {type(phi).__name__}")


def exact_robustness(formula, sig, t: int = 0):
    """Robustness of ``formula`` on the suffix of ``sig`` starting at ``t``.

    ``formula`` may be a :class:`Specification`, a path formula or a state
    formula. ``sig`` is a :class:`Signal` or an array ``(..., T+1, p)``.
    Returns a float for a single signal and an array for a batch.

    Raises:
        HorizonExceeded: some window reaches past the final sample.
    """
    Y = sig.samples if isinstance(sig, Signal) else np.asarray(sig, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[-2] == 0:
        raise LengthMismatch("robustness of an empty signal is undefined")
    if t < 0 or t > Y.shape[-2] - 1:
        raise HorizonExceeded(f"start index t={t} outside signal of length {Y.shape[-2]}")
    if isinstance(formula, Specification):
        out = np.min([path_robustness(phi, Y, t) for phi in formula.conjuncts], axis=0)
    elif isinstance(formula, (Always, Eventually, Until)):
        out = path_robustness(formula, Y, t)
    elif isinstance(formula, And) and formula.children and isinstance(
            formula.children[0], (Always, Eventually, Until)):
        out = np.min([path_robustness(phi, Y, t) for phi in formula.children], axis=0)
    else:
        out = state_robustness(formula, Y)[..., t]
    return float(out) if np.ndim(out) == 0 else out


def verdict(rho: float) -> str:
    """``"satisfied"``, ``"violated"`` or ``"undefined"`` (exactly zero)."""
    if rho > 0:
        return "satisfied"
    if rho < 0:
        return "violated"
    return "undefined"
