"""Compile a specification into per-timestep smooth running costs.

Every path formula contributes weighted state-formula terms at fixed
timesteps (switching times default to the end of each interval):

* ``G[t1,t2] psi``: ``psi`` at every t in ``t1..t2``, weight 1
* ``F[t1,t2] psi``: ``psi`` at ``t2``, weight ``max(1, t2-t1)``
* ``psi1 U[t1,t2] psi2``: ``psi1`` on ``t1..t2-1`` with weight 1, and
  ``psi2`` at ``t2`` with weight ``max(1, t2-t1)``

The running cost at step t is ``-w * rho~(y_t)`` for a single term and the
smooth max of those values for several terms; a step without terms costs 0.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .errors import HorizonExceeded, LengthMismatch
from .smoothing import (SmoothParams, SmoothValue, smooth_max,
                        smooth_state_robustness)
from .stl.formula import (Always, Eventually, Specification, Until,
                          format_formula)
from .stl.semantics import Signal, exact_robustness, verdict


@dataclass(frozen=True)
class CostTerm:
    """One weighted state formula placed at some timestep.

    ``source`` is the index of the originating conjunct in the specification
    and ``role`` names its part (``always``, ``eventually``, ``until-hold``,
    ``until-target``).
    """

    formula: object
    weight: float
    source: int
    role: str

    def __post_init__(self):
        if not self.weight >= 1:
            raise ValueError(f"cost term weight must be >= 1, got {self.weight}")


@dataclass(frozen=True, eq=False)
class RunningCostTable:
    spec: Specification
    terms: tuple  # length T+1, each a tuple of CostTerm
    switching_times: tuple = field(default=())

    @property
    def horizon(self) -> int:
        return len(self.terms) - 1

    def __len__(self) -> int:
        return len(self.terms)

    def timesteps_of(self, source: int, role: Optional[str] = None) -> list[int]:
        return [t for t, entry in enumerate(self.terms)
                if any(c.source == source and (role is None or c.role == role) for c in entry)]


def incentive_weight(t1: int, t2: int) -> float:
    """Interval-length weight for single-instant terms, floored at 1."""
    return float(max(1, t2 - t1))


def compile(spec: Specification,
            switching_times: Optional[Mapping[int, int]] = None) -> RunningCostTable:
    """Build the running-cost table for ``spec``.

    Args:
        spec: validated specification.
        switching_times: optional ``{conjunct index: t}`` overrides for
            eventually/until conjuncts; each ``t`` must lie in ``[t1, t2]``.

    Raises:
        HorizonExceeded: a conjunct (or override) extends past the horizon.
    """
    switching_times = dict(switching_times or {})
    T = spec.horizon
    entries: list[list[CostTerm]] = [[] for _ in range(T + 1)]
    used = []
    for i, phi in enumerate(spec.conjuncts):
        if phi.t2 > T:
            raise HorizonExceeded(f"conjunct {i} ends at {phi.t2} > T={T}")
        if isinstance(phi, Always):
            if i in switching_times:
                raise ValueError(f"conjunct {i} is an always formula; it has no switching time")
            for t in range(phi.t1, phi.t2 + 1):
                entries[t].append(CostTerm(phi.body, 1.0, i, "always"))
            continue
        ts = switching_times.get(i, phi.t2)
        if not phi.t1 <= ts <= phi.t2:
            raise ValueError(
                f"switching time {ts} for conjunct {i} outside [{phi.t1},{phi.t2}]")
        used.append((i, ts))
        w = incentive_weight(phi.t1, phi.t2)
        if isinstance(phi, Eventually):
            entries[ts].append(CostTerm(phi.body, w, i, "eventually"))
        elif isinstance(phi, Until):
            for t in range(phi.t1, ts):
                entries[t].append(CostTerm(phi.left, 1.0, i, "until-hold"))
            entries[ts].append(CostTerm(phi.right, w, i, "until-target"))
        else:
            raise TypeError(f"not a path formula: {phi!r}")
    return RunningCostTable(spec, tuple(tuple(e) for e in entries), tuple(used))


def _term_value(term: CostTerm, y, params: SmoothParams, derivatives: bool) -> SmoothValue:
    return smooth_state_robustness(term.formula, y, params, derivatives).scale(-term.weight)


def eval_running_cost(table: RunningCostTable, t: int, y, params: SmoothParams = SmoothParams(),
                      derivatives: bool = True) -> SmoothValue:
    """Smooth running cost ``l_t`` at output ``y``.

    Empty entries cost exactly zero; one term is returned as ``-w * rho~``;
    several terms are merged with :func:`smooth_max`.
    """
    if not 0 <= t <= table.horizon:
        raise HorizonExceeded(f"timestep {t} outside [0, {table.horizon}]")
    y = np.asarray(y, dtype=float)
    entry = table.terms[t]
    if not entry:
        return SmoothValue.zero(y.shape[-1], y.shape[:-1], derivatives)
    return smooth_max([_term_value(c, y, params, derivatives) for c in entry], params)


@dataclass(frozen=True, eq=False)
class TrajectoryCosts:
    """Running costs evaluated along a whole output trajectory.

    ``values (T+1,)``; ``grads (T+1, p)`` and ``hess (T+1, p, p)`` when
    derivatives were requested. ``term_values[t]`` lists the per-term costs
    ``-w * rho~`` at step t in table order.
    """

    values: np.ndarray
    grads: Optional[np.ndarray]
    hess: Optional[np.ndarray]
    term_values: tuple


def evaluate_trajectory(table: RunningCostTable, Y, params: SmoothParams = SmoothParams(),
                        derivatives: bool = True) -> TrajectoryCosts:
    """Vectorized :func:`eval_running_cost` over ``Y`` of shape ``(..., T+1, p)``.

    ``term_values`` is filled only for a single (unbatched) trajectory.
    """
    Y = np.asarray(Y, dtype=float)
    N, p = Y.shape[-2:]
    batch = Y.shape[:-2]
    if N != len(table):
        raise LengthMismatch(f"trajectory has {N} samples, table expects {len(table)}")
    # each distinct term is evaluated once on all of its timesteps
    where: dict[CostTerm, list[int]] = {}
    for t, entry in enumerate(table.terms):
        for c in entry:
            where.setdefault(c, []).append(t)
    position: dict[CostTerm, dict[int, int]] = {}
    cache: dict[CostTerm, SmoothValue] = {}
    for c, ts in where.items():
        cache[c] = _term_value(c, Y[..., ts, :], params, derivatives)
        position[c] = {t: k for k, t in enumerate(ts)}
    groups: dict[tuple, list[int]] = {}
    for t, entry in enumerate(table.terms):
        if entry:
            groups.setdefault(entry, []).append(t)

    values = np.zeros(batch + (N,))
    grads = np.zeros(batch + (N, p)) if derivatives else None
    hess = np.zeros(batch + (N, p, p)) if derivatives else None
    for entry, ts in groups.items():
        parts = []
        for c in entry:
            idx = [position[c][t] for t in ts]
            sv = cache[c]
            parts.append(SmoothValue(sv.value[..., idx],
                                     None if sv.grad is None else sv.grad[..., idx, :],
                                     None if sv.hess is None else sv.hess[..., idx, :, :]))
        merged = smooth_max(parts, params)
        values[..., ts] = merged.value
        if derivatives:
            grads[..., ts, :] = merged.grad
            hess[..., ts, :, :] = merged.hess
    term_values = ()
    if not batch:
        term_values = tuple(
            tuple(float(cache[c].value[position[c][t]]) for c in entry)
            for t, entry in enumerate(table.terms))
    return TrajectoryCosts(values, grads, hess, term_values)


class Verdict(str, enum.Enum):
    SATISFIED = "Satisfied"
    NOT_CERTIFIED = "NotCertified"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, eq=False)
class Certificate:
    """Outcome of the runtime satisfaction check.

    Attributes:
        verdict: ``Satisfied`` when every checked running cost is negative.
        margins: ``l_t`` per step, NaN where the step has no terms.
        term_margins: per-step tuples of individual term costs.
        offending: steps where the check failed.
        exact_robustness: exact robustness of the specification on the outputs.
        exact_verdict: ``satisfied``, ``violated`` or ``undefined``.
        per_term: whether individual terms were also required to be negative.
    """

    verdict: Verdict
    margins: np.ndarray
    term_margins: tuple
    offending: tuple
    exact_robustness: float
    exact_verdict: str
    per_term: bool = True

    @property
    def satisfied(self) -> bool:
        return self.verdict is Verdict.SATISFIED

    @property
    def sound(self) -> bool:
        """False only if the certificate claims satisfaction the exact semantics deny."""
        return not self.satisfied or self.exact_robustness > 0

    def to_dict(self) -> dict:
        return {
            "verdict": str(self.verdict),
            "exact_robustness": self.exact_robustness,
            "exact_verdict": self.exact_verdict,
            "offending_timesteps": list(self.offending),
            "per_term_check": self.per_term,
            "margins": [None if np.isnan(v) else float(v) for v in self.margins],
        }


def check_soundness(table: RunningCostTable, outputs, params: SmoothParams = SmoothParams(),
                    per_term: bool = True) -> Certificate:
    """Certify satisfaction of ``table.spec`` by an output trajectory.

    A step with terms passes when its merged cost ``l_t`` is strictly
    negative and, with ``per_term`` (the default), every individual term
    ``-w * rho~`` is strictly negative as well. The smooth max under-
    approximates the max, so a merged ``l_t < 0`` alone can hide a positive
    term; ``per_term=False`` gives that weaker merged-only check.

    The exact robustness of the specification is always reported alongside.
    """
    sig = outputs if isinstance(outputs, Signal) else Signal(np.asarray(outputs, dtype=float))
    if len(sig) != len(table):
        raise LengthMismatch(
            f"signal has {len(sig)} samples, expected T+1={len(table)}")
    costs = evaluate_trajectory(table, sig.samples, params, derivatives=False)
    margins = np.where([bool(e) for e in table.terms], costs.values, np.nan)
    offending = []
    for t, entry in enumerate(table.terms):
        if not entry:
            continue
        bad = not costs.values[t] < 0
        if per_term and any(not v < 0 for v in costs.term_values[t]):
            bad = True
        if bad:
            offending.append(t)
    rho = float(exact_robustness(table.spec, sig))
    result = Verdict.NOT_CERTIFIED if offending else Verdict.SATISFIED
    return Certificate(result, margins, costs.term_values, tuple(offending), rho,
                       verdict(rho), per_term)


def diagnostic_report(table: RunningCostTable, outputs, params: SmoothParams = SmoothParams()) -> list:
    """Per-timestep listing of (term source, smooth robustness, weighted cost)."""
    Y = outputs.samples if isinstance(outputs, Signal) else np.asarray(outputs, dtype=float)
    costs = evaluate_trajectory(table, Y, params, derivatives=False)
    rows = []
    for t, entry in enumerate(table.terms):
        terms = []
        for c, v in zip(entry, costs.term_values[t]):
            terms.append({
                "source": c.source,
                "conjunct": format_formula(table.spec.conjuncts[c.source]),
                "role": c.role,
                "formula": format_formula(c.formula),
                "weight": c.weight,
                "smooth_robustness": -v / c.weight,
                "weighted_cost": v,
            })
        rows.append({"t": t, "running_cost": float(costs.values[t]) if entry else None,
                     "terms": terms})
    return rows
