"""Abstract syntax tree for the supported STL fragment.

State formulas (single-timestep, boolean):

    psi := Pred | NegPred | And(psi, psi, ...) | Or(psi, psi, ...)

Path formulas (one temporal operator over state formulas):

    phi := Always(psi, t1, t2) | Eventually(psi, t1, t2) | Until(psi1, psi2, t1, t2)

A :class:`Specification` is a conjunction of path formulas over a horizon T.
``Not`` exists only so that out-of-fragment parse trees can be represented and
rejected by :func:`validate_fragment`; in-fragment trees use ``NegPred``.
Every node carries an optional source column that is ignored by equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

from ..errors import FragmentError, HorizonExceeded
from .predicates import Predicate


@dataclass(frozen=True)
class Pred:
    pred: Predicate
    col: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class NegPred:
    pred: Predicate
    col: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Not:
    child: "Formula"
    col: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class And:
    children: tuple
    col: int = field(default=0, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Or:
    children: tuple
    col: int = field(default=0, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Always:
    body: "Formula"
    t1: int
    t2: int
    col: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Eventually:
    body: "Formula"
    t1: int
    t2: int
    col: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Until:
    left: "Formula"
    right: "Formula"
    t1: int
    t2: int
    col: int = field(default=0, compare=False, repr=False)


StateFormula = Union[Pred, NegPred, And, Or]
PathFormula = Union[Always, Eventually, Until]
TEMPORAL = (Always, Eventually, Until)
Formula = Union[Pred, NegPred, Not, And, Or, Always, Eventually, Until]


@dataclass(frozen=True)
class Specification:
    """Conjunction of path formulas evaluated over timesteps ``0..horizon``."""

    conjuncts: tuple
    horizon: int

    def __post_init__(self):
        object.__setattr__(self, "conjuncts", tuple(self.conjuncts))
        if not self.conjuncts:
            raise FragmentError("a specification needs at least one path formula")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        for phi in self.conjuncts:
            validate_fragment(phi)
            if phi.t2 > self.horizon:
                raise HorizonExceeded(
                    f"{format_formula(phi)} ends at t={phi.t2} beyond horizon T={self.horizon}")

    @property
    def output_dim(self) -> int:
        return next(iter(predicates_of(self))).dim

    def __str__(self) -> str:
        return format_formula(self)


def predicates_of(f) -> Iterator[Predicate]:
    """Yield every predicate referenced by a formula or specification."""
    if isinstance(f, Specification):
        for phi in f.conjuncts:
            yield from predicates_of(phi)
    elif isinstance(f, (Pred, NegPred)):
        yield f.pred
    elif isinstance(f, Not):
        yield from predicates_of(f.child)
    elif isinstance(f, (And, Or)):
        for c in f.children:
            yield from predicates_of(c)
    elif isinstance(f, (Always, Eventually)):
        yield from predicates_of(f.body)
    elif isinstance(f, Until):
        yield from predicates_of(f.left)
        yield from predicates_of(f.right)


def _where(f) -> str:
    return f" at column {f.col}" if getattr(f, "col", 0) else ""


def _validate_state(f) -> None:
    if isinstance(f, (Pred, NegPred)):
        return
    if isinstance(f, Not):
        if isinstance(f.child, Pred):
            return
        raise FragmentError(
            f"negation applied to a non-predicate{_where(f)}; only predicates may be negated")
    if isinstance(f, (And, Or)):
        if len(f.children) < 2:
            raise FragmentError(f"{type(f).__name__} needs at least two operands{_where(f)}")
        for c in f.children:
            if isinstance(c, TEMPORAL):
                raise FragmentError(f"nested temporal operator{_where(c)}")
            _validate_state(c)
        return
    if isinstance(f, TEMPORAL):
        raise FragmentError(f"nested temporal operator{_where(f)}")
    raise FragmentError(f"unsupported node {type(f).__name__}")


def _validate_path(f) -> None:
    if isinstance(f, (Always, Eventually)):
        bodies = (f.body,)
    elif isinstance(f, Until):
        bodies = (f.left, f.right)
    else:
        raise FragmentError(f"expected a temporal operator, got {type(f).__name__}{_where(f)}")
    if not (isinstance(f.t1, int) and isinstance(f.t2, int) and 0 <= f.t1 <= f.t2):
        raise FragmentError(f"invalid time interval [{f.t1},{f.t2}]{_where(f)}")
    for b in bodies:
        _validate_state(b)


def validate_fragment(f) -> None:
    """Raise :class:`FragmentError` unless ``f`` is in the supported fragment.

    Accepted: a state formula with negation only on predicates, a single path
    formula, a conjunction of path formulas, or a :class:`Specification`.
    """
    if isinstance(f, Specification):
        for phi in f.conjuncts:
            _validate_path(phi)
        return
    if isinstance(f, TEMPORAL):
        _validate_path(f)
        return
    if isinstance(f, And) and any(isinstance(c, TEMPORAL) for c in f.children):
        for c in f.children:
            if not isinstance(c, TEMPORAL):
                raise FragmentError(
                    f"state formula conjoined with path formulas{_where(c)}; "
                    "wrap it in a temporal operator")
            _validate_path(c)
        return
    if isinstance(f, Or) and any(_contains_temporal(c) for c in f.children):
        raise FragmentError(
            f"disjunction between path formulas{_where(f)}; "
            "disjunction is only allowed between state formulas")
    if isinstance(f, Not) and _contains_temporal(f.child):
        raise FragmentError(f"negation applied to a temporal formula{_where(f)}")
    _validate_state(f)


def _contains_temporal(f) -> bool:
    if isinstance(f, TEMPORAL):
        return True
    if isinstance(f, Not):
        return _contains_temporal(f.child)
    if isinstance(f, (And, Or)):
        return any(_contains_temporal(c) for c in f.children)
    return False


def canonical(f):
    """Rewrite ``Not(Pred)`` as ``NegPred`` throughout an in-fragment tree."""
    if isinstance(f, Not):
        child = canonical(f.child)
        if isinstance(child, Pred):
            return NegPred(child.pred, col=f.col)
        if isinstance(child, NegPred):
            return Pred(child.pred, col=f.col)
        return Not(child, col=f.col)
    if isinstance(f, And):
        return And(tuple(canonical(c) for c in f.children), col=f.col)
    if isinstance(f, Or):
        return Or(tuple(canonical(c) for c in f.children), col=f.col)
    if isinstance(f, Always):
        return Always(canonical(f.body), f.t1, f.t2, col=f.col)
    if isinstance(f, Eventually):
        return Eventually(canonical(f.body), f.t1, f.t2, col=f.col)
    if isinstance(f, Until):
        return Until(canonical(f.left), canonical(f.right), f.t1, f.t2, col=f.col)
    return f


def format_formula(f, _parent: str = "") -> str:
    """Render a formula in the concrete text grammar accepted by the parser."""
    if isinstance(f, Specification):
        return " & ".join(format_formula(phi) for phi in f.conjuncts)
    if isinstance(f, Pred):
        return f.pred.name
    if isinstance(f, NegPred):
        return f"not {f.pred.name}"
    if isinstance(f, Not):
        return f"not {format_formula(f.child, 'not')}"
    if isinstance(f, And):
        text = " & ".join(format_formula(c, "and") for c in f.children)
        return text if _parent in ("", "top") else f"({text})"
    if isinstance(f, Or):
        text = " | ".join(format_formula(c, "or") for c in f.children)
        return text if _parent in ("", "top") else f"({text})"
    if isinstance(f, Always):
        return f"G[{f.t1},{f.t2}] {format_formula(f.body, 'temporal')}"
    if isinstance(f, Eventually):
        return f"F[{f.t1},{f.t2}] {format_formula(f.body, 'temporal')}"
    if isinstance(f, Until):
        return (f"{format_formula(f.left, 'temporal')} U[{f.t1},{f.t2}] "
                f"{format_formula(f.right, 'temporal')}")
    raise TypeError(f"not a formula: {f!r}")
