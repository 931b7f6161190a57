"""Recursive-descent parser for the ASCII specification grammar.

Grammar (whitespace is insignificant)::

    spec    := or_expr EOF
    or_expr := and_expr ('|' and_expr)*
    and_expr:= until ('&' until)*
    until   := unary ('U' interval unary)?
    unary   := 'not' unary
             | 'G' interval unary
             | 'F' interval unary
             | '(' or_expr ')'
             | IDENT
    interval:= '[' INT ',' INT ']'

Temporal operators bind tighter than ``&``, which binds tighter than ``|``.
The words ``G``, ``F``, ``U`` and ``not`` are reserved.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from ..errors import FragmentError, SpecSyntaxError, UnknownPredicate
from .formula import (TEMPORAL, Always, And, Eventually, Not, Or, Pred,
                      Specification, Until, canonical, validate_fragment)
from .predicates import Predicate

_TOKEN_RE = re.compile(r"\s*(?:(?P<int>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[&|()\[\],]))")
KEYWORDS = {"G", "F", "U", "not"}


@dataclass(frozen=True)
class Token:
    kind: str  # 'int', 'ident', 'op', 'kw', 'eof'
    text: str
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            col = pos + 1 + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise SpecSyntaxError(f"unexpected character {text[col - 1]!r}", col)
        kind = m.lastgroup
        tok = m.group(kind)
        col = m.start(kind) + 1
        if kind == "ident" and tok in KEYWORDS:
            kind = "kw"
        tokens.append(Token(kind, tok, col))
        pos = m.end()
    tokens.append(Token("eof", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, predicates: Mapping[str, Predicate]):
        self.tokens = tokenize(text)
        self.i = 0
        self.predicates = predicates

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind == "eof":
            raise SpecSyntaxError(f"unexpected {self._describe(self.tok)}", self.tok.col,
                                  repr(text))
        return self.advance()

    @staticmethod
    def _describe(tok: Token) -> str:
        return "end of input" if tok.kind == "eof" else f"token {tok.text!r}"

    def parse(self):
        node = self.or_expr()
        if self.tok.kind != "eof":
            raise SpecSyntaxError(f"unexpected {self._describe(self.tok)}", self.tok.col,
                                  "'&', '|' or end of input")
        return node

    def or_expr(self):
        col = self.tok.col
        items = [self.and_expr()]
        while self.tok.text == "|":
            self.advance()
            items.append(self.and_expr())
        return items[0] if len(items) == 1 else Or(tuple(items), col=col)

    def and_expr(self):
        col = self.tok.col
        items = [self.until()]
        while self.tok.text == "&":
            self.advance()
            items.append(self.until())
        return items[0] if len(items) == 1 else And(tuple(items), col=col)

    def until(self):
        left = self.unary()
        if self.tok.kind == "kw" and self.tok.text == "U":
            col = self.advance().col
            t1, t2 = self.interval()
            right = self.unary()
            return Until(left, right, t1, t2, col=col)
        return left

    def interval(self) -> tuple[int, int]:
        self.expect("[")
        t1 = self.integer()
        self.expect(",")
        t2 = self.integer()
        close = self.expect("]")
        if t1 > t2:
            raise SpecSyntaxError(f"interval [{t1},{t2}] has t1 > t2", close.col,
                                  "t1 <= t2")
        return t1, t2

    def integer(self) -> int:
        if self.tok.kind != "int":
            raise SpecSyntaxError(f"unexpected {self._describe(self.tok)}", self.tok.col,
                                  "an integer timestep")
        return int(self.advance().text)

    def unary(self):
        tok = self.tok
        if tok.kind == "kw" and tok.text == "not":
            self.advance()
            return Not(self.unary(), col=tok.col)
        if tok.kind == "kw" and tok.text in ("G", "F"):
            self.advance()
            t1, t2 = self.interval()
            body = self.unary()
            cls = Always if tok.text == "G" else Eventually
            return cls(body, t1, t2, col=tok.col)
        if tok.text == "(" and tok.kind == "op":
            self.advance()
            node = self.or_expr()
            self.expect(")")
            return node
        if tok.kind == "ident":
            self.advance()
            if tok.text not in self.predicates:
                raise UnknownPredicate(
                    f"unknown predicate {tok.text!r} at column {tok.col}")
            return Pred(self.predicates[tok.text], col=tok.col)
        raise SpecSyntaxError(f"unexpected {self._describe(tok)}", tok.col,
                              "a predicate name, 'not', 'G', 'F' or '('")


def parse_formula(text: str, predicates: Mapping[str, Predicate]):
    """Parse text into a raw formula tree without fragment checks."""
    return _Parser(text, predicates).parse()


def parse_spec(text: str, horizon: int, predicates: Mapping[str, Predicate]) -> Specification:
    """Parse and validate a specification.

    Args:
        text: specification source, e.g. ``"G[0,100] (not obs) & F[0,100] goal"``.
        horizon: number of timesteps T; every interval must end at or before T.
        predicates: table mapping predicate names to predicate objects.

    Raises:
        SpecSyntaxError: malformed text, reporting column and expected token.
        UnknownPredicate: a name missing from ``predicates``.
        FragmentError: nested temporal operators, disjunction of path formulas,
            negation above a non-predicate, or a bare state formula at top level.
        HorizonExceeded: an interval extends beyond ``horizon``.
    """
    tree = parse_formula(text, predicates)
    validate_fragment(tree)
    if isinstance(tree, TEMPORAL):
        conjuncts = (tree,)
    elif isinstance(tree, And) and all(isinstance(c, TEMPORAL) for c in tree.children):
        conjuncts = tree.children
    else:
        raise FragmentError(
            "top level must be a temporal operator or a conjunction of them"
            + (f" (column {tree.col})" if getattr(tree, "col", 0) else ""))
    return Specification(tuple(canonical(c) for c in conjuncts), horizon)
