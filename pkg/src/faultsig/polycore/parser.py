"""Recursive-descent parser for polynomial expressions.

Grammar (whitespace is ignored)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*        # "/" only by a nonzero constant
    unary   := ("+" | "-") unary | power
    power   := atom ("^" INT)?                   # "**" is accepted as "^"
    atom    := NUMBER | NAME | "(" expr ")"
    NUMBER  := digits ("." digits)?              # decimals are read exactly
    NAME    := [A-Za-z_][A-Za-z0-9_]*

Implicit multiplication is not supported; ``2x`` is a syntax error.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .polynomial import Polynomial
from .universe import VarUniverse


class PolySyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        self.text = text
        self.pos = pos
        pointer = " " * pos + "^"
        super().__init__(f"{message} at position {pos}\n  {text}\n  {pointer}")


class UnknownVariableError(PolySyntaxError):
    pass


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>\*\*|[-+*/^()]))"
)


@dataclass
class _Tok:
    kind: str
    value: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            stripped = len(text[pos:]) - len(text[pos:].lstrip())
            raise PolySyntaxError(f"unexpected character {text[pos + stripped]!r}", text, pos + stripped)
        kind = m.lastgroup
        value = m.group(kind)
        start = m.start(kind)
        toks.append(_Tok(kind, "^" if value == "**" else value, start))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, universe: VarUniverse):
        self.text = text
        self.universe = universe
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.tok
        raise PolySyntaxError(msg, self.text, tok.pos)

    def accept(self, *ops: str) -> _Tok | None:
        t = self.tok
        if t.kind == "op" and t.value in ops:
            self.i += 1
            return t
        return None

    def parse(self) -> Polynomial:
        if self.tok.kind == "end":
            self.error("empty expression")
        p = self.expr()
        if self.tok.kind != "end":
            self.error(f"unexpected {self.tok.value!r}")
        return p

    def expr(self) -> Polynomial:
        p = self.term()
        while True:
            if self.accept("+"):
                p = p + self.term()
            elif self.accept("-"):
                p = p - self.term()
            else:
                return p

    def term(self) -> Polynomial:
        p = self.unary()
        while True:
            if self.accept("*"):
                p = p * self.unary()
            elif (t := self.accept("/")) is not None:
                d = self.unary()
                if not d.is_constant() or d.is_zero():
                    self.error("division is only allowed by a nonzero constant", t)
                p = p / d.constant_value()
            else:
                return p

    def unary(self) -> Polynomial:
        if self.accept("-"):
            return -self.unary()
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Polynomial:
        base = self.atom()
        if self.accept("^") is not None:
            exp_tok = self.tok
            if exp_tok.kind == "op" and exp_tok.value == "-":
                self.error("negative exponents are not allowed", exp_tok)
            if exp_tok.kind != "num" or "." in exp_tok.value:
                self.error("exponent must be a nonnegative integer literal", exp_tok)
            self.i += 1
            if self.tok.kind == "op" and self.tok.value == "^":
                self.error("chained exponents are ambiguous; use parentheses")
            return base ** int(exp_tok.value)
        return base

    def atom(self) -> Polynomial:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Polynomial.constant(self.universe, Fraction(t.value))
        if t.kind == "name":
            self.i += 1
            if t.value not in self.universe:
                raise UnknownVariableError(f"unknown variable {t.value!r}", self.text, t.pos)
            return Polynomial.var(self.universe, t.value)
        if self.accept("("):
            p = self.expr()
            if not self.accept(")"):
                self.error("expected ')'")
            return p
        if t.kind == "end":
            self.error("unexpected end of input")
        self.error(f"unexpected {t.value!r}")


def parse_poly(text: str, universe: VarUniverse) -> Polynomial:
    """Parse ``text`` into a canonical :class:`Polynomial` over ``universe``."""
    return _Parser(text, universe).parse()
