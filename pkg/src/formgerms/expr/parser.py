"""Recursive-descent parser for the coefficient DSL.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ('^' integer)?
    atom   := rational | ident | '(' expr ')' | 'exp(' expr ')' | 'ln(' expr ')' | '-' atom
    ident  := 'x1' | 'x2' | 'x3' | 'x4' | parameter-name

A rational literal is ``p`` or ``p/q`` written without spaces; ``1 / 2`` is a
division node.  A minus sign written directly against a numeric literal folds
into the constant.  Note that ``-`` binds tighter than ``^``: ``-x1^2`` is
``(-x1)^2``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from ..errors import ParseError, UnknownIdentifierError
from .nodes import Add, Const, Div, Exp, Expression, Ln, Mul, Neg, Param, Pow, Sub, Var

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<num>\d+(?:/\d+)?)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)

_RESERVED = {"exp", "ln"}
_COORD = re.compile(r"x(\d+)$")


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1, pos))
        else:
            chunk = m.group()
            if "\n" in chunk:
                line += chunk.count("\n")
                line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1, pos))
    return toks


class _Parser:
    def __init__(self, text: str, parameters: Iterable[str] | None):
        self.toks = _tokenize(text)
        self.i = 0
        self.parameters = None if parameters is None else set(parameters)

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, message: str, tok: _Tok | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col)

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text:
            found = "end of input" if self.tok.kind == "eof" else repr(self.tok.text)
            raise self.error(f"expected {text!r}, found {found}")
        return self.advance()

    def parse(self) -> Expression:
        if self.tok.kind == "eof":
            raise self.error("empty expression")
        e = self.expr()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")
        return e

    def expr(self) -> Expression:
        e = self.term()
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expression:
        e = self.factor()
        while self.tok.text in ("*", "/"):
            op = self.advance().text
            rhs = self.factor()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def factor(self) -> Expression:
        base = self.atom()
        if self.tok.text == "^":
            self.advance()
            sign = 1
            if self.tok.text == "-":
                self.advance()
                sign = -1
            if self.tok.kind != "num" or "/" in self.tok.text:
                raise self.error("exponent must be an integer literal")
            return Pow(base, sign * int(self.advance().text))
        return base

    def atom(self) -> Expression:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Const(Fraction(tok.text))
        if tok.text == "-":
            self.advance()
            nxt = self.tok
            if nxt.kind == "num" and nxt.pos == tok.pos + 1:
                self.advance()
                return Const(-Fraction(nxt.text))
            return Neg(self.atom())
        if tok.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "ident":
            self.advance()
            name = tok.text
            if self.tok.text == "(":
                if name == "exp":
                    self.advance()
                    e = self.expr()
                    self.expect(")")
                    return Exp(e)
                if name == "ln":
                    self.advance()
                    e = self.expr()
                    self.expect(")")
                    return Ln(e)
                raise UnknownIdentifierError(f"unknown function {name!r}", tok.line, tok.col)
            if name in _RESERVED:
                raise self.error(f"{name!r} must be followed by '('")
            m = _COORD.match(name)
            if m:
                idx = int(m.group(1))
                if idx not in (1, 2, 3, 4) or m.group(1) != str(idx):
                    raise UnknownIdentifierError(f"unknown coordinate {name!r}", tok.line, tok.col)
                return Var(idx)
            if self.parameters is not None and name not in self.parameters:
                raise UnknownIdentifierError(f"unknown identifier {name!r}", tok.line, tok.col)
            return Param(name)
        if tok.kind == "eof":
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected {tok.text!r}")


def parse_expression(text: str, parameters: Iterable[str] | None = None) -> Expression:
    """Parse DSL text into an :class:`Expression`.

    ``parameters`` optionally restricts which free names are accepted; any
    other identifier then raises :class:`UnknownIdentifierError`.
    """
    return _Parser(text, parameters).parse()
