"""Recursive-descent parser for the expression grammar::

    expr   := ["+"|"-"] term (("+"|"-") term)*
    term   := factor ("*" factor)*
    factor := base ("^" NAT)?
    base   := NUMBER | IDENT | "sin" "(" expr ")" | "cos" "(" expr ")" | "(" expr ")"
"""
from __future__ import annotations

import re

from ..errors import ExprSyntaxError, NotInClassError, UnknownSymbolError
from .core import MixedTrigExpr
from .symbols import SymbolTable

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*^()])
""", re.VERBOSE)


def tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, symbols: SymbolTable):
        self.text = text
        self.symbols = symbols
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", self.text, pos)

    def error(self, msg, pos):
        raise ExprSyntaxError(msg, self.text, pos)

    def parse(self) -> MixedTrigExpr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            self.error(f"unexpected {val!r}", pos)
        return e

    def expr(self):
        sign = 1.0
        if self.peek()[1] in ("+", "-"):
            sign = -1.0 if self.take()[1] == "-" else 1.0
        e = self.term()
        if sign < 0:
            e = -e
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.factor()
        while self.peek()[1] == "*":
            self.take()
            e = e * self.factor()
        return e

    def factor(self):
        b = self.base()
        if self.peek()[1] == "^":
            self.take()
            kind, val, pos = self.take()
            if kind != "num" or not val.isdigit():
                self.error("exponent must be a natural number", pos)
            b = b ** int(val)
        return b

    def base(self):
        kind, val, pos = self.take()
        if kind == "num":
            return MixedTrigExpr.constant(float(val))
        if kind == "ident":
            if val in ("sin", "cos"):
                self.expect("(")
                inner = self.expr()
                self.expect(")")
                try:
                    return MixedTrigExpr.trig(val, inner)
                except NotInClassError:
                    raise NotInClassError(f"{val} argument must be affine in the random variables",
                                          self.text, pos) from None
            if val in self.symbols:
                return MixedTrigExpr.variable(self.symbols[val])
            if val in self.symbols.constants:
                return MixedTrigExpr.constant(self.symbols.constants[val])
            raise UnknownSymbolError(f"unknown symbol {val!r}", self.text, pos)
        if val == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(val)
        self.error(f"unexpected {found}", pos)


def parse(text: str, symbols: SymbolTable) -> MixedTrigExpr:
    return _Parser(text, symbols).parse()
