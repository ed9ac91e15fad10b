"""Operator expression parser.

Grammar (whitespace ignored)::

    expr   := term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := base ('^' uint)?
    base   := rat | var | '(' expr ')'
    var    := ('x'|'d') uint            # 1-based, at most m
    rat    := ['-'] uint ['/' uint]

``*`` is the noncommutative product, evaluated left to right.  As an
extension, a ``-`` not followed by a digit negates the following factor, so
printed output such as ``-x1*d1 + 1`` parses back.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import IndexOutOfRange, ParseError
from .kernel import QQ, Field
from .weyl import WeylAlgebra, WeylOp

__all__ = ["parse_operator", "format_fraction"]


class _Parser:
    def __init__(self, text: str, m: int, field: Field):
        self.text = text
        self.pos = 0
        self.m = m
        self.field = field
        self.A = WeylAlgebra(m, field)

    def error(self, msg, pos=None):
        raise ParseError(msg, self.pos if pos is None else pos, self.text)

    def skip(self):
        t = self.text
        while self.pos < len(t) and t[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, ch):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def uint(self) -> int:
        self.skip()
        start = self.pos
        t = self.text
        while self.pos < len(t) and t[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            self.error("expected an unsigned integer")
        return int(t[start:self.pos])

    def parse(self) -> WeylOp:
        if not self.text.strip():
            self.error("empty expression", 0)
        e = self.expr()
        if self.peek():
            self.error(f"unexpected {self.peek()!r}")
        return e

    def expr(self) -> WeylOp:
        acc = self.term()
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            rhs = self.term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def term(self) -> WeylOp:
        acc = self.factor()
        while self.peek() == "*":
            self.pos += 1
            acc = acc * self.factor()
        return acc

    def factor(self) -> WeylOp:
        ch = self.peek()
        if ch == "-":
            nxt = self.pos + 1
            while nxt < len(self.text) and self.text[nxt].isspace():
                nxt += 1
            if nxt >= len(self.text) or not self.text[nxt].isdigit():
                self.pos += 1
                return -self.factor()
        b = self.base()
        if self.peek() == "^":
            self.pos += 1
            b = b ** self.uint()
        return b

    def base(self) -> WeylOp:
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            e = self.expr()
            self.take(")")
            return e
        if ch in ("x", "d"):
            start = self.pos
            self.pos += 1
            if not (self.pos < len(self.text) and self.text[self.pos].isdigit()):
                self.error("variable needs an index")
            i = self.uint()
            if not 1 <= i <= self.m:
                raise IndexOutOfRange(f"{ch}{i} at position {start} exceeds m={self.m}")
            return self.A.x(i) if ch == "x" else self.A.d(i)
        if ch == "-" or ch.isdigit():
            neg = False
            if ch == "-":
                neg = True
                self.pos += 1
            num = self.uint()
            den = 1
            if self.peek() == "/":
                self.pos += 1
                den = self.uint()
                if den == 0:
                    self.error("zero denominator")
            c = Fraction(-num if neg else num, den)
            return WeylOp.constant(self.m, self.field(c), self.field)
        if not ch:
            self.error("unexpected end of input")
        self.error(f"unexpected {ch!r}")


def parse_operator(text: str, m: int, field: Field = QQ) -> WeylOp:
    """Parse ``text`` into a normal-ordered operator of ``A_m``."""
    return _Parser(text, m, field).parse()


def format_fraction(num: WeylOp, den: WeylOp) -> str:
    """``num * (den)^-1``; plain ``num`` when the denominator is 1."""
    if den == 1:
        return str(num)
    ns = str(num)
    if len(num.terms) > 1:
        ns = f"({ns})"
    return f"{ns} * ({den})^-1"
