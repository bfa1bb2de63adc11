"""Tokenizer and recursive-descent parser.

Precedence, loosest first: binary ``+ -``, unary ``-``, ``* /``, ``.*``,
``^k``, postfix ``'``.  A file is declaration lines followed by the
expression, which may span several lines; ``#`` starts a comment.
"""
from __future__ import annotations

import re
from fractions import Fraction

from .ast import FUNCTIONS, BinOp, Call, Decl, ExprSyntaxError, Neg, Num, Power, Span, Sym, Transpose

_TOKEN = re.compile(
    r"(?P<num>\d+(?:\.\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>\.\*|[-+*/^'(),])|(?P<ws>[ \t\r]+)|(?P<bad>.)"
)
_DECL = re.compile(r"^\s*(dim|mat|vec|var)\s+(?!\()(.*)$")
_NAME = r"[A-Za-z_][A-Za-z_0-9]*"


def tokenize(text: str, line_offset: int = 0):
    """Yield ``(kind, value, Span)``; newlines inside the expression are whitespace."""
    out = []
    for lineno, line in enumerate(text.split("\n"), start=1 + line_offset):
        line = line.split("#", 1)[0]
        for m in _TOKEN.finditer(line):
            kind = m.lastgroup
            span = Span(lineno, m.start() + 1)
            if kind == "ws":
                continue
            if kind == "bad":
                raise ExprSyntaxError(f"unexpected character {m.group()!r}", span)
            out.append((kind, m.group(), span))
    return out


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0

    def peek(self, value=None):
        if self.i >= len(self.toks):
            return None
        tok = self.toks[self.i]
        if value is not None and tok[1] != value:
            return None
        return tok

    def take(self, value=None, kind=None):
        tok = self.peek()
        if tok is None:
            want = value or kind or "a token"
            raise ExprSyntaxError(f"expected {want!r} but the input ended", self._end_span())
        if (value is not None and tok[1] != value) or (kind is not None and tok[0] != kind):
            raise ExprSyntaxError(f"expected {value or kind!r}, found {tok[1]!r}", tok[2])
        self.i += 1
        return tok

    def _end_span(self):
        if not self.toks:
            return Span(1, 1)
        kind, value, span = self.toks[-1]
        return Span(span.line, span.col + len(value))

    # expr := term (('+'|'-') term)*
    def expr(self):
        left = self.signed()
        while self.peek("+") or self.peek("-"):
            op = self.take()
            left = BinOp(op[1], left, self.signed(), op[2])
        return left

    # signed := '-' signed | product
    def signed(self):
        tok = self.peek("-")
        if tok:
            self.take()
            return Neg(self.signed(), tok[2])
        return self.product()

    def product(self):
        left = self.hadamard()
        while self.peek("*") or self.peek("/"):
            op = self.take()
            left = BinOp(op[1], left, self.hadamard(), op[2])
        return left

    def hadamard(self):
        left = self.power()
        while self.peek(".*"):
            op = self.take()
            left = BinOp(".*", left, self.power(), op[2])
        return left

    def power(self):
        base = self.postfix()
        tok = self.peek("^")
        if tok:
            self.take()
            sign = -1 if self.peek("-") and self.take() else 1
            num = self.take(kind="num")
            if "." in num[1]:
                raise ExprSyntaxError("exponent must be an integer", num[2])
            return Power(base, sign * int(num[1]), tok[2])
        return base

    def postfix(self):
        e = self.primary()
        while self.peek("'"):
            tok = self.take()
            e = Transpose(e, tok[2])
        return e

    def primary(self):
        tok = self.peek()
        if tok is None:
            raise ExprSyntaxError("unexpected end of input", self._end_span())
        kind, value, span = tok
        if kind == "num":
            self.take()
            return Num(Fraction(value), span)
        if kind == "name":
            self.take()
            if self.peek("("):
                if value not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {value!r}", span)
                self.take("(")
                args = [self.expr()]
                while self.peek(","):
                    self.take()
                    args.append(self.expr())
                self.take(")")
                lo, hi = FUNCTIONS[value]
                if len(args) < lo or (hi is not None and len(args) > hi):
                    raise ExprSyntaxError(f"{value} takes {lo if lo == hi else f'at least {lo}'} argument(s)", span)
                return Call(value, tuple(args), span)
            if value in FUNCTIONS:
                raise ExprSyntaxError(f"{value} needs an argument list", span)
            return Sym(value, span)
        if value == "(":
            self.take()
            e = self.expr()
            self.take(")")
            return e
        raise ExprSyntaxError(f"unexpected {value!r}", span)


def parse_expr(text: str, line_offset: int = 0):
    tokens = tokenize(text, line_offset)
    if not tokens:
        raise ExprSyntaxError("empty expression", Span(line_offset + 1, 1))
    p = _Parser(tokens)
    e = p.expr()
    if p.peek() is not None:
        tok = p.peek()
        raise ExprSyntaxError(f"unexpected {tok[1]!r} after the expression", tok[2])
    return e


def _parse_decl(kind: str, rest: str, lineno: int, col0: int) -> list:
    span = Span(lineno, col0)
    rest = rest.strip()
    if kind == "dim":
        names = [n for n in re.split(r"[,\s]+", rest) if n]
        if not names or not all(re.fullmatch(_NAME, n) for n in names):
            raise ExprSyntaxError("expected 'dim <name>[, <name>...]'", span)
        return [Decl("dim", n, span=span) for n in names]
    m = re.fullmatch(rf"({_NAME}(?:\s*,\s*{_NAME})*)\s*:\s*({_NAME})(?:\s+x\s+({_NAME}))?", rest)
    if not m:
        raise ExprSyntaxError(f"expected '{kind} <name>: <dim> [x <dim>]'", span)
    names = [n.strip() for n in m.group(1).split(",")]
    rows, cols = m.group(2), m.group(3)
    if kind == "vec" and cols is not None:
        raise ExprSyntaxError("a vec has a single dimension", span)
    return [Decl(kind, n, rows, cols, span) for n in names]


def parse(text: str):
    """``(declarations, expression)`` from a session text."""
    decls = []
    lines = text.split("\n")
    first_expr = len(lines)
    for lineno, line in enumerate(lines, start=1):
        code = line.split("#", 1)[0]
        if not code.strip():
            continue
        m = _DECL.match(code)
        if not m:
            first_expr = lineno - 1
            break
        decls += _parse_decl(m.group(1), m.group(2), lineno, m.start(1) + 1)
    rest = "\n".join(lines[first_expr:])
    for lineno, line in enumerate(lines[first_expr:], start=first_expr + 1):
        m = _DECL.match(line.split("#", 1)[0])
        if m:
            raise ExprSyntaxError("declarations must come before the expression", Span(lineno, 1))
    return decls, parse_expr(rest, line_offset=first_expr)
