"""Expression tree for the matrix-calculus input language."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from ..core.errors import ParseError


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self):
        return f"line {self.line}, column {self.col}"


class ExprSyntaxError(ParseError):
    """Bad token or grammar; carries ``line`` and ``col``."""

    def __init__(self, message, span: Optional[Span]):
        self.span = span
        self.line = span.line if span else 0
        self.col = span.col if span else 0
        super().__init__(message, str(span) if span else "end of input")


class ShapeError(ParseError):
    """A subexpression is ill-typed; ``subexpr`` is its printed form."""

    def __init__(self, message, node: "Expr"):
        self.subexpr = to_text(node)
        self.span = node.span
        super().__init__(f"{message} in '{self.subexpr}'", str(node.span) if node.span else "")


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Num(Expr):
    value: Fraction
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Sym(Expr):
    name: str
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class BinOp(Expr):
    """``op`` is one of ``+ - * / .*``."""

    op: str
    left: Expr
    right: Expr
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Transpose(Expr):
    arg: Expr
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Power(Expr):
    base: Expr
    k: int
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    args: tuple
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class Decl:
    """``dim``, ``mat``, ``vec`` or ``var`` line."""

    kind: str
    name: str
    rows: Optional[str] = None
    cols: Optional[str] = None
    span: Optional[Span] = field(default=None, compare=False)


FUNCTIONS = {
    # name: (min args, max args)
    "tr": (1, 1), "inv": (1, 1), "sqrt": (1, 1), "norm2": (1, 1), "norm2sq": (1, 1),
    "kron": (2, None), "eye": (1, 1), "cup": (1, 1), "cap": (1, 1), "swap": (2, 2), "dim": (1, 1),
}

_PREC = {"+": 1, "-": 1, "neg": 2, "*": 3, "/": 3, ".*": 4, "^": 5, "'": 6}


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC["neg"]
    if isinstance(e, Power):
        return _PREC["^"]
    if isinstance(e, Num) and (e.value < 0 or e.value.denominator != 1):
        return _PREC["/"]
    return 10


def to_text(e: Expr) -> str:
    """Fully parseable text; parentheses only where precedence needs them."""

    def wrap(sub, min_prec, strict=False):
        text = to_text(sub)
        p = _prec(sub)
        return f"({text})" if p < min_prec or (strict and p == min_prec) else text

    if isinstance(e, Num):
        v = e.value
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Neg):
        return "-" + wrap(e.arg, _PREC["*"])
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        return f"{wrap(e.left, p)} {e.op} {wrap(e.right, p, strict=True)}"
    if isinstance(e, Transpose):
        return wrap(e.arg, _PREC["'"]) + "'"
    if isinstance(e, Power):
        return wrap(e.base, _PREC["'"]) + f"^{e.k}"
    if isinstance(e, Call):
        return f"{e.fn}({', '.join(to_text(a) for a in e.args)})"
    raise TypeError(e)
