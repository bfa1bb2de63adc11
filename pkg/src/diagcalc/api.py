"""End-to-end entry points: text in, derivatives and reports out."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core.diagram import DiagramSum
from .core.registry import VarRegistry
from .diff import DiffError, VarRef, differentiate, differentiate_twice
from .frontend.ast import Expr, to_text
from .frontend.lower import build_registry, lower
from .frontend.parser import parse, parse_expr
from .numeric.oracle import DEFAULT_H, CheckReport, check
from .rewrite.readback import MatrixExpr, NotExpressible, to_matrix_expr
from .rewrite.simplify import simplify


class SessionError(ValueError):
    pass


@dataclass
class Session:
    expr: Expr
    reg: VarRegistry
    text: str = ""

    @classmethod
    def from_text(cls, text: str) -> "Session":
        decls, expr = parse(text)
        reg = build_registry(decls)
        lower(expr, reg)  # shape check up front
        return cls(expr, reg, to_text(expr))

    @property
    def lowered(self) -> DiagramSum:
        return lower(self.expr, self.reg)

    def variable(self, wrt: Optional[str] = None) -> str:
        names = self.reg.variables
        if wrt is None:
            if len(names) != 1:
                raise SessionError(f"declare exactly one var (found {len(names)}) or pass --wrt")
            return names[0]
        if wrt not in self.reg or not self.reg[wrt].is_variable:
            raise SessionError(f"{wrt!r} is not a declared var")
        return wrt


def parse_ref(text: str) -> VarRef:
    """``x`` or ``x-row`` (derivative w.r.t. the transpose)."""
    if text.endswith("-row"):
        return VarRef(text[: -len("-row")], row_form=True)
    return VarRef(text)


def derivative(session: Session, wrt: Optional[str] = None, row_form: bool = False,
               second: Optional[str] = None, raw: bool = False) -> DiagramSum:
    ref = VarRef(session.variable(wrt), row_form)
    f = session.lowered
    if second is not None:
        ref2 = parse_ref(second)
        session.variable(ref2.symbol)
        d = differentiate_twice(f, ref, ref2, session.reg)
    else:
        d = differentiate(f, ref, session.reg)
    return d if raw else simplify(d)


def derive_text(text: str, wrt: Optional[str] = None, row_form: bool = False,
                second: Optional[str] = None) -> str:
    """Printed derivative of a session text (declarations + expression)."""
    return str(to_matrix_expr(derivative(Session.from_text(text), wrt, row_form, second)))


def answer_expr(session: Session, answer: str) -> MatrixExpr:
    """Canonical reading of an expected-answer string under the session's declarations."""
    return to_matrix_expr(simplify(lower(parse_expr(answer), session.reg)))


def expr_equal(a, b, reg: Optional[VarRegistry] = None) -> bool:
    """Compare canonical printed forms; strings are parsed under ``reg``."""

    def canon(x):
        if isinstance(x, MatrixExpr):
            return str(x)
        if isinstance(x, str):
            x = lower(parse_expr(x), reg)
        return str(to_matrix_expr(simplify(x)))

    return canon(a) == canon(b)


def check_derivative(text_or_session, wrt: Optional[str] = None, dims=None, trials: int = 20,
                     tol: float = 1e-6, seed: int = 0, h: float = DEFAULT_H, second: Optional[str] = None,
                     row_form: bool = False) -> CheckReport:
    session = text_or_session if isinstance(text_or_session, Session) else Session.from_text(text_or_session)
    name = session.variable(wrt)
    d = derivative(session, name, row_form, second)
    ref = parse_ref(second) if second else VarRef(name, row_form)
    return check(session.lowered, d, ref, session.reg, dims=dims, trials=trials, tol=tol, seed=seed, h=h,
                 second=second, label=session.text)


__all__ = [
    "DiffError", "NotExpressible", "Session", "SessionError", "answer_expr", "check_derivative", "derivative",
    "derive_text", "expr_equal", "parse_ref",
]
