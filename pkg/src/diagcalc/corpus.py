"""The identity corpus: classic matrix-calculus results with their expected answers."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class Identity:
    name: str
    decls: str
    expr: str
    wrt: str
    answer: str
    second: Optional[str] = None

    @property
    def text(self) -> str:
        return self.decls.strip() + "\n" + self.expr + "\n"


CORPUS = (
    Identity("inner_product", "dim m\nvec a: m\nvar x: m", "a' * x", "x", "a"),
    Identity("quadratic_form", "dim m\nmat A: m x m\nvar x: m", "x' * A * x", "x", "(A + A') * x"),
    Identity("least_squares", "dim m, n\nmat A: m x n\nvec b: m\nvar x: n", "norm2sq(A * x - b)", "x",
             "2 * A' * (A * x - b)"),
    Identity("distance", "dim m\nvec b: m\nvar x: m", "norm2(x - b)", "x", "(x - b) / norm2(x - b)"),
    Identity("bilinear", "dim m, n\nvec a: m\nvec b: n\nvar X: m x n", "a' * X * b", "X", "a * b'"),
    Identity("trace_AX", "dim m, n\nmat A: n x m\nvar X: m x n", "tr(A * X)", "X", "A'"),
    Identity("trace_XXt", "dim m, n\nvar X: m x n", "tr(X * X')", "X", "2 * X"),
    Identity("trace_AXBX", "dim m, n\nmat A: n x m\nmat B: n x m\nvar X: m x n", "tr(A * X * B * X)", "X",
             "A' * X' * B' + B' * X' * A'"),
    Identity("trace_inverse_sum", "dim m\nmat A: m x m\nvar X: m x m", "tr(inv(X + A))", "X",
             "-(inv(X + A)^2)'"),
    Identity("trace_hadamard", "dim m\nmat A: m x m\nvar X: m x m", "tr(A .* X)", "X", "A .* eye(m)"),
    Identity("hessian", "dim m\nmat A: m x m\nvec b: m\nvar x: m", "x' * A * x + b' * x", "x", "A + A'",
             second="x-row"),
    Identity("trace_AXB", "dim m, n, p\nmat A: p x m\nvar X: m x n\nmat B: n x p", "tr(A * X * B)", "X",
             "A' * B'"),
    Identity("trace_kron", "dim m\nvar X: m x m", "tr(kron(X, X))", "X", "2 * tr(X) * eye(m)"),
    Identity("sandwich", "dim m, n\nvec a: n\nvec b: n\nmat C: m x m\nvar X: m x n", "a' * X' * C * X * b", "X",
             "C * X * b * a' + C' * X * a * b'"),
    Identity("trace_cube", "dim m\nvar X: m x m", "tr(X^3)", "X", "3 * (X^2)'"),
    Identity("trace_A_cube", "dim m\nmat A: m x m\nvar X: m x m", "tr(A * X^3)", "X",
             "(A * X^2)' + (X * A * X)' + (X^2 * A)'"),
    Identity("trace_inverse", "dim m, p\nmat A: p x m\nvar X: m x m\nmat B: m x p", "tr(A * inv(X) * B)", "X",
             "-(inv(X) * B * A * inv(X))'"),
)

BY_NAME = {c.name: c for c in CORPUS}
