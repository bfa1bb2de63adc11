"""Direct numpy evaluation of an expression tree, without diagrams.

Kept deliberately separate from lowering and contraction so that it can
serve as an independent reference for both.  Values are 2-D arrays:
vectors are (m, 1), scalars (1, 1) and Kronecker products are flattened
with the first factor slowest.
"""
from __future__ import annotations

import numpy as np

from .ast import BinOp, Call, Neg, Num, Power, Sym, Transpose


class InterpError(ValueError):
    pass


def _swap_matrix(a: int, b: int) -> np.ndarray:
    """Permutation with (y, x) row index for (x, y) column index."""
    p = np.zeros((b * a, a * b))
    for x in range(a):
        for y in range(b):
            p[y * a + x, x * b + y] = 1.0
    return p


def _scalar(v: np.ndarray, what: str) -> float:
    if v.shape != (1, 1):
        raise InterpError(f"{what} needs a scalar")
    return float(v[0, 0])


def interpret(e, dims: dict, values: dict) -> np.ndarray:
    """Evaluate ``e`` with dimension sizes ``dims`` and symbol arrays ``values``."""

    def go(e):
        if isinstance(e, Num):
            return np.array([[float(e.value)]])
        if isinstance(e, Sym):
            v = np.asarray(values[e.name], dtype=float)
            return v.reshape(-1, 1) if v.ndim == 1 else v
        if isinstance(e, Neg):
            return -go(e.arg)
        if isinstance(e, Transpose):
            return go(e.arg).T
        if isinstance(e, BinOp):
            a, b = go(e.left), go(e.right)
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                if a.shape == (1, 1) or b.shape == (1, 1):
                    return a * b
                return a @ b
            if e.op == "/":
                return a / _scalar(b, "division")
            if e.op == ".*":
                return a * b
        if isinstance(e, Power):
            a = go(e.base)
            if a.shape == (1, 1):
                return np.array([[a[0, 0] ** e.k]])
            return np.linalg.matrix_power(a, e.k)
        if isinstance(e, Call):
            fn = e.fn
            if fn in ("eye", "cup", "cap", "dim", "swap"):
                sizes = [dims[a.name] for a in e.args]
                if fn == "eye":
                    return np.eye(sizes[0])
                if fn == "dim":
                    return np.array([[float(sizes[0])]])
                if fn == "cup":
                    return np.eye(sizes[0]).reshape(-1, 1)
                if fn == "cap":
                    return np.eye(sizes[0]).reshape(1, -1)
                return _swap_matrix(*sizes)
            args = [go(a) for a in e.args]
            if fn == "kron":
                out = args[0]
                for a in args[1:]:
                    out = np.kron(out, a)
                return out
            (a,) = args
            if fn == "tr":
                return np.array([[np.trace(a)]])
            if fn == "inv":
                return np.linalg.inv(a)
            if fn == "sqrt":
                return np.array([[np.sqrt(_scalar(a, "sqrt"))]])
            if fn == "norm2":
                return np.array([[np.linalg.norm(a)]])
            if fn == "norm2sq":
                return np.array([[float(np.sum(a * a))]])
        raise InterpError(f"cannot evaluate {e!r}")

    return go(e)
