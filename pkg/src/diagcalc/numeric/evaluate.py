"""Contract diagrams to dense tensors.

Evaluation returns an ndarray with one axis per boundary wire, outputs
first, then inputs.  ``as_matrix`` flattens that into the block layout used
throughout the package: row index runs over the outputs in order (first one
slowest), column index over the inputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import opt_einsum

from ..core.diagram import Box, Cap, Cup, Diagram, DiagramSum, ScalarFn, Spider, Swap, legs_of


class EvalError(ValueError):
    pass


class UnboundSymbol(EvalError):
    pass


class SingularMatrix(EvalError):
    pass


class ShapeMismatch(EvalError):
    pass


#: Condition numbers above this make an inverse "numerically singular".
SINGULAR_COND = 1e12


@dataclass
class Environment:
    """Sizes for dimension names and concrete matrices for box labels.

    Vectors are stored as ``(m, 1)`` arrays, scalars as ``(1, 1)``.
    """

    dims: dict
    boxes: dict = field(default_factory=dict)
    seed: Optional[int] = None

    def size(self, dim) -> int:
        if dim is None:
            return 1
        try:
            return self.dims[dim]
        except KeyError:
            raise UnboundSymbol(f"dimension {dim!r} is not bound") from None

    def matrix(self, label, rows, cols) -> np.ndarray:
        try:
            m = np.asarray(self.boxes[label], dtype=float)
        except KeyError:
            raise UnboundSymbol(f"box {label!r} is not bound") from None
        if m.ndim == 1:
            m = m.reshape(-1, 1)
        want = (self.size(rows), self.size(cols))
        if m.shape != want:
            raise ShapeMismatch(f"{label} is bound to shape {m.shape}, expected {want}")
        return m

    def with_box(self, label, value) -> "Environment":
        boxes = dict(self.boxes)
        boxes[label] = value
        return Environment(self.dims, boxes, self.seed)


def as_matrix(t: np.ndarray, n_out: int) -> np.ndarray:
    shape = t.shape
    rows = int(np.prod(shape[:n_out], dtype=int))
    cols = int(np.prod(shape[n_out:], dtype=int))
    return np.asarray(t).reshape(rows, cols)


def _invert(m: np.ndarray, label: str) -> np.ndarray:
    if np.linalg.cond(m) > SINGULAR_COND:
        raise SingularMatrix(f"cannot invert {label}: numerically singular")
    return np.linalg.inv(m)


def box_matrix(kind: Box, env: Environment, optimize="greedy") -> np.ndarray:
    """The untransposed-shape matrix a box stands for, modifiers applied."""
    if kind.arg is None:
        m = env.matrix(kind.label, kind.rows, kind.cols)
    else:
        m = as_matrix(eval_sum(kind.arg, env, optimize), len(kind.arg.outputs))
        m = m.reshape(env.size(kind.rows), env.size(kind.cols))
    if kind.inverse:
        m = _invert(m, kind.label or "compound argument")
    if kind.transpose:
        m = m.T
    return m


def node_tensor(kind, env: Environment, optimize="greedy") -> np.ndarray:
    sizes = [env.size(d) for d in legs_of(kind)]
    if isinstance(kind, Box):
        return box_matrix(kind, env, optimize).reshape(sizes)
    if isinstance(kind, (Cup, Cap)):
        return np.eye(env.size(kind.dim))
    if isinstance(kind, Swap):
        a, b = env.size(kind.first), env.size(kind.second)
        return np.einsum("wz,xy->wxyz", np.eye(b), np.eye(a))
    if isinstance(kind, Spider):
        n = env.size(kind.dim)
        k = kind.in_legs + kind.out_legs
        t = np.zeros((n,) * k)
        for i in range(n):
            t[(i,) * k] = 1.0
        return t
    if isinstance(kind, ScalarFn):
        u = float(eval_sum(kind.arg, env, optimize))
        if kind.name == "sqrt":
            if u < 0:
                raise EvalError(f"sqrt of negative value {u}")
            return np.asarray(np.sqrt(u))
        if u == 0 and kind.k < 0:
            raise EvalError("negative power of zero")
        return np.asarray(u ** kind.k)
    raise TypeError(kind)


def evaluate(d: Diagram, env: Environment, optimize="greedy") -> np.ndarray:
    """Contract ``d`` under ``env``; axes are outputs then inputs.

    ``optimize`` is passed to opt_einsum as the contraction-path strategy.
    """
    ids = {}
    operands = []
    nxt = 0
    for p, q in sorted(d.wires):
        if p[0] != "n" and q[0] != "n":
            # bare boundary-to-boundary wire: an explicit identity matrix
            ids[p], ids[q] = nxt, nxt + 1
            operands.append((np.eye(env.size(d.port_dim(p))), [nxt, nxt + 1]))
            nxt += 2
        else:
            ids[p] = ids[q] = nxt
            nxt += 1
    for i, kind in enumerate(d.nodes):
        t = node_tensor(kind, env, optimize)
        operands.append((t, [ids[("n", i, leg)] for leg in range(len(legs_of(kind)))]))
    out_ids = [ids[("out", k)] for k in range(len(d.outputs))]
    out_ids += [ids[("in", k)] for k in range(len(d.inputs))]
    if not operands:
        return np.asarray(1.0)
    sym = opt_einsum.get_symbol
    eq = ",".join("".join(sym(i) for i in idx) for _, idx in operands)
    eq += "->" + "".join(sym(i) for i in out_ids)
    return np.asarray(opt_einsum.contract(eq, *[t for t, _ in operands], optimize=optimize))


def eval_sum(s: DiagramSum, env: Environment, optimize="greedy") -> np.ndarray:
    shape = [env.size(x) for x in s.outputs + s.inputs]
    total = np.zeros(shape)
    for c, d in s.terms:
        total = total + float(c) * evaluate(d, env, optimize)
    return total


def eval_matrix(s, env: Environment, optimize="greedy") -> np.ndarray:
    """Evaluate a diagram or sum and flatten it to the block-layout matrix."""
    if isinstance(s, Diagram):
        return as_matrix(evaluate(s, env, optimize), len(s.outputs))
    return as_matrix(eval_sum(s, env, optimize), len(s.outputs))
