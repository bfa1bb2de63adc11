"""Shape checking and lowering of expressions to diagram sums.

The shape of a lowered expression is read off its boundary: rows are the
outputs, columns the inputs, one wire per nontrivial dimension.  Scalars
have no wires.
"""
from __future__ import annotations

from fractions import Fraction

from ..core.diagram import (
    Box, Cap, Cup, Diagram, DiagramSum, ScalarFn, Spider, Swap, sum_par, sum_rotate, sum_seq, sum_trace,
)
from ..core.errors import ParseError
from ..core.registry import RegistryError, VarRegistry
from .ast import BinOp, Call, Decl, Neg, Num, Power, ShapeError, Sym, Transpose


class DeclError(ParseError):
    def __init__(self, message, decl: Decl):
        self.span = decl.span
        super().__init__(message, str(decl.span) if decl.span else "")


def build_registry(decls) -> VarRegistry:
    reg = VarRegistry()
    for d in decls:
        try:
            if d.kind == "dim":
                reg.declare_dim(d.name)
            else:
                reg.declare(d.name, d.rows, d.cols, is_variable=d.kind == "var")
        except RegistryError as exc:
            raise DeclError(str(exc), d) from exc
    return reg


def shape_text(s: DiagramSum) -> str:
    rows = " (x) ".join(s.outputs) or "1"
    cols = " (x) ".join(s.inputs) or "1"
    return f"{rows} x {cols}"


def _is_scalar(s: DiagramSum) -> bool:
    return not s.inputs and not s.outputs


def constant_value(s: DiagramSum):
    """The rational value of a sum made only of empty diagrams, else None."""
    if not _is_scalar(s) or any(d.nodes for _, d in s.terms):
        return None
    return sum((c for c, _ in s.terms), Fraction(0))


def _const(c) -> DiagramSum:
    return DiagramSum.of(Diagram.empty(), Fraction(c))


def _reverse_wires(dims) -> Diagram:
    """Bare crossing wires: inputs ``dims`` come out in reverse order."""
    k = len(dims)
    return Diagram((), [(("in", i), ("out", k - 1 - i)) for i in range(k)], list(dims), list(reversed(dims)))


def transpose(s: DiagramSum) -> DiagramSum:
    """True transpose: rotate, then restore the order of tensor factors."""
    r = sum_rotate(s)
    if len(s.inputs) > 1:
        r = sum_seq(DiagramSum.of(_reverse_wires(r.outputs)), r)
    if len(s.outputs) > 1:
        r = sum_seq(r, DiagramSum.of(_reverse_wires(s.outputs)))
    return r


def hadamard(left: DiagramSum, right: DiagramSum) -> DiagramSum:
    both = sum_par(left, right)
    if left.outputs:
        m = left.outputs[0]
        both = sum_seq(DiagramSum.of(Diagram.single(Spider(m, 2, 1))), both)
    if left.inputs:
        n = left.inputs[0]
        both = sum_seq(both, DiagramSum.of(Diagram.single(Spider(n, 1, 2))))
    return both


def power_fn(u: DiagramSum, k: int) -> DiagramSum:
    c = constant_value(u)
    if c is not None:
        if c == 0 and k < 0:
            raise ZeroDivisionError("negative power of zero")
        return _const(c ** k)
    if k == 0:
        return _const(1)
    if k == 1:
        return u
    return DiagramSum.of(Diagram.single(ScalarFn("pow", u, k)))


class Lowerer:
    def __init__(self, reg: VarRegistry):
        self.reg = reg

    def dim_arg(self, e, call):
        if not isinstance(e, Sym) or e.name not in self.reg.dims:
            raise ShapeError(f"{call.fn} expects a declared dimension", call)
        return e.name

    def atom(self, name, e, inverse=False) -> DiagramSum:
        if name in self.reg.dims:
            raise ShapeError(f"dimension {name!r} used as a value", e)
        if name not in self.reg:
            raise ShapeError(f"undeclared symbol {name!r}", e)
        rows, cols = self.reg.shape(name)
        return DiagramSum.of(Diagram.single(Box(name, rows, cols, inverse=inverse)))

    def square(self, s: DiagramSum, e, what):
        if s.outputs != s.inputs:
            raise ShapeError(f"{what} needs a square argument, got {shape_text(s)}", e)

    def __call__(self, e) -> DiagramSum:
        return self.lower(e)

    def lower(self, e) -> DiagramSum:
        if isinstance(e, Num):
            return _const(e.value) if e.value != 0 else DiagramSum.zero()
        if isinstance(e, Sym):
            return self.atom(e.name, e)
        if isinstance(e, Neg):
            return -self.lower(e.arg)
        if isinstance(e, Transpose):
            return transpose(self.lower(e.arg))
        if isinstance(e, BinOp):
            return self.binop(e)
        if isinstance(e, Power):
            return self.power(e)
        if isinstance(e, Call):
            return self.call(e)
        raise TypeError(e)

    def binop(self, e: BinOp) -> DiagramSum:
        left, right = self.lower(e.left), self.lower(e.right)
        if e.op in ("+", "-"):
            if (left.outputs, left.inputs) != (right.outputs, right.inputs):
                raise ShapeError(f"cannot add {shape_text(left)} and {shape_text(right)}", e)
            return left + right if e.op == "+" else left - right
        if e.op == "*":
            if _is_scalar(left) or _is_scalar(right):
                return sum_par(left, right)
            if left.inputs != right.outputs:
                raise ShapeError(f"inner dimensions differ: {shape_text(left)} times {shape_text(right)}", e)
            return sum_seq(left, right)
        if e.op == "/":
            if not _is_scalar(right):
                raise ShapeError("can only divide by a scalar", e)
            c = constant_value(right)
            if c is not None:
                if c == 0:
                    raise ShapeError("division by zero", e)
                return left.scale(1 / c)
            return sum_par(left, power_fn(right, -1))
        if e.op == ".*":
            if (left.outputs, left.inputs) != (right.outputs, right.inputs):
                raise ShapeError(f"Hadamard product of {shape_text(left)} and {shape_text(right)}", e)
            if len(left.outputs) > 1 or len(left.inputs) > 1:
                raise ShapeError("Hadamard product needs matrices or vectors", e)
            if _is_scalar(left):
                return sum_par(left, right)
            return hadamard(left, right)
        raise TypeError(e.op)

    def power(self, e: Power) -> DiagramSum:
        base = self.lower(e.base)
        if _is_scalar(base):
            try:
                return power_fn(base, e.k)
            except ZeroDivisionError:
                raise ShapeError("negative power of zero", e) from None
        self.square(base, e, "a matrix power")
        if e.k < 0:
            base = self.inverse(e.base, base, e)
        if e.k == 0:
            return DiagramSum.of(Diagram.identity(list(base.outputs)))
        out = base
        for _ in range(abs(e.k) - 1):
            out = sum_seq(out, base)
        return out

    def inverse(self, arg, lowered: DiagramSum, e) -> DiagramSum:
        if _is_scalar(lowered):
            return power_fn(lowered, -1)
        self.square(lowered, e, "inv")
        if len(lowered.outputs) != 1:
            raise ShapeError("inv of a tensor product is not supported", e)
        if isinstance(arg, Sym):
            return self.atom(arg.name, arg, inverse=True)
        if isinstance(arg, Transpose) and isinstance(arg.arg, Sym):
            return transpose(self.atom(arg.arg.name, arg.arg, inverse=True))
        if lowered.is_zero:
            raise ShapeError("inverse of zero", e)
        m = lowered.outputs[0]
        return DiagramSum.of(Diagram.single(Box("", m, m, inverse=True, arg=lowered)))

    def call(self, e: Call) -> DiagramSum:
        fn = e.fn
        if fn in ("eye", "cup", "cap", "dim"):
            m = self.dim_arg(e.args[0], e)
            if fn == "eye":
                return DiagramSum.of(Diagram.identity([m]))
            if fn == "dim":
                return sum_trace(DiagramSum.of(Diagram.identity([m])))
            return DiagramSum.of(Diagram.single(Cup(m) if fn == "cup" else Cap(m)))
        if fn == "swap":
            a, b = self.dim_arg(e.args[0], e), self.dim_arg(e.args[1], e)
            return DiagramSum.of(Diagram.single(Swap(a, b)))
        args = [self.lower(a) for a in e.args]
        if fn == "kron":
            out = args[0]
            for a in args[1:]:
                out = sum_par(out, a)
            return out
        (u,) = args
        if fn == "tr":
            self.square(u, e, "tr")
            return sum_trace(u)
        if fn == "inv":
            return self.inverse(e.args[0], u, e)
        if fn == "sqrt":
            if not _is_scalar(u):
                raise ShapeError(f"sqrt needs a scalar, got {shape_text(u)}", e)
            return DiagramSum.of(Diagram.single(ScalarFn("sqrt", u)))
        if fn in ("norm2", "norm2sq"):
            if len(u.outputs) != 1 or u.inputs:
                raise ShapeError(f"{fn} needs a column vector, got {shape_text(u)}", e)
            sq = sum_seq(transpose(u), u)
            return sq if fn == "norm2sq" else DiagramSum.of(Diagram.single(ScalarFn("sqrt", sq)))
        raise TypeError(fn)


def lower(e, reg: VarRegistry) -> DiagramSum:
    """Diagram sum of ``e``; raises :class:`ShapeError` on ill-typed input."""
    return Lowerer(reg).lower(e)


def shape_of(e, reg: VarRegistry) -> tuple:
    s = lower(e, reg)
    return tuple(s.outputs), tuple(s.inputs)

