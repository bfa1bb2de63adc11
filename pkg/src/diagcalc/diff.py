"""Differentiation of diagram sums by occurrence replacement.

Every occurrence of the variable box is cut out, one at a time, and replaced
by a derivative gadget: a diagram with the occurrence's legs plus two new
boundary wires (rows of X prepended to the outputs, cols of X prepended to
the inputs).  The result is the derivative in block layout.  Sum, product
and tensor rules need no code of their own; they fall out of the cut.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

from .core.diagram import (
    Box, Cap, Cup, Diagram, DiagramSum, ScalarFn, assemble, _nontrivial,
)
from .core.registry import VarRegistry


class DiffError(ValueError):
    pass


class UnknownVariable(DiffError):
    pass


class UnsupportedModifier(DiffError):
    pass


class NonScalarArgument(DiffError):
    pass


class UnsupportedOrdering(DiffError):
    pass


@dataclass(frozen=True)
class VarRef:
    """Differentiate w.r.t. ``symbol``; ``row_form`` means w.r.t. its transpose (``<x|``)."""

    symbol: str
    row_form: bool = False


def _var_shape(reg: VarRegistry, ref: VarRef):
    if ref.symbol not in reg or not reg[ref.symbol].is_variable:
        raise UnknownVariable(f"{ref.symbol!r} is not a declared variable")
    return reg.shape(ref.symbol)


def mentions(obj, symbol: str) -> bool:
    """Does a diagram, sum or node refer to box ``symbol`` anywhere (incl. arguments)?"""
    if isinstance(obj, DiagramSum):
        return any(mentions(d, symbol) for _, d in obj.terms)
    if isinstance(obj, Diagram):
        return any(mentions(k, symbol) for k in obj.nodes)
    if isinstance(obj, Box):
        if obj.arg is not None:
            return mentions(obj.arg, symbol)
        return obj.label == symbol
    if isinstance(obj, ScalarFn):
        return mentions(obj.arg, symbol)
    return False


def count_occurrences(obj, symbol: str) -> int:
    if isinstance(obj, DiagramSum):
        return sum(count_occurrences(d, symbol) for _, d in obj.terms)
    if isinstance(obj, Diagram):
        return sum(count_occurrences(k, symbol) for k in obj.nodes)
    if isinstance(obj, Box):
        if obj.arg is not None:
            return count_occurrences(obj.arg, symbol)
        return int(obj.label == symbol)
    if isinstance(obj, ScalarFn):
        return count_occurrences(obj.arg, symbol)
    return 0


# ------------------------------------------------------------------ gadgets


def _swap_occurrence_ports(g: Diagram, n_new_out: int, n_new_in: int) -> Diagram:
    """Exchange the roles of the occurrence's output and input legs.

    Turns the gadget of an occurrence into the gadget of the same occurrence
    read upside down (its transpose).
    """
    occ_outs = g.outputs[n_new_out:]
    occ_ins = g.inputs[n_new_in:]

    def move(port):
        if port[0] == "out" and port[1] >= n_new_out:
            return ("in", n_new_in + port[1] - n_new_out)
        if port[0] == "in" and port[1] >= n_new_in:
            return ("out", n_new_out + port[1] - n_new_in)
        return port

    return Diagram(
        g.nodes, [(move(p), move(q)) for p, q in g.wires],
        g.inputs[:n_new_in] + occ_outs, g.outputs[:n_new_out] + occ_ins,
    )


def _plain_gadget(rows, cols) -> Diagram:
    """d X / d X: a cup on the rows next to a cap on the cols."""
    nodes, wires = [], []
    outs, ins = [], []
    if rows is not None:
        nodes.append(Cup(rows))
        wires += [(("n", 0, 0), ("out", 0)), (("n", 0, 1), ("out", 1))]
        outs = [rows, rows]
    if cols is not None:
        c = len(nodes)
        nodes.append(Cap(cols))
        wires += [(("n", c, 0), ("in", 0)), (("n", c, 1), ("in", 1))]
        ins = [cols, cols]
    return Diagram(tuple(nodes), wires, ins, outs)


def _inverse_gadget(label, dim) -> Diagram:
    """-(1 (x) X^-1)|cup><cap|(1 (x) X^-1) with the occurrence legs last."""
    inv = Box(label, dim, dim, inverse=True)
    # nodes: 0 upper inverse, 1 lower inverse, 2 cup, 3 cap
    nodes = (inv, inv, Cup(dim), Cap(dim))
    wires = [
        (("n", 0, 0), ("out", 1)),
        (("n", 0, 1), ("n", 2, 1)),
        (("n", 2, 0), ("out", 0)),
        (("n", 1, 1), ("in", 1)),
        (("n", 1, 0), ("n", 3, 1)),
        (("n", 3, 0), ("in", 0)),
    ]
    return Diagram(nodes, wires, (dim, dim), (dim, dim))


def gadget_for(kind: Box, wrt: VarRef, reg: VarRegistry = None) -> DiagramSum:
    """Replacement sum for one occurrence of the variable box ``kind``.

    Boundary: new rows wire, then the occurrence outputs; new cols wire, then
    the occurrence inputs (trivial dimensions omitted).
    """
    if not isinstance(kind, Box) or kind.arg is not None or kind.label != wrt.symbol:
        raise DiffError(f"{kind} is not an occurrence of {wrt.symbol}")
    if reg is not None and (kind.rows, kind.cols) != _var_shape(reg, wrt):
        raise DiffError(f"occurrence shape {(kind.rows, kind.cols)} disagrees with the declaration")
    n_new_out = int(kind.rows is not None)
    n_new_in = int(kind.cols is not None)
    if kind.inverse:
        g = _inverse_gadget(kind.label, kind.rows)
        coeff = -1
    elif kind.modifiers in ((), ("transpose",)):
        g = _plain_gadget(kind.rows, kind.cols)
        coeff = 1
    else:
        raise UnsupportedModifier(f"modifier stack {kind.modifiers}")
    if kind.transpose:
        g = _swap_occurrence_ports(g, n_new_out, n_new_in)
    return DiagramSum.of(g, coeff)


def _compound_gadget(kind: Box, wrt: VarRef, reg) -> DiagramSum:
    """Chain rule through a compound inverse: -Y^-1 (dY/dX) Y^-1."""
    d_arg = differentiate(kind.arg, replace(wrt, row_form=False), reg)
    n_new_out = len(d_arg.outputs) - len(kind.arg.outputs)
    n_new_in = len(d_arg.inputs) - len(kind.arg.inputs)
    plain = replace(kind, transpose=False)
    terms = []
    for c, t in d_arg.terms:
        base = 2
        vd = {}

        def mv(port):
            if port[0] == "n":
                return ("n", port[1] + base, port[2])
            if port[0] == "out":
                if port[1] < n_new_out:
                    return port
                vp = ("v", "upper")
                vd[vp] = kind.rows
                return vp
            if port[1] < n_new_in:
                return port
            vp = ("v", "lower")
            vd[vp] = kind.cols
            return vp

        edges = [(mv(p), mv(q)) for p, q in t.wires]
        edges += [
            (("n", 0, 0), ("out", n_new_out)),
            (("n", 0, 1), ("v", "upper")),
            (("n", 1, 0), ("v", "lower")),
            (("n", 1, 1), ("in", n_new_in)),
        ]
        g = assemble(
            (plain, plain) + t.nodes, edges,
            t.inputs[:n_new_in] + (kind.cols,), t.outputs[:n_new_out] + (kind.rows,), vd,
        )
        if kind.transpose:
            g = _swap_occurrence_ports(g, n_new_out, n_new_in)
        terms.append((-c, g))
    ins = d_arg.inputs[:n_new_in] + kind.ins
    outs = d_arg.outputs[:n_new_out] + kind.outs
    return DiagramSum(tuple(terms), ins, outs)


def _scalar_gadget(kind: ScalarFn, wrt: VarRef, reg) -> DiagramSum:
    """f'(u) * du/dX for f in {sqrt, pow}."""
    du = differentiate(kind.arg, replace(wrt, row_form=False), reg)
    if kind.name == "sqrt":
        factor = Fraction(1, 2)
        inner = DiagramSum.of(Diagram.single(kind))
        extra = (ScalarFn("pow", inner, -1),)
    elif kind.name == "pow":
        factor = Fraction(kind.k)
        extra = () if kind.k == 1 else (ScalarFn("pow", kind.arg, kind.k - 1),)
    else:
        raise UnsupportedModifier(f"no derivative known for scalar function {kind.name!r}")
    terms = []
    for c, t in du.terms:
        g = Diagram(t.nodes + extra, t.wires, t.inputs, t.outputs)
        terms.append((c * factor, g))
    return DiagramSum(tuple(terms), du.inputs, du.outputs)


def _plug(d: Diagram, idx: int, g: Diagram, n_new_out: int, n_new_in: int) -> Diagram:
    """Cut node ``idx`` out of ``d`` and wire gadget ``g`` into the hole."""
    occ = d.nodes[idx]
    n_occ_out = len(occ.outs)
    keep = [i for i in range(len(d.nodes)) if i != idx]
    renum = {old: new for new, old in enumerate(keep)}
    base = len(keep)
    vd = {}

    def from_d(port):
        if port[0] == "n":
            if port[1] == idx:
                vp = ("v", port[2])
                vd[vp] = d.port_dim(port)
                return vp
            return ("n", renum[port[1]], port[2])
        if port[0] == "out":
            return ("out", port[1] + n_new_out)
        return ("in", port[1] + n_new_in)

    def from_g(port):
        if port[0] == "n":
            return ("n", base + port[1], port[2])
        if port[0] == "out":
            if port[1] < n_new_out:
                return port
            return ("v", port[1] - n_new_out)
        if port[1] < n_new_in:
            return port
        return ("v", n_occ_out + port[1] - n_new_in)

    edges = [(from_d(p), from_d(q)) for p, q in d.wires]
    edges += [(from_g(p), from_g(q)) for p, q in g.wires]
    nodes = tuple(d.nodes[i] for i in keep) + g.nodes
    return assemble(
        nodes, edges,
        g.inputs[:n_new_in] + d.inputs, g.outputs[:n_new_out] + d.outputs, vd,
    )


def _to_row_form(s: DiagramSum, n_new_out: int, n_new_in: int) -> DiagramSum:
    """Bend the new rows wire down to the inputs and the new cols wire up to the outputs."""
    outs = s.inputs[:n_new_in] + s.outputs[n_new_out:]
    ins = s.outputs[:n_new_out] + s.inputs[n_new_in:]
    terms = []
    for c, d in s.terms:
        def move(port):
            if port[0] == "out":
                if port[1] < n_new_out:
                    return ("in", port[1])
                return ("out", port[1] - n_new_out + n_new_in)
            if port[0] == "in":
                if port[1] < n_new_in:
                    return ("out", port[1])
                return ("in", port[1] - n_new_in + n_new_out)
            return port

        nodes = list(d.nodes)
        wires = []
        for p, q in d.wires:
            p, q = move(p), move(q)
            if p[0] != "n" and p[0] == q[0]:
                # a bare wire now joins one side to itself: make the bend explicit
                k = len(nodes)
                dim = (ins if p[0] == "in" else outs)[p[1]]
                nodes.append(Cap(dim) if p[0] == "in" else Cup(dim))
                wires += [(("n", k, 0), p), (("n", k, 1), q)]
            else:
                wires.append((p, q))
        terms.append((c, Diagram(tuple(nodes), wires, ins, outs)))
    return DiagramSum(tuple(terms), ins, outs)


def differentiate(s: DiagramSum, wrt: VarRef, reg: VarRegistry) -> DiagramSum:
    """d s / d wrt: one term per (term, occurrence) pair before simplification."""
    rows, cols = _var_shape(reg, wrt)
    n_new_out = int(rows is not None)
    n_new_in = int(cols is not None)
    outs = _nontrivial([rows]) + s.outputs
    ins = _nontrivial([cols]) + s.inputs
    terms = []
    for c, d in s.terms:
        for idx, kind in enumerate(d.nodes):
            if isinstance(kind, Box) and kind.arg is None:
                if kind.label != wrt.symbol:
                    continue
                g = gadget_for(kind, wrt, reg)
            elif isinstance(kind, Box):
                if not mentions(kind.arg, wrt.symbol):
                    continue
                g = _compound_gadget(kind, wrt, reg)
            elif isinstance(kind, ScalarFn):
                if not mentions(kind.arg, wrt.symbol):
                    continue
                g = _scalar_gadget(kind, wrt, reg)
            else:
                continue
            for gc, gd in g.terms:
                terms.append((c * gc, _plug(d, idx, gd, n_new_out, n_new_in)))
    out = DiagramSum(tuple(terms), ins, outs)
    if wrt.row_form:
        out = _to_row_form(out, n_new_out, n_new_in)
    return out


def differentiate_scalar_chain(s: DiagramSum, wrt: VarRef, reg: VarRegistry) -> DiagramSum:
    """Same as :func:`differentiate`; scalar-function nodes go through the chain rule."""
    for _, d in s.terms:
        for kind in d.nodes:
            if isinstance(kind, ScalarFn) and (kind.arg.inputs or kind.arg.outputs):
                raise NonScalarArgument(f"{kind.name} applied to a non-scalar argument")
    return differentiate(s, wrt, reg)


def differentiate_twice(s: DiagramSum, first: VarRef, second: VarRef, reg: VarRegistry) -> DiagramSum:
    """Column-form derivative followed by a row-form one: the Hessian layout."""
    if first.row_form or not second.row_form:
        raise UnsupportedOrdering("only d/d|x> followed by d/d<x| is supported")
    if s.inputs or s.outputs:
        raise NonScalarArgument("second derivatives need a scalar expression")
    return differentiate(differentiate(s, first, reg), second, reg)
