"""String diagrams as open port graphs.

A diagram is a tuple of generator nodes plus a set of undirected wires.
Every node leg, and every boundary position, is a *port*; each port sits on
exactly one wire.  Ports are plain tuples:

    ("n", node_index, leg)    a leg of a node
    ("in", pos)               an input boundary position (bottom of the picture)
    ("out", pos)              an output boundary position (top of the picture)

Node legs are numbered outputs first, then inputs.  Wires carry no
direction; whether a matrix acts "upwards" is recorded only through which
legs of a node count as outputs and through boundary ordering.

A dimension is a string name.  The trivial space R (a "no wire" dimension)
is ``None`` on box shapes and never appears on a wire.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Optional, Sequence

from .errors import BoundaryMismatch, IllFormed, NotEndomorphism

Dim = Optional[str]


def _nontrivial(dims: Iterable[Dim]) -> tuple:
    return tuple(d for d in dims if d is not None)


def rotation_leg_map(n_out: int, n_in: int) -> list:
    """Leg permutation of a 180 degree rotation: ``old leg -> new leg``.

    New outputs are the old inputs reversed, new inputs the old outputs
    reversed.
    """
    new = [0] * (n_out + n_in)
    for j in range(n_out):
        new[j] = n_in + (n_out - 1 - j)
    for j in range(n_in):
        new[n_out + j] = n_in - 1 - j
    return new


# ---------------------------------------------------------------- generators


@dataclass(frozen=True)
class Box:
    """A matrix box ``label : cols -> rows``.

    ``transpose`` and ``inverse`` are the modifier stack, applied inverse
    first.  A box with ``arg`` set is the inverse of a compound endomorphism
    (e.g. ``(X + A)^-1``); its label is informational only.
    """

    label: str
    rows: Dim
    cols: Dim
    transpose: bool = False
    inverse: bool = False
    arg: Optional["DiagramSum"] = None

    def __post_init__(self):
        if self.inverse and self.rows != self.cols:
            raise IllFormed(f"inverse of non-square box {self.label}")
        if self.arg is not None:
            if not self.inverse:
                raise IllFormed("compound boxes must be inverses")
            if self.arg.outputs != _nontrivial([self.rows]) or self.arg.inputs != _nontrivial([self.cols]):
                raise IllFormed("compound argument boundary does not match box shape")

    @property
    def modifiers(self) -> tuple:
        return ("inverse",) * self.inverse + ("transpose",) * self.transpose

    @property
    def outs(self) -> tuple:
        return _nontrivial([self.cols if self.transpose else self.rows])

    @property
    def ins(self) -> tuple:
        return _nontrivial([self.rows if self.transpose else self.cols])

    @property
    def row_leg(self) -> Optional[int]:
        """Leg carrying the row index of the untransposed matrix."""
        if self.rows is None:
            return None
        if not self.transpose:
            return 0
        return len(self.outs)

    @property
    def col_leg(self) -> Optional[int]:
        if self.cols is None:
            return None
        if self.transpose:
            return 0
        return len(self.outs)

    def rotated(self) -> "Box":
        return replace(self, transpose=not self.transpose)

    @property
    def is_atomic(self) -> bool:
        return self.arg is None


@dataclass(frozen=True)
class Cup:
    """The vector sum_i |ii> : R -> dim (x) dim."""

    dim: str

    @property
    def outs(self):
        return (self.dim, self.dim)

    @property
    def ins(self):
        return ()

    def rotated(self):
        return Cap(self.dim)


@dataclass(frozen=True)
class Cap:
    """The row vector sum_i <ii|."""

    dim: str

    @property
    def outs(self):
        return ()

    @property
    def ins(self):
        return (self.dim, self.dim)

    def rotated(self):
        return Cup(self.dim)


@dataclass(frozen=True)
class Swap:
    """Exchange of two factors: ``first (x) second -> second (x) first``."""

    first: str
    second: str

    @property
    def outs(self):
        return (self.second, self.first)

    @property
    def ins(self):
        return (self.first, self.second)

    def rotated(self):
        return self


@dataclass(frozen=True)
class Spider:
    """All-indices-equal indicator with ``in_legs`` inputs and ``out_legs`` outputs."""

    dim: str
    in_legs: int
    out_legs: int

    def __post_init__(self):
        if self.in_legs < 0 or self.out_legs < 0 or self.in_legs + self.out_legs < 1:
            raise IllFormed("spider needs at least one leg")

    @property
    def outs(self):
        return (self.dim,) * self.out_legs

    @property
    def ins(self):
        return (self.dim,) * self.in_legs

    def rotated(self):
        return Spider(self.dim, self.out_legs, self.in_legs)


SCALAR_FNS = ("sqrt", "pow")


@dataclass(frozen=True)
class ScalarFn:
    """A scalar function applied to a closed diagram sum: ``sqrt(u)`` or ``u^k``."""

    name: str
    arg: "DiagramSum"
    k: int = 1

    def __post_init__(self):
        if self.name not in SCALAR_FNS:
            raise IllFormed(f"unknown scalar function {self.name!r}")
        if self.arg.inputs or self.arg.outputs:
            raise IllFormed("scalar function argument must be closed")
        if self.name == "sqrt" and self.k != 1:
            raise IllFormed("sqrt takes no exponent")

    @property
    def outs(self):
        return ()

    @property
    def ins(self):
        return ()

    def rotated(self):
        return self


NodeKind = (Box, Cup, Cap, Swap, Spider, ScalarFn)


def legs_of(kind) -> tuple:
    return tuple(kind.outs) + tuple(kind.ins)


def is_output_leg(kind, leg: int) -> bool:
    return leg < len(kind.outs)


# ------------------------------------------------------------------ diagrams


def _wire(p, q) -> tuple:
    return (p, q) if p <= q else (q, p)


@dataclass(frozen=True)
class Diagram:
    nodes: tuple
    wires: frozenset
    inputs: tuple
    outputs: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "wires", frozenset(_wire(p, q) for p, q in self.wires))
        self._check()

    def _check(self):
        expected = set(self.all_ports())
        seen = set()
        for p, q in self.wires:
            for r in (p, q):
                if r not in expected:
                    raise IllFormed(f"wire endpoint {r} does not exist")
                if r in seen:
                    raise IllFormed(f"port {r} used by more than one wire")
                seen.add(r)
            if p == q:
                raise IllFormed(f"wire from {p} to itself")
            if self.port_dim(p) != self.port_dim(q):
                raise IllFormed(f"wire {p}-{q} joins {self.port_dim(p)} to {self.port_dim(q)}")
            if p[0] != "n" and q[0] != "n" and p[0] == q[0]:
                raise IllFormed(f"wire {p}-{q} bends between boundary ports on one side")
        missing = expected - seen
        if missing:
            raise IllFormed(f"unconnected ports {sorted(missing)}")
        for d in self.inputs + self.outputs:
            if not isinstance(d, str) or not d:
                raise IllFormed(f"bad boundary dimension {d!r}")

    # -- ports
    def all_ports(self):
        for i, kind in enumerate(self.nodes):
            for leg in range(len(legs_of(kind))):
                yield ("n", i, leg)
        for pos in range(len(self.inputs)):
            yield ("in", pos)
        for pos in range(len(self.outputs)):
            yield ("out", pos)

    def port_dim(self, port) -> str:
        if port[0] == "n":
            return legs_of(self.nodes[port[1]])[port[2]]
        if port[0] == "in":
            return self.inputs[port[1]]
        return self.outputs[port[1]]

    @cached_property
    def partner(self) -> dict:
        out = {}
        for p, q in self.wires:
            out[p] = q
            out[q] = p
        return out

    # -- constructors
    @classmethod
    def identity(cls, dims: Sequence[str]) -> "Diagram":
        dims = tuple(dims)
        return cls((), [(("in", k), ("out", k)) for k in range(len(dims))], dims, dims)

    @classmethod
    def empty(cls) -> "Diagram":
        return cls((), (), (), ())

    @classmethod
    def single(cls, kind) -> "Diagram":
        """One node with its outputs on the output boundary and inputs on the input boundary."""
        n_out = len(kind.outs)
        wires = [(("n", 0, j), ("out", j)) for j in range(n_out)]
        wires += [(("n", 0, n_out + j), ("in", j)) for j in range(len(kind.ins))]
        return cls((kind,), wires, kind.ins, kind.outs)

    @property
    def is_closed(self) -> bool:
        return not self.inputs and not self.outputs

    def __repr__(self):
        return f"Diagram({len(self.nodes)} nodes, {list(self.inputs)} -> {list(self.outputs)})"


def assemble(nodes, edges, inputs, outputs, virtual_dims=None) -> Diagram:
    """Build a diagram from edges that may pass through *virtual* ports.

    A virtual port is any tuple starting with ``"v"``; each must have degree
    two and is contracted away.  Chains that close up on virtual ports only
    are node-free loops and become a wired Cup/Cap pair.
    """
    virtual_dims = virtual_dims or {}
    adj: dict = {}
    for eid, (p, q) in enumerate(edges):
        adj.setdefault(p, []).append((eid, q))
        adj.setdefault(q, []).append((eid, p))
    for p, nbrs in adj.items():
        want = 2 if p[0] == "v" else 1
        if len(nbrs) != want:
            raise IllFormed(f"port {p} has degree {len(nbrs)}, expected {want}")
    wires = []
    used = set()
    for p in adj:
        if p[0] == "v":
            continue
        eid, cur = adj[p][0]
        if eid in used:
            continue
        used.add(eid)
        while cur[0] == "v":
            (e1, a), (e2, b) = adj[cur]
            eid, cur = (e2, b) if e1 == eid else (e1, a)
            used.add(eid)
        wires.append((p, cur))
    nodes = list(nodes)
    for eid, (p, q) in enumerate(edges):
        if eid in used:
            continue
        # walk the closed virtual loop
        dim = virtual_dims.get(p) or virtual_dims.get(q)
        used.add(eid)
        cur, prev = q, eid
        while cur != p:
            (e1, a), (e2, b) = adj[cur]
            prev, cur = (e2, b) if e1 == prev else (e1, a)
            used.add(prev)
            dim = dim or virtual_dims.get(cur)
        if dim is None:
            raise IllFormed("closed loop with unknown dimension")
        cup, cap = len(nodes), len(nodes) + 1
        nodes += [Cup(dim), Cap(dim)]
        wires += [(("n", cup, 0), ("n", cap, 0)), (("n", cup, 1), ("n", cap, 1))]
    return Diagram(tuple(nodes), wires, inputs, outputs)


def _shift(port, offset: int, in_off: int = 0, out_off: int = 0):
    if port[0] == "n":
        return ("n", port[1] + offset, port[2])
    if port[0] == "in":
        return ("in", port[1] + in_off)
    return ("out", port[1] + out_off)


def compose_seq(top: Diagram, bottom: Diagram) -> Diagram:
    """``top`` after ``bottom``: bottom's outputs are plugged into top's inputs."""
    if bottom.outputs != top.inputs:
        diff = [
            k for k in range(max(len(bottom.outputs), len(top.inputs)))
            if k >= len(bottom.outputs) or k >= len(top.inputs) or bottom.outputs[k] != top.inputs[k]
        ]
        raise BoundaryMismatch(
            f"cannot compose {list(bottom.outputs)} into {list(top.inputs)}; positions {diff} differ"
        )
    off = len(bottom.nodes)
    vdims = {}
    edges = []
    for p, q in bottom.wires:
        ends = []
        for r in (p, q):
            if r[0] == "out":
                r = ("v", r[1])
                vdims[r] = bottom.outputs[r[1]]
            ends.append(r)
        edges.append(tuple(ends))
    for p, q in top.wires:
        ends = []
        for r in (p, q):
            if r[0] == "in":
                r = ("v", r[1])
            else:
                r = _shift(r, off)
            ends.append(r)
        edges.append(tuple(ends))
    return assemble(bottom.nodes + top.nodes, edges, bottom.inputs, top.outputs, vdims)


def compose_par(left: Diagram, right: Diagram) -> Diagram:
    """Tensor product: boundaries concatenated left then right."""
    off = len(left.nodes)
    wires = list(left.wires)
    wires += [
        (_shift(p, off, len(left.inputs), len(left.outputs)), _shift(q, off, len(left.inputs), len(left.outputs)))
        for p, q in right.wires
    ]
    return Diagram(left.nodes + right.nodes, wires, left.inputs + right.inputs, left.outputs + right.outputs)


def rotate180(d: Diagram) -> Diagram:
    """Rotate the picture half a turn; evaluates to the (index-reversed) transpose."""
    nodes = tuple(k.rotated() for k in d.nodes)
    maps = [rotation_leg_map(len(k.outs), len(k.ins)) for k in d.nodes]
    n_in, n_out = len(d.inputs), len(d.outputs)

    def move(port):
        if port[0] == "n":
            return ("n", port[1], maps[port[1]][port[2]])
        if port[0] == "in":
            return ("out", n_in - 1 - port[1])
        return ("in", n_out - 1 - port[1])

    wires = [(move(p), move(q)) for p, q in d.wires]
    return Diagram(nodes, wires, tuple(reversed(d.outputs)), tuple(reversed(d.inputs)))


def close_trace(d: Diagram) -> Diagram:
    """Partial trace over every boundary wire: ``<cap| d (x) 1 |cup>`` per wire."""
    if d.inputs != d.outputs:
        raise NotEndomorphism(f"trace needs equal boundaries, got {list(d.inputs)} -> {list(d.outputs)}")
    nodes = list(d.nodes)
    cups, caps = {}, {}
    for k, dim in enumerate(d.inputs):
        cups[k] = len(nodes)
        caps[k] = len(nodes) + 1
        nodes += [Cup(dim), Cap(dim)]
    edges = []
    for p, q in d.wires:
        ends = []
        for r in (p, q):
            if r[0] == "in":
                r = ("n", cups[r[1]], 0)
            elif r[0] == "out":
                r = ("n", caps[r[1]], 0)
            ends.append(r)
        edges.append(tuple(ends))
    for k in cups:
        edges.append((("n", cups[k], 1), ("n", caps[k], 1)))
    return Diagram(tuple(nodes), edges, (), ())


def remove_nodes(d: Diagram, drop: Iterable[int], extra_nodes=(), edges=(), inputs=None, outputs=None,
                 virtual_dims=None) -> Diagram:
    """Delete nodes, renumber the rest, and add ``extra_nodes`` plus ``edges``.

    Wires touching a deleted node turn into virtual ports ``("v", "x", i, leg)``
    so callers can reconnect them through ``edges``.  Extra nodes are
    referenced as ``("n", ("new", j), leg)``.
    """
    drop = set(drop)
    keep = [i for i in range(len(d.nodes)) if i not in drop]
    renum = {old: new for new, old in enumerate(keep)}
    base = len(keep)
    vdims = dict(virtual_dims or {})

    def fix(port):
        if port[0] == "n":
            idx = port[1]
            if isinstance(idx, tuple):
                return ("n", base + idx[1], port[2])
            if idx in drop:
                vp = ("v", "x", idx, port[2])
                vdims[vp] = d.port_dim(port)
                return vp
            return ("n", renum[idx], port[2])
        return port

    all_edges = [(fix(p), fix(q)) for p, q in d.wires]
    all_edges += [(fix(p), fix(q)) for p, q in edges]
    nodes = tuple(d.nodes[i] for i in keep) + tuple(extra_nodes)
    return assemble(
        nodes, all_edges,
        d.inputs if inputs is None else inputs,
        d.outputs if outputs is None else outputs,
        vdims,
    )


def replace_node(d: Diagram, idx: int, kind, leg_map: Sequence[int]) -> Diagram:
    """Swap node ``idx`` for ``kind``; old leg ``l`` becomes new leg ``leg_map[l]``."""
    nodes = list(d.nodes)
    nodes[idx] = kind

    def move(port):
        if port[0] == "n" and port[1] == idx:
            return ("n", idx, leg_map[port[2]])
        return port

    return Diagram(tuple(nodes), [(move(p), move(q)) for p, q in d.wires], d.inputs, d.outputs)


# ------------------------------------------------------------- diagram sums


@dataclass(frozen=True)
class DiagramSum:
    """Formal rational combination of diagrams sharing one boundary."""

    terms: tuple
    inputs: tuple
    outputs: tuple

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        clean = []
        for c, d in self.terms:
            c = Fraction(c)
            if c == 0:
                continue
            if d.inputs != self.inputs or d.outputs != self.outputs:
                raise BoundaryMismatch(
                    f"term {list(d.inputs)} -> {list(d.outputs)} in sum over "
                    f"{list(self.inputs)} -> {list(self.outputs)}"
                )
            clean.append((c, d))
        object.__setattr__(self, "terms", tuple(clean))

    @classmethod
    def of(cls, d: Diagram, coeff=1) -> "DiagramSum":
        return cls(((Fraction(coeff), d),), d.inputs, d.outputs)

    @classmethod
    def zero(cls, inputs=(), outputs=()) -> "DiagramSum":
        return cls((), inputs, outputs)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __add__(self, other: "DiagramSum") -> "DiagramSum":
        if (self.inputs, self.outputs) != (other.inputs, other.outputs):
            raise BoundaryMismatch(
                f"cannot add {list(self.inputs)} -> {list(self.outputs)} and "
                f"{list(other.inputs)} -> {list(other.outputs)}"
            )
        return DiagramSum(self.terms + other.terms, self.inputs, self.outputs)

    def scale(self, c) -> "DiagramSum":
        c = Fraction(c)
        return DiagramSum(tuple((c * k, d) for k, d in self.terms), self.inputs, self.outputs)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)


def sum_seq(top: DiagramSum, bottom: DiagramSum) -> DiagramSum:
    """Bilinear sequential composition."""
    if bottom.outputs != top.inputs:
        raise BoundaryMismatch(f"cannot compose {list(bottom.outputs)} into {list(top.inputs)}")
    terms = tuple(
        (a * b, compose_seq(t, s)) for (a, t), (b, s) in itertools.product(top.terms, bottom.terms)
    )
    return DiagramSum(terms, bottom.inputs, top.outputs)


def sum_par(left: DiagramSum, right: DiagramSum) -> DiagramSum:
    terms = tuple(
        (a * b, compose_par(l, r)) for (a, l), (b, r) in itertools.product(left.terms, right.terms)
    )
    return DiagramSum(terms, left.inputs + right.inputs, left.outputs + right.outputs)


def sum_rotate(s: DiagramSum) -> DiagramSum:
    return DiagramSum(
        tuple((c, rotate180(d)) for c, d in s.terms),
        tuple(reversed(s.outputs)), tuple(reversed(s.inputs)),
    )


def sum_trace(s: DiagramSum) -> DiagramSum:
    if s.inputs != s.outputs:
        raise NotEndomorphism(f"trace needs equal boundaries, got {list(s.inputs)} -> {list(s.outputs)}")
    return DiagramSum(tuple((c, close_trace(d)) for c, d in s.terms), (), ())
