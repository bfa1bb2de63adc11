"""Read a normal-form diagram sum back as matrix-calculus text.

Each term is taken apart into box chains.  Walking a chain, a box entered
on its row side contributes ``M``, one entered on its column side ``M'``.
Spider patterns from ``.*`` become pseudo-boxes first.  Closed pieces turn
into scalar factors (``tr(...)``, ``(a' * X * b)``, ``sqrt(...)``).  The
open part is read from the boundary.

The printed form is canonical: factors inside traces and bilinear forms use
the lexicographically least rotation/direction, scalar factors are sorted,
and terms are sorted by their printed body.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from ..core.diagram import Box, Cap, Cup, Diagram, DiagramSum, ScalarFn, Spider
from .chains import walk_from


class NotExpressible(ValueError):
    """Some terms have no matrix-calculus reading; ``residual`` holds them."""

    def __init__(self, message, residual: DiagramSum):
        super().__init__(message)
        self.residual = residual


class _Fail(Exception):
    pass


# ----------------------------------------------------------------- printing


def fmt_coeff(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


@dataclass(frozen=True)
class Factor:
    text: str
    compound: bool = False  # needs parentheses next to other factors

    def inside(self) -> str:
        return f"({self.text})" if self.compound else self.text


def join_product(factors) -> str:
    factors = list(factors)
    if len(factors) == 1:
        return factors[0].text
    return " * ".join(f.inside() for f in factors)


@dataclass(frozen=True)
class MatrixTerm:
    coeff: Fraction
    factors: tuple  # Factor objects: sorted scalars, then the matrix word

    @property
    def body(self) -> str:
        return join_product(self.factors) if self.factors else ""

    def __str__(self):
        body = self.body
        if not body:
            return fmt_coeff(self.coeff)
        if self.coeff == 1:
            return body
        if self.coeff == -1:
            return "-" + body
        return f"{fmt_coeff(self.coeff)} * {body}"


@dataclass(frozen=True)
class MatrixExpr:
    terms: tuple
    inputs: tuple = ()
    outputs: tuple = ()

    def __str__(self):
        if not self.terms:
            return "0"
        out = str(self.terms[0])
        for t in self.terms[1:]:
            s = str(t)
            out += " - " + s[1:] if s.startswith("-") else " + " + s
        return out

    @property
    def single_factor(self) -> bool:
        return len(self.terms) == 1 and self.terms[0].coeff == 1 and len(self.terms[0].factors) == 1


# ------------------------------------------------------------------- atoms


@dataclass
class _Atom:
    """A box, or a pseudo-box for a Hadamard pattern."""

    row: Optional[tuple]  # side ports (None = dead side)
    col: Optional[tuple]
    node: Optional[int] = None
    operands: tuple = ()  # Hadamard operand readings from the row side, as (fac list)
    loops: tuple = ()
    eye: Optional[str] = None


def _box_base(kind: Box) -> str:
    if kind.arg is not None:
        return f"inv({expr_str(kind.arg)})"
    if kind.inverse:
        return f"inv({kind.label})"
    return kind.label


def _reverse(reading):
    return [(atom, not from_row) for atom, from_row in reversed(reading)]


class _Reader:
    def __init__(self, d: Diagram):
        self.d = d
        self.atoms: list = []
        self.side: dict = {}
        self.used_nodes: set = set()
        self.scalars: list = []

    # ---- factors

    def render(self, atom: _Atom, from_row: bool) -> Factor:
        if atom.node is not None:
            base = _box_base(self.d.nodes[atom.node])
            return Factor(base if from_row else base + "'")
        ops = []
        for reading in atom.operands:
            r = reading if from_row else _reverse(reading)
            ops.append(self.product(r))
        for reading in atom.loops:
            ops.append(min((self.product(reading), self.product(_reverse(reading))), key=lambda f: f.text))
        if atom.eye is not None:
            ops.append(Factor(f"eye({atom.eye})"))
        texts = sorted(f.inside() for f in ops)
        return Factor(" .* ".join(texts), compound=True)

    def product(self, reading) -> Factor:
        facs = [self.render(a, fr) for a, fr in reading]
        if not facs:
            raise _Fail("empty operand")
        if len(facs) == 1:
            return facs[0]
        return Factor(join_product(facs), compound=True)

    # ---- box-only chains (used to find spider patterns)

    def _box_chain(self, port):
        q = self.d.partner[port]
        if q[0] == "n" and isinstance(self.d.nodes[q[1]], Box):
            steps, end = walk_from(self.d, q[1], q[2])
            reading = []
            for node, enter, _ in steps:
                kind = self.d.nodes[node]
                reading.append((node, enter == kind.row_leg))
            return reading, end
        return [], q

    def _as_atoms(self, reading):
        out = []
        for node, from_row in reading:
            atom = _Atom(None, None, node=node)
            self.used_nodes.add(node)
            out.append((atom, from_row))
        return out

    def find_hadamards(self):
        d = self.d
        spiders = [i for i, k in enumerate(d.nodes) if isinstance(k, Spider)]
        done = set()
        info = {}
        for s in spiders:
            kind = d.nodes[s]
            legs = {}
            for leg in range(kind.in_legs + kind.out_legs):
                reading, end = self._box_chain(("n", s, leg))
                legs[leg] = (reading, end)
            info[s] = legs

        def classify(s, leg):
            reading, end = info[s][leg]
            if end is None:
                return "dead", None
            if end[0] == "n" and end[1] == s:
                return "loop", end[2]
            if end[0] == "n" and isinstance(d.nodes[end[1]], Spider):
                return "spider", end[1]
            return "ext", None

        for s in spiders:
            if s in done:
                continue
            kind = d.nodes[s]
            cls = {leg: classify(s, leg) for leg in info[s]}
            loops = [leg for leg, (c, other) in cls.items() if c == "loop" and leg < other]
            deads = [leg for leg, (c, _) in cls.items() if c == "dead"]
            ext = [leg for leg, (c, _) in cls.items() if c in ("ext", "spider")]
            linked = {}
            for leg, (c, t) in cls.items():
                if c == "spider":
                    linked.setdefault(t, []).append(leg)
            mine = [info[s][leg][0] for leg in loops]
            # pair of spiders joined by several chains
            paired = False
            for t, legs in linked.items():
                if t in done or len(legs) < 2:
                    continue
                tcls = {leg: classify(t, leg) for leg in info[t]}
                t_rest = [leg for leg, (c, o) in tcls.items() if not (c == "spider" and o == s)]
                s_rest = [leg for leg in cls if leg not in legs]
                if len(s_rest) != 1 or len(t_rest) != 1:
                    continue
                if cls[s_rest[0]][0] != "ext" and cls[s_rest[0]][0] != "spider":
                    continue
                if tcls[t_rest[0]][0] not in ("ext", "spider"):
                    continue
                ops = tuple(self._as_atoms(info[s][leg][0]) for leg in sorted(legs))
                if any(not op for op in ops):
                    raise _Fail("direct spider wire")
                self._add(_Atom(("n", s, s_rest[0]), ("n", t, t_rest[0]), operands=ops))
                done.update((s, t))
                paired = True
                break
            if paired:
                continue
            if len(ext) == 2 and loops and not deads:
                self._add(_Atom(("n", s, ext[0]), ("n", s, ext[1]),
                                loops=tuple(self._as_atoms(r) for r in mine), eye=kind.dim))
            elif len(ext) == 1 and deads and not loops:
                ops = tuple(self._as_atoms(info[s][leg][0]) for leg in deads)
                self._add(_Atom(("n", s, ext[0]), None, operands=ops))
            elif not ext and not deads and loops:
                atom = _Atom(None, None, loops=tuple(self._as_atoms(r) for r in mine))
                self.scalars.append(Factor(f"tr({self.render(atom, True).text})"))
            else:
                raise _Fail("spider pattern without a matrix reading")
            done.add(s)

    def _add(self, atom: _Atom):
        self.atoms.append(atom)
        if atom.row is not None:
            self.side[atom.row] = (atom, True)
        if atom.col is not None:
            self.side[atom.col] = (atom, False)

    def add_boxes(self):
        for i, kind in enumerate(self.d.nodes):
            if isinstance(kind, Box) and i not in self.used_nodes:
                if kind.rows is None and kind.cols is None:
                    base = _box_base(kind)
                    self.scalars.append(Factor(base))
                    self.used_nodes.add(i)
                    continue
                row = ("n", i, kind.row_leg) if kind.row_leg is not None else None
                col = ("n", i, kind.col_leg) if kind.col_leg is not None else None
                self._add(_Atom(row, col, node=i))

    # ---- walking over atoms

    def follow(self, port):
        """Partner of ``port``, passing straight through cups and caps."""
        q = self.d.partner[port]
        seen = 0
        while q[0] == "n" and isinstance(self.d.nodes[q[1]], (Cup, Cap)):
            self.cups.add(q[1])
            q = self.d.partner[("n", q[1], 1 - q[2])]
            seen += 1
            if seen > len(self.d.nodes):
                raise _Fail("cup loop")
        return q

    def walk(self, atom: _Atom, from_row: bool):
        """Enter ``atom`` on a side and keep going; returns (reading, end)."""
        reading = []
        start = (id(atom), from_row)
        while True:
            self.visited.add(id(atom))
            reading.append((atom, from_row))
            exit_port = atom.col if from_row else atom.row
            if exit_port is None:
                return reading, ("dead",)
            q = self.follow(exit_port)
            if q in self.side:
                atom, from_row = self.side[q]
                if (id(atom), from_row) == start:
                    return reading, ("cycle",)
                continue
            if q[0] in ("in", "out"):
                return reading, q
            raise _Fail(f"chain ends on {q}")

    def from_boundary(self, port):
        q = self.follow(port)
        if q in self.side:
            atom, fr = self.side[q]
            return self.walk(atom, fr)
        if q[0] in ("in", "out"):
            return [], q
        raise _Fail(f"boundary wire ends on {q}")

    # ---- whole term

    def read(self):
        d = self.d
        self.cups: set = set()
        self.visited: set = set()
        self.find_hadamards()
        self.add_boxes()
        for i, kind in enumerate(d.nodes):
            if isinstance(kind, ScalarFn):
                self.scalars.append(_scalar_fn_factor(kind))
        n_out, n_in = len(d.outputs), len(d.inputs)
        out_paths = [self.from_boundary(("out", k)) for k in range(n_out)]
        reached = {end for _, end in out_paths if end[0] == "in"}
        in_paths = [None if ("in", k) in reached else self.from_boundary(("in", k)) for k in range(n_in)]
        word = self._blocks(out_paths, in_paths)
        # closed chains from dead ends, then cycles
        for atom in self.atoms:
            if id(atom) in self.visited:
                continue
            if atom.row is None or atom.col is None:
                reading, end = self.walk(atom, atom.row is None)
                if end != ("dead",):
                    raise _Fail("open chain off the boundary")
                fwd, back = self.product(reading), self.product(_reverse(reading))
                self.scalars.append(min(fwd, back, key=lambda f: f.text))
        for atom in self.atoms:
            if id(atom) in self.visited:
                continue
            reading, end = self.walk(atom, True)
            if end != ("cycle",):
                raise _Fail("unexpected open chain")
            self.scalars.append(Factor(f"tr({_least_cycle(self, reading)})"))
        for i, kind in enumerate(d.nodes):
            if isinstance(kind, Cup) and i not in self.cups:
                p, q = d.partner[("n", i, 0)], d.partner[("n", i, 1)]
                if p[0] == "n" and p[1] == q[1] and isinstance(d.nodes[p[1]], Cap):
                    self.cups.update((i, p[1]))
                    self.scalars.append(Factor(f"dim({kind.dim})"))
        for i, kind in enumerate(d.nodes):
            if isinstance(kind, (Cup, Cap)) and i not in self.cups:
                raise _Fail("stray cup or cap")
        scalars = sorted(self.scalars, key=lambda f: f.text)
        return tuple(scalars) + tuple(word)

    def _blocks(self, out_paths, in_paths):
        d = self.d
        n_out, n_in = len(out_paths), len(in_paths)
        po = pi = 0
        blocks = []  # (factors, has_outs, has_ins)

        def path_factors(reading, dim):
            if not reading:
                return [Factor(f"eye({dim})")]
            return [self.render(a, fr) for a, fr in reading]

        while po < n_out or pi < n_in:
            if po < n_out:
                reading, end = out_paths[po]
                if end == ("in", pi):
                    blocks.append((path_factors(reading, d.outputs[po]), True, True))
                    po, pi = po + 1, pi + 1
                    continue
                if end == ("dead",):
                    blocks.append(([self.render(a, fr) for a, fr in reading], True, False))
                    po += 1
                    continue
                if not reading and end == ("out", po + 1):
                    blocks.append(([Factor(f"cup({d.outputs[po]})")], True, False))
                    po += 2
                    continue
                if (not reading and end == ("in", pi + 1) and po + 1 < n_out
                        and out_paths[po + 1] == ([], ("in", pi))):
                    blocks.append(([Factor(f"swap({d.inputs[pi]}, {d.inputs[pi + 1]})")], True, True))
                    po, pi = po + 2, pi + 2
                    continue
            if pi < n_in and in_paths[pi] is not None:
                reading, end = in_paths[pi]
                if end == ("dead",):
                    blocks.append(([self.render(a, fr) for a, fr in _reverse(reading)], False, True))
                    pi += 1
                    continue
                if not reading and end == ("in", pi + 1):
                    blocks.append(([Factor(f"cap({d.inputs[pi]})")], False, True))
                    pi += 2
                    continue
            raise _Fail("boundary wiring has no kron/product reading")
        if not blocks:
            return []
        if len(blocks) == 1:
            return blocks[0][0]
        if len(blocks) == 2 and not blocks[0][2] and not blocks[1][1]:
            return blocks[0][0] + blocks[1][0]
        args = ", ".join(join_product(b[0]) for b in blocks)
        return [Factor(f"kron({args})")]


def _least_cycle(reader: _Reader, reading) -> str:
    cands = []
    for r in (reading, _reverse(reading)):
        for k in range(len(r)):
            rot = r[k:] + r[:k]
            cands.append(join_product([reader.render(a, fr) for a, fr in rot]))
    return min(cands)


def _scalar_fn_factor(kind: ScalarFn) -> Factor:
    inner = to_matrix_expr(kind.arg)
    if kind.name == "sqrt":
        return Factor(f"sqrt({inner})")
    if inner.single_factor and not inner.terms[0].factors[0].compound:
        base = str(inner)
    else:
        base = f"({inner})"
    return Factor(f"{base}^{kind.k}")


# ------------------------------------------------------------------- public


def read_term(d: Diagram) -> tuple:
    """Factors of one term: sorted scalar factors, then the matrix word."""
    return _Reader(d).read()


def to_matrix_expr(s, partial: bool = False) -> MatrixExpr:
    """Canonical matrix-calculus reading of a (normal-form) sum.

    Raises :class:`NotExpressible` with the offending terms as ``residual``
    unless ``partial`` is set, in which case those terms are skipped.
    """
    if isinstance(s, Diagram):
        s = DiagramSum.of(s)
    merged: dict = {}
    bad = []
    reasons = []
    for c, d in s.terms:
        try:
            factors = read_term(d)
        except _Fail as exc:
            bad.append((c, d))
            reasons.append(str(exc))
            continue
        except NotExpressible as exc:
            bad.append((c, d))
            reasons.append(str(exc))
            continue
        body = join_product(factors) if factors else ""
        if body in merged:
            merged[body] = (merged[body][0] + c, factors)
        else:
            merged[body] = (c, factors)
    if bad and not partial:
        raise NotExpressible("; ".join(sorted(set(reasons))), DiagramSum(tuple(bad), s.inputs, s.outputs))
    terms = [MatrixTerm(c, f) for body, (c, f) in sorted(merged.items()) if c != 0]
    return MatrixExpr(tuple(terms), tuple(s.inputs), tuple(s.outputs))


def expr_str(s) -> str:
    return str(to_matrix_expr(s))
