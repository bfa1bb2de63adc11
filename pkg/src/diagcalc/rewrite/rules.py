"""Rewrite rules for diagrams.

A rule is a matcher (``find``) plus a rewriter (``apply``).  Rewriting a
term returns a list of ``(coefficient, diagram)`` pairs: most rules give one
pair with coefficient 1, scalar folding can give a rational factor, no terms
(the term vanishes) or several (``(u + v)^1`` distributes).

Each rule also carries ``sample``, a generator of random diagrams that
contain a redex, so the tests can check every rule for semantic soundness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from ..core.diagram import (
    Box, Cap, Cup, Diagram, DiagramSum, ScalarFn, Spider, Swap, assemble, close_trace, compose_par,
    compose_seq, legs_of, replace_node, rotation_leg_map, sum_rotate,
)
from ..core.equality import kind_key, sums_equal
from .chains import chains, forward_flags, port_polarity


@dataclass(frozen=True)
class RewriteRule:
    name: str
    find: Callable[[Diagram], Optional[object]]
    apply: Callable[[Diagram, object], list]
    sample: Callable[[object], Diagram]
    doc: str = ""

    def __repr__(self):
        return f"RewriteRule({self.name})"


# ------------------------------------------------------------------ helpers


def _vport(port):
    return ("v", "x", port[1], port[2])


def splice(d: Diagram, drop, extra_nodes=(), mapping=None, joins=(), extra_edges=()) -> Diagram:
    """Remove nodes ``drop`` and reconnect what touched them.

    ``mapping`` sends legs of dropped nodes to legs of new nodes
    (``("n", ("new", j), leg)``); each pair in ``joins`` names two dropped
    legs whose partners get wired together.  A wire between two dropped legs
    that are neither mapped nor joined disappears.
    """
    drop = set(drop)
    mapping = mapping or {}
    joined = {p for pair in joins for p in pair}
    keep = [i for i in range(len(d.nodes)) if i not in drop]
    renum = {old: new for new, old in enumerate(keep)}
    base = len(keep)
    vdims = {}

    def fix(port):
        if port[0] != "n":
            return port
        idx = port[1]
        if isinstance(idx, tuple):
            return ("n", base + idx[1], port[2])
        if idx in drop:
            if port in mapping:
                return fix(mapping[port])
            vdims[_vport(port)] = d.port_dim(port)
            return _vport(port)
        return ("n", renum[idx], port[2])

    def live(port):
        return not (port[0] == "n" and port[1] in drop) or port in mapping or port in joined

    edges = []
    for p, q in d.wires:
        if not live(p) and not live(q):
            continue
        edges.append((fix(p), fix(q)))
    edges += [(_vport(a), _vport(b)) for a, b in joins]
    edges += [(fix(p), fix(q)) for p, q in extra_edges]
    nodes = tuple(d.nodes[i] for i in keep) + tuple(extra_nodes)
    return assemble(nodes, edges, d.inputs, d.outputs, vdims)


def _joinable(p, q) -> bool:
    """Can the two outside ends be joined by a bare wire?"""
    if p[0] == "n" or q[0] == "n":
        return True
    return p[0] != q[0]


def _inline_closed(d: Diagram, idx: int, inner: Diagram) -> Diagram:
    """Replace the leg-less node ``idx`` by the closed diagram ``inner``."""
    edges = [(("n", ("new", p[1]), p[2]), ("n", ("new", q[1]), q[2])) for p, q in inner.wires]
    return splice(d, [idx], extra_nodes=inner.nodes, extra_edges=edges)


def flip_box(d: Diagram, idx: int) -> Diagram:
    kind = d.nodes[idx]
    return replace_node(d, idx, kind.rotated(), rotation_leg_map(len(kind.outs), len(kind.ins)))


def _one(d: Diagram, coeff=1) -> list:
    return [(Fraction(coeff), d)]


# -------------------------------------------------------------- random bits


def _rand_dim(rng):
    return ["m", "n", "p"][int(rng.integers(0, 3))]


def _rand_box(rng, rows, cols, labels="ABC"):
    label = labels[int(rng.integers(0, len(labels)))] + f"_{rows}{cols}"
    return Diagram.single(Box(label, rows, cols))


def _zigzag(m: str, cup_first: bool) -> Diagram:
    """A snake-shaped identity on ``m``."""
    idm = Diagram.identity([m])
    if cup_first:
        bottom = compose_par(idm, Diagram.single(Cup(m)))
        top = compose_par(Diagram.single(Cap(m)), idm)
    else:
        bottom = compose_par(Diagram.single(Cup(m)), idm)
        top = compose_par(idm, Diagram.single(Cap(m)))
    return compose_seq(top, bottom)


# -------------------------------------------------------------------- snake


def _loop_pair(d: Diagram, p, q) -> bool:
    return p[0] == "n" and q[0] == "n" and p[1] == q[1] and isinstance(d.nodes[p[1]], (Cup, Cap))


def find_snake(d: Diagram):
    for i, kind in enumerate(d.nodes):
        if not isinstance(kind, (Cup, Cap)):
            continue
        p, q = d.partner[("n", i, 0)], d.partner[("n", i, 1)]
        if p == ("n", i, 1) or _loop_pair(d, p, q) or not _joinable(p, q):
            continue
        return i
    return None


def apply_snake(d: Diagram, i) -> list:
    return _one(splice(d, [i], joins=[(("n", i, 0), ("n", i, 1))]))


def sample_snake(rng) -> Diagram:
    m, n = _rand_dim(rng), _rand_dim(rng)
    z = _zigzag(m, bool(rng.integers(0, 2)))
    a = _rand_box(rng, m, n)
    if rng.integers(0, 2):
        return compose_seq(z, a)
    b = _rand_box(rng, n, m)
    return compose_seq(b, compose_seq(z, a))


# ------------------------------------------------------------- orientation


def _chain_candidates(k: int) -> list:
    """Forward flags that switch direction at most once."""
    out = []
    for s in range(k + 1):
        out.append([True] * s + [False] * (k - s))
        out.append([False] * s + [True] * (k - s))
    return out


def _bends(d: Diagram, chain, g) -> int:
    steps = chain.steps
    n = 0
    if steps[0][1] is not None and not chain.cyclic:
        n += port_polarity(d, chain.start) * (1 if g[0] else -1) == 1
    n += sum(1 for a, b in zip(g, g[1:]) if a != b)
    if chain.cyclic:
        n += g[-1] != g[0]
    elif steps[-1][2] is not None:
        n += port_polarity(d, chain.end) * (-1 if g[-1] else 1) == 1
    return n


def _seq_key(seq, cyclic: bool) -> tuple:
    cands = [tuple(seq), tuple(reversed(seq))]
    if cyclic:
        cands = [c[r:] + c[:r] for c in cands for r in range(len(c))]
    return min(cands)


def _score(d: Diagram, chain, current, g) -> tuple:
    transposes = []
    seq = []
    for (node, _, _), f, want in zip(chain.steps, current, g):
        kind = d.nodes[node]
        t = kind.transpose != (f != want)
        transposes.append(t)
        seq.append(kind_key(Box(kind.label, kind.rows, kind.cols, t, kind.inverse, kind.arg)))
    return (_bends(d, chain, g), sum(transposes), _seq_key(seq, chain.cyclic))


def find_orient(d: Diagram):
    """First chain whose box orientation is not bend-minimal (then transpose-minimal)."""
    for chain in chains(d):
        if not chain.steps or (chain.steps[0][1] is None and chain.steps[0][2] is None):
            continue
        current = forward_flags(d, chain)
        now = _score(d, chain, current, current)
        best, best_g = now, current
        for g in _chain_candidates(len(current)):
            sc = _score(d, chain, current, g)
            if sc < best:
                best, best_g = sc, g
        if best < now:
            return [node for (node, _, _), f, w in zip(chain.steps, current, best_g) if f != w]
    return None


def apply_orient(d: Diagram, flips) -> list:
    for idx in flips:
        d = flip_box(d, idx)
    return _one(d)


def sample_orient(rng) -> Diagram:
    m, n = _rand_dim(rng), _rand_dim(rng)
    # A drawn with its legs "backwards": a transposed box plugged in bent
    kind = Box(f"A_{m}{n}", m, n, transpose=True)
    d = Diagram((kind,), [(("out", 0), ("n", 0, 1)), (("in", 0), ("n", 0, 0))], [n], [m])
    if rng.integers(0, 2):
        d = compose_seq(_rand_box(rng, n, m, "BC"), d)
    return d


# ------------------------------------------------------------------- swaps


def find_swap(d: Diagram):
    for i, kind in enumerate(d.nodes):
        if not isinstance(kind, Swap):
            continue
        part = [d.partner[("n", i, leg)] for leg in range(4)]
        if any(p[0] == "n" and p[1] == i for p in part):
            continue
        if _joinable(part[2], part[1]) and _joinable(part[3], part[0]):
            return i
    return None


def apply_swap(d: Diagram, i) -> list:
    return _one(splice(d, [i], joins=[(("n", i, 2), ("n", i, 1)), (("n", i, 3), ("n", i, 0))]))


def sample_swap(rng) -> Diagram:
    m, n = _rand_dim(rng), _rand_dim(rng)
    s = Diagram.single(Swap(m, n))
    top = compose_par(_rand_box(rng, "p", n), _rand_box(rng, "p", m))
    bottom = compose_par(_rand_box(rng, m, "p"), _rand_box(rng, n, "p"))
    return compose_seq(top, compose_seq(s, bottom))


# ----------------------------------------------------------------- spiders


def find_spider_identity(d: Diagram):
    for i, kind in enumerate(d.nodes):
        if isinstance(kind, Spider) and kind.in_legs + kind.out_legs == 2:
            p, q = d.partner[("n", i, 0)], d.partner[("n", i, 1)]
            if p == ("n", i, 1) or _joinable(p, q):
                return i
    return None


def apply_spider_identity(d: Diagram, i) -> list:
    p = d.partner[("n", i, 0)]
    if p == ("n", i, 1):
        # a spider closed on itself is a loop of dimension dim
        dim = d.nodes[i].dim
        loop = assemble([Cup(dim), Cap(dim)], [(("n", 0, 0), ("n", 1, 0)), (("n", 0, 1), ("n", 1, 1))], [], [])
        extra = [(("n", ("new", 0), 0), ("n", ("new", 1), 0)), (("n", ("new", 0), 1), ("n", ("new", 1), 1))]
        return _one(splice(d, [i], extra_nodes=loop.nodes, extra_edges=extra))
    return _one(splice(d, [i], joins=[(("n", i, 0), ("n", i, 1))]))


def _spider_rebuild(d: Diagram, i, kept_out, kept_in, j=None, kept_out2=(), kept_in2=()):
    """Replace spider ``i`` (fused with ``j`` if given) by one spider on the kept legs."""
    dim = d.nodes[i].dim
    outs = [(i, leg) for leg in kept_out] + [(j, leg) for leg in kept_out2]
    ins = [(i, leg) for leg in kept_in] + [(j, leg) for leg in kept_in2]
    new = Spider(dim, len(ins), len(outs))
    mapping = {}
    for k, (node, leg) in enumerate(outs + ins):
        mapping[("n", node, leg)] = ("n", ("new", 0), k)
    drop = [i] if j is None else [i, j]
    return splice(d, drop, extra_nodes=[new], mapping=mapping)


def _split_legs(kind: Spider, skip):
    outs = [leg for leg in range(kind.out_legs) if leg not in skip]
    ins = [leg for leg in range(kind.out_legs, kind.out_legs + kind.in_legs) if leg not in skip]
    return outs, ins


def find_spider_loop(d: Diagram):
    for i, kind in enumerate(d.nodes):
        if not isinstance(kind, Spider) or kind.in_legs + kind.out_legs <= 2:
            continue
        for leg in range(kind.in_legs + kind.out_legs):
            p = d.partner[("n", i, leg)]
            if p[0] == "n" and p[1] == i:
                return i, leg, p[2]
    return None


def apply_spider_loop(d: Diagram, match) -> list:
    i, a, b = match
    outs, ins = _split_legs(d.nodes[i], {a, b})
    return _one(_spider_rebuild(d, i, outs, ins))


def find_spider_fusion(d: Diagram):
    for p, q in sorted(d.wires):
        if p[0] != "n" or q[0] != "n" or p[1] == q[1]:
            continue
        a, b = d.nodes[p[1]], d.nodes[q[1]]
        if isinstance(a, Spider) and isinstance(b, Spider) and a.dim == b.dim:
            return p, q
    return None


def apply_spider_fusion(d: Diagram, match) -> list:
    p, q = match
    out1, in1 = _split_legs(d.nodes[p[1]], {p[2]})
    out2, in2 = _split_legs(d.nodes[q[1]], {q[2]})
    return _one(_spider_rebuild(d, p[1], out1, in1, q[1], out2, in2))


def _sample_hadamard(rng) -> Diagram:
    m, n = _rand_dim(rng), _rand_dim(rng)
    top = Diagram.single(Spider(m, 2, 1))
    bottom = Diagram.single(Spider(n, 1, 2))
    mid = compose_par(_rand_box(rng, m, n, "AB"), _rand_box(rng, m, n, "CD"))
    return compose_seq(top, compose_seq(mid, bottom))


def sample_spider_identity(rng) -> Diagram:
    m, n = _rand_dim(rng), _rand_dim(rng)
    return compose_seq(Diagram.single(Spider(m, 1, 1)), _rand_box(rng, m, n))


def sample_spider_loop(rng) -> Diagram:
    m = _rand_dim(rng)
    s = Diagram.single(Spider(m, 2, 2))
    a = _rand_box(rng, m, m)
    # feed output 1 back into input 1
    looped = Diagram(s.nodes, [(("out", 0), ("n", 0, 0)), (("n", 0, 1), ("n", 0, 3)), (("in", 0), ("n", 0, 2))],
                     [m], [m])
    return compose_seq(a, looped)


def sample_spider_fusion(rng) -> Diagram:
    m = _rand_dim(rng)
    d = compose_seq(Diagram.single(Spider(m, 2, 1)), compose_par(Diagram.single(Spider(m, 1, 1)),
                                                                 _rand_box(rng, m, m)))
    return compose_seq(d, Diagram.single(Spider(m, 1, 2)))


# ------------------------------------------------------------ scalar folds


def _single(s: DiagramSum):
    return s.terms[0] if len(s.terms) == 1 else None


def _exact_sqrt(c: Fraction) -> Optional[Fraction]:
    if c < 0:
        return None
    rn, rd = math.isqrt(c.numerator), math.isqrt(c.denominator)
    if rn * rn == c.numerator and rd * rd == c.denominator:
        return Fraction(rn, rd)
    return None


def find_scalar_fold(d: Diagram):
    for i, kind in enumerate(d.nodes):
        if not isinstance(kind, ScalarFn):
            continue
        s = kind.arg
        if kind.name == "pow" and kind.k in (0, 1):
            return i, "trivial_power"
        if s.is_zero:
            if kind.name == "sqrt" or kind.k > 0:
                return i, "zero"
            continue
        one = _single(s)
        if one is None:
            continue
        c, inner = one
        if c != 1 and (kind.name == "pow" or _exact_sqrt(c) is not None):
            return i, "coefficient"
        if c == 1 and not inner.nodes:
            return i, "constant"
        if kind.name == "pow" and len(inner.nodes) == 1 and isinstance(inner.nodes[0], ScalarFn):
            sub = inner.nodes[0]
            if sub.name == "pow" or kind.k % 2 == 0:
                return i, "nested"
    return None


def apply_scalar_fold(d: Diagram, match) -> list:
    i, how = match
    kind = d.nodes[i]
    if how == "trivial_power" and kind.k == 0 or how == "constant":
        return _one(splice(d, [i]))
    if how == "trivial_power":
        return [(c, _inline_closed(d, i, inner)) for c, inner in kind.arg.terms]
    if how == "zero":
        return []
    c, inner = kind.arg.terms[0]
    if how == "coefficient":
        new = ScalarFn(kind.name, DiagramSum.of(inner), kind.k)
        factor = c ** kind.k if kind.name == "pow" else _exact_sqrt(c)
        return _one(replace_node(d, i, new, []), factor)
    sub = inner.nodes[0]
    if sub.name == "pow":
        new = ScalarFn("pow", sub.arg, sub.k * kind.k)
    else:
        new = ScalarFn("pow", sub.arg, kind.k // 2)
    return _one(replace_node(d, i, new, []))


def _rand_closed(rng) -> DiagramSum:
    m = _rand_dim(rng)
    return DiagramSum.of(close_trace(_rand_box(rng, m, m)))


def sample_scalar_fold(rng) -> Diagram:
    u = _rand_closed(rng)
    choice = int(rng.integers(0, 5))
    if choice == 0:
        f = ScalarFn("pow", u + _rand_closed(rng), 1)
    elif choice == 1:
        f = ScalarFn("pow", u.scale(Fraction(int(rng.integers(2, 5)))), int(rng.integers(-2, 3)))
    elif choice == 2:
        f = ScalarFn("sqrt", u.scale(4))
    elif choice == 3:
        f = ScalarFn("pow", DiagramSum.of(Diagram.single(ScalarFn("pow", u, 3))), -1)
    else:
        f = ScalarFn("pow", u, 0)
    return compose_par(Diagram.single(f), _rand_box(rng, "m", "n"))


def _power_base(kind: ScalarFn):
    if kind.name == "sqrt":
        return DiagramSum.of(Diagram.single(kind)), 1
    return kind.arg, kind.k


def find_power_merge(d: Diagram):
    fns = [i for i, kind in enumerate(d.nodes) if isinstance(kind, ScalarFn)]
    for a_pos, i in enumerate(fns):
        bi, _ = _power_base(d.nodes[i])
        for j in fns[a_pos + 1:]:
            bj, _ = _power_base(d.nodes[j])
            if sums_equal(bi, bj):
                return i, j
    return None


def apply_power_merge(d: Diagram, match) -> list:
    i, j = match
    base, ki = _power_base(d.nodes[i])
    _, kj = _power_base(d.nodes[j])
    d = replace_node(d, i, ScalarFn("pow", base, ki + kj), [])
    return _one(splice(d, [j]))


def sample_power_merge(rng) -> Diagram:
    u = _rand_closed(rng)
    s = ScalarFn("sqrt", u)
    a = ScalarFn("pow", DiagramSum.of(Diagram.single(s)), int(rng.integers(-2, 2)))
    return compose_par(Diagram.single(a), Diagram.single(s))


# ------------------------------------------------------- compound inverses


def find_inverse_fold(d: Diagram):
    for i, kind in enumerate(d.nodes):
        if not isinstance(kind, Box) or kind.arg is None:
            continue
        one = _single(kind.arg)
        if one is None:
            continue
        c, inner = one
        if c != 1:
            return i, "coefficient"
        if len(inner.nodes) == 1 and isinstance(inner.nodes[0], Box) and inner.nodes[0].arg is None:
            return i, "atomic"
    return None


def apply_inverse_fold(d: Diagram, match) -> list:
    i, how = match
    kind = d.nodes[i]
    c, inner = kind.arg.terms[0]
    legs = list(range(len(legs_of(kind))))
    if how == "coefficient":
        new = Box(kind.label, kind.rows, kind.cols, kind.transpose, True, DiagramSum.of(inner))
        return _one(replace_node(d, i, new, legs), 1 / c)
    b = inner.nodes[0]
    flipped = inner.partner[("out", 0)] != ("n", 0, b.row_leg)
    new = Box(b.label, kind.rows, kind.cols, kind.transpose != flipped, not b.inverse)
    return _one(replace_node(d, i, new, legs))


def sample_inverse_fold(rng) -> Diagram:
    m = _rand_dim(rng)
    a = DiagramSum.of(_rand_box(rng, m, m))
    if rng.integers(0, 2):
        a = a.scale(Fraction(int(rng.integers(2, 5)), int(rng.integers(1, 4))))
    else:
        a = sum_rotate(a)
    return compose_seq(Diagram.single(Box("", m, m, inverse=True, arg=a)), _rand_box(rng, m, "n"))


# ---------------------------------------------------------------- registry


SNAKE = RewriteRule("snake", find_snake, apply_snake, sample_snake,
                    "straighten a cup/cap bend by joining its two neighbours")
ORIENT = RewriteRule("orient", find_orient, apply_orient, sample_orient,
                     "slide boxes round bends: bend-minimal, then transpose-minimal chains")
SWAP = RewriteRule("swap", find_swap, apply_swap, sample_swap, "replace a swap by crossed wires")
SPIDER_IDENTITY = RewriteRule("spider_identity", find_spider_identity, apply_spider_identity,
                              sample_spider_identity, "a two-legged spider is a wire")
SPIDER_LOOP = RewriteRule("spider_loop", find_spider_loop, apply_spider_loop, sample_spider_loop,
                          "drop a spider's self-loop (spiders are special)")
SPIDER_FUSION = RewriteRule("spider_fusion", find_spider_fusion, apply_spider_fusion,
                            sample_spider_fusion, "fuse two wired spiders of the same dimension")
SCALAR_FOLD = RewriteRule("scalar_fold", find_scalar_fold, apply_scalar_fold, sample_scalar_fold,
                          "constant folding and coefficient extraction for sqrt/pow")
POWER_MERGE = RewriteRule("power_merge", find_power_merge, apply_power_merge, sample_power_merge,
                          "u^a u^b = u^(a+b)")
INVERSE_FOLD = RewriteRule("inverse_fold", find_inverse_fold, apply_inverse_fold, sample_inverse_fold,
                           "inv(c Y) = inv(Y)/c; inverse of a single box is a modifier")

#: Fixed application order.
RULES = (SNAKE, ORIENT, SWAP, SPIDER_FUSION, SPIDER_LOOP, SPIDER_IDENTITY, SCALAR_FOLD, POWER_MERGE,
         INVERSE_FOLD)

