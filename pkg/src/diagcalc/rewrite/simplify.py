"""Normal forms: apply the rules to a fixpoint, then merge equal terms."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from ..core.diagram import Box, Diagram, DiagramSum, ScalarFn, replace_node, legs_of
from ..core.equality import diagram_hash, structural_equal
from ..core.serialize import serialize
from .rules import RULES


class RewriteLimit(RuntimeError):
    """The step budget ran out before a normal form was reached."""


@dataclass
class Trace:
    steps: list = field(default_factory=list)

    def record(self, rule):
        self.steps.append(rule.name)


def size(d: Diagram) -> int:
    """Node count including nodes inside scalar and inverse arguments."""
    n = 0
    for kind in d.nodes:
        n += 1
        arg = getattr(kind, "arg", None)
        if arg is not None:
            n += sum(size(t) for _, t in arg.terms)
    return n


def _normalize_args(d: Diagram, cache: dict, trace, budget) -> Diagram:
    for i, kind in enumerate(d.nodes):
        arg = getattr(kind, "arg", None)
        if arg is None:
            continue
        new_arg = _simplify(arg, cache, trace, budget)
        if new_arg is arg:
            continue
        if isinstance(kind, ScalarFn):
            new = ScalarFn(kind.name, new_arg, kind.k)
        else:
            new = Box(kind.label, kind.rows, kind.cols, kind.transpose, kind.inverse, new_arg)
        d = replace_node(d, i, new, list(range(len(legs_of(kind)))))
    return d


def normalize_term(d: Diagram, rules=RULES, cache=None, trace=None, budget=None) -> list:
    """Rewrite one diagram to normal form; returns ``[(coeff, diagram)]``."""
    cache = {} if cache is None else cache
    budget = budget if budget is not None else [max(200, 10 * size(d) + 50)]
    done = []
    work = [(Fraction(1), _normalize_args(d, cache, trace, budget))]
    while work:
        c, cur = work.pop()
        for rule in rules:
            match = rule.find(cur)
            if match is None:
                continue
            budget[0] -= 1
            if budget[0] < 0:
                raise RewriteLimit("rewriting did not terminate within the step budget")
            if trace is not None:
                trace.record(rule)
            for c2, nxt in rule.apply(cur, match):
                work.append((c * c2, nxt))
            break
        else:
            done.append((c, cur))
    return done


def merge_terms(terms) -> list:
    """Add coefficients of structurally equal terms and drop zeros."""
    groups: list = []
    by_hash: dict = {}
    for c, d in terms:
        h = diagram_hash(d)
        for g in by_hash.get(h, []):
            if structural_equal(groups[g][1], d):
                groups[g][0] += c
                break
        else:
            by_hash.setdefault(h, []).append(len(groups))
            groups.append([Fraction(c), d])
    return [(c, d) for c, d in groups if c != 0]


def _simplify(s: DiagramSum, cache, trace, budget) -> DiagramSum:
    key = id(s)
    hit = cache.get(key)
    if hit is not None and hit[0] is s:
        return hit[1]
    terms = []
    for c, d in s.terms:
        for c2, d2 in normalize_term(d, cache=cache, trace=trace, budget=budget):
            terms.append((c * c2, d2))
    merged = merge_terms(terms)
    merged.sort(key=lambda t: (serialize(t[1]), t[0]))
    out = DiagramSum(tuple(merged), s.inputs, s.outputs)
    if out == s:
        out = s
    cache[key] = (s, out)
    return out


def simplify(s, trace: Trace = None, max_steps: int = None) -> DiagramSum:
    """Normal form of a diagram sum (a bare diagram is treated as one term).

    ``max_steps`` bounds the total number of rule applications; the default
    is ten per node plus slack.
    """
    if isinstance(s, Diagram):
        s = DiagramSum.of(s)
    if max_steps is None:
        max_steps = max(200, 10 * sum(size(d) for _, d in s.terms) + 50)
    return _simplify(s, {}, trace, [max_steps])


def simplify_with_trace(s):
    trace = Trace()
    return simplify(s, trace), trace.steps


def is_normal(s: DiagramSum, rules=RULES) -> bool:
    return all(rule.find(d) is None for _, d in s.terms for rule in rules)
