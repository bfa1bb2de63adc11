"""Structural equality of diagrams: port-graph isomorphism fixed on the boundary."""
from __future__ import annotations

from functools import lru_cache

import networkx as nx
from networkx.algorithms import isomorphism

from .diagram import Box, Cap, Cup, Diagram, DiagramSum, ScalarFn, Spider, Swap


def sum_signature(s: DiagramSum) -> str:
    """Isomorphism-invariant fingerprint of a sum (multiset of term hashes)."""
    parts = sorted(f"{c}|{diagram_hash(d)}" for c, d in s.terms)
    return f"{list(s.inputs)}>{list(s.outputs)}:" + ";".join(parts)


def kind_key(kind) -> str:
    if isinstance(kind, Box):
        key = f"box:{kind.label}:{kind.rows}:{kind.cols}:{kind.inverse}:{kind.transpose}"
        if kind.arg is not None:
            key += ":" + sum_signature(kind.arg)
        return key
    if isinstance(kind, Cup):
        return f"cup:{kind.dim}"
    if isinstance(kind, Cap):
        return f"cap:{kind.dim}"
    if isinstance(kind, Swap):
        return f"swap:{kind.first}:{kind.second}"
    if isinstance(kind, Spider):
        # spiders are symmetric in all legs; arity is visible through degree
        return f"spider:{kind.dim}"
    if isinstance(kind, ScalarFn):
        return f"fn:{kind.name}:{kind.k}:" + sum_signature(kind.arg)
    raise TypeError(kind)


def _leg_role(kind, leg: int) -> str:
    if isinstance(kind, (Cup, Cap, Spider)):
        return "leg"
    if isinstance(kind, Swap):
        return f"leg{leg}"
    return "out" if leg < len(kind.outs) else "in"


def port_graph(d: Diagram) -> nx.Graph:
    g = nx.Graph()
    for i, kind in enumerate(d.nodes):
        g.add_node(("node", i), key=kind_key(kind), kind=kind)
        for leg in range(len(kind.outs) + len(kind.ins)):
            g.add_node(("n", i, leg), key="port:" + _leg_role(kind, leg))
            g.add_edge(("node", i), ("n", i, leg))
    for pos in range(len(d.inputs)):
        g.add_node(("in", pos), key=f"in:{pos}")
    for pos in range(len(d.outputs)):
        g.add_node(("out", pos), key=f"out:{pos}")
    for p, q in d.wires:
        g.add_edge(p, q)
    return g


@lru_cache(maxsize=4096)
def _hash(d: Diagram) -> str:
    return nx.weisfeiler_lehman_graph_hash(port_graph(d), node_attr="key", iterations=4)


def diagram_hash(d: Diagram) -> str:
    return _hash(d)


def _node_match(a, b) -> bool:
    if a["key"] != b["key"]:
        return False
    ka, kb = a.get("kind"), b.get("kind")
    if isinstance(ka, ScalarFn):
        return sums_equal(ka.arg, kb.arg)
    if isinstance(ka, Box) and ka.arg is not None:
        return sums_equal(ka.arg, kb.arg)
    return True


def structural_equal(a: Diagram, b: Diagram) -> bool:
    """True iff some node bijection preserves kinds, wiring and boundary order."""
    if a is b or a == b:
        return True
    if (a.inputs, a.outputs) != (b.inputs, b.outputs) or len(a.nodes) != len(b.nodes):
        return False
    if len(a.wires) != len(b.wires) or _hash(a) != _hash(b):
        return False
    matcher = isomorphism.GraphMatcher(port_graph(a), port_graph(b), node_match=_node_match)
    return matcher.is_isomorphic()


def sums_equal(a: DiagramSum, b: DiagramSum) -> bool:
    """Equality of sums as multisets of (coefficient, diagram up to isomorphism)."""
    if (a.inputs, a.outputs) != (b.inputs, b.outputs) or len(a) != len(b):
        return False
    remaining = list(b.terms)
    for c, d in a.terms:
        for j, (c2, d2) in enumerate(remaining):
            if c == c2 and structural_equal(d, d2):
                del remaining[j]
                break
        else:
            return False
    return True
