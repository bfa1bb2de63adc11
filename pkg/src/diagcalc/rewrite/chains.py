"""Maximal chains of boxes and wire polarity.

Boxes have at most two legs, so the boxes of a diagram split into maximal
chains: paths that end on non-box ports (boundary, spider, cup, ...) or on
*dead* ends (the missing side of a vector), and closed cycles.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..core.diagram import Box, Diagram, Spider


def port_polarity(d: Diagram, port) -> int:
    """+1 for ports that feed upwards (node outputs, input boundary), -1 for sinks, 0 neutral."""
    if port is None:
        return 0
    if port[0] == "in":
        return 1
    if port[0] == "out":
        return -1
    kind = d.nodes[port[1]]
    if isinstance(kind, Spider):
        return 0
    return 1 if port[2] < len(kind.outs) else -1


def is_bent(d: Diagram, p, q) -> bool:
    return port_polarity(d, p) * port_polarity(d, q) == 1


def bend_count(d: Diagram) -> int:
    return sum(1 for p, q in d.wires if is_bent(d, p, q))


def _other_leg(kind: Box, leg):
    n = len(kind.outs) + len(kind.ins)
    if leg is None:
        return 0
    if n == 1:
        return None
    return 1 - leg


@dataclass
class Chain:
    """Boxes in walking order.

    ``steps`` holds ``(node, enter_leg, exit_leg)``; a ``None`` leg is a dead
    side.  ``start``/``end`` are the outside ports at either end (``None`` for
    dead ends); both are ``None`` and ``cyclic`` is set for closed loops.
    """

    steps: list
    start: Optional[tuple]
    end: Optional[tuple]
    cyclic: bool = False

    @property
    def nodes(self):
        return [s[0] for s in self.steps]


def _is_box_port(d: Diagram, port) -> bool:
    return port is not None and port[0] == "n" and isinstance(d.nodes[port[1]], Box)


def walk_from(d: Diagram, node: int, enter, is_atom=_is_box_port) -> tuple:
    """Walk forward from ``node`` entered through leg ``enter``; returns (steps, end port)."""
    steps = []
    cur = node
    first = (node, enter)
    while True:
        exit_leg = _other_leg(d.nodes[cur], enter)
        steps.append((cur, enter, exit_leg))
        if exit_leg is None:
            return steps, None
        q = d.partner[("n", cur, exit_leg)]
        if not is_atom(d, q):
            return steps, q
        cur, enter = q[1], q[2]
        if (cur, enter) == first:
            return steps, "cycle"


def chains(d: Diagram) -> list:
    """Every maximal box chain of ``d``, each listed once."""
    seen = set()
    out = []
    for i, kind in enumerate(d.nodes):
        if not isinstance(kind, Box) or i in seen:
            continue
        n_legs = len(kind.outs) + len(kind.ins)
        if n_legs == 0:
            seen.add(i)
            out.append(Chain([(i, None, None)], None, None))
            continue
        # look backwards (out through leg 0) for an end of the chain
        cur, leg = i, 0 if n_legs == 2 else None
        start_port = None
        cyclic = False
        if leg is not None:
            while True:
                q = d.partner[("n", cur, leg)]
                if not _is_box_port(d, q):
                    start_port = q
                    break
                nxt = q[1]
                back = _other_leg(d.nodes[nxt], q[2])
                cur, leg = nxt, q[2]
                if back is None:
                    # dead end: enter this vector box from its missing side
                    leg = None
                    break
                if nxt == i:
                    cyclic = True
                    break
                leg = back
        if cyclic:
            steps, _ = walk_from(d, i, 1)
            out.append(Chain(steps, None, None, cyclic=True))
        elif leg is None and start_port is None:
            steps, end = walk_from(d, cur, None)
            out.append(Chain(steps, None, end))
        else:
            steps, end = walk_from(d, cur, leg)
            out.append(Chain(steps, start_port, end))
        seen.update(out[-1].nodes)
    return out


def forward_flags(d: Diagram, chain: Chain) -> list:
    """Is each box read top-down (entered through an output leg) along the walk?"""
    flags = []
    for node, enter, exit_leg in chain.steps:
        kind = d.nodes[node]
        if enter is not None:
            flags.append(enter < len(kind.outs))
        else:
            flags.append(exit_leg is not None and exit_leg >= len(kind.outs))
    return flags
