"""Text renderings of diagram sums: ASCII drawings, Graphviz DOT and JSON.

The ASCII layout is layered.  Nodes sit in rows, with outputs above and
inputs below, and wires are routed in the gaps between rows.  A wire that
spans several rows passes through them as a plain ``|`` lane.  Cups are
drawn ``\\_/`` and caps ``/^\\``.
"""
from __future__ import annotations

from ..core.diagram import Box, Cap, Cup, Diagram, DiagramSum, ScalarFn, Spider, Swap
from ..core.serialize import serialize
from ..rewrite.readback import NotExpressible, expr_str, fmt_coeff

FORMATS = ("ascii", "dot", "json")


def node_label(kind) -> str:
    if isinstance(kind, Box):
        if kind.arg is not None:
            try:
                base = f"inv({expr_str(kind.arg)})"
            except NotExpressible:
                base = "inv(...)"
        else:
            base = f"inv({kind.label})" if kind.inverse else kind.label
        return base + ("'" if kind.transpose else "")
    if isinstance(kind, Cup):
        return f"cup({kind.dim})"
    if isinstance(kind, Cap):
        return f"cap({kind.dim})"
    if isinstance(kind, Swap):
        return "swap"
    if isinstance(kind, Spider):
        return f"*{kind.dim}"
    if isinstance(kind, ScalarFn):
        try:
            inner = expr_str(kind.arg)
        except NotExpressible:
            inner = "..."
        return f"sqrt({inner})" if kind.name == "sqrt" else f"({inner})^{kind.k}"
    raise TypeError(kind)


# -------------------------------------------------------------------- ascii


def _layers(d: Diagram) -> list:
    """Layer per node: straight wires point upwards, back edges are dropped."""
    n = len(d.nodes)
    up = {i: [] for i in range(n)}
    for p, q in d.wires:
        for a, b in ((p, q), (q, p)):
            if a[0] == "n" and b[0] == "n" and a[1] != b[1]:
                ka, kb = d.nodes[a[1]], d.nodes[b[1]]
                if a[2] < len(ka.outs) and b[2] >= len(kb.outs):
                    up[a[1]].append(b[1])
    order, state = [], {}

    def visit(i):
        state[i] = 1
        for j in sorted(up[i]):
            if state.get(j) is None:
                visit(j)
        state[i] = 2
        order.append(i)

    for i in range(n):
        if i not in state:
            visit(i)
    order.reverse()
    pos = {v: k for k, v in enumerate(order)}
    layer = [0] * n
    for i in order:
        for j in up[i]:
            if pos[j] > pos[i]:
                layer[j] = max(layer[j], layer[i] + 1)
    return layer


def _attach(d: Diagram, port, layer, top_gap):
    """(gap index, comes-from-below) for a port."""
    if port[0] == "in":
        return 0, True
    if port[0] == "out":
        return top_gap, False
    kind = d.nodes[port[1]]
    if port[2] < len(kind.outs):
        return layer[port[1]] + 1, True
    return layer[port[1]], False


class _Item:
    def __init__(self, key, text, tops, bottoms, kind=None):
        self.key = key
        self.text = text
        self.kind = kind
        self.tops = tops  # number of ports on top
        self.bottoms = bottoms
        self.x = 0
        self.width = len(text)
        if kind is not None and not isinstance(kind, (Cup, Cap)):
            self.width = max(len(text) + 2, 2 * max(tops, bottoms, 1) + 1)

    def port_x(self, top: bool, i: int) -> int:
        k = self.tops if top else self.bottoms
        if isinstance(self.kind, (Cup, Cap)):
            return self.x + 2 * i
        if self.kind is None:
            return self.x
        span = self.width - 2
        step = span // max(k, 1)
        return self.x + 1 + step * i + step // 2

    def glyph(self) -> str:
        if self.kind is None:
            return self.text
        if isinstance(self.kind, Cup):
            return "\\_/"
        if isinstance(self.kind, Cap):
            return "/^\\"
        return "[" + self.text.center(self.width - 2) + "]"


def ascii_diagram(d: Diagram) -> str:
    layer = _layers(d)
    n_layers = max(layer, default=-1) + 1
    top_gap = n_layers
    rows = [[] for _ in range(n_layers)]
    items = {}
    for i, kind in enumerate(d.nodes):
        it = _Item(("n", i), node_label(kind), len(kind.outs), len(kind.ins), kind)
        rows[layer[i]].append(it)
        items[("n", i)] = it
    top = [_Item(("out", k), dim, 0, 1) for k, dim in enumerate(d.outputs)]
    bottom = [_Item(("in", k), dim, 1, 0) for k, dim in enumerate(d.inputs)]
    # wire segments: each wire becomes a path of gap connections through dummy lanes
    gap_links = [[] for _ in range(top_gap + 1)]  # (end_a, end_b) with end = (item, top?, leg index)

    def end_of(port):
        if port[0] == "in":
            return (bottom[port[1]], True, 0)
        if port[0] == "out":
            return (top[port[1]], False, 0)
        kind = d.nodes[port[1]]
        it = items[("n", port[1])]
        if port[2] < len(kind.outs):
            return (it, True, port[2])
        return (it, False, port[2] - len(kind.outs))

    for w, (p, q) in enumerate(sorted(d.wires)):
        (gp, _), (gq, _) = _attach(d, p, layer, top_gap), _attach(d, q, layer, top_gap)
        if gp > gq:
            p, q, gp, gq = q, p, gq, gp
        cur = end_of(p)
        for g in range(gp, gq):
            dummy = _Item(("d", w, g), "|", 1, 1)
            rows[g].append(dummy)
            gap_links[g].append((cur, (dummy, False, 0)))
            cur = (dummy, True, 0)
        gap_links[gq].append((cur, end_of(q)))
    # horizontal placement: barycentre of connected ports, kept in order, no overlaps
    def own_offset(end):
        it = end[0]
        return it.port_x(end[1], end[2]) - it.x

    def place(line, links, keep_order=False):
        want = {}
        for a, b in links:
            for e, other in ((a, b), (b, a)):
                want.setdefault(id(e[0]), []).append(other[0].port_x(other[1], other[2]) - own_offset(e))

        def target(it):
            xs = want.get(id(it), [])
            return sum(xs) / len(xs) if xs else 0.0

        if not keep_order:
            line.sort(key=lambda it: (target(it), str(it.key)))
        x = 0
        for it in line:
            it.x = max(x, int(round(target(it))))
            x = it.x + it.width + 2

    for _ in range(3):
        place(bottom, gap_links[0], keep_order=True)
        for g in range(n_layers):
            place(rows[g], gap_links[g] + gap_links[g + 1])
        place(top, gap_links[top_gap], keep_order=True)
    width = max([it.x + it.width for r in rows + [top, bottom] for it in r] + [1]) + 1
    out_lines = []

    def draw_gap(links):
        segs = []
        for a, b in links:
            xa, xb = a[0].port_x(a[1], a[2]), b[0].port_x(b[1], b[2])
            segs.append((xa, a[1], xb, b[1]))
        # a[1] True: that end is on the top of an item below the gap (wire goes up from it)
        tracks = []
        assigned = []
        for xa, up_a, xb, up_b in segs:
            if xa == xb and up_a != up_b:
                assigned.append(None)
                continue
            lo, hi = min(xa, xb), max(xa, xb)
            for t, used in enumerate(tracks):
                if all(hi < u_lo - 1 or lo > u_hi + 1 for u_lo, u_hi in used):
                    used.append((lo, hi))
                    assigned.append(t)
                    break
            else:
                tracks.append([(lo, hi)])
                assigned.append(len(tracks) - 1)
        h = max(len(tracks), 0) + 1
        grid = [[" "] * width for _ in range(h)]
        for (xa, up_a, xb, up_b), t in zip(segs, assigned):
            if t is None:
                for r in range(h):
                    grid[r][xa] = "|"
                continue
            row = t
            lo, hi = min(xa, xb), max(xa, xb)
            for x in range(lo, hi + 1):
                if grid[row][x] == " ":
                    grid[row][x] = "-"
            for x, from_below in ((xa, up_a), (xb, up_b)):
                span = range(row + 1, h) if from_below else range(0, row)
                for r in span:
                    grid[r][x] = "|"
                grid[row][x] = "+"
        return ["".join(r).rstrip() for r in grid]

    def draw_row(line):
        buf = [" "] * width
        for it in line:
            for k, ch in enumerate(it.glyph()):
                buf[it.x + k] = ch
        return "".join(buf).rstrip()

    out_lines.append(draw_row(top))
    for g in range(top_gap, -1, -1):
        out_lines += draw_gap(gap_links[g])
        if g > 0:
            out_lines.append(draw_row(rows[g - 1]))
    out_lines.append(draw_row(bottom))
    return "\n".join(line for line in out_lines)


def render_ascii(s) -> str:
    if isinstance(s, Diagram):
        return ascii_diagram(s)
    if s.is_zero:
        return "0"
    if len(s.terms) == 1 and s.terms[0][0] == 1:
        return ascii_diagram(s.terms[0][1])
    blocks = []
    for k, (c, d) in enumerate(s.terms, start=1):
        blocks.append(f"term {k}: coeff {fmt_coeff(c)}\n{ascii_diagram(d)}")
    return "\n\n".join(blocks)


# ---------------------------------------------------------------------- dot


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def dot_diagram(d: Diagram, name: str, coeff="1") -> str:
    lines = [f"graph {name} {{", f"  label={_dot_quote(coeff)};", "  rankdir=BT;", "  node [fontname=monospace];"]
    for i, kind in enumerate(d.nodes):
        shape = "box" if isinstance(kind, (Box, ScalarFn)) else "circle" if isinstance(kind, Spider) else "plain"
        lines.append(f"  n{i} [label={_dot_quote(node_label(kind))}, shape={shape}];")
    for k, dim in enumerate(d.inputs):
        lines.append(f"  in{k} [label={_dot_quote(dim)}, shape=plaintext];")
    for k, dim in enumerate(d.outputs):
        lines.append(f"  out{k} [label={_dot_quote(dim)}, shape=plaintext];")
    if d.inputs:
        lines.append("  { rank=min; " + " ".join(f"in{k};" for k in range(len(d.inputs))) + " }")
    if d.outputs:
        lines.append("  { rank=max; " + " ".join(f"out{k};" for k in range(len(d.outputs))) + " }")

    def ref(port):
        return f"n{port[1]}" if port[0] == "n" else f"{port[0]}{port[1]}"

    for p, q in sorted(d.wires):
        lines.append(f"  {ref(p)} -- {ref(q)} [label={_dot_quote(d.port_dim(p))}];")
    lines.append("}")
    return "\n".join(lines)


def render_dot(s) -> str:
    if isinstance(s, Diagram):
        s = DiagramSum.of(s)
    if s.is_zero:
        return "graph term0 {\n  label=\"0\";\n}"
    return "\n".join(dot_diagram(d, f"term{k}", fmt_coeff(c)) for k, (c, d) in enumerate(s.terms))


def render(s, fmt: str = "ascii") -> str:
    if fmt == "ascii":
        return render_ascii(s)
    if fmt == "dot":
        return render_dot(s)
    if fmt == "json":
        return serialize(s)
    raise ValueError(f"unknown format {fmt!r}; use one of {', '.join(FORMATS)}")
