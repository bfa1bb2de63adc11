"""JSON documents for diagrams and diagram sums.

Diagram document::

    {"dims": [...], "nodes": [{"id", "kind", "params"}], "wires": [[end, end], ...],
     "in": [...], "out": [...]}

with ``end`` either ``{"node": id, "leg": k}`` or ``{"boundary": "in"|"out", "pos": k}``.
A sum document replaces ``nodes``/``wires`` by ``terms``, a list of
``{"coeff": {"num", "den"}, "diagram": <diagram document>}``.
Unknown fields are rejected.
"""
from __future__ import annotations

import json
from fractions import Fraction

from .diagram import Box, Cap, Cup, Diagram, DiagramSum, ScalarFn, Spider, Swap
from .errors import DiagramError, ParseError

_DIAGRAM_FIELDS = {"dims", "nodes", "wires", "in", "out"}
_SUM_FIELDS = {"dims", "terms", "in", "out"}


def _dims_of_sum(s: DiagramSum, acc: set):
    acc.update(s.inputs)
    acc.update(s.outputs)
    for _, d in s.terms:
        _dims_of_diagram(d, acc)


def _dims_of_diagram(d: Diagram, acc: set):
    acc.update(d.inputs)
    acc.update(d.outputs)
    for kind in d.nodes:
        acc.update(x for x in kind.outs + kind.ins if x)
        if isinstance(kind, Box):
            acc.update(x for x in (kind.rows, kind.cols) if x)
        if getattr(kind, "arg", None) is not None:
            _dims_of_sum(kind.arg, acc)


def _node_doc(i, kind) -> dict:
    if isinstance(kind, Box):
        params = {"label": kind.label, "rows": kind.rows, "cols": kind.cols, "modifiers": list(kind.modifiers)}
        if kind.arg is not None:
            params["arg"] = sum_to_doc(kind.arg)
        return {"id": i, "kind": "box", "params": params}
    if isinstance(kind, Cup):
        return {"id": i, "kind": "cup", "params": {"dim": kind.dim}}
    if isinstance(kind, Cap):
        return {"id": i, "kind": "cap", "params": {"dim": kind.dim}}
    if isinstance(kind, Swap):
        return {"id": i, "kind": "swap", "params": {"first": kind.first, "second": kind.second}}
    if isinstance(kind, Spider):
        return {"id": i, "kind": "spider",
                "params": {"dim": kind.dim, "in_legs": kind.in_legs, "out_legs": kind.out_legs}}
    if isinstance(kind, ScalarFn):
        return {"id": i, "kind": "scalar_fn",
                "params": {"name": kind.name, "k": kind.k, "arg": sum_to_doc(kind.arg)}}
    raise TypeError(kind)


def _end_doc(port) -> dict:
    if port[0] == "n":
        return {"node": port[1], "leg": port[2]}
    return {"boundary": port[0], "pos": port[1]}


def diagram_to_doc(d: Diagram) -> dict:
    dims = set()
    _dims_of_diagram(d, dims)
    return {
        "dims": sorted(dims),
        "nodes": [_node_doc(i, k) for i, k in enumerate(d.nodes)],
        "wires": [[_end_doc(p), _end_doc(q)] for p, q in sorted(d.wires)],
        "in": list(d.inputs),
        "out": list(d.outputs),
    }


def sum_to_doc(s: DiagramSum) -> dict:
    dims = set()
    _dims_of_sum(s, dims)
    return {
        "dims": sorted(dims),
        "terms": [
            {"coeff": {"num": c.numerator, "den": c.denominator}, "diagram": diagram_to_doc(d)}
            for c, d in s.terms
        ],
        "in": list(s.inputs),
        "out": list(s.outputs),
    }


def serialize(s) -> str:
    """Text form of a :class:`DiagramSum` (or a bare :class:`Diagram`)."""
    doc = sum_to_doc(s) if isinstance(s, DiagramSum) else diagram_to_doc(s)
    return json.dumps(doc, indent=1, sort_keys=True)


# ------------------------------------------------------------------ parsing


def _fields(obj, allowed, required, loc):
    if not isinstance(obj, dict):
        raise ParseError("expected an object", loc)
    extra = set(obj) - set(allowed)
    if extra:
        raise ParseError(f"unexpected fields {sorted(extra)}", loc)
    missing = set(required) - set(obj)
    if missing:
        raise ParseError(f"missing fields {sorted(missing)}", loc)


def _dim(value, dims, loc, optional=False):
    if value is None and optional:
        return None
    if not isinstance(value, str) or value not in dims:
        raise ParseError(f"undeclared dimension {value!r}", loc)
    return value


def _node_from_doc(obj, dims, loc):
    _fields(obj, {"id", "kind", "params"}, {"id", "kind", "params"}, loc)
    kind, p = obj["kind"], obj["params"]
    ploc = loc + ".params"
    try:
        if kind == "box":
            _fields(p, {"label", "rows", "cols", "modifiers", "arg"}, {"label", "rows", "cols", "modifiers"}, ploc)
            mods = p["modifiers"]
            if mods not in ([], ["inverse"], ["transpose"], ["inverse", "transpose"]):
                raise ParseError(f"bad modifier stack {mods!r}", ploc)
            arg = _sum_from_doc(p["arg"], ploc + ".arg") if "arg" in p else None
            return Box(
                str(p["label"]), _dim(p["rows"], dims, ploc, True), _dim(p["cols"], dims, ploc, True),
                transpose="transpose" in mods, inverse="inverse" in mods, arg=arg,
            )
        if kind in ("cup", "cap"):
            _fields(p, {"dim"}, {"dim"}, ploc)
            return (Cup if kind == "cup" else Cap)(_dim(p["dim"], dims, ploc))
        if kind == "swap":
            _fields(p, {"first", "second"}, {"first", "second"}, ploc)
            return Swap(_dim(p["first"], dims, ploc), _dim(p["second"], dims, ploc))
        if kind == "spider":
            _fields(p, {"dim", "in_legs", "out_legs"}, {"dim", "in_legs", "out_legs"}, ploc)
            return Spider(_dim(p["dim"], dims, ploc), int(p["in_legs"]), int(p["out_legs"]))
        if kind == "scalar_fn":
            _fields(p, {"name", "k", "arg"}, {"name", "k", "arg"}, ploc)
            return ScalarFn(p["name"], _sum_from_doc(p["arg"], ploc + ".arg"), int(p["k"]))
    except ParseError:
        raise
    except (DiagramError, TypeError, ValueError) as exc:
        raise ParseError(str(exc), loc) from exc
    raise ParseError(f"unknown node kind {kind!r}", loc)


def _end_from_doc(obj, ids, loc):
    if isinstance(obj, dict) and "node" in obj:
        _fields(obj, {"node", "leg"}, {"node", "leg"}, loc)
        if obj["node"] not in ids:
            raise ParseError(f"unknown node id {obj['node']!r}", loc)
        return ("n", ids[obj["node"]], int(obj["leg"]))
    _fields(obj, {"boundary", "pos"}, {"boundary", "pos"}, loc)
    if obj["boundary"] not in ("in", "out"):
        raise ParseError(f"boundary must be 'in' or 'out', got {obj['boundary']!r}", loc)
    return (obj["boundary"], int(obj["pos"]))


def _diagram_from_doc(doc, loc="", outer_dims=None) -> Diagram:
    _fields(doc, _DIAGRAM_FIELDS, {"nodes", "wires", "in", "out"}, loc)
    dims = set(doc.get("dims", outer_dims or []))
    nodes, ids = [], {}
    for i, obj in enumerate(doc["nodes"]):
        nodes.append(_node_from_doc(obj, dims, f"{loc}.nodes[{i}]"))
        ids[obj["id"]] = i
    wires = []
    for i, pair in enumerate(doc["wires"]):
        wloc = f"{loc}.wires[{i}]"
        if not isinstance(pair, list) or len(pair) != 2:
            raise ParseError("a wire is a pair of endpoints", wloc)
        wires.append((_end_from_doc(pair[0], ids, wloc), _end_from_doc(pair[1], ids, wloc)))
    ins = [_dim(x, dims, loc + ".in") for x in doc["in"]]
    outs = [_dim(x, dims, loc + ".out") for x in doc["out"]]
    try:
        return Diagram(tuple(nodes), wires, ins, outs)
    except DiagramError as exc:
        raise ParseError(str(exc), loc or "$") from exc


def _sum_from_doc(doc, loc="") -> DiagramSum:
    _fields(doc, _SUM_FIELDS, {"terms", "in", "out"}, loc)
    dims = set(doc.get("dims", []))
    terms = []
    for i, t in enumerate(doc["terms"]):
        tloc = f"{loc}.terms[{i}]"
        _fields(t, {"coeff", "diagram"}, {"coeff", "diagram"}, tloc)
        _fields(t["coeff"], {"num", "den"}, {"num", "den"}, tloc + ".coeff")
        num, den = t["coeff"]["num"], t["coeff"]["den"]
        if not isinstance(num, int) or not isinstance(den, int) or den == 0:
            raise ParseError("coefficient must be integer num/den with den != 0", tloc + ".coeff")
        terms.append((Fraction(num, den), _diagram_from_doc(t["diagram"], tloc + ".diagram", dims)))
    ins = [_dim(x, dims, loc + ".in") for x in doc["in"]]
    outs = [_dim(x, dims, loc + ".out") for x in doc["out"]]
    try:
        return DiagramSum(tuple(terms), ins, outs)
    except DiagramError as exc:
        raise ParseError(str(exc), loc or "$") from exc


def deserialize(text: str):
    """Inverse of :func:`serialize`; raises :class:`ParseError` with a location."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from exc
    if isinstance(doc, dict) and "terms" in doc:
        return _sum_from_doc(doc, "$")
    return _diagram_from_doc(doc, "$")
