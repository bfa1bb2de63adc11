"""Shared builders for the test suite."""
from __future__ import annotations

import numpy as np

from diagcalc.core.diagram import (Box, Cap, Cup, Diagram, DiagramSum, ScalarFn, Spider, Swap, close_trace,
                                   compose_par, compose_seq)
from diagcalc.numeric.evaluate import Environment

DIMS = ("m", "n", "p")


def random_diagram(rng, max_nodes: int = 12) -> Diagram:
    """A random well-formed open diagram built slice by slice.

    Each slice places one generator on a window of the current top
    boundary, with identity wires elsewhere.
    """
    width = int(rng.integers(0, 3))
    start = [DIMS[int(rng.integers(0, 3))] for _ in range(width)]
    d = Diagram.identity(start)
    for _ in range(int(rng.integers(1, max_nodes + 1))):
        top = list(d.outputs)
        choice = int(rng.integers(0, 7))
        wide = len(top) >= 4  # keep evaluation tensors small
        pos = int(rng.integers(0, len(top) + 1))
        gen, used = None, 0
        if choice == 0 and pos < len(top):
            other, label = DIMS[int(rng.integers(0, 3))], "ABC"[int(rng.integers(0, 3))]
            if rng.integers(0, 2):
                gen = Box(f"{label}_{other}{top[pos]}", other, top[pos])
            else:  # transposed: consumes its rows wire
                gen = Box(f"{label}_{top[pos]}{other}", top[pos], other, transpose=True)
            used = 1
        elif choice == 1 and not wide:
            gen, used = Cup(DIMS[int(rng.integers(0, 3))]), 0
        elif choice == 2 and pos + 1 < len(top) and top[pos] == top[pos + 1]:
            gen, used = Cap(top[pos]), 2
        elif choice == 3 and pos + 1 < len(top):
            gen, used = Swap(top[pos], top[pos + 1]), 2
        elif choice == 4 and pos < len(top):
            gen, used = Spider(top[pos], 1, int(rng.integers(0, 2 if wide else 3))), 1
        elif choice == 5 and pos + 1 < len(top) and top[pos] == top[pos + 1]:
            gen, used = Spider(top[pos], 2, 1), 2
        elif choice == 6 and pos < len(top) and top[pos] == "m":
            gen, used = Box("S", "m", "m", inverse=True), 1
        if gen is None:
            rows = DIMS[int(rng.integers(0, 3))]
            gen, used = Box(f"v_{rows}", rows, None), 0
        layer = compose_par(compose_par(Diagram.identity(top[:pos]), Diagram.single(gen)),
                            Diagram.identity(top[pos + used:]))
        d = compose_seq(layer, d)
    if rng.integers(0, 4) == 0 and len(d.inputs) == len(d.outputs) and d.inputs == d.outputs:
        d = close_trace(d)
    return d


def random_dims(rng, lo=2, hi=6) -> dict:
    return {k: int(rng.integers(lo, hi + 1)) for k in DIMS}


def bind_boxes(d, env: Environment, rng, positive=False):
    """Attach random matrices for every box label in ``d`` (recursing into arguments).

    ``positive`` draws entries in [0.5, 1.5] and shifts square boxes by a
    multiple of the identity: traces stay positive for square roots and every
    square matrix stays comfortably invertible.
    """
    def visit(obj):
        if isinstance(obj, DiagramSum):
            for _, t in obj.terms:
                visit(t)
            return
        for kind in obj.nodes:
            if isinstance(kind, Box):
                if kind.arg is not None:
                    visit(kind.arg)
                    continue
                rows, cols = env.size(kind.rows), env.size(kind.cols)
                if kind.label not in env.boxes:
                    m = rng.uniform(0.5, 1.5, (rows, cols)) if positive else rng.uniform(-1, 1, (rows, cols))
                    if kind.inverse or (positive and kind.rows == kind.cols):
                        m = m + 2 * rows * np.eye(rows)
                    env.boxes[kind.label] = m
            elif isinstance(kind, ScalarFn):
                visit(kind.arg)

    visit(d)
    return env


def rel_err(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = max(np.max(np.abs(b), initial=0.0), 1e-300)
    return float(np.max(np.abs(a - b), initial=0.0) / scale)
