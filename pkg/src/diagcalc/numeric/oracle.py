"""Finite-difference oracle and randomized derivative checks."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from ..core.diagram import Box, Diagram, DiagramSum
from ..core.registry import VarRegistry
from .evaluate import Environment, as_matrix, eval_sum

#: Inverse arguments are redrawn until their condition number is at most this.
#: Central-difference truncation error grows like (h * |M^-1|)^2, so a loose
#: bound lets the oracle itself miss 1e-6 at h = 1e-5.
MAX_COND = 1e2
DEFAULT_H = 1e-5
DEFAULT_H2 = 1e-4


def _as_sum(f) -> DiagramSum:
    return DiagramSum.of(f) if isinstance(f, Diagram) else f


def _var_dims(reg: VarRegistry, symbol: str):
    rows, cols = reg.shape(symbol)
    return rows, cols


def _to_row_layout(t: np.ndarray, has_row: bool, has_col: bool, n_out: int):
    """Move the new rows axis to the front of the inputs and the new cols axis to the outputs.

    ``t`` has axes (new_row?, outs..., new_col?, ins...); ``n_out`` counts outs.
    Returns the permuted tensor and its output-axis count.
    """
    axes = list(range(t.ndim))
    r = int(has_row)
    c = int(has_col)
    row_ax = axes[:r]
    outs = axes[r:r + n_out]
    col_ax = axes[r + n_out:r + n_out + c]
    ins = axes[r + n_out + c:]
    order = col_ax + outs + row_ax + ins
    return np.transpose(t, order), c + n_out


def finite_diff(f, wrt, env: Environment, reg: VarRegistry, h: float = DEFAULT_H) -> np.ndarray:
    """Central-difference derivative of ``f`` in block layout.

    For scalar ``f`` this is the m x n matrix of partials; for matrix-valued
    ``f`` it is the (m m') x (n n') matrix whose (i, j) block is the partial of
    ``f`` w.r.t. X_ij.  ``wrt.row_form`` gives the layout w.r.t. the transpose.
    """
    if h <= 0:
        raise ValueError("step must be positive")
    f = _as_sum(f)
    rows, cols = _var_dims(reg, wrt.symbol)
    x0 = env.matrix(wrt.symbol, rows, cols)
    m, n = x0.shape
    base_shape = [env.size(d) for d in f.outputs + f.inputs]
    n_out = len(f.outputs)
    t = np.zeros((m,) + tuple(base_shape[:n_out]) + (n,) + tuple(base_shape[n_out:]))
    for i in range(m):
        for j in range(n):
            e = np.zeros_like(x0)
            e[i, j] = h
            plus = eval_sum(f, env.with_box(wrt.symbol, x0 + e))
            minus = eval_sum(f, env.with_box(wrt.symbol, x0 - e))
            block = (plus - minus) / (2 * h)
            idx = (i,) + (slice(None),) * n_out + (j,)
            t[idx] = block
    # drop the axes of trivial dimensions
    if cols is None:
        t = t.reshape(t.shape[: 1 + n_out] + t.shape[2 + n_out:])
    if rows is None:
        t = t.reshape(t.shape[1:])
    has_row, has_col = rows is not None, cols is not None
    n_lead = int(has_row) + n_out
    if wrt.row_form:
        t, n_lead = _to_row_layout(t, has_row, has_col, n_out)
    return as_matrix(t, n_lead)


def finite_diff_hessian(f, wrt, env: Environment, reg: VarRegistry, h: float = DEFAULT_H2) -> np.ndarray:
    """Second-difference oracle for d/d<x| d/d|x> of a scalar ``f``.

    Entry layout matches the row-form derivative of the column-form gradient:
    outputs (new cols, rows), inputs (new rows, cols) with trivial ones dropped.
    """
    f = _as_sum(f)
    if f.inputs or f.outputs:
        raise ValueError("hessian oracle needs a scalar function")
    rows, cols = _var_dims(reg, wrt.symbol)
    x0 = env.matrix(wrt.symbol, rows, cols)
    m, n = x0.shape

    def val(x):
        return float(eval_sum(f, env.with_box(wrt.symbol, x)))

    # t[l, i, k, j] = d2 f / dX_kl dX_ij
    t = np.zeros((n, m, m, n))
    for i in range(m):
        for j in range(n):
            for k in range(m):
                for l in range(n):
                    a = np.zeros_like(x0)
                    b = np.zeros_like(x0)
                    a[i, j] = h
                    b[k, l] = h
                    t[l, i, k, j] = (
                        val(x0 + a + b) - val(x0 + a - b) - val(x0 - a + b) + val(x0 - a - b)
                    ) / (4 * h * h)
    keep_out = [ax for ax, d in ((0, cols), (1, rows)) if d is not None]
    keep_in = [ax for ax, d in ((2, rows), (3, cols)) if d is not None]
    t = t.reshape([t.shape[ax] for ax in keep_out + keep_in])
    return as_matrix(t, len(keep_out))


# ---------------------------------------------------------- random checks


def random_matrix(rng, shape):
    return rng.uniform(-1.0, 1.0, size=shape)


def _inverse_arguments(s: DiagramSum, acc: list):
    for _, d in s.terms:
        for kind in d.nodes:
            if isinstance(kind, Box) and kind.inverse:
                acc.append(kind)
            if getattr(kind, "arg", None) is not None:
                _inverse_arguments(kind.arg, acc)
    return acc


def _well_conditioned(boxes, env, max_cond) -> bool:
    for kind in boxes:
        if kind.arg is None:
            m = env.matrix(kind.label, kind.rows, kind.cols)
        else:
            m = as_matrix(eval_sum(kind.arg, env), len(kind.arg.outputs))
        if not np.all(np.isfinite(m)) or np.linalg.cond(m) > max_cond:
            return False
    return True


def random_environment(reg: VarRegistry, dims: dict, rng, watch=(), max_cond=MAX_COND,
                       seed=None, attempts=1000) -> Environment:
    """Uniform [-1, 1] entries for every declared box.

    Every sum in ``watch`` has its inverse nodes checked; the whole draw is
    repeated until each inverted matrix has condition number <= ``max_cond``.
    """
    inverses = []
    for s in watch:
        _inverse_arguments(s, inverses)
    for _ in range(attempts):
        env = Environment(dict(dims), {}, seed)
        for name, e in reg.entries.items():
            env.boxes[name] = random_matrix(rng, (env.size(e.rows), env.size(e.cols)))
        if _well_conditioned(inverses, env, max_cond):
            return env
    raise RuntimeError("could not draw a well-conditioned environment")


@dataclass
class CheckReport:
    expr: str
    wrt: str
    trials: int
    dims: list
    tol: float
    errors: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def max_rel_err(self) -> float:
        return max(self.errors) if self.errors else 0.0

    @property
    def passed(self) -> bool:
        return self.max_rel_err <= self.tol

    def to_dict(self) -> dict:
        return {
            "expr": self.expr,
            "wrt": self.wrt,
            "dims": self.dims,
            "trials": self.trials,
            "max_rel_err": self.max_rel_err,
            "pass": self.passed,
            "seconds": self.seconds,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_text(self) -> str:
        lines = [
            f"expr: {self.expr}",
            f"wrt: {self.wrt}",
            f"trials: {self.trials}",
            f"dims: {self.dims[0] if len({json.dumps(d, sort_keys=True) for d in self.dims}) == 1 else self.dims}",
            f"max_rel_err: {self.max_rel_err:.3e}",
            f"tol: {self.tol:g}",
            f"per_trial: {' '.join(f'{e:.1e}' for e in self.errors)}",
            f"seconds: {self.seconds:.3f}",
            f"result: {'PASS' if self.passed else 'FAIL'}",
        ]
        return "\n".join(lines)


def relative_error(symbolic: np.ndarray, reference: np.ndarray) -> float:
    return float(np.max(np.abs(symbolic - reference), initial=0.0) / (np.max(np.abs(reference), initial=0.0) + 1e-12))


def check(f: DiagramSum, derivative: DiagramSum, wrt, reg: VarRegistry, dims=None, trials=20,
          tol=1e-6, seed=0, h=DEFAULT_H, second=None, label="", dim_range=(2, 5)) -> CheckReport:
    """Compare ``derivative`` (already symbolic) with finite differences of ``f``.

    ``dims`` fixes the sizes; when omitted each trial draws every declared
    dimension uniformly from ``dim_range``.  With ``second`` set the oracle is
    the second-difference Hessian.
    """
    report = CheckReport(label, wrt.symbol + ("-row" if second else ""), trials, [], tol)
    start = time.perf_counter()
    for trial in range(trials):
        rng = np.random.default_rng(seed + trial)
        if dims is None:
            trial_dims = {d: int(rng.integers(dim_range[0], dim_range[1] + 1)) for d in sorted(reg.dims)}
        else:
            trial_dims = dict(dims)
        env = random_environment(reg, trial_dims, rng, watch=(f, derivative), seed=seed + trial)
        sym = as_matrix(eval_sum(derivative, env), len(derivative.outputs))
        if second is not None:
            ref = finite_diff_hessian(f, wrt, env, reg, h=max(h, DEFAULT_H2) if h == DEFAULT_H else h)
        else:
            ref = finite_diff(f, wrt, env, reg, h=h)
        report.dims.append(trial_dims)
        report.errors.append(relative_error(sym, ref))
    report.seconds = time.perf_counter() - start
    return report
