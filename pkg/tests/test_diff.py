import numpy as np
import pytest

from diagcalc.api import Session, derivative, derive_text, expr_equal
from diagcalc.core.diagram import Box, Cap, Cup, Diagram, DiagramSum
from diagcalc.core.registry import VarRegistry
from diagcalc.corpus import CORPUS
from diagcalc.diff import (DiffError, UnknownVariable, UnsupportedOrdering, VarRef, count_occurrences,
                           differentiate, differentiate_scalar_chain, differentiate_twice, gadget_for)
from diagcalc.numeric.evaluate import eval_matrix
from diagcalc.numeric.oracle import finite_diff, random_environment

from helpers import rel_err


def reg_mn():
    reg = VarRegistry()
    for d in ("m", "n"):
        reg.declare_dim(d)
    reg.declare("X", "m", "n", is_variable=True)
    reg.declare("A", "n", "m")
    return reg


def test_constant_has_zero_derivative():
    reg = reg_mn()
    d = differentiate(DiagramSum.of(Diagram.single(Box("A", "n", "m"))), VarRef("X"), reg)
    assert d.is_zero
    assert d.inputs == ("n", "m") and d.outputs == ("m", "n")


def test_variable_gadget_is_cup_cap():
    g = gadget_for(Box("X", "m", "n"), VarRef("X"))
    ((c, d),) = g.terms
    assert c == 1
    assert sorted(type(k).__name__ for k in d.nodes) == ["Cap", "Cup"]
    assert {k.dim for k in d.nodes if isinstance(k, Cup)} == {"m"}
    assert {k.dim for k in d.nodes if isinstance(k, Cap)} == {"n"}


def test_transpose_gadget_crosses():
    plain = gadget_for(Box("X", "m", "n"), VarRef("X")).terms[0][1]
    crossed = gadget_for(Box("X", "m", "n", transpose=True), VarRef("X")).terms[0][1]
    assert plain.wires != crossed.wires


def test_inverse_gadget_has_two_inverse_boxes():
    g = gadget_for(Box("X", "m", "m", inverse=True), VarRef("X"))
    ((c, d),) = g.terms
    assert c == -1
    assert sum(isinstance(k, Box) and k.inverse for k in d.nodes) == 2


def test_gadget_rejects_other_symbols():
    with pytest.raises(DiffError):
        gadget_for(Box("A", "m", "n"), VarRef("X"))


def test_unknown_variable():
    with pytest.raises(UnknownVariable):
        differentiate(DiagramSum.of(Diagram.single(Box("X", "m", "n"))), VarRef("Q"), reg_mn())


def test_dx_dx_one_term():
    s = Session.from_text("dim m, n\nvar X: m x n\nX")
    d = derivative(s, raw=True)
    assert len(d.terms) == 1
    assert len(d.terms[0][1].nodes) == 2


@pytest.mark.parametrize("case", CORPUS, ids=lambda c: c.name)
def test_term_count_matches_occurrences(case):
    s = Session.from_text(case.text)
    raw = differentiate(s.lowered, VarRef(case.wrt), s.reg)
    assert len(raw.terms) == count_occurrences(s.lowered, case.wrt)


def test_trace_axbx_two_terms():
    text = "dim m, n\nmat A: n x m\nmat B: n x m\nvar X: m x n\ntr(A * X * B * X)"
    assert len(derivative(Session.from_text(text), raw=True).terms) == 2
    assert derive_text(text) == "A' * X' * B' + B' * X' * A'"


def test_inverse_derivative_shape():
    s = Session.from_text("dim m\nvar X: m x m\ninv(X)")
    ((c, d),) = derivative(s, raw=True).terms
    assert c == -1
    assert sum(isinstance(k, Box) and k.inverse for k in d.nodes) == 2


def test_scalar_chain_of_constant_is_zero():
    s = Session.from_text("dim m\nvec b: m\nvar x: m\nsqrt(b' * b)")
    assert differentiate_scalar_chain(s.lowered, VarRef("x"), s.reg).is_zero


@pytest.mark.parametrize("text, answer", [
    ("dim m\nvec b: m\nvar x: m\nnorm2(x - b)", "(x - b) / norm2(x - b)"),
    ("dim m, n\nmat A: m x n\nvec b: m\nvar x: n\nnorm2sq(A * x - b)", "2 * A' * (A * x - b)"),
])
def test_scalar_chain_norms(text, answer):
    s = Session.from_text(text)
    assert expr_equal(derivative(s), answer, s.reg)


def test_row_form_is_the_transpose():
    s = Session.from_text("dim m\nvec a: m\nvar x: m\na' * x")
    col, row = derivative(s), derivative(s, row_form=True)
    env = random_environment(s.reg, {"m": 4}, np.random.default_rng(0))
    assert col.outputs == ("m",) and row.inputs == ("m",)
    assert rel_err(eval_matrix(row, env), eval_matrix(col, env).T) < 1e-14


# ---------------------------------------------------------------- hessians


def hessian(text):
    s = Session.from_text(text)
    return s, differentiate_twice(s.lowered, VarRef("x"), VarRef("x", row_form=True), s.reg)


def test_hessian_quadratic():
    text = "dim m\nmat A: m x m\nvec b: m\nvar x: m\nx' * A * x + b' * x"
    assert derive_text(text, second="x-row") == "A + A'"


def test_hessian_of_linear_is_zero():
    _, h = hessian("dim m\nvec b: m\nvar x: m\nb' * x")
    assert h.is_zero


def test_hessian_of_square_norm():
    s, h = hessian("dim m\nvar x: m\nx' * x")
    env = random_environment(s.reg, {"m": 3}, np.random.default_rng(0))
    assert rel_err(eval_matrix(h, env), 2 * np.eye(3)) < 1e-14


def test_second_derivative_ordering():
    s = Session.from_text("dim m\nvar x: m\nx' * x")
    with pytest.raises(UnsupportedOrdering):
        differentiate_twice(s.lowered, VarRef("x"), VarRef("x"), s.reg)


# -------------------------------------------------- derivative vs oracle


@pytest.mark.parametrize("text", [
    "dim m, n\nvar X: m x n\nX'",
    "dim m\nvar X: m x m\ninv(X)",
    "dim m\nmat A: m x m\nvar X: m x m\nX * A * X",
    "dim m\nvar X: m x m\nX .* X",
    "dim m\nvar X: m x m\nkron(X, X')",
    "dim m\nvar X: m x m\ntr(X)^3",
    "dim m\nvar X: m x m\ninv(X' + eye(m))",
])
def test_matrix_valued_against_fd(text):
    s = Session.from_text(text)
    d = derivative(s)
    for seed in range(3):
        env = random_environment(s.reg, {"m": 3, "n": 2}, np.random.default_rng(seed), watch=(s.lowered, d))
        fd = finite_diff(s.lowered, VarRef("X"), env, s.reg)
        assert rel_err(eval_matrix(d, env), fd) < 1e-6
