import json

import numpy as np
import pytest

from diagcalc.api import Session, check_derivative, derivative
from diagcalc.core.diagram import Box, Cup, Diagram, DiagramSum, Spider, close_trace
from diagcalc.diff import VarRef
from diagcalc.numeric.evaluate import Environment, ShapeMismatch, UnboundSymbol, eval_matrix, evaluate
from diagcalc.numeric.oracle import check, finite_diff, random_environment

from helpers import bind_boxes, random_diagram, random_dims, rel_err


def session(text):
    return Session.from_text(text)


def test_cup_values():
    t = evaluate(Diagram.single(Cup("n")), Environment({"n": 2}))
    assert t.reshape(-1).tolist() == [1, 0, 0, 1]


def test_trace_value():
    env = Environment({"n": 2}, {"X": np.array([[1.0, 2.0], [3.0, 4.0]])})
    assert float(evaluate(close_trace(Diagram.single(Box("X", "n", "n"))), env)) == 5.0


def test_hadamard_sandwich_is_componentwise():
    rng = np.random.default_rng(3)
    s = session("dim m, n\nmat A: m x n\nmat B: m x n\nA .* B")
    env = random_environment(s.reg, {"m": 3, "n": 4}, rng)
    got = eval_matrix(s.lowered, env)
    assert rel_err(got, env.boxes["A"] * env.boxes["B"]) < 1e-14
    kinds = {type(k) for _, d in s.lowered.terms for k in d.nodes}
    assert Spider in kinds


def test_zero_sum_shape():
    z = DiagramSum.zero(("n",), ("m",))
    assert np.array_equal(eval_matrix(z, Environment({"m": 2, "n": 2})), np.zeros((2, 2)))


def test_scaled_box():
    x = np.arange(6.0).reshape(2, 3)
    env = Environment({"m": 2, "n": 3}, {"X": x})
    got = eval_matrix(DiagramSum.of(Diagram.single(Box("X", "m", "n")), 2), env)
    assert np.array_equal(got, 2 * x)


def test_trace_xxt_derivative_is_2x():
    s = session("dim m, n\nvar X: m x n\ntr(X * X')")
    d = derivative(s)
    env = random_environment(s.reg, {"m": 3, "n": 2}, np.random.default_rng(0))
    assert rel_err(eval_matrix(d, env), 2 * env.boxes["X"]) < 1e-13


def test_unbound_and_mismatched():
    d = Diagram.single(Box("X", "m", "n"))
    with pytest.raises(UnboundSymbol):
        evaluate(d, Environment({"m": 2}, {"X": np.zeros((2, 2))}))
    with pytest.raises(UnboundSymbol):
        evaluate(d, Environment({"m": 2, "n": 2}))
    with pytest.raises(ShapeMismatch):
        evaluate(d, Environment({"m": 2, "n": 3}, {"X": np.zeros((2, 2))}))


@pytest.mark.parametrize("seed", range(15))
def test_contraction_order_does_not_matter(seed):
    rng = np.random.default_rng(seed)
    d = random_diagram(rng)
    env = bind_boxes(d, Environment(random_dims(rng, 2, 3)), rng)
    ref = evaluate(d, env, optimize="greedy")
    for strategy in ("dp", "branch-1", "random-greedy"):
        assert rel_err(evaluate(d, env, optimize=strategy), ref) < 1e-12


# ------------------------------------------------------------------ oracle


def test_fd_of_trace_is_identity():
    s = session("dim m\nvar X: m x m\ntr(X)")
    env = random_environment(s.reg, {"m": 3}, np.random.default_rng(0))
    assert rel_err(finite_diff(s.lowered, VarRef("X"), env, s.reg), np.eye(3)) < 1e-9


def test_fd_of_inner_product_is_a():
    s = session("dim m\nvec a: m\nvar x: m\na' * x")
    env = random_environment(s.reg, {"m": 4}, np.random.default_rng(1))
    got = finite_diff(s.lowered, VarRef("x"), env, s.reg)
    assert rel_err(got.reshape(-1), env.boxes["a"].reshape(-1)) < 1e-9


def test_fd_of_identity_map_matches_gadget():
    s = session("dim m, n\nvar X: m x n\nX")
    env = random_environment(s.reg, {"m": 2, "n": 2}, np.random.default_rng(2))
    fd = finite_diff(s.lowered, VarRef("X"), env, s.reg)
    sym = eval_matrix(derivative(s, raw=True), env)
    assert fd.shape == (4, 4)
    assert rel_err(sym, fd) < 1e-9
    # unit blocks: block (i, j) is E_ij
    for i in range(2):
        for j in range(2):
            block = sym[2 * i:2 * i + 2, 2 * j:2 * j + 2]
            e = np.zeros((2, 2))
            e[i, j] = 1
            assert np.allclose(block, e)


def test_fd_converges_quadratically():
    # central differences: error falls like h^2 on a smooth nonlinear function
    s = session("dim m\nmat A: m x m\nvar X: m x m\ntr(A * X * X * X)")
    env = random_environment(s.reg, {"m": 3}, np.random.default_rng(4))
    exact = eval_matrix(derivative(s), env)
    errs = [rel_err(finite_diff(s.lowered, VarRef("X"), env, s.reg, h=h), exact) for h in (1e-1, 1e-2)]
    assert errs[1] < errs[0] / 50


@pytest.mark.parametrize("text", [
    "dim m, n\nmat A: n x m\nvar X: m x n\ntr(A * X)",
    "dim m\nmat A: m x m\nvar X: m x m\ntr(inv(X + A))",
    "dim m\nvec b: m\nvar x: m\nnorm2(x - b)",
])
def test_check_passes(text):
    rep = check_derivative(text, trials=20, tol=1e-6, seed=0)
    assert rep.passed, rep.to_text()


def test_check_fixed_dims():
    rep = check_derivative("dim m\nmat A: m x m\nvar X: m x m\ntr(inv(X + A))", dims={"m": 4}, trials=5)
    assert rep.passed and all(d == {"m": 4} for d in rep.dims)


def test_check_flags_a_wrong_derivative():
    s = session("dim m, n\nmat A: n x m\nvar X: m x n\ntr(A * X)")
    wrong = derivative(session("dim m, n\nmat A: n x m\nvar X: m x n\ntr(A * X * X' * A')"))
    rep = check(s.lowered, wrong, VarRef("X"), s.reg, trials=3)
    assert not rep.passed


def test_report_formats_and_determinism():
    text = "dim m, n\nmat A: n x m\nvar X: m x n\ntr(A * X)"
    a = check_derivative(text, trials=4, seed=7)
    b = check_derivative(text, trials=4, seed=7)
    assert a.dims == b.dims and a.errors == b.errors
    doc = json.loads(a.to_json())
    assert set(doc) == {"expr", "wrt", "dims", "trials", "max_rel_err", "pass", "seconds"}
    assert "result: PASS" in a.to_text()
