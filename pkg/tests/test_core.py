import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diagcalc.core.diagram import (Box, Cap, Cup, Diagram, DiagramSum, Spider, Swap, close_trace, compose_par,
                                   compose_seq, rotate180, sum_seq)
from diagcalc.core.equality import diagram_hash, structural_equal, sums_equal
from diagcalc.core.errors import BoundaryMismatch, IllFormed, ParseError
from diagcalc.core.registry import RegistryError, VarRegistry
from diagcalc.core.serialize import deserialize, serialize
from diagcalc.diff import _plain_gadget
from diagcalc.numeric.evaluate import Environment, evaluate

from helpers import bind_boxes, random_diagram, random_dims, rel_err

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def box(label, rows, cols, **kw):
    return Diagram.single(Box(label, rows, cols, **kw))


def shuffled(d: Diagram, rng) -> Diagram:
    """Same diagram with its node list permuted."""
    perm = rng.permutation(len(d.nodes))
    where = {int(old): new for new, old in enumerate(perm)}

    def move(port):
        return ("n", where[port[1]], port[2]) if port[0] == "n" else port

    nodes = [d.nodes[int(i)] for i in perm]
    return Diagram(nodes, [(move(p), move(q)) for p, q in d.wires], d.inputs, d.outputs)


# ------------------------------------------------------------ construction


def test_identity_law():
    x = box("X", "m", "n")
    assert structural_equal(compose_seq(Diagram.identity(["m"]), x), x)
    assert structural_equal(compose_seq(x, Diagram.identity(["n"])), x)


def test_cap_after_cup_is_a_loop_of_size_n():
    loop = compose_seq(Diagram.single(Cap("n")), Diagram.single(Cup("n")))
    assert loop.is_closed
    assert evaluate(loop, Environment({"n": 5})) == pytest.approx(5.0)


def test_sequential_composition_is_matrix_product():
    rng = np.random.default_rng(0)
    a, x = rng.normal(size=(2, 3)), rng.normal(size=(3, 4))
    env = Environment({"k": 2, "m": 3, "n": 4}, {"A": a, "X": x})
    d = compose_seq(box("A", "k", "m"), box("X", "m", "n"))
    assert rel_err(evaluate(d, env), a @ x) < 1e-14


def test_compose_seq_checks_boundaries():
    with pytest.raises(BoundaryMismatch):
        compose_seq(box("A", "k", "m"), box("X", "n", "n"))


def test_parallel_units_and_order():
    d = box("X", "m", "n")
    assert structural_equal(compose_par(Diagram.empty(), d), d)
    idmn = compose_par(Diagram.identity(["m"]), Diagram.identity(["n"]))
    assert idmn.inputs == ("m", "n") and idmn.outputs == ("m", "n")


def test_parallel_is_kronecker():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(2, 3))
    env = Environment({"m": 2, "n": 3}, {"X": x})
    t = evaluate(compose_par(box("X", "m", "n"), box("X", "m", "n")), env)
    # axes: out1 out2 in1 in2 -> kron rows (out1, out2), cols (in1, in2)
    assert rel_err(t.reshape(4, 9), np.kron(x, x)) < 1e-14


def test_rotate_cup_is_cap():
    assert structural_equal(rotate180(Diagram.single(Cup("n"))), Diagram.single(Cap("n")))


def test_rotate_product_reverses_and_transposes():
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 2))
    env = Environment({"k": 3, "m": 4, "n": 2}, {"A": a, "B": b})
    r = rotate180(compose_seq(box("A", "k", "m"), box("B", "m", "n")))
    assert rel_err(evaluate(r, env), (a @ b).T) < 1e-14


def test_close_trace():
    env = Environment({"n": 4}, {"X": np.array([[1.0, 2], [3, 4]])})
    assert evaluate(close_trace(Diagram.identity(["n"])), env) == pytest.approx(4.0)
    env2 = Environment({"n": 2}, env.boxes)
    assert evaluate(close_trace(box("X", "n", "n")), env2) == pytest.approx(5.0)
    with pytest.raises(Exception):
        close_trace(box("X", "m", "n"))


def test_ill_formed_rejected():
    with pytest.raises(IllFormed):
        Diagram((Cup("m"),), [(("n", 0, 0), ("out", 0))], (), ("m",))  # dangling leg
    with pytest.raises(IllFormed):
        Diagram((), [(("in", 0), ("out", 0))], ("m",), ("n",))  # dimension clash
    with pytest.raises(IllFormed):
        Box("A", "m", "n", inverse=True)


def test_registry_rejects_duplicates_and_unknown_dims():
    reg = VarRegistry()
    reg.declare_dim("m")
    reg.declare("X", "m", "m", is_variable=True)
    with pytest.raises(RegistryError):
        reg.declare("X", "m", "m")
    with pytest.raises(RegistryError):
        reg.declare("Y", "q", "m")
    assert reg.variables == ["X"]


# ------------------------------------------------------------------ rotate


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_rotate180_is_an_involution(seed):
    d = random_diagram(np.random.default_rng(seed))
    assert structural_equal(rotate180(rotate180(d)), d)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_rotate180_reverses_every_axis(seed):
    rng = np.random.default_rng(seed)
    d = random_diagram(rng)
    env = bind_boxes(d, Environment(random_dims(rng, 2, 3)), rng)
    a, b = evaluate(d, env), evaluate(rotate180(d), env)
    assert rel_err(b, np.transpose(a)) < 1e-12


# ---------------------------------------------------------------- equality


def test_equality_basics():
    x = box("X", "m", "n")
    assert structural_equal(x, x)
    assert not structural_equal(Diagram.single(Cup("n")), Diagram.single(Cap("n")))
    assert not structural_equal(box("X", "m", "m"), box("X", "m", "m", transpose=True))
    # boundary order matters
    s1 = Diagram.single(Swap("m", "m"))
    assert not structural_equal(s1, Diagram.identity(["m", "m"]))


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_equality_ignores_node_numbering(seed):
    rng = np.random.default_rng(seed)
    d = random_diagram(rng)
    e = shuffled(d, rng)
    assert structural_equal(d, e)
    assert diagram_hash(d) == diagram_hash(e)


def test_sums_equal_merges_coefficients_order_free():
    x, y = box("X", "m", "n"), box("Y", "m", "n")
    a = DiagramSum.of(x) + DiagramSum.of(y, 2)
    b = DiagramSum.of(y, 2) + DiagramSum.of(x)
    assert sums_equal(a, b)
    assert not sums_equal(a, DiagramSum.of(x) + DiagramSum.of(y))


def test_zero_sum_products():
    z = DiagramSum.zero(("n",), ("m",))
    assert sum_seq(z, DiagramSum.of(box("X", "n", "n"))).is_zero


# ----------------------------------------------------------- serialization


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_serialization_round_trip(seed):
    rng = np.random.default_rng(seed)
    d = random_diagram(rng)
    back = deserialize(serialize(d))
    assert structural_equal(back, d)
    s = DiagramSum.of(d, 3) + DiagramSum.of(d, -1)
    assert sums_equal(deserialize(serialize(s)), s)


def test_gadget_round_trip():
    g = _plain_gadget("m", "n")
    assert structural_equal(deserialize(serialize(g)), g)


def test_round_trip_nested_inverse():
    inner = DiagramSum.of(box("X", "m", "m")) + DiagramSum.of(box("A", "m", "m"))
    d = Diagram.single(Box("", "m", "m", inverse=True, arg=inner))
    assert structural_equal(deserialize(serialize(d)), d)


def test_zero_sum_document():
    doc = json.loads(serialize(DiagramSum.zero(("n",), ("m",))))
    assert doc["terms"] == []
    assert deserialize(serialize(DiagramSum.zero(("n",), ("m",)))).is_zero


def test_deserialize_rejects_mismatched_wire():
    doc = json.loads(serialize(box("X", "m", "n")))
    doc["in"] = ["m"]
    with pytest.raises(ParseError):
        deserialize(json.dumps(doc))


def test_deserialize_rejects_garbage():
    with pytest.raises(ParseError):
        deserialize("{not json")
    with pytest.raises(ParseError):
        deserialize(json.dumps({"nodes": [{"id": 0, "kind": "Teapot"}]}))


def test_spider_fan_out_evaluates_to_copy():
    env = Environment({"m": 3})
    t = evaluate(Diagram.single(Spider("m", 1, 2)), env)
    expect = np.zeros((3, 3, 3))
    for i in range(3):
        expect[i, i, i] = 1
    assert np.array_equal(t, expect)
