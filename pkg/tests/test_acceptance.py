"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) or through pytest; the
lines are repeated in the pytest terminal summary.
"""
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from diagcalc.api import Session, answer_expr, check_derivative, derivative  # noqa: E402
from diagcalc.core.diagram import Box, Cap, Cup, Diagram, DiagramSum, compose_par, compose_seq, rotate180  # noqa: E402
from diagcalc.core.equality import structural_equal, sums_equal  # noqa: E402
from diagcalc.core.serialize import deserialize, serialize  # noqa: E402
from diagcalc.corpus import CORPUS  # noqa: E402
from diagcalc.diff import VarRef, count_occurrences, differentiate, gadget_for  # noqa: E402
from diagcalc.frontend.interp import interpret  # noqa: E402
from diagcalc.numeric.evaluate import Environment, eval_matrix, eval_sum  # noqa: E402
from diagcalc.numeric.oracle import finite_diff, random_environment, relative_error  # noqa: E402
from diagcalc.rewrite import RULES, simplify  # noqa: E402
from diagcalc.rewrite.readback import to_matrix_expr  # noqa: E402

from helpers import bind_boxes, random_diagram, random_dims, rel_err  # noqa: E402

RESULTS = []


def report(number: int, title: str, ok: bool, detail: str, seconds: float):
    line = f"criterion {number} ({title}): {'PASS' if ok else 'FAIL'} [{detail}; {seconds:.2f}s]"
    RESULTS.append(line)
    print(line)
    return ok


def timed(fn):
    start = time.perf_counter()
    ok, detail = fn()
    return ok, detail, time.perf_counter() - start


# ---------------------------------------------------------------- 1


def corpus_symbolic():
    misses = []
    for case in CORPUS:
        s = Session.from_text(case.text)
        got = str(to_matrix_expr(derivative(s, case.wrt, second=case.second)))
        want = str(answer_expr(s, case.answer))
        if got != want:
            misses.append(f"{case.name}: {got!r} != {want!r}")
    ok = not misses
    return ok, f"{len(CORPUS) - len(misses)}/{len(CORPUS)} identities" + ("" if ok else "; " + "; ".join(misses))


def test_criterion_1_identity_corpus():
    ok, detail, sec = timed(corpus_symbolic)
    assert report(1, "identity corpus, symbolic", ok, detail, sec), detail


# ---------------------------------------------------------------- 2


def gadget_identities():
    cases = [
        ("dX/dX", "dim m, n\nvar X: m x n\nX", Box("X", "m", "n"), {"m": 4, "n": 3}),
        ("dX'/dX", "dim m, n\nvar X: m x n\nX'", Box("X", "m", "n", transpose=True), {"m": 4, "n": 3}),
        ("dinv(X)/dX", "dim m\nvar X: m x m\ninv(X)", Box("X", "m", "m", inverse=True), {"m": 4}),
    ]
    worst = {}
    for name, text, kind, dims in cases:
        s = Session.from_text(text)
        g = gadget_for(kind, VarRef("X"), s.reg)
        errs = []
        for trial in range(20):
            env = random_environment(s.reg, dims, np.random.default_rng(trial), watch=(s.lowered,), seed=trial)
            errs.append(relative_error(eval_matrix(g, env), finite_diff(s.lowered, VarRef("X"), env, s.reg)))
        worst[name] = max(errs)
    ok = all(e <= 1e-6 for e in worst.values())
    return ok, ", ".join(f"{k} max rel err {v:.1e}" for k, v in worst.items()) + " over 20 trials"


def test_criterion_2_gadgets():
    ok, detail, sec = timed(gadget_identities)
    assert report(2, "gadget identities, numeric", ok, detail, sec), detail


# ---------------------------------------------------------------- 3


def oracle_suite():
    entries = [(c.name, c.text, c.wrt, c.second) for c in CORPUS]
    entries.append(("dX/dX", "dim m, n\nvar X: m x n\nX", "X", None))
    bad, worst = [], 0.0
    for name, text, wrt, second in entries:
        rep = check_derivative(text, wrt, trials=20, tol=1e-6, seed=0, h=1e-5, second=second)
        worst = max(worst, rep.max_rel_err)
        if not rep.passed:
            bad.append(f"{name} ({rep.max_rel_err:.1e})")
    ok = not bad
    detail = f"{len(entries) - len(bad)}/{len(entries)} checks, worst rel err {worst:.1e}"
    return ok, detail + ("" if ok else "; failing: " + ", ".join(bad))


def test_criterion_3_oracle_suite():
    ok, detail, sec = timed(oracle_suite)
    assert report(3, "oracle suite", ok, detail, sec), detail


# ---------------------------------------------------------------- 4


def rewrite_soundness():
    bad, worst = [], 0.0
    for rule in RULES:
        for seed in range(50):
            rng = np.random.default_rng(seed)
            d = rule.sample(rng)
            match = rule.find(d)
            if match is None:
                bad.append(f"{rule.name}#{seed} no match")
                continue
            env = bind_boxes(d, Environment(random_dims(rng, 2, 6)), rng, positive=True)
            before = eval_sum(DiagramSum.of(d), env)
            after = sum(float(c) * eval_sum(DiagramSum.of(t), env) for c, t in rule.apply(d, match))
            err = rel_err(after, before)
            worst = max(worst, err)
            if err > 1e-12:
                bad.append(f"{rule.name}#{seed} {err:.1e}")
    simp_worst = 0.0
    for case in CORPUS:
        s = Session.from_text(case.text)
        raw = derivative(s, case.wrt, second=case.second, raw=True)
        simple = simplify(raw)
        for trial in range(5):
            rng = np.random.default_rng(trial)
            env = random_environment(s.reg, random_dims(rng, 2, 6), rng, watch=(raw,))
            err = rel_err(eval_sum(simple, env), eval_sum(raw, env))
            simp_worst = max(simp_worst, err)
            if err > 1e-12:
                bad.append(f"simplify {case.name} {err:.1e}")
    ok = not bad
    detail = (f"{len(RULES)} rules x 50 samples, worst {worst:.1e}; simplify on {len(CORPUS)} derivatives, "
              f"worst {simp_worst:.1e}")
    return ok, detail + ("" if ok else "; " + ", ".join(bad[:10]))


def test_criterion_4_rewrite_soundness():
    ok, detail, sec = timed(rewrite_soundness)
    assert report(4, "rewrite soundness", ok, detail, sec), detail


# ---------------------------------------------------------------- 5


def structural_properties():
    problems = []
    for cup_left in (True, False):
        idm = Diagram.identity(["m"])
        if cup_left:
            z = compose_seq(compose_par(idm, Diagram.single(Cap("m"))), compose_par(Diagram.single(Cup("m")), idm))
        else:
            z = compose_seq(compose_par(Diagram.single(Cap("m")), idm), compose_par(idm, Diagram.single(Cup("m"))))
        if not sums_equal(simplify(DiagramSum.of(z)), DiagramSum.of(idm)):
            problems.append("snake")
    for seed in range(100):
        d = random_diagram(np.random.default_rng(1000 + seed))
        if not structural_equal(rotate180(rotate180(d)), d):
            problems.append(f"rotate180 #{seed}")
        if not structural_equal(deserialize(serialize(d)), d):
            problems.append(f"round trip #{seed}")
    for case in CORPUS:
        s = Session.from_text(case.text)
        raw = differentiate(s.lowered, VarRef(case.wrt), s.reg)
        if len(raw.terms) != count_occurrences(s.lowered, case.wrt):
            problems.append(f"term count {case.name}")
    ok = not problems
    detail = "snakes, 100 random diagrams (rotate180 + serialization), term counts on corpus"
    return ok, detail + ("" if ok else "; " + ", ".join(problems[:10]))


def test_criterion_5_structural():
    ok, detail, sec = timed(structural_properties)
    assert report(5, "structural properties", ok, detail, sec), detail


# ---------------------------------------------------------------- 6


def lowering_soundness():
    bad, worst = [], 0.0
    for case in CORPUS:
        s = Session.from_text(case.text)
        for trial in range(20):
            rng = np.random.default_rng(trial)
            dims = {k: int(rng.integers(2, 7)) for k in sorted(s.reg.dims)}
            env = random_environment(s.reg, dims, rng, watch=(s.lowered,))
            err = rel_err(eval_matrix(s.lowered, env), interpret(s.expr, dims, env.boxes))
            worst = max(worst, err)
            if err > 1e-12:
                bad.append(f"{case.name}#{trial} {err:.1e}")
    ok = not bad
    return ok, f"{len(CORPUS)} expressions x 20 trials, worst {worst:.1e}" + ("" if ok else "; " + ", ".join(bad[:10]))


def test_criterion_6_lowering():
    ok, detail, sec = timed(lowering_soundness)
    assert report(6, "lowering soundness", ok, detail, sec), detail


if __name__ == "__main__":
    failed = 0
    for fn in (test_criterion_1_identity_corpus, test_criterion_2_gadgets, test_criterion_3_oracle_suite,
               test_criterion_4_rewrite_soundness, test_criterion_5_structural, test_criterion_6_lowering):
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
