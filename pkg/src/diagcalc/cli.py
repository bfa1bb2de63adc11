"""Command-line driver.

Exit status: 0 success, 1 a derivative check failed, 2 bad input (syntax,
shape or usage), 3 an internal invariant broke.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .api import Session, SessionError, check_derivative, derivative
from .core.errors import DiagramError, ParseError
from .core.serialize import serialize
from .diff import DiffError
from .frontend.render import FORMATS, render
from .numeric.evaluate import EvalError, eval_matrix
from .numeric.oracle import DEFAULT_H, random_environment
from .rewrite.readback import NotExpressible, to_matrix_expr
from .rewrite.simplify import simplify

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(ValueError):
    pass


def parse_dims(text: str) -> dict:
    """``m=3,n=4`` -> ``{"m": 3, "n": 4}``."""
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        name, eq, value = part.partition("=")
        if not eq or not value.strip().isdigit() or int(value) < 1:
            raise UsageError(f"bad dimension binding {part!r}; expected name=size")
        out[name.strip()] = int(value)
    return out


def _read_source(path) -> str:
    if path in (None, "-"):
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _print_sum(s, as_json: bool, out):
    try:
        print(to_matrix_expr(s), file=out)
    except NotExpressible as exc:
        print(f"# not expressible as a matrix expression ({exc}); residual diagram:", file=out)
        print(render(exc.residual, "ascii"), file=out)
    if as_json:
        print(serialize(s), file=out)


def _bind_dims(session: Session, given: dict) -> dict:
    missing = sorted(set(session.reg.dims) - set(given))
    if missing:
        raise UsageError(f"no size given for dimension(s) {', '.join(missing)}")
    return {k: v for k, v in given.items() if k in session.reg.dims}


def cmd_derive(args, out) -> int:
    session = Session.from_text(_read_source(args.file))
    d = derivative(session, args.wrt, args.row_form, args.second)
    _print_sum(d, args.json, out)
    return EXIT_OK


def cmd_simplify(args, out) -> int:
    session = Session.from_text(_read_source(args.file))
    _print_sum(simplify(session.lowered), args.json, out)
    return EXIT_OK


def cmd_check(args, out) -> int:
    session = Session.from_text(_read_source(args.file))
    dims = _bind_dims(session, parse_dims(args.dims)) if args.dims else None
    report = check_derivative(session, args.wrt, dims=dims, trials=args.trials, tol=args.tol, seed=args.seed,
                              h=args.h, second=args.second, row_form=args.row_form)
    print(report.to_json() if args.json else report.to_text(), file=out)
    return EXIT_OK if report.passed else EXIT_CHECK


def cmd_render(args, out) -> int:
    session = Session.from_text(_read_source(args.file))
    s = session.lowered
    if args.wrt:
        s = derivative(session, args.wrt, args.row_form, args.second, raw=args.raw)
    elif not args.raw:
        s = simplify(s)
    print(render(s, args.format), file=out)
    return EXIT_OK


def cmd_eval(args, out) -> int:
    session = Session.from_text(_read_source(args.file))
    dims = _bind_dims(session, parse_dims(args.dims))
    rng = np.random.default_rng(args.seed)
    s = session.lowered
    env = random_environment(session.reg, dims, rng, watch=(s,), seed=args.seed)
    value = eval_matrix(s, env)
    doc = {"expr": session.text, "dims": dims, "seed": args.seed, "shape": list(value.shape),
           "value": value.tolist()}
    if args.json:
        print(json.dumps(doc, sort_keys=True), file=out)
    else:
        with np.printoptions(precision=6, suppress=True):
            print(value, file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="diagcalc", description="Matrix calculus with string diagrams.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("file", nargs="?", help="expression file (default: standard input)")
        sp.add_argument("--json", action="store_true", help="also print machine-readable output")

    def wrt_flags(sp):
        sp.add_argument("--wrt", help="variable to differentiate by (default: the only var)")
        sp.add_argument("--row-form", action="store_true", help="differentiate w.r.t. the transpose")
        sp.add_argument("--second", help="second derivative, e.g. x-row for the Hessian")

    sp = sub.add_parser("derive", help="print the simplified derivative")
    common(sp)
    wrt_flags(sp)
    sp.set_defaults(fn=cmd_derive)

    sp = sub.add_parser("simplify", help="print the simplified expression")
    common(sp)
    sp.set_defaults(fn=cmd_simplify)

    sp = sub.add_parser("check", help="compare the derivative with finite differences")
    common(sp)
    wrt_flags(sp)
    sp.add_argument("--dims", help="fixed sizes, e.g. m=3,n=4 (default: random 2..5 per trial)")
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--h", type=float, default=DEFAULT_H, help="finite-difference step")
    sp.set_defaults(fn=cmd_check)

    sp = sub.add_parser("render", help="draw the diagram (or its derivative with --wrt)")
    common(sp)
    wrt_flags(sp)
    sp.add_argument("--format", choices=FORMATS, default="ascii")
    sp.add_argument("--raw", action="store_true", help="skip simplification")
    sp.set_defaults(fn=cmd_render)

    sp = sub.add_parser("eval", help="evaluate on random matrices")
    common(sp)
    sp.add_argument("--dims", required=True, help="sizes, e.g. m=3,n=4")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=cmd_eval)
    return p


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.fn(args, out)
    except (ParseError, SessionError, UsageError, DiffError, OSError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT
    except EvalError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT
    except (DiagramError, AssertionError, RuntimeError) as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_INTERNAL


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
