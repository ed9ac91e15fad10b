"""Command-line front end: ``weylore <command> ...``.

Exit codes: 0 success / SOLVED / bound satisfied, 2 UNSOLVABLE / bound
violated, 3 undecided at cap / not stabilized, 1 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from .errors import NotStabilized, ParseError, WeylError
from .hilbert import ZERO, ModulePresentation, bezout_check, hilbert_values, hk_fit
from .kernel import field_from_tag
from .matops import LinearSystem, left_quasi_inverse, mat_mul
from .ore import FractionContext, common_multiple, syzygy
from .parse import parse_operator
from .solver import SOLVED, UNSOLVABLE, ansatz_solve, decide_solve
from .weyl import filtration_degree

EXIT_OK, EXIT_USAGE, EXIT_NEGATIVE, EXIT_UNDECIDED = 0, 1, 2, 3


class _Usage(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    return str(obj)


def _emit(args, payload: dict, text: str):
    if args.json:
        print(json.dumps(payload, sort_keys=True, default=_jsonable))
    else:
        print(text)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("ORE_SEED")
    return int(env) if env else 0


def _parse_K(text):
    if text is None or text.strip() == "":
        return frozenset()
    return frozenset(int(t) for t in text.split(",") if t.strip())


def _rows(args, texts):
    """Matrix rows given as comma-separated expressions."""
    rows = [[parse_operator(e, args.m, args.field) for e in t.split(",")] for t in texts]
    if len({len(r) for r in rows}) > 1:
        raise _Usage("matrix rows have different lengths")
    return rows


def _need_m(args):
    if args.m is None:
        raise _Usage("--m is required")


def _read_lines(path):
    with open(path) as fh:
        return [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]


# --- commands --------------------------------------------------------------------------------

def cmd_eval(args):
    _need_m(args)
    exprs = list(args.expr) + (_read_lines(args.file) if args.file else [])
    if not exprs:
        raise _Usage("nothing to evaluate")
    ops = [parse_operator(e, args.m, args.field) for e in exprs]
    _emit(args, {"result": [str(a) for a in ops]}, "\n".join(str(a) for a in ops))
    return EXIT_OK


def cmd_mul(args):
    _need_m(args)
    exprs = list(args.expr) + (_read_lines(args.file) if args.file else [])
    if not exprs:
        raise _Usage("nothing to multiply")
    acc = None
    for e in exprs:
        a = parse_operator(e, args.m, args.field)
        acc = a if acc is None else acc * a
    _emit(args, {"result": str(acc)}, str(acc))
    return EXIT_OK


def cmd_deg(args):
    _need_m(args)
    a = parse_operator(args.expr, args.m, args.field)
    K = _parse_K(args.K) if args.K is not None else None
    value = filtration_degree(a, args.kind, K)
    _emit(args, {"result": value, "kind": args.kind}, str(value))
    return EXIT_OK


def cmd_syz(args):
    _need_m(args)
    B = _rows(args, args.rows)
    K = _parse_K(args.K) if args.K is not None else None
    c = syzygy(B, args.side, K, max_degree=args.max_degree)
    if c is None:
        _emit(args, {"status": "UNDECIDED_AT_CAP", "result": None}, "no syzygy within degree cap")
        return EXIT_UNDECIDED
    _emit(args, {"status": "FOUND", "result": [str(e) for e in c]}, ", ".join(str(e) for e in c))
    return EXIT_OK


def cmd_clm(args):
    _need_m(args)
    bs = [parse_operator(e, args.m, args.field) for e in args.expr]
    K = _parse_K(args.K) if args.K is not None else None
    cs, value = common_multiple(bs, args.side, K)
    _emit(args, {"result": [str(c) for c in cs], "multiple": str(value)},
          ", ".join(str(c) for c in cs) + f"\nmultiple: {value}")
    return EXIT_OK


def cmd_qinv(args):
    _need_m(args)
    B = _rows(args, args.rows)
    C = left_quasi_inverse(B)
    CB = mat_mul(C, B)
    diag = [str(CB[i][i]) for i in range(len(CB))]
    text = "\n".join(", ".join(str(e) for e in row) for row in C)
    _emit(args, {"result": [[str(e) for e in row] for row in C], "diagonal": diag},
          text + "\ndiagonal: " + ", ".join(diag))
    return EXIT_OK


def _load_system(path):
    with open(path) as fh:
        data = json.load(fh)
    try:
        m = int(data["m"])
        field = field_from_tag(data.get("field", "q"))
        K = frozenset(int(k) for k in data.get("K_den", []))
        A = [[parse_operator(e, m, field) for e in row] for row in data["A"]]
        rhs = [parse_operator(e, m, field) for e in data["rhs"]]
    except KeyError as exc:
        raise _Usage(f"system file lacks key {exc}") from None
    if any(not 1 <= k <= m for k in K):
        raise _Usage("K_den must lie in 1..m")
    return LinearSystem(A, rhs, FractionContext.Q(m, K))


def cmd_solve(args):
    if not args.file:
        raise _Usage("solve needs --file")
    sys_ = _load_system(args.file)
    if args.method == "ansatz":
        top = args.max_degree if args.max_degree is not None else 8
        out = ansatz_solve(sys_, degree_schedule=range(top + 1))
    else:
        out = decide_solve(sys_, seed=_seed(args))
    sol = [str(v) for v in out.solution] if out.solution is not None else None
    payload = {"status": out.status, "solution": sol, "certificates": out.certificates}
    text = out.status if sol is None else out.status + "\n" + "\n".join(
        f"V{i + 1} = {v}" for i, v in enumerate(sol))
    _emit(args, payload, text)
    if out.status == SOLVED:
        return EXIT_OK
    return EXIT_NEGATIVE if out.status == UNSOLVABLE else EXIT_UNDECIDED


def _load_module(args):
    if args.file:
        with open(args.file) as fh:
            data = json.load(fh)
        m = int(data["m"])
        field = field_from_tag(data.get("field", "q"))
        gens = [[parse_operator(e, m, field) for e in row] for row in data["generators"]]
        return ModulePresentation(m, gens, field)
    _need_m(args)
    if not args.rows:
        raise _Usage("give generator rows or --file")
    return ModulePresentation(args.m, _rows(args, args.rows), args.field)


def _poly_text(poly):
    terms = [f"{c}*z^{e}" if e else str(c) for e, c in enumerate(poly) if c]
    return " + ".join(reversed(terms)) or "0"


def cmd_hk(args):
    L = _load_module(args)
    hf, info = hilbert_values(L, args.zmax, seed=_seed(args), return_info=True)
    t, l, poly = hk_fit(hf)
    payload = {"hf": hf, "t": "ZERO" if t == ZERO else t, "l": str(l),
               "poly": [str(c) for c in poly], "certificates": info}
    text = f"HF: {hf}\nt = {'ZERO' if t == ZERO else t}, l = {l}\npoly: {_poly_text(poly)}"
    _emit(args, payload, text)
    return EXIT_OK


def cmd_bezout(args):
    L = _load_module(args)
    rep = bezout_check(L, args.zmax, seed=_seed(args))
    t = "ZERO" if rep.t == ZERO else rep.t
    payload = {"hf": [v for _, v in rep.hf], "t": t, "l": str(rep.l), "bounds": rep.bounds,
               "certificates": rep.notes}
    text = f"t = {t}, l = {rep.l}\nbounds: {rep.bounds}"
    _emit(args, payload, text)
    return EXIT_OK if rep.bounds.get("satisfied") else EXIT_NEGATIVE


# --- parser ------------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--field", default=argparse.SUPPRESS, help="q or fp:<prime>")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
    common.add_argument("--m", type=int, default=argparse.SUPPRESS, help="number of variables")
    common.add_argument("--max-degree", type=int, default=argparse.SUPPRESS)
    common.add_argument("--file", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="weylore", parents=[common],
                                     description="Linear algebra over Weyl algebra fractions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="normal-order expressions")
    p.add_argument("expr", nargs="*")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("mul", parents=[common], help="product of expressions, left to right")
    p.add_argument("expr", nargs="*")
    p.set_defaults(func=cmd_mul)

    p = sub.add_parser("deg", parents=[common], help="filtration degree")
    p.add_argument("expr")
    p.add_argument("--kind", default="bernstein", choices=["bernstein", "ordD", "ordK", "degK"])
    p.add_argument("--K", default=None, help="comma-separated indices")
    p.set_defaults(func=cmd_deg)

    p = sub.add_parser("syz", parents=[common], help="syzygy of a matrix (rows: 'a,b,...')")
    p.add_argument("rows", nargs="+")
    p.add_argument("--side", default="right", choices=["right", "left"])
    p.add_argument("--K", default=None)
    p.set_defaults(func=cmd_syz)

    p = sub.add_parser("clm", parents=[common], help="common multiple")
    p.add_argument("expr", nargs="+")
    p.add_argument("--side", default="left", choices=["left", "right"])
    p.add_argument("--K", default=None)
    p.set_defaults(func=cmd_clm)

    p = sub.add_parser("qinv", parents=[common], help="left quasi-inverse (rows: 'a,b,...')")
    p.add_argument("rows", nargs="+")
    p.set_defaults(func=cmd_qinv)

    p = sub.add_parser("solve", parents=[common], help="solve a system file")
    p.add_argument("--method", default="elim", choices=["elim", "ansatz"])
    p.set_defaults(func=cmd_solve)

    for name, func, helptext in (("hk", cmd_hk, "Hilbert-Kolchin polynomial"),
                                 ("bezout", cmd_bezout, "check the Bezout-type bound")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("rows", nargs="*")
        p.add_argument("--zmax", type=int, default=8)
        p.set_defaults(func=func)
    return parser


_DEFAULTS = {"field": "q", "seed": None, "json": False, "m": None, "max_degree": None,
             "file": None}


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    for k, v in _DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    try:
        args.field = field_from_tag(args.field)
        return args.func(args)
    except (ParseError, _Usage, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotStabilized as exc:
        print(f"not stabilized: {exc}", file=sys.stderr)
        return EXIT_UNDECIDED
    except WeylError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
