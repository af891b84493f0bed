"""Command-line front end.

Exit codes: 0 on success (or all checks passing), 1 when violations are
found, 2 on malformed or invalid input.
"""
from __future__ import annotations

import argparse
import csv
import io as _stdio
import sys
from typing import Optional, Sequence

import numpy as np

from . import harness
from .curve import CurveError, evaluate, reverse, variation
from .gradients import minimal_hajlasz, norms, tolerance
from .io import (InputError, curve_to_json, dumps, load_curve, load_family, load_function,
                 load_space)
from .modulus import CurveFamily, enumerate_step_curves, modulus
from .space import validate_space
from .stieltjes import integrate, sym_integrate

OK, VIOLATIONS, INPUT_ERROR = 0, 1, 2


def _checked_space(path):
    s = load_space(path)
    bad = validate_space(s)
    if bad is not None:
        raise InputError(f"{path}: {bad}")
    return s


def _p(value: str) -> float:
    p = float(value)
    if not p >= 1:
        raise argparse.ArgumentTypeError(f"p must be >= 1, got {value}")
    return p


def _jumps(value: str) -> int:
    j = int(value)
    if j < 0:
        raise argparse.ArgumentTypeError(f"max-jumps must be >= 0, got {value}")
    return j


def cmd_validate(args) -> tuple:
    s = load_space(args.space)
    bad = validate_space(s)
    report = {"command": "validate", "ok": bad is None, "violation": bad, "n": s.n,
              "exact": s.exact}
    return report, OK if bad is None else INPUT_ERROR


def cmd_curve(args) -> tuple:
    s = _checked_space(args.space)
    c = load_curve(args.curve, s)
    report = {"command": "curve", "domain": list(c.domain), "variation": variation(c),
              "jumps": [{"t": t, "size": size} for t, _, _, size in c.jumps()],
              "reversed": curve_to_json(reverse(c))}
    if args.t is not None:
        try:
            u = evaluate(c, args.t)
        except CurveError as exc:
            raise InputError(f"--t: {exc}") from exc
        report["value"] = u if isinstance(u, (int, np.integer)) else list(u)
    return report, OK


def cmd_integrate(args) -> tuple:
    s = _checked_space(args.space)
    c = load_curve(args.curve, s)
    f = load_function(args.function, s)
    if not c.is_step:
        raise InputError(f"{args.curve}: function tables can only be integrated along step curves")
    return {"command": "integrate", "integral": integrate(c, f),
            "sym_integral": sym_integrate(c, f), "variation": variation(c)}, OK


def cmd_modulus(args) -> tuple:
    s = _checked_space(args.space)
    fam = load_family(args.curves, s)
    res = modulus(fam, args.p, s)
    report = {"command": "modulus", "p": args.p, "family_size": len(fam), **res.to_json()}
    return report, OK


def cmd_hajlasz_min(args) -> tuple:
    s = _checked_space(args.space)
    f = load_function(args.function, s)
    g, norm = minimal_hajlasz(f, s, args.p)
    return {"command": "hajlasz-min", "p": args.p, "g": g, "norm": norm}, OK


def cmd_norms(args) -> tuple:
    s = _checked_space(args.space)
    f = load_function(args.function, s)
    arena = CurveFamily(enumerate_step_curves(s, args.max_jumps, args.depth), s)
    out = norms(f, s, args.p, arena)
    return {"command": "norms", "p": args.p, "max_jumps": args.max_jumps,
            "arena_size": len(arena), **out}, OK


def cmd_verify(args) -> tuple:
    names = harness.SUITES if args.suite == "all" else (args.suite,)
    result = harness.run(names, seed=args.seed, spaces=args.spaces, max_jumps=args.max_jumps,
                         p=args.p, tol=tolerance())
    result["command"] = "verify"
    return result, OK if result["ok"] else VIOLATIONS


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tccalc", description=__doc__.splitlines()[0])
    ap.add_argument("--format", choices=("json", "csv"), default="json")
    ap.add_argument("--out", help="write the report here instead of stdout")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("validate", help="check metric and weight axioms of a space file")
    sp.add_argument("--space", required=True)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("curve", help="variation, jumps and reversal of a curve")
    sp.add_argument("--space", required=True)
    sp.add_argument("--curve", required=True)
    sp.add_argument("--t", type=float, help="also evaluate the curve at this time")
    sp.set_defaults(func=cmd_curve)

    sp = sub.add_parser("integrate", help="curve and symmetrized integrals of a function")
    sp.add_argument("--space", required=True)
    sp.add_argument("--curve", required=True)
    sp.add_argument("--function", required=True)
    sp.set_defaults(func=cmd_integrate)

    sp = sub.add_parser("modulus", help="p-modulus of a curve family")
    sp.add_argument("--space", required=True)
    sp.add_argument("--curves", required=True)
    sp.add_argument("--p", type=_p, default=2.0)
    sp.set_defaults(func=cmd_modulus)

    sp = sub.add_parser("hajlasz-min", help="least L^p-norm Hajlasz gradient")
    sp.add_argument("--space", required=True)
    sp.add_argument("--function", required=True)
    sp.add_argument("--p", type=_p, default=2.0)
    sp.set_defaults(func=cmd_hajlasz_min)

    sp = sub.add_parser("norms", help="Hajlasz-Sobolev and arena test-curve norms")
    sp.add_argument("--space", required=True)
    sp.add_argument("--function", required=True)
    sp.add_argument("--p", type=_p, default=2.0)
    sp.add_argument("--max-jumps", type=_jumps, default=2)
    sp.add_argument("--depth", type=_jumps, default=None)
    sp.set_defaults(func=cmd_norms)

    sp = sub.add_parser("verify", help="run verification suites")
    sp.add_argument("--suite", choices=harness.SUITES + ("all",), default="all")
    sp.add_argument("--max-jumps", type=_jumps, default=2)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--spaces", type=_jumps, default=5)
    sp.add_argument("--p", type=_p, default=2.0)
    sp.set_defaults(func=cmd_verify)
    return ap


def _csv(report: dict) -> str:
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if report.get("command") == "verify":
        w.writerow(harness.CSV_COLUMNS)
        for row in harness.csv_rows(report):
            w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])
    else:
        w.writerow(("key", "value"))
        for key in sorted(report):
            if key != "command":
                w.writerow((key, dumps(report[key]).strip('"')))
    return buf.getvalue()


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return INPUT_ERROR if exc.code else OK
    try:
        report, code = args.func(args)
    except (InputError, CurveError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    text = _csv(report) if args.format == "csv" else dumps(report) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
