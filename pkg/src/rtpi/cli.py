"""Command-line orchestration: verification suite, convergence sweeps,
Friedrichs constant sweeps and Gram dumps, with CSV/JSON emission.

Exit codes: 0 success (all checks pass), 1 verification failure,
2 configuration error.  All numeric CSV output uses 17-significant-digit
scientific notation so identical configurations produce byte-identical
files.
"""

import argparse
import json
import sys

import numpy as np

from . import fields as fl
from . import sobolev as sb
from . import verify as vf
from .refelem import reference_element


def _fmt(x):
    if x is None:
        return ""
    return f"{x:.16e}"


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)


def cmd_verify(args):
    config = vf.SuiteConfig(element=args.element, pmax=args.pmax,
                            seed=args.seed)
    checks = vf.run_suite(config)
    width = max(len(c["check_id"]) for c in checks)
    lines = []
    for c in checks:
        m = "" if c["measured"] is None else f"{c['measured']:.6g}"
        lines.append(f"{c['check_id']:<{width}}  {c['status']:<12} "
                     f"measured={m} tol={c['tolerance']:.6g}")
    print("\n".join(lines))
    nfail = sum(c["status"] == "fail" for c in checks)
    print(f"{len(checks)} checks, {nfail} failures")
    if args.out:
        _write(args.out, json.dumps(checks, indent=2, default=float) + "\n")
    return 1 if nfail else 0


CONVERGE_HEADER = ("element,field,p,err_l2,err_div_l2,err_hdiv,"
                   "err_dualhalf,err_dualhalf_div,slope_window")


def cmd_converge(args):
    element = reference_element(args.element)
    try:
        field = fl.field_by_name(element, args.field, seed=args.seed)
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    p_ref = (args.pmax + args.pref_offset) if args.pref_offset else None
    rows = vf.converge_rows(element, field, args.pmax, p_ref=p_ref,
                            operator=args.operator)
    out = [CONVERGE_HEADER]
    for r in rows:
        out.append(",".join([
            args.element, field.name, str(r["p"]), _fmt(r["err_l2"]),
            _fmt(r["err_div_l2"]), _fmt(r["err_hdiv"]),
            _fmt(r["err_dualhalf"]), _fmt(r["err_dualhalf_div"]),
            _fmt(r["slope_window"]),
        ]))
    _write(args.out, "\n".join(out) + "\n")
    return 0


def cmd_friedrichs(args):
    element = reference_element(args.element)
    out = ["p,c_bubble,c_full"]
    for p in range(1, args.pmax + 1):
        cb = vf.friedrichs_constant(element, p, "bubble") if p >= 2 else 0.0
        cf = vf.friedrichs_constant(element, p, "full")
        out.append(f"{p},{_fmt(cb)},{_fmt(cf)}")
    _write(args.out, "\n".join(out) + "\n")
    return 0


def cmd_gram(args):
    element = reference_element(args.element)
    p = args.p if args.p is not None else args.pmax
    try:
        gram = sb.make_gram(element, args.space, p, edge_index=args.edge)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = ["i,j,value"]
    for i, j, v in gram.rows():
        out.append(f"{i},{j},{_fmt(v)}")
    _write(args.out, "\n".join(out) + "\n")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(
        prog="rtpi",
        description="Projection-based p-interpolation on reference elements")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--element", choices=["tri", "quad"], default="quad")
        p.add_argument("--pmax", type=int, default=6)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--field", default="smooth_trig")

    pv = sub.add_parser("verify", help="run the verification suite")
    common(pv)
    pv.set_defaults(fn=cmd_verify)

    pg = sub.add_parser("converge", help="interpolation error sweep (CSV)")
    common(pg)
    pg.add_argument("--operator", choices=["new", "old"], default="new")
    pg.add_argument("--pref-offset", type=int, default=None,
                    help="reference-degree offset for dual norms "
                         "(default: auto, well past pmax)")
    pg.set_defaults(fn=cmd_converge)

    pf = sub.add_parser("friedrichs", help="discrete Friedrichs constants (CSV)")
    common(pf)
    pf.set_defaults(fn=cmd_friedrichs)

    pm = sub.add_parser("gram", help="dump a Gram matrix (CSV)")
    common(pm)
    pm.add_argument("--space", choices=sb.GRAM_KINDS, default="k-dualhalf-tilde")
    pm.add_argument("--p", type=int, default=None)
    pm.add_argument("--edge", type=int, default=0)
    pm.set_defaults(fn=cmd_gram)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.pmax < 1:
        print("error: pmax must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
