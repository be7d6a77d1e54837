"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 capacity.
Inputs are JSON files (or inline JSON strings); outputs are JSON on stdout.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path


from . import __version__
from . import exact as ex
from .core_spaces import as_exponent
from .criteria import flip_witness, series_report
from .errors import CapacityError, InputError, StructureError, UnsupportedError
from .matalg import matrix_unit, matrix_units
from .perturbation import spatialize
from .simsys import norm_pS, p_bound, rep_matrix, system_from_json, system_to_json
from .spatial_check import is_spatial_rep
from .suites import FAIL, SUITES, run_suites
from .tensor_type import FamilyRecipe, StageSpec, spec_from_json

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_CAPACITY = 0, 1, 2, 3


def _load(arg):
    """Parse a JSON file path or an inline JSON document."""
    text = arg.strip()
    if not text.startswith(("{", "[")):
        try:
            text = Path(arg).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {arg}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON in {arg[:40]!r}: {exc}") from exc


def _dump(obj, out=None):
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _system(arg):
    obj = _load(arg)
    try:
        return system_from_json(obj)
    except (TypeError, AttributeError) as exc:
        raise InputError(f"malformed system: {exc}") from exc


def _element(args, d):
    if args.unit:
        try:
            j, k = (int(t) for t in args.unit.split(","))
        except ValueError as exc:
            raise InputError("--unit expects j,k") from exc
        return matrix_unit(d, j, k)
    if args.element is None:
        raise InputError("give an element (JSON matrix) or --unit j,k")
    try:
        return ex.matrix_from_json(_load(args.element))
    except (ValueError, TypeError) as exc:
        raise InputError(f"malformed element: {exc}") from exc


def cmd_norm(args):
    S = _system(args.system)
    x = _element(args, S.d)
    if x.shape[0] % S.d or x.shape[0] != x.shape[1]:
        raise InputError(f"element of shape {x.shape} does not fit d={S.d}")
    _dump(norm_pS(S, x, args.p).to_json(), args.out)
    return EXIT_OK


def cmd_pbound(args):
    iv = p_bound(_system(args.system), args.p)
    out = iv.to_json()
    if iv.exact_value is not None:
        out["exact"] = f"{iv.exact_value.numerator}/{iv.exact_value.denominator}"
    _dump(out, args.out)
    return EXIT_OK


def cmd_system(args):
    obj = _load(args.system)
    try:
        S = system_from_json(obj)
        violations = []
    except InputError as exc:
        msg = str(exc)
        if "invalid similarity system:" not in msg:
            raise
        violations = msg.split(":", 1)[1].strip().split(", ")
        S = None
    _dump({"ok": not violations, "violations": violations,
           "system": system_to_json(S) if S is not None else None}, args.out)
    return EXIT_OK if not violations else EXIT_FAIL


def _spec(arg, p=None):
    obj = _load(arg)
    if isinstance(obj, dict) and "family" in obj and "stages" not in obj:
        raise InputError("expected a stage spec with a 'stages' list")
    spec = spec_from_json(obj)
    if p is not None:
        spec = StageSpec(spec.systems, p)
    return spec


def cmd_flip(args):
    spec = _spec(args.spec, args.p)
    n = len(spec) if args.n is None else args.n
    _dump(flip_witness(spec, n).to_json(), args.out)
    return EXIT_OK


def cmd_classify(args):
    obj = _load(args.source)
    p = args.p if args.p is not None else 2
    if isinstance(obj, dict) and "stages" in obj:
        spec = spec_from_json(obj)
        rep = series_report(spec, p, len(spec) if args.n is None else args.n)
    else:
        rep = series_report(FamilyRecipe.from_json(obj), p, 20 if args.n is None else args.n)
    _dump(rep.to_json(), args.out)
    return EXIT_OK


def cmd_spatialize(args):
    S = _system(args.system)
    sp = spatialize(S, args.p)
    res = sp.residual
    _dump({
        "residual": str(res) if not isinstance(res, float) else res,
        "norms": sp.norms,
        "blocks": [{"label": str(lab), "beta": str(beta), "w": ex.matrix_to_json(w), "u": ex.matrix_to_json(u)}
                   for lab, beta, w, u in sp.blocks],
    }, args.out)
    return EXIT_OK


def cmd_spatial_check(args):
    S = _system(args.system)
    table = {jk: rep_matrix(S, e) for jk, e in matrix_units(S.d).items()}
    v = is_spatial_rep(table, S.d, args.p, S.measure())
    _dump({"spatial": v.spatial, "reason": v.reason, "partition": [sorted(s) for s in v.partition]}, args.out)
    return EXIT_OK if v.spatial else EXIT_FAIL


def _suite_names(sel):
    if sel == "all":
        return list(SUITES)
    if sel == "none":
        return []
    names = [s.strip() for s in sel.split(",") if s.strip()]
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise InputError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)}, all, none")
    return names


def build_report(names, seed):
    records = run_suites(names, seed)
    digest = hashlib.sha256(json.dumps({"suites": names, "seed": seed}, sort_keys=True).encode()).hexdigest()
    return {"tool": "lpuhf", "version": __version__, "input_digest": digest, "seed": seed,
            "suites": names, "records": [r.to_json() for r in records]}


def cmd_verify(args):
    names = _suite_names(args.suite)
    report = build_report(names, args.seed)
    out = args.out or "verify_report.json"
    _dump(report, out)
    counts = {s: sum(r["status"] == s for r in report["records"]) for s in ("PASS", "FAIL", "SKIP")}
    print(f"verify: {counts['PASS']} PASS, {counts['FAIL']} FAIL, {counts['SKIP']} SKIP -> {out}")
    for r in report["records"]:
        if r["status"] == FAIL:
            print(f"FAIL {r['id']}: {json.dumps(r['measured'], sort_keys=True)}")
    return EXIT_FAIL if counts["FAIL"] else EXIT_OK


def _exponent(s):
    try:
        return as_exponent(s, allow_inf=False)
    except InputError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser():
    ap = argparse.ArgumentParser(prog="lpuhf", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"lpuhf {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, with_p=True, default_p="2"):
        if with_p:
            p.add_argument("--p", type=_exponent, default=_exponent(default_p) if default_p else None,
                           help="exponent in [1, inf); rationals as n/d")
        p.add_argument("--out", help="write JSON here instead of stdout")

    p = sub.add_parser("norm", help="norm of an element in M_d^{p,S} (x) M_m")
    p.add_argument("system")
    p.add_argument("element", nargs="?")
    p.add_argument("--unit", help="use the matrix unit e_{j,k}, given as j,k")
    common(p)
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("pbound", help="p-bound of a similarity system")
    p.add_argument("system")
    common(p)
    p.set_defaults(func=cmd_pbound)

    p = sub.add_parser("system", help="system utilities")
    ssub = p.add_subparsers(dest="action", required=True)
    q = ssub.add_parser("validate", help="list violated system invariants")
    q.add_argument("system")
    common(q, with_p=False)
    q.set_defaults(func=cmd_system)

    p = sub.add_parser("flip", help="flip witness v_n and its norm in the doubled stage")
    p.add_argument("spec")
    p.add_argument("--n", type=int)
    common(p, default_p=None)
    p.set_defaults(func=cmd_flip)

    p = sub.add_parser("classify", help="series diagnostics for a family recipe or stage spec")
    p.add_argument("source")
    p.add_argument("--n", type=int)
    common(p, default_p=None)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("spatialize", help="split a diagonal system as w tau w^-1")
    p.add_argument("system")
    common(p)
    p.set_defaults(func=cmd_spatialize)

    p = sub.add_parser("spatial-check", help="is the representation of a system spatial")
    p.add_argument("system")
    common(p)
    p.set_defaults(func=cmd_spatial_check)

    p = sub.add_parser("verify", help="run verification suites and write a report")
    p.add_argument("--suite", default="all", help=f"all, none, or comma list of {', '.join(SUITES)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"capacity: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (InputError, StructureError, UnsupportedError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
