"""Command-line front end.

Exit codes: 0 success, 2 a tabulated claim was contradicted (still a
successful run), 1 error.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Sequence

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import parse_expr as sympy_parse

from . import catalog, deteq, liealg, linalg, numlab
from .prolong import VectorField, parse_vector_field
from .symcore import SymcoreError, to_text, x

EXIT_OK, EXIT_ERROR, EXIT_DISCREPANCY = 0, 1, 2


class UsageError(Exception):
    pass


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _param(text: str) -> tuple[str, Fraction]:
    name, sep, val = text.partition("=")
    if not sep or not name.strip():
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    return name.strip(), _rational(val.strip())


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def _pde(args) -> deteq.PDESpec:
    return deteq.PDESpec.from_text(args.g, None if args.nu is None else sp.Rational(args.nu.numerator,
                                                                                     args.nu.denominator))


def _params(args) -> dict:
    return {sp.Symbol(k): sp.Rational(v.numerator, v.denominator) for k, v in (args.param or [])}


def _vf_text(vf: VectorField) -> str:
    return ";".join(to_text(c) for c in vf.components)


# ---------------------------------------------------------------- commands

def cmd_deteq(args, out) -> int:
    pde = _pde(args)
    system = deteq.extract_determining(pde)
    payload = system.to_dict()
    eq = None
    if args.compare:
        if not pde.is_abstract:
            raise UsageError("--compare needs --g abstract")
        eq = deteq.equivalent_systems(system, deteq.reference_system(pde))
        payload["equivalent_to_reference"] = eq.equivalent
    if args.json:
        out.write(_dump(payload) + "\n")
    elif args.latex:
        out.write(system.to_latex() + "\n")
    else:
        for entry in payload["equations"]:
            out.write(f"[{entry['monomial']}]  {entry['equation']} = 0\n")
        if eq is not None:
            out.write(f"equivalent to the reference system: {'yes' if eq.equivalent else 'no'}\n")
    return EXIT_OK


def cmd_verify(args, out) -> int:
    pde = _pde(args)
    vf = parse_vector_field(args.vf)
    rep = deteq.verify_symmetry(pde, vf)
    if args.json:
        out.write(_dump({"g": to_text(pde.g), "field": _vf_text(vf), "symmetry": rep.is_symmetry,
                         "residual": to_text(rep.residual)}) + "\n")
    else:
        out.write(f"SYMMETRY: {'yes' if rep.is_symmetry else 'no'}\n")
        out.write(f"residual: {to_text(rep.residual)}\n")
    return EXIT_OK


def cmd_discover(args, out) -> int:
    pde = _pde(args)
    prm = _params(args)
    if prm:
        pde = pde.with_params(prm)
    basis = deteq.discover_symmetries(pde, args.deg)
    if args.json:
        out.write(_dump({"g": to_text(pde.g), "degree": args.deg, "dimension": len(basis),
                         "basis": [_vf_text(v) for v in basis]}) + "\n")
    else:
        out.write(f"dimension: {len(basis)}\n")
        for v in basis:
            out.write(_vf_text(v) + "\n")
    return EXIT_OK


def cmd_bracket(args, out) -> int:
    v1, v2 = parse_vector_field(args.vf1), parse_vector_field(args.vf2)
    w = liealg.bracket(v1, v2)
    if args.json:
        out.write(_dump({"vf1": _vf_text(v1), "vf2": _vf_text(v2), "bracket": _vf_text(w)}) + "\n")
    else:
        out.write(_vf_text(w) + "\n")
    return EXIT_OK


def _read_basis(path: str):
    """A structure-constant JSON document, a JSON list of fields (or
    {"fields": [...]}), or a text file with one field per line."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = None
    if isinstance(data, dict) and "entries" in data:
        return liealg.StructureConstants.from_dict(data), None
    if isinstance(data, dict) and "fields" in data:
        data = data["fields"]
    if isinstance(data, list):
        lines = [str(s) for s in data]
    else:
        lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln]
    if not lines:
        raise UsageError(f"{path}: no basis fields found")
    fields = [parse_vector_field(ln) for ln in lines]
    return liealg.structure_constants(fields), fields


def cmd_identify(args, out) -> int:
    sc, fields = _read_basis(args.basis)
    label, M = liealg.canonical_basis(sc)
    verified = M is not None and liealg.change_of_basis(sc, M) == liealg.target_tensor(label)
    payload = {
        "label": str(label),
        "structure_constants": sc.to_dict(),
        "witness": None if M is None else [[str(v) for v in row] for row in M],
        "witness_verified": verified,
        "profile": liealg.profile(sc),
    }
    if args.json:
        out.write(_dump(payload) + "\n")
    else:
        out.write(f"algebra: {label}\n")
        for line in sc.format():
            out.write(f"  {line}\n")
        if M is not None:
            out.write("witness basis (rows in the input basis):\n")
            for row in M:
                out.write("  [" + ", ".join(str(v) for v in row) + "]\n")
            out.write(f"witness verified: {'yes' if verified else 'no'}\n")
    return EXIT_OK


def cmd_classify(args, out) -> int:
    samples = None
    if args.param:
        samples = {}
        for k, v in args.param:
            samples.setdefault(sp.Symbol(k), []).append(v)
        for k, v in catalog.DEFAULT_SAMPLES.items():
            samples.setdefault(k, v)
    report = catalog.run_classification(args.nu, samples, workers=args.workers, cases=args.case or None)
    if args.json:
        out.write(report.to_json() + "\n")
    elif args.latex:
        out.write(report.to_latex())
    else:
        out.write(report.to_text())
    if not report.ok:
        return EXIT_ERROR
    return EXIT_DISCREPANCY if report.has_discrepancy else EXIT_OK


def cmd_numcheck(args, out) -> int:
    pde = _pde(args)
    vf = parse_vector_field(args.vf)
    prm = _params(args)
    gi = numlab.GImpl.from_expr(pde.g, prm)
    nu_num = float(args.nu) if args.nu is not None else args.nu_numeric
    jet_max = numlab.jet_residual_check(pde, vf, args.points, params=prm, g_impl=gi, nu_value=nu_num,
                                        seed=args.seed, u_range=(args.u_min, args.u_max))
    payload = {"g": to_text(pde.g), "field": _vf_text(vf), "jet_residual_max": jet_max,
               "symmetry_numeric": jet_max < 1e-9}
    if args.transport:
        grid = numlab.Grid(args.x_min, args.x_max, args.nx, args.t_final, args.nt)
        u0 = _initial(args.u0)
        sol = numlab.solve(nu_num, gi, u0, grid)
        res = numlab.invariance_transport_check(nu_num, gi, vf.subs(prm) if prm else vf, args.eps, grid,
                                                u0, sol=sol)
        payload["transport"] = res
        if args.csv:
            with open(args.csv, "w", encoding="utf-8") as fh:
                fh.write(sol.to_csv())
    if args.json:
        out.write(_dump(payload) + "\n")
    else:
        out.write(f"jet residual max: {jet_max:.3e}\n")
        out.write(f"SYMMETRY (numeric): {'yes' if payload['symmetry_numeric'] else 'no'}\n")
        if "transport" in payload:
            tr = payload["transport"]
            out.write(f"transport residual: {tr['residual']:.3e} (untransformed {tr['untransformed']:.3e}, "
                      f"valid {tr['valid_fraction']:.0%})\n")
    return EXIT_OK


def _initial(text: str):
    """Initial profile in x; sympy syntax so that sin, cos, ... are available."""
    try:
        e = sympy_parse(text, local_dict={"x": x})
    except (SyntaxError, TypeError, sp.SympifyError) as exc:
        raise UsageError(f"cannot parse --u0 {text!r}") from exc
    if e.free_symbols - {x}:
        raise UsageError("--u0 may only depend on x")
    f = sp.lambdify(x, e, modules="numpy")
    return lambda xs: np.broadcast_to(np.asarray(f(xs), dtype=float), np.shape(xs))


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="burgerslie",
                                 description="Lie point symmetries of nu*u_xx = u_t + g(u)*u_x")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp_, g_required=True):
        sp_.add_argument("--g", required=g_required, default="abstract",
                         help='g(u) in the expression grammar, or "abstract"')
        sp_.add_argument("--nu", type=_rational, default=None, help="positive rational nu (default: symbolic)")
        sp_.add_argument("--json", action="store_true")

    d = sub.add_parser("deteq", help="print the determining system")
    common(d, g_required=False)
    d.add_argument("--latex", action="store_true")
    d.add_argument("--compare", action="store_true", help="check equivalence with the reference system")
    d.set_defaults(func=cmd_deteq)

    v = sub.add_parser("verify", help="exact symmetry check of one field")
    common(v)
    v.add_argument("--vf", required=True, help='"xi;phi;eta"')
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("discover", help="polynomial-ansatz symmetry discovery")
    common(s)
    s.add_argument("--deg", type=int, default=2)
    s.add_argument("--param", type=_param, action="append", help="NAME=VALUE, repeatable")
    s.set_defaults(func=cmd_discover)

    b_ = sub.add_parser("bracket", help="Lie bracket of two fields")
    b_.add_argument("--vf1", required=True)
    b_.add_argument("--vf2", required=True)
    b_.add_argument("--json", action="store_true")
    b_.set_defaults(func=cmd_bracket)

    i = sub.add_parser("identify", help="identify the algebra spanned by a basis")
    i.add_argument("--basis", required=True, help="file: fields one per line, JSON list, or structure constants")
    i.add_argument("--json", action="store_true")
    i.set_defaults(func=cmd_identify)

    c = sub.add_parser("classify", help="verify the whole classification table")
    c.add_argument("--nu", type=_rational, default=None)
    fmt = c.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true")
    fmt.add_argument("--latex", action="store_true")
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--case", action="append", help="restrict to a case id, repeatable")
    c.add_argument("--param", type=_param, action="append", help="parameter sample NAME=VALUE, repeatable")
    c.set_defaults(func=cmd_classify)

    n = sub.add_parser("numcheck", help="numeric cross-checks of a field")
    common(n)
    n.add_argument("--vf", required=True)
    n.add_argument("--param", type=_param, action="append")
    n.add_argument("--nu-numeric", type=float, default=0.7, help="nu used when --nu is not given")
    n.add_argument("--points", type=int, default=200)
    n.add_argument("--seed", type=int, default=0)
    n.add_argument("--u-min", type=float, default=0.2)
    n.add_argument("--u-max", type=float, default=0.8)
    n.add_argument("--transport", action="store_true", help="also run the solution transport check")
    n.add_argument("--eps", type=float, default=0.1)
    n.add_argument("--u0", default="1/2 + sin(x)/4", help="initial profile in x (sympy syntax)")
    n.add_argument("--x-min", type=float, default=0.0)
    n.add_argument("--x-max", type=float, default=6.283185307179586)
    n.add_argument("--nx", type=int, default=64)
    n.add_argument("--t-final", type=float, default=0.5)
    n.add_argument("--nt", type=int, default=400)
    n.add_argument("--csv", help="write the computed solution to this CSV file")
    n.set_defaults(func=cmd_numcheck)
    return ap


def _validate(args) -> None:
    if getattr(args, "nu", None) is not None and args.nu <= 0:
        raise UsageError("--nu must be positive")
    if getattr(args, "deg", 0) < 0:
        raise UsageError("--deg must be non-negative")
    if getattr(args, "workers", 1) < 1:
        raise UsageError("--workers must be at least 1")
    if getattr(args, "points", 1) < 1:
        raise UsageError("--points must be at least 1")
    if getattr(args, "u0", None) is not None:
        _initial(args.u0)


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        _validate(args)
        return args.func(args, out)
    except (UsageError, SymcoreError, ValueError, KeyError, OSError, linalg.SingularMatrixError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
