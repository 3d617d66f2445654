"""Exact symbolic kernel over the jet space of a scalar field u(x, t).

Expressions are immutable sympy trees. The atom alphabet is fixed:

* coordinates ``x, t, u``;
* jet coordinates ``u_x, u_t, u_xx, u_xt, ...`` (plain symbols, spelled with
  every ``x`` before every ``t`` so that ``u_tx`` and ``u_xt`` coincide);
* the abstract nonlinearity ``g(u)`` and its derivatives;
* unknown generator coefficients ``xi(x, t), phi(t), alpha(x, t), beta(x, t)``
  and their partial derivatives;
* parameters ``nu, p, b, eps, a0, a1, ...``;
* exact rationals.

``u^p`` with a symbolic exponent is the dedicated atom :class:`upow`, which
differentiates as ``p*u^p/u`` and never merges with integer powers of ``u``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import sympy as sp
from sympy.core.function import AppliedUndef
from sympy.polys.polyutils import parallel_dict_from_expr

__all__ = [
    "x", "t", "u", "nu", "p", "b", "eps", "g",
    "xi", "phi", "alpha", "beta", "upow",
    "SymcoreError", "ParseError", "UnknownIdentifierError", "ZeroDenominatorError",
    "SubstitutionCycleError", "NotPolynomialError", "EvaluationError",
    "GImpl", "jet", "jet_index", "is_jet", "jet_order", "jets_in", "ansatz_param",
    "parse_expr", "to_text", "to_latex", "normalize", "is_zero", "diff_partial",
    "total_derivative", "substitute", "collect", "eval_numeric", "compile_numeric",
    "identity_constraints",
]

x, t, u = sp.symbols("x t u")
nu, p, b, eps = sp.symbols("nu p b eps")
g = sp.Function("g")
xi = sp.Function("xi")
phi = sp.Function("phi")
alpha = sp.Function("alpha")
beta = sp.Function("beta")

UNKNOWN_ARGS = {"xi": (x, t), "phi": (t,), "alpha": (x, t), "beta": (x, t)}
_UNKNOWN = {"xi": xi, "phi": phi, "alpha": alpha, "beta": beta}
PARAMETERS = {"nu": nu, "p": p, "b": b, "eps": eps}


class SymcoreError(ValueError):
    pass


class ParseError(SymcoreError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class UnknownIdentifierError(ParseError):
    pass


class ZeroDenominatorError(SymcoreError, ZeroDivisionError):
    pass


class SubstitutionCycleError(SymcoreError):
    pass


class NotPolynomialError(SymcoreError):
    pass


class EvaluationError(SymcoreError):
    pass


class upow(sp.Function):
    """``base**exponent`` for a non-numeric exponent, kept as one atom."""

    nargs = 2

    @classmethod
    def eval(cls, base, exponent):
        if exponent.is_Rational:
            return base**exponent

    def fdiff(self, argindex=1):
        base, exponent = self.args
        if argindex == 1:
            return exponent * self / base
        return self * sp.log(base)

    def _latex(self, printer):
        base, exponent = self.args
        bs = printer._print(base)
        if not (base.is_Symbol or base.is_Number):
            bs = rf"\left({bs}\right)"
        return f"{bs}^{{{printer._print(exponent)}}}"


def ansatz_param(i: int) -> sp.Symbol:
    return sp.Symbol(f"a{i}")


# ---------------------------------------------------------------- jets

_JET_NAME = re.compile(r"u_([xt]+)$")


def jet(spelling: str) -> sp.Symbol:
    """Jet coordinate for a derivative multi-index such as ``"xt"``."""
    if not spelling or set(spelling) - {"x", "t"}:
        raise SymcoreError(f"bad jet index {spelling!r}")
    return sp.Symbol("u_" + "x" * spelling.count("x") + "t" * spelling.count("t"))


def jet_index(s) -> tuple[int, int] | None:
    """(number of x, number of t) for a jet symbol, else None."""
    if not isinstance(s, sp.Symbol):
        return None
    m = _JET_NAME.match(s.name)
    if not m:
        return None
    return m.group(1).count("x"), m.group(1).count("t")


def is_jet(s) -> bool:
    return jet_index(s) is not None


def jets_in(e) -> list[sp.Symbol]:
    js = [s for s in sp.sympify(e).free_symbols if is_jet(s)]
    return sorted(js, key=lambda s: (sum(jet_index(s)), s.name))


def jet_order(e) -> int:
    return max((sum(jet_index(s)) for s in jets_in(e)), default=0)


def _raise_index(s: sp.Symbol, var: str) -> sp.Symbol:
    nx, nt = jet_index(s)
    return jet("x" * (nx + (var == "x")) + "t" * (nt + (var == "t")))


# ---------------------------------------------------------------- normal form

def normalize(e) -> sp.Expr:
    """Canonical single quotient of expanded, gcd-reduced numerator and
    denominator. Zero is ``sympy.S.Zero``."""
    e = sp.sympify(e)
    if e.has(sp.zoo, sp.nan, sp.oo, -sp.oo):
        raise ZeroDenominatorError("expression has a zero denominator")
    out = sp.cancel(e)
    if out.has(sp.zoo, sp.nan):
        raise ZeroDenominatorError("expression has a zero denominator")
    return out


def is_zero(e) -> bool:
    return normalize(e) == 0


# ---------------------------------------------------------------- derivatives

def diff_partial(e, v) -> sp.Expr:
    """Partial derivative with every jet coordinate independent."""
    if not (isinstance(v, sp.Symbol)):
        raise SymcoreError(f"cannot differentiate with respect to {v!r}")
    return sp.diff(sp.sympify(e), v)


def total_derivative(e, i) -> sp.Expr:
    """D_i e for i in {x, t}: the partial in i, plus u_i d/du, plus
    u_{J+i} d/du_J over every jet coordinate u_J present in e."""
    e = sp.sympify(e)
    var = str(i)
    if var not in ("x", "t"):
        raise SymcoreError(f"total derivative needs x or t, got {i!r}")
    coord = x if var == "x" else t
    out = sp.diff(e, coord) + jet(var) * sp.diff(e, u)
    for s in jets_in(e):
        out += _raise_index(s, var) * sp.diff(e, s)
    return out


# ---------------------------------------------------------------- substitution

def _resolve_rules(rules: Mapping) -> dict:
    keys = [sp.sympify(k) for k in rules]
    values = {sp.sympify(k): sp.sympify(v) for k, v in rules.items()}
    deps = {k: {o for o in keys if o != k and values[k].has(o)} for k in keys}
    resolved: dict = {}
    state: dict = {}

    def visit(k, stack):
        if state.get(k) == "done":
            return
        if state.get(k) == "active":
            chain = " -> ".join(str(s) for s in stack + [k])
            raise SubstitutionCycleError(f"cyclic substitution rules: {chain}")
        state[k] = "active"
        for d in sorted(deps[k], key=str):
            visit(d, stack + [k])
        val = values[k]
        if deps[k]:
            val = val.subs({d: resolved[d] for d in deps[k]}, simultaneous=True)
        resolved[k] = val
        state[k] = "done"

    for k in sorted(keys, key=str):
        visit(k, [])
    return resolved


def substitute(e, rules: Mapping) -> sp.Expr:
    """Simultaneous substitution then normalize.

    Rule values are first resolved against each other, so chained rules act
    as if applied until no key atom remains. A rule may mention its own key
    (``u -> 1 + u``); cycles through two or more keys are rejected.
    """
    if not rules:
        return normalize(e)
    resolved = _resolve_rules(rules)
    return normalize(sp.sympify(e).subs(resolved, simultaneous=True))


# ---------------------------------------------------------------- collection

def collect(e, basis: Iterable) -> dict:
    """Split e into {monomial in the basis coordinates: coefficient}."""
    basis = sorted((sp.sympify(v) for v in basis), key=str)
    e = normalize(e)
    if e == 0:
        return {}
    num, den = sp.fraction(e)
    if any(den.has(v) for v in basis):
        raise NotPolynomialError(f"denominator depends on {basis}")
    if not basis:
        return {sp.S.One: e}
    try:
        poly = sp.Poly(num, *basis)
    except sp.PolynomialError as exc:
        raise NotPolynomialError(str(exc)) from exc
    out = {}
    for monom, coeff in poly.terms():
        m = sp.Mul(*[v**k for v, k in zip(basis, monom)])
        out[m] = normalize(coeff.as_expr() / den)
    return out


def identity_constraints(exprs: Sequence, unknowns: Sequence):
    """Linear conditions on ``unknowns`` making every expression vanish
    identically in all its other atoms.

    Each expression must be affine in the unknowns. Its numerator is expanded
    and split over monomials in the remaining atoms (x, t, u, log u, g(u), ...),
    which are treated as algebraically independent. Returns ``(rows, rhs)`` of
    Fractions with ``rows @ a == rhs``.
    """
    unknowns = list(unknowns)
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    for e in exprs:
        num = sp.expand(sp.fraction(sp.together(sp.sympify(e)))[0])
        if num == 0:
            continue
        try:
            poly = sp.Poly(num, *unknowns)
        except sp.PolynomialError as exc:
            raise NotPolynomialError(str(exc)) from exc
        if poly.total_degree() > 1:
            raise NotPolynomialError("expression is not affine in the unknowns")
        parts = [poly.coeff_monomial(tuple(int(i == j) for i in range(len(unknowns)))).as_expr()
                 for j in range(len(unknowns))]
        const = poly.coeff_monomial(tuple([0] * len(unknowns))).as_expr()
        dicts, _ = parallel_dict_from_expr([sp.expand(c) for c in parts + [const]])
        monomials = sorted(set().union(*[d.keys() for d in dicts]))
        for mono in monomials:
            vals = []
            for d in dicts:
                c = d.get(mono, 0)
                if not sp.sympify(c).is_Rational:
                    raise NotPolynomialError(f"non-rational coefficient {c}")
                vals.append(Fraction(int(sp.Rational(c).p), int(sp.Rational(c).q)))
            if any(vals):
                rows.append(vals[:-1])
                rhs.append(-vals[-1])
    return rows, rhs


# ---------------------------------------------------------------- numerics

@dataclass(frozen=True)
class GImpl:
    """Numeric g with its first two derivatives."""

    g: Callable[[float], float]
    dg: Callable[[float], float]
    d2g: Callable[[float], float]

    def derivative(self, k: int) -> Callable[[float], float]:
        if k > 2:
            raise EvaluationError("numeric g supports derivatives up to order 2")
        return (self.g, self.dg, self.d2g)[k]

    @classmethod
    def from_expr(cls, expr, params: Mapping | None = None) -> "GImpl":
        e = sp.sympify(expr).subs(dict(params or {}))
        fs = [compile_numeric(sp.diff(e, u, k)) for k in range(3)]
        return cls(*(lambda v, f=f: f({u: v}) for f in fs))


def _lookup(point: Mapping, node):
    if node in point:
        return float(point[node])
    name = str(node)
    if name in point:
        return float(point[name])
    raise EvaluationError(f"no value assigned to {node}")


def _g_order(node) -> tuple[int, object] | None:
    """(derivative order, argument) when node is a g-atom."""
    if isinstance(node, AppliedUndef) and node.func == g:
        return 0, node.args[0]
    if isinstance(node, sp.Derivative) and isinstance(node.expr, AppliedUndef) and node.expr.func == g:
        return node.derivative_count, node.expr.args[0]
    if isinstance(node, sp.Subs):
        inner = _g_order(node.expr)
        if inner is not None and len(node.variables) == 1 and inner[1] == node.variables[0]:
            return inner[0], node.point[0]
    return None


def compile_numeric(e, g_impl: GImpl | None = None) -> Callable[[Mapping], float]:
    """Return ``point -> float`` evaluating ``e`` by a tree walk."""
    e = sp.sympify(e)

    def ev(node, point):
        if node.is_Number:
            return float(node)
        if node in point or (node.is_Symbol and str(node) in point):
            return _lookup(point, node)
        if node.is_Symbol:
            raise EvaluationError(f"no value assigned to {node}")
        if node.is_Add:
            return math.fsum(ev(a, point) for a in node.args)
        if node.is_Mul:
            out = 1.0
            for a in node.args:
                out *= ev(a, point)
            return out
        if node.is_Pow:
            base = ev(node.base, point)
            if node.exp.is_Integer:
                k = int(node.exp)
                if k < 0 and base == 0.0:
                    raise EvaluationError("division by zero")
                return base**k
            return base ** ev(node.exp, point)
        if isinstance(node, upow):
            return ev(node.args[0], point) ** ev(node.args[1], point)
        if isinstance(node, sp.log):
            v = ev(node.args[0], point)
            if v <= 0:
                raise EvaluationError("log of a non-positive value")
            return math.log(v)
        if isinstance(node, sp.exp):
            return math.exp(ev(node.args[0], point))
        go = _g_order(node)
        if go is not None:
            if g_impl is None:
                raise EvaluationError("expression contains g but no numeric g was given")
            return g_impl.derivative(go[0])(ev(go[1], point))
        if isinstance(node, (AppliedUndef, sp.Derivative)):
            return _lookup(point, node)
        raise EvaluationError(f"cannot evaluate {node.func}")

    def run(point: Mapping) -> float:
        try:
            return ev(e, point)
        except ZeroDivisionError as exc:
            raise EvaluationError("division by zero") from exc

    return run


def eval_numeric(e, point: Mapping, g_impl: GImpl | None = None) -> float:
    return compile_numeric(e, g_impl)(point)


# ---------------------------------------------------------------- parsing

_ALLOWED = (
    "x, t, u, u_<x|t>+, g, g(expr), g', g'', nu, p, b, eps, a<digits>, "
    "xi, phi, alpha, beta (optionally with _<x|t>+), log(expr), exp(expr)"
)

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<id>[A-Za-z][A-Za-z0-9_]*'*)|(?P<op>[-+*/^();]))"
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    offset: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    byte = lambda i: len(text[:i].encode("utf-8"))  # noqa: E731
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", byte(pos))
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), byte(m.start(kind))))
        pos = m.end()
    toks.append(_Tok("end", "", byte(len(text))))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def eat(self, text: str | None = None, kind: str | None = None) -> _Tok:
        tok = self.tok
        if (text is not None and tok.text != text) or (kind is not None and tok.kind != kind):
            want = text or kind
            got = tok.text or "end of input"
            raise ParseError(f"expected {want!r}, found {got!r}", tok.offset)
        self.i += 1
        return tok

    def parse(self):
        e = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.offset)
        return e

    def expr(self):
        out = self.term()
        while self.tok.text in ("+", "-"):
            op = self.eat().text
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self):
        out = self.unary()
        while self.tok.text in ("*", "/"):
            op = self.eat()
            rhs = self.unary()
            if op.text == "*":
                out = out * rhs
            else:
                if normalize(rhs) == 0:
                    raise ZeroDenominatorError(f"division by zero (at byte {op.offset})")
                out = out / rhs
        return out

    def unary(self):
        if self.tok.text == "-":
            self.eat()
            return -self.unary()
        if self.tok.text == "+":
            self.eat()
            return self.unary()
        return self.power()

    def power(self):
        base = self.base()
        if self.tok.text != "^":
            return base
        caret = self.eat()
        if self.tok.text == "(":
            self.eat("(")
            ex = normalize(self.expr())
            self.eat(")")
        elif self.tok.text == "-":
            self.eat()
            ex = -sp.Integer(self.eat(kind="num").text)
        elif self.tok.kind == "num":
            text = self.eat().text
            if "." in text:
                raise ParseError("exponent must be an integer", caret.offset)
            ex = sp.Integer(text)
        elif self.tok.kind == "id":
            ex = self.ident(self.eat())
        else:
            raise ParseError("bad exponent", self.tok.offset)
        if ex.is_Rational:
            if ex.is_negative and normalize(base) == 0:
                raise ZeroDenominatorError(f"zero to a negative power (at byte {caret.offset})")
            return base**ex
        if any(is_jet(s) or s in (x, t, u) for s in ex.free_symbols):
            raise ParseError("exponent may only contain parameters", caret.offset)
        return upow(base, ex)

    def base(self):
        tok = self.tok
        if tok.kind == "num":
            self.eat()
            return sp.Rational(tok.text)
        if tok.text == "(":
            self.eat()
            e = self.expr()
            self.eat(")")
            return e
        if tok.kind == "id":
            self.eat()
            return self.ident(tok)
        raise ParseError(f"unexpected {tok.text or 'end of input'!r}", tok.offset)

    def call_arg(self):
        self.eat("(")
        e = self.expr()
        self.eat(")")
        return e

    def ident(self, tok: _Tok):
        name = tok.text
        if name in ("x", "t", "u"):
            return {"x": x, "t": t, "u": u}[name]
        if name in PARAMETERS:
            return PARAMETERS[name]
        if re.fullmatch(r"a\d+", name):
            return sp.Symbol(name)
        if _JET_NAME.match(name):
            return jet(name[2:])
        m = re.fullmatch(r"g('*)", name)
        if m:
            k = len(m.group(1))
            arg = self.call_arg() if self.tok.text == "(" else u
            e = sp.diff(g(u), u, k) if k else g(u)
            return e if arg == u else e.subs(u, arg)
        if name in ("log", "exp"):
            if self.tok.text != "(":
                raise ParseError(f"{name} needs a parenthesised argument", tok.offset)
            arg = self.call_arg()
            return sp.log(arg) if name == "log" else sp.exp(arg)
        m = re.fullmatch(r"(xi|phi|alpha|beta)(?:_([xt]+))?", name)
        if m:
            fn, idx = m.group(1), m.group(2) or ""
            args = UNKNOWN_ARGS[fn]
            if "x" in idx and x not in args:
                raise ParseError(f"{fn} does not depend on x", tok.offset)
            base = _UNKNOWN[fn](*args)
            if not idx:
                return base
            nx, nt = idx.count("x"), idx.count("t")
            spec = [(v, k) for v, k in ((x, nx), (t, nt)) if k]
            return sp.Derivative(base, *spec)
        raise UnknownIdentifierError(f"unknown identifier {name!r}; permitted: {_ALLOWED}", tok.offset)


def parse_expr(text: str) -> sp.Expr:
    """Parse the expression grammar into a normalized expression."""
    if not text.isascii():
        bad = next(i for i, c in enumerate(text) if not c.isascii())
        raise ParseError(f"non-ASCII character {text[bad]!r}", len(text[:bad].encode("utf-8")))
    return normalize(_Parser(text).parse())


# ---------------------------------------------------------------- printing

_PREC_SUM, _PREC_PROD, _PREC_POW, _PREC_ATOM = 0, 1, 2, 3


def _unknown_text(node) -> str | None:
    if isinstance(node, AppliedUndef) and node.func.__name__ in UNKNOWN_ARGS:
        return node.func.__name__
    if isinstance(node, sp.Derivative) and isinstance(node.expr, AppliedUndef):
        name = node.expr.func.__name__
        if name in UNKNOWN_ARGS:
            idx = "".join(str(v) * k for v, k in node.variable_count)
            idx = "x" * idx.count("x") + "t" * idx.count("t")
            return f"{name}_{idx}"
    return None


def _paren(s: str, prec: int, need: int) -> str:
    return f"({s})" if prec < need else s


def _txt(e) -> tuple[str, int]:
    if e.is_Integer:
        return (str(e), _PREC_ATOM) if e >= 0 else (str(e), _PREC_SUM)
    if e.is_Rational:
        s = f"{e.p}/{e.q}"
        return s, _PREC_PROD if e > 0 else _PREC_SUM
    if e.is_Symbol:
        return e.name, _PREC_ATOM
    if e.is_Add:
        parts = []
        for i, term in enumerate(e.as_ordered_terms()):
            s, _ = _txt(term)
            if i and s.startswith("-"):
                parts.append(" - " + s[1:])
            elif i:
                parts.append(" + " + s)
            else:
                parts.append(s)
        return "".join(parts), _PREC_SUM
    if e.is_Mul:
        coeff, rest = e.as_coeff_Mul()
        if coeff < 0:
            s, prec = _txt(-e)
            return "-" + _paren(s, prec, _PREC_PROD), _PREC_SUM
        num, den = [], []
        if coeff != 1:
            if coeff.p != 1 or rest == 1:
                num.append(str(coeff.p))
            if coeff.q != 1:
                den.append(str(coeff.q))
        for f in sp.Mul.make_args(rest):
            if f.is_Pow and f.exp.is_Integer and f.exp < 0:
                s, prec = _txt(f.base ** (-f.exp))
                den.append(_paren(s, prec, _PREC_POW))
            else:
                s, prec = _txt(f)
                num.append(_paren(s, prec, _PREC_POW))
        ns = "*".join(num) if num else "1"
        if not den:
            return ns, _PREC_PROD
        ds = den[0] if len(den) == 1 else "(" + "*".join(den) + ")"
        return f"{ns}/{ds}", _PREC_PROD
    if e.is_Pow:
        if e.exp.is_Integer and e.exp < 0:
            s, prec = _txt(e.base ** (-e.exp))
            return f"1/{_paren(s, prec, _PREC_POW)}", _PREC_PROD
        if e.exp.is_Integer:
            s, prec = _txt(e.base)
            return f"{_paren(s, prec, _PREC_ATOM)}^{e.exp}", _PREC_POW
        if e.exp.is_Rational:
            s, prec = _txt(e.base)
            return f"{_paren(s, prec, _PREC_ATOM)}^({e.exp.p}/{e.exp.q})", _PREC_POW
    if isinstance(e, upow):
        base, ex = e.args
        bs, bp = _txt(base)
        es, ep = _txt(ex)
        return f"{_paren(bs, bp, _PREC_ATOM)}^{_paren(es, ep, _PREC_ATOM)}", _PREC_POW
    if isinstance(e, (sp.log, sp.exp)):
        return f"{type(e).__name__}({_txt(e.args[0])[0]})", _PREC_ATOM
    go = _g_order(e)
    if go is not None:
        name = "g" + "'" * go[0]
        return (name if go[1] == u else f"{name}({_txt(go[1])[0]})"), _PREC_ATOM
    name = _unknown_text(e)
    if name is not None:
        return name, _PREC_ATOM
    raise SymcoreError(f"cannot print {e!r} in the expression grammar")


def to_text(e) -> str:
    """Print in the parser's grammar; ``parse_expr(to_text(e))`` normalizes to e."""
    return _txt(sp.sympify(e))[0]


_LATEX_NAMES = {nu: r"\nu", eps: r"\varepsilon"}


def to_latex(e) -> str:
    e = sp.sympify(e)
    names = dict(_LATEX_NAMES)
    for s in e.free_symbols:
        idx = jet_index(s)
        if idx is not None:
            names[s] = "u_{" + "x" * idx[0] + "t" * idx[1] + "}"
    gp = {}
    for node in sp.preorder_traversal(e):
        go = _g_order(node)
        if go is not None and go[1] == u:
            gp[node] = sp.Symbol("g" + "'" * go[0] + "(u)")
    if gp:
        e = e.xreplace(gp)
    return sp.latex(e, symbol_names=names)
