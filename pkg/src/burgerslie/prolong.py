"""Point-symmetry generators on (x, t, u) and their second prolongation."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import sympy as sp

from . import linalg
from .symcore import (
    SymcoreError,
    diff_partial,
    identity_constraints,
    is_jet,
    jet,
    jet_order,
    normalize,
    parse_expr,
    t,
    to_latex,
    to_text,
    total_derivative,
    u,
    x,
)

__all__ = [
    "VectorField", "ProlongedField", "JetOrderError", "prolong2", "apply",
    "parse_vector_field", "coordinates_in_span", "linearly_independent",
]

_SECOND = ("xx", "xt", "tt")


class JetOrderError(SymcoreError):
    pass


@dataclass(frozen=True)
class VectorField:
    """xi d/dx + phi d/dt + eta d/du with coefficients in (x, t, u)."""

    xi: sp.Expr
    phi: sp.Expr
    eta: sp.Expr

    def __post_init__(self):
        for name in ("xi", "phi", "eta"):
            val = sp.sympify(getattr(self, name))
            if any(is_jet(s) for s in val.free_symbols):
                raise SymcoreError(f"{name} must not depend on jet coordinates: {val}")
            object.__setattr__(self, name, val)

    @classmethod
    def of(cls, xi=0, phi=0, eta=0) -> "VectorField":
        return cls(normalize(xi), normalize(phi), normalize(eta))

    @property
    def components(self) -> tuple[sp.Expr, sp.Expr, sp.Expr]:
        return self.xi, self.phi, self.eta

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField.of(*(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField.of(*(a - b for a, b in zip(self.components, other.components)))

    def __mul__(self, c) -> "VectorField":
        c = sp.sympify(c)
        return VectorField.of(*(c * a for a in self.components))

    __rmul__ = __mul__

    def __neg__(self) -> "VectorField":
        return self * -1

    def normalized(self) -> "VectorField":
        return VectorField.of(*self.components)

    def equals(self, other: "VectorField") -> bool:
        return all(normalize(a - b) == 0 for a, b in zip(self.components, other.components))

    def subs(self, rules) -> "VectorField":
        return VectorField.of(*(c.subs(rules) for c in self.components))

    def act(self, f) -> sp.Expr:
        """The field as a derivation on functions of (x, t, u)."""
        return self.xi * sp.diff(f, x) + self.phi * sp.diff(f, t) + self.eta * sp.diff(f, u)

    def is_zero(self) -> bool:
        return all(normalize(c) == 0 for c in self.components)

    def to_text(self) -> str:
        return "; ".join(to_text(normalize(c)) for c in self.components)

    def to_latex(self) -> str:
        terms = []
        for c, d in zip(self.components, (r"\partial_x", r"\partial_t", r"\partial_u")):
            c = normalize(c)
            if c == 0:
                continue
            if c == 1:
                terms.append(d)
            elif c == -1:
                terms.append("-" + d)
            else:
                s = to_latex(c)
                if c.is_Add:
                    s = rf"\left({s}\right)"
                terms.append(f"{s}\\,{d}")
        if not terms:
            return "0"
        return re.sub(r"\+ -\s*", "- ", " + ".join(terms))

    def __str__(self) -> str:
        return self.to_text()


def parse_vector_field(text: str) -> VectorField:
    """Parse ``"xi; phi; eta"``, e.g. ``"t; 0; 1"``."""
    parts = text.split(";")
    if len(parts) != 3:
        raise SymcoreError(f"a vector field needs three ';'-separated coefficients, got {len(parts)}")
    return VectorField.of(*(parse_expr(s) for s in parts))


@dataclass(frozen=True)
class ProlongedField:
    base: VectorField
    eta1: dict = field(default_factory=dict)
    eta2: dict = field(default_factory=dict)

    def coefficient(self, jet_symbol) -> sp.Expr:
        name = str(jet_symbol)[2:]
        if len(name) == 1:
            return self.eta1[name]
        if len(name) == 2:
            return self.eta2[name]
        raise JetOrderError(f"no prolongation coefficient for {jet_symbol}")


def prolong2(vf: VectorField) -> ProlongedField:
    """Second prolongation.

    eta1_i = D_i eta - (D_i xi) u_x - (D_i phi) u_t,
    eta2_ij = D_j eta1_i - (D_j xi) u_ix - (D_j phi) u_it.
    """
    D = {v: {"xi": total_derivative(vf.xi, v), "phi": total_derivative(vf.phi, v)} for v in "xt"}
    eta1_raw = {
        i: total_derivative(vf.eta, i) - D[i]["xi"] * jet("x") - D[i]["phi"] * jet("t")
        for i in "xt"
    }
    eta2 = {}
    for ij in _SECOND:
        i, j = ij
        eta2[ij] = normalize(
            total_derivative(eta1_raw[i], j) - D[j]["xi"] * jet(i + "x") - D[j]["phi"] * jet(i + "t")
        )
    eta1 = {i: normalize(v) for i, v in eta1_raw.items()}
    return ProlongedField(vf, eta1, eta2)


def apply(pf: ProlongedField, e) -> sp.Expr:
    """pr^(2) V applied to an expression of jet order at most 2."""
    e = sp.sympify(e)
    if jet_order(e) > 2:
        raise JetOrderError("second prolongation only acts on expressions of order <= 2")
    v = pf.base
    out = v.xi * diff_partial(e, x) + v.phi * diff_partial(e, t) + v.eta * diff_partial(e, u)
    for i in "xt":
        out += pf.eta1[i] * diff_partial(e, jet(i))
    for ij in _SECOND:
        out += pf.eta2[ij] * diff_partial(e, jet(ij))
    return normalize(out)


def _coefficient_unknowns(n: int) -> list[sp.Symbol]:
    return [sp.Dummy(f"c{i}") for i in range(n)]


def coordinates_in_span(basis: Sequence[VectorField], target: VectorField) -> list[Fraction] | None:
    """Rational c with sum c_k basis_k == target identically, or None.

    Coefficients may involve parameters (p, nu, ...); the combination must
    hold for all their values.
    """
    if not basis:
        return [] if target.is_zero() else None
    cs = _coefficient_unknowns(len(basis))
    exprs = [
        sum((c * comp[k] for c, comp in zip(cs, (v.components for v in basis))), sp.S.Zero)
        - target.components[k]
        for k in range(3)
    ]
    rows, rhs = identity_constraints(exprs, cs)
    if not rows:
        return [Fraction(0)] * len(basis)
    return linalg.solve(rows, rhs, len(basis))


def linearly_independent(fields: Sequence[VectorField]) -> bool:
    """Linear independence over the rationals."""
    if not fields:
        return True
    cs = _coefficient_unknowns(len(fields))
    exprs = [sum((c * v.components[k] for c, v in zip(cs, fields)), sp.S.Zero) for k in range(3)]
    rows, _ = identity_constraints(exprs, cs)
    return linalg.rank(rows) == len(fields) if rows else False
