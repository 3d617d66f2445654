"""Invariance residuals, determining equations, verification and discovery of
point symmetries for nu*u_xx = u_t + g(u)*u_x."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import sympy as sp
from sympy.core.function import AppliedUndef

from . import linalg
from .prolong import VectorField, apply, prolong2
from .symcore import (
    SymcoreError,
    alpha,
    ansatz_param,
    beta,
    collect,
    g,
    identity_constraints,
    jet,
    jet_index,
    jets_in,
    normalize,
    nu,
    parse_expr,
    phi,
    t,
    to_latex,
    to_text,
    total_derivative,
    u,
    x,
    xi,
)

__all__ = [
    "PDESpec", "DeterminingSystem", "SymmetryReport", "EquivalenceResult",
    "DeterminingError", "MismatchedUnknownsError", "DiscoveryError",
    "point_ansatz", "reference_system", "invariance_residual", "on_solution_manifold",
    "extract_determining", "equivalent_systems", "verify_symmetry",
    "discover_symmetries", "discover_over_samples", "polynomial_ansatz",
]

_UNKNOWN_NAMES = ("xi", "phi", "alpha", "beta")
MAX_DEGREE = 3


class DeterminingError(SymcoreError):
    pass


class MismatchedUnknownsError(DeterminingError):
    pass


class DiscoveryError(DeterminingError):
    pass


@dataclass(frozen=True)
class PDESpec:
    """nu*u_xx = u_t + g(u)*u_x with nu > 0 and g'(u) != 0."""

    g: sp.Expr = g(u)
    nu: sp.Expr = nu

    def __post_init__(self):
        gv = sp.sympify(self.g)
        nv = sp.sympify(self.nu)
        if nv.is_number and not nv > 0:
            raise DeterminingError(f"nu must be positive, got {nv}")
        if not self._abstract(gv) and normalize(sp.diff(gv, u)) == 0:
            raise DeterminingError(f"g must depend on u (g' != 0), got {gv}")
        if any(s in gv.free_symbols for s in (x, t)) or jets_in(gv):
            raise DeterminingError("g may only depend on u and parameters")
        object.__setattr__(self, "g", gv)
        object.__setattr__(self, "nu", nv)

    @staticmethod
    def _abstract(gv) -> bool:
        return gv.has(g)

    @classmethod
    def from_text(cls, g_text: str = "abstract", nu_value=None) -> "PDESpec":
        gv = g(u) if g_text.strip() in ("abstract", "g", "g(u)") else parse_expr(g_text)
        return cls(gv, nu if nu_value is None else sp.Rational(nu_value))

    @property
    def is_abstract(self) -> bool:
        return self._abstract(self.g)

    @property
    def F(self) -> sp.Expr:
        return self.nu * jet("xx") - jet("t") - self.g * jet("x")

    @property
    def u_t_rule(self) -> sp.Expr:
        return self.nu * jet("xx") - self.g * jet("x")

    @property
    def parameters(self) -> set:
        return {s for s in self.g.free_symbols if s != u}

    def with_params(self, values) -> "PDESpec":
        return PDESpec(normalize(self.g.subs(values)), self.nu)


def point_ansatz() -> VectorField:
    """xi(x,t) d/dx + phi(t) d/dt + (alpha(x,t) u + beta(x,t)) d/du."""
    return VectorField(xi(x, t), phi(t), alpha(x, t) * u + beta(x, t))


def on_solution_manifold(expr, pde: PDESpec) -> sp.Expr:
    """Eliminate every jet coordinate carrying a t-derivative using
    u_t = nu*u_xx - g*u_x and its total derivatives."""
    rhs = pde.u_t_rule
    memo: dict[tuple[int, int], sp.Expr] = {}

    def rule(nx: int, nt: int) -> sp.Expr:
        if (nx, nt) in memo:
            return memo[nx, nt]
        if nt == 1:
            out = rhs
            for _ in range(nx):
                out = total_derivative(out, "x")
        else:
            out = reduce(total_derivative(rule(nx, nt - 1), "t"))
        memo[nx, nt] = out
        return out

    def reduce(e):
        timed = [s for s in jets_in(e) if jet_index(s)[1] > 0]
        if not timed:
            return e
        return e.xreplace({s: rule(*jet_index(s)) for s in timed})

    return normalize(reduce(sp.sympify(expr)))


def invariance_residual(pde: PDESpec, vf: VectorField | None = None) -> sp.Expr:
    """pr^(2) V applied to F, restricted to the solution manifold."""
    vf = point_ansatz() if vf is None else vf
    return on_solution_manifold(apply(prolong2(vf), pde.F), pde)


# ---------------------------------------------------------------- systems

def _unknown_atoms(e) -> set:
    """Unknown-function atoms: derivatives of xi, phi, alpha, beta and the
    functions themselves where they occur outside a derivative."""
    e = sp.sympify(e)
    ders = {d for d in e.atoms(sp.Derivative)
            if isinstance(d.expr, AppliedUndef) and d.expr.func.__name__ in _UNKNOWN_NAMES}
    rest = e.xreplace({d: sp.Dummy() for d in ders})
    funcs = {f for f in rest.atoms(AppliedUndef) if f.func.__name__ in _UNKNOWN_NAMES}
    return ders | funcs


def _unknown_names(atoms: Iterable) -> set[str]:
    return {(a.expr if isinstance(a, sp.Derivative) else a).func.__name__ for a in atoms}


def _atom_key(a):
    if isinstance(a, sp.Derivative):
        return (a.expr.func.__name__, a.derivative_count, str(a))
    return (a.func.__name__, 0, str(a))


@dataclass(frozen=True)
class DeterminingSystem:
    """Expressions that must vanish identically, each tagged with the jet
    monomial whose coefficient it was."""

    equations: tuple
    monomials: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "equations", tuple(sp.sympify(e) for e in self.equations))
        mons = tuple(self.monomials) or tuple(sp.S.One for _ in self.equations)
        object.__setattr__(self, "monomials", tuple(sp.sympify(m) for m in mons))

    def __len__(self) -> int:
        return len(self.equations)

    def __iter__(self):
        return iter(self.equations)

    @property
    def unknown_atoms(self) -> list:
        atoms = set()
        for e in self.equations:
            atoms |= _unknown_atoms(e)
        return sorted(atoms, key=_atom_key)

    def to_dict(self) -> dict:
        return {
            "equations": [
                {"equation": to_text(e), "monomial": to_text(m)}
                for e, m in zip(self.equations, self.monomials)
            ]
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_latex(self) -> str:
        lines = [rf"{to_latex(e)} &= 0 && \text{{[{to_latex(m)}]}}" for e, m in zip(self.equations, self.monomials)]
        return "\\begin{aligned}\n" + " \\\\\n".join(lines) + "\n\\end{aligned}"


def reference_system(pde: PDESpec | None = None) -> DeterminingSystem:
    """The three determining equations written out by hand, as an independent
    presentation to compare extraction against."""
    pde = PDESpec() if pde is None else pde
    gg, n = pde.g, pde.nu
    dg = sp.diff(gg, u)
    X, P, A, B = xi(x, t), phi(t), alpha(x, t), beta(x, t)
    e_scale = sp.diff(P, t) - 2 * sp.diff(X, x)
    e_const = (u * sp.diff(A, t) - n * u * sp.diff(A, x, 2) + u * gg * sp.diff(A, x)
           + sp.diff(B, t) - n * sp.diff(B, x, 2) + gg * sp.diff(B, x))
    e_ux = sp.diff(X, t) + 2 * n * sp.diff(A, x) - gg * sp.diff(X, x) - u * dg * A - dg * B
    return DeterminingSystem(tuple(normalize(e) for e in (e_scale, e_const, e_ux)))


def _linear_rows(equations: Sequence, atoms: Sequence):
    """Coefficient rows of equations that are linear homogeneous in atoms."""
    dummies = [sp.Dummy(f"z{i}") for i in range(len(atoms))]
    repl = dict(zip(atoms, dummies))
    rows = []
    for e in equations:
        ez = sp.expand(sp.sympify(e).xreplace(repl))
        if _unknown_atoms(ez):
            raise DeterminingError(f"equation has unknowns outside the column set: {e}")
        poly = sp.Poly(ez, *dummies) if dummies else None
        if poly is None or poly.is_zero:
            rows.append([sp.S.Zero] * len(atoms))
            continue
        if poly.total_degree() > 1 or poly.coeff_monomial(tuple([0] * len(dummies))) != 0:
            raise DeterminingError(f"equation is not linear homogeneous in the unknowns: {e}")
        rows.append([
            sp.cancel(poly.coeff_monomial(tuple(int(i == j) for i in range(len(dummies)))).as_expr())
            for j in range(len(dummies))
        ])
    return rows


def _span_rank(rows) -> int:
    rows = [r for r in rows if any(v != 0 for v in r)]
    if not rows:
        return 0
    return len(linalg.rref(rows, simplify=sp.cancel)[0])


def _dedupe(equations, monomials):
    kept_e, kept_m = [], []
    atoms_all = set()
    for e in equations:
        atoms_all |= _unknown_atoms(e)
    atoms = sorted(atoms_all, key=_atom_key)
    for e, m in zip(equations, monomials):
        if e == 0:
            continue
        if any(_span_rank(_linear_rows([e, k], atoms)) < 2 for k in kept_e):
            continue
        kept_e.append(e)
        kept_m.append(m)
    return kept_e, kept_m


def extract_determining(pde: PDESpec) -> DeterminingSystem:
    """Coefficients of the jet monomials in the invariance residual of the
    built-in ansatz; see :func:`point_ansatz`."""
    return _extract_cached(pde)


@lru_cache(maxsize=64)
def _extract_cached(pde: PDESpec) -> DeterminingSystem:
    residual = invariance_residual(pde, point_ansatz())
    parts = collect(residual, jets_in(residual))
    order = sorted(parts, key=lambda m: (-sp.Poly(m, *jets_in(m)).total_degree() if jets_in(m) else 0,
                                         sp.default_sort_key(m)))
    eqs = [normalize(parts[m]) for m in order]
    eqs, mons = _dedupe(eqs, order)
    return DeterminingSystem(tuple(eqs), tuple(mons))


@dataclass
class EquivalenceResult:
    equivalent: bool
    a_in_b: list = field(default_factory=list)
    b_in_a: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.equivalent


def _with_consequences(system: DeterminingSystem, order: int):
    labels = [f"E{i}" for i in range(len(system))]
    eqs = list(system.equations)
    frontier = list(zip(labels, eqs))
    for _ in range(order):
        nxt = []
        for lab, e in frontier:
            for v in (x, t):
                nxt.append((f"d{v}({lab})", sp.diff(e, v)))
        labels += [lab for lab, _ in nxt]
        eqs += [e for _, e in nxt]
        frontier = nxt
    return labels, eqs


def _combination(target_row, rows, labels):
    if not rows:
        return {} if all(v == 0 for v in target_row) else None
    sol = linalg.solve(linalg.transpose(rows), target_row, len(rows), simplify=sp.cancel)
    if sol is None:
        return None
    return {lab: to_text(c) for lab, c in zip(labels, sol) if c != 0}


def equivalent_systems(A: DeterminingSystem, B: DeterminingSystem, diff_order: int = 1) -> EquivalenceResult:
    """Decide whether A and B define the same solution set.

    Every equation of A must be a combination, with coefficients rational in
    u, g, g', nu, of the equations of B and their x/t-derivatives up to
    ``diff_order``; and conversely. The witness maps each equation to its
    combination (labels ``E<i>`` and ``dx(E<i>)``, ``dt(E<i>)``).
    """
    names_a = _unknown_names(set().union(*[_unknown_atoms(e) for e in A]) if len(A) else set())
    names_b = _unknown_names(set().union(*[_unknown_atoms(e) for e in B]) if len(B) else set())
    if names_a != names_b:
        raise MismatchedUnknownsError(f"unknown functions differ: {sorted(names_a)} vs {sorted(names_b)}")

    def contained(S, T):
        labels, eqs = _with_consequences(T, diff_order)
        atoms = set()
        for e in list(S.equations) + eqs:
            atoms |= _unknown_atoms(e)
        atoms = sorted(atoms, key=_atom_key)
        rows_t = _linear_rows(eqs, atoms)
        rows_s = _linear_rows(S.equations, atoms)
        witness = []
        for row in rows_s:
            w = _combination(row, rows_t, labels)
            if w is None:
                return False, witness + [None]
            witness.append(w)
        return True, witness

    ok_ab, wa = contained(A, B)
    ok_ba, wb = contained(B, A)
    return EquivalenceResult(ok_ab and ok_ba, wa, wb)


# ---------------------------------------------------------------- verification

@dataclass(frozen=True)
class SymmetryReport:
    is_symmetry: bool
    residual: sp.Expr

    def __bool__(self) -> bool:
        return self.is_symmetry


def verify_symmetry(pde: PDESpec, vf: VectorField) -> SymmetryReport:
    r = invariance_residual(pde, vf)
    return SymmetryReport(r == 0, r)


# ---------------------------------------------------------------- discovery

def _monomials(vars_: Sequence, degree: int) -> list:
    out = [sp.S.One]
    if len(vars_) == 1:
        return [vars_[0] ** k for k in range(degree + 1)]
    for total in range(1, degree + 1):
        for i in range(total, -1, -1):
            out.append(vars_[0] ** i * vars_[1] ** (total - i))
    return out


def polynomial_ansatz(degree: int):
    """Polynomial coefficients with unknown parameters a0, a1, ...

    Returns ``(substitution for xi, phi, alpha, beta; parameter symbols;
    builder turning a parameter vector into a VectorField)``.
    """
    shapes = [("xi", _monomials((x, t), degree)), ("phi", _monomials((t,), degree)),
              ("alpha", _monomials((x, t), degree)), ("beta", _monomials((x, t), degree))]
    params = []
    polys = {}
    slots = {}
    for name, monos in shapes:
        syms = [ansatz_param(len(params) + k) for k in range(len(monos))]
        slots[name] = (len(params), monos)
        params += syms
        polys[name] = sum((s * m for s, m in zip(syms, monos)), sp.S.Zero)
    subs = {xi(x, t): polys["xi"], phi(t): polys["phi"], alpha(x, t): polys["alpha"], beta(x, t): polys["beta"]}

    def build(vec) -> VectorField:
        coeff = {}
        for name, (start, monos) in slots.items():
            coeff[name] = sum((sp.Rational(vec[start + k].numerator, vec[start + k].denominator) * m
                               for k, m in enumerate(monos)), sp.S.Zero)
        return VectorField.of(coeff["xi"], coeff["phi"], coeff["alpha"] * u + coeff["beta"])

    return subs, params, build


def discover_symmetries(pde: PDESpec, degree: int = 2) -> list[VectorField]:
    """Basis of all symmetries whose xi, phi, alpha, beta are polynomials in
    (x, t) of total degree <= ``degree``.

    Determining equations are split over monomials in x, t and the
    u-dependent atoms (u, g, g', log u, exp(b u), ...), which are treated as
    independent; the result is an exact rational nullspace. Every returned
    field is re-verified symbolically.
    """
    if not 0 <= degree <= MAX_DEGREE:
        raise DiscoveryError(f"ansatz degree must be in 0..{MAX_DEGREE}")
    if pde.parameters - {nu}:
        raise DiscoveryError(f"instantiate parameters {sorted(map(str, pde.parameters))} first "
                             "(see discover_over_samples)")
    system = extract_determining(pde)
    subs, params, build = polynomial_ansatz(degree)
    eqs = [sp.sympify(e).subs(subs).doit() for e in system.equations]
    rows, rhs = identity_constraints(eqs, params)
    if any(rhs):
        raise DiscoveryError("inhomogeneous constraint system")
    basis = [build(v) for v in linalg.nullspace(rows, len(params))] if rows else \
        [build(v) for v in linalg.identity(len(params))]
    for vf in basis:
        if not verify_symmetry(pde, vf):
            raise DiscoveryError(f"discovered field failed verification: {vf}")
    return basis


def discover_over_samples(pde: PDESpec, samples: Sequence[dict], degree: int = 2) -> dict:
    """Run discovery at several parameter instantiations.

    Returns ``{"bases": [(sample, basis), ...], "dimension": min dimension}``;
    the minimum is the dimension common to every sample.
    """
    bases = []
    for s in samples:
        bases.append((dict(s), discover_symmetries(pde.with_params(s), degree)))
    dims = [len(bb) for _, bb in bases]
    return {"bases": bases, "dimension": min(dims) if dims else 0}
