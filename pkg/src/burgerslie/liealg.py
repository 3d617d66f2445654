"""Brackets of vector fields, exact structure constants and identification of
low-dimensional real Lie algebras.

Target tensors (Patera-Winternitz conventions):

* ``A_{3,1}``:     [e2, e3] = e1
* ``A_{3,5}^a``:   [e1, e3] = e1, [e2, e3] = a e2, 0 < |a| <= 1
* ``A_{5,40}``:    [e1, e2] = 2e1, [e1, e3] = -e2, [e2, e3] = 2e3,
                   [e1, e4] = e5, [e2, e4] = e4, [e2, e5] = -e5, [e3, e5] = e4
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import linalg
from .prolong import VectorField, coordinates_in_span, linearly_independent
from .symcore import SymcoreError, normalize

__all__ = [
    "StructureConstants", "AlgebraLabel", "LieAlgebraError", "NotClosedError",
    "LinearlyDependentBasisError", "InvariantViolation",
    "bracket", "structure_constants", "change_of_basis", "identify", "canonical_basis",
    "isomorphism", "target_tensor", "profile", "killing_form", "radical", "nilradical",
    "levi_decomposition", "derived_algebra", "center",
]


class LieAlgebraError(SymcoreError):
    pass


class NotClosedError(LieAlgebraError):
    def __init__(self, i: int, j: int, offending: VectorField):
        super().__init__(f"[e{i + 1}, e{j + 1}] = {offending} leaves the span of the basis")
        self.i, self.j, self.offending = i, j, offending


class LinearlyDependentBasisError(LieAlgebraError):
    pass


class InvariantViolation(LieAlgebraError):
    pass


def bracket(V: VectorField, W: VectorField) -> VectorField:
    """[V, W] with components V(W^k) - W(V^k)."""
    return VectorField.of(*(V.act(w) - W.act(v) for v, w in zip(V.components, W.components)))


# ---------------------------------------------------------------- tensors

Vec = list


@dataclass(frozen=True)
class StructureConstants:
    """c[i][j][k] = coefficient of e_k in [e_i, e_j] (0-based)."""

    dim: int
    c: tuple

    def __post_init__(self):
        n = self.dim
        c = tuple(tuple(tuple(Fraction(v) for v in row) for row in plane) for plane in self.c)
        if len(c) != n or any(len(plane) != n or any(len(r) != n for r in plane) for plane in c):
            raise InvariantViolation("structure constants must be a dim x dim x dim tensor")
        object.__setattr__(self, "c", c)
        for i, j, k in itertools.product(range(n), repeat=3):
            if c[i][j][k] != -c[j][i][k]:
                raise InvariantViolation(f"antisymmetry fails at ({i}, {j}, {k})")
        if self.jacobi_defect() is not None:
            raise InvariantViolation(f"Jacobi identity fails at {self.jacobi_defect()}")

    @classmethod
    def zero(cls, dim: int) -> "StructureConstants":
        return cls(dim, tuple(tuple(tuple(Fraction(0) for _ in range(dim)) for _ in range(dim)) for _ in range(dim)))

    @classmethod
    def from_brackets(cls, dim: int, table: dict) -> "StructureConstants":
        """``table[(i, j)] = {k: value}`` with 1-based indices, i < j."""
        c = [[[Fraction(0)] * dim for _ in range(dim)] for _ in range(dim)]
        for (i, j), out in table.items():
            for k, v in out.items():
                c[i - 1][j - 1][k - 1] = Fraction(v)
                c[j - 1][i - 1][k - 1] = -Fraction(v)
        return cls(dim, tuple(map(lambda pl: tuple(map(tuple, pl)), c)))

    def jacobi_defect(self):
        n, c = self.dim, self.c
        for i, j, k in itertools.combinations(range(n), 3):
            for l in range(n):
                s = sum(
                    c[i][j][m] * c[m][k][l] + c[j][k][m] * c[m][i][l] + c[k][i][m] * c[m][j][l]
                    for m in range(n)
                )
                if s != 0:
                    return (i, j, k, l)
        return None

    def bracket(self, a: Sequence, b: Sequence) -> Vec:
        n, c = self.dim, self.c
        out = [Fraction(0)] * n
        for i in range(n):
            if a[i] == 0:
                continue
            for j in range(n):
                if b[j] == 0:
                    continue
                f = a[i] * b[j]
                for k in range(n):
                    if c[i][j][k]:
                        out[k] += f * c[i][j][k]
        return out

    def ad(self, a: Sequence) -> linalg.Matrix:
        """Matrix of ad_a acting on column coordinate vectors."""
        basis = linalg.identity(self.dim)
        cols = [self.bracket(a, e) for e in basis]
        return linalg.transpose(cols)

    def nonzero(self) -> dict:
        """{(i, j): {k: value}} for i < j, 1-based."""
        out = {}
        for i, j in itertools.combinations(range(self.dim), 2):
            row = {k + 1: v for k, v in enumerate(self.c[i][j]) if v}
            if row:
                out[i + 1, j + 1] = row
        return out

    def is_abelian(self) -> bool:
        return not self.nonzero()

    def to_dict(self) -> dict:
        entries = [
            {"i": i, "j": j, "k": k, "value": str(v)}
            for (i, j), row in sorted(self.nonzero().items())
            for k, v in sorted(row.items())
        ]
        return {"dim": self.dim, "entries": entries}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "StructureConstants":
        table: dict = {}
        for ent in data["entries"]:
            i, j, k = int(ent["i"]), int(ent["j"]), int(ent["k"])
            v = Fraction(str(ent["value"]))
            if i > j:
                i, j, v = j, i, -v
            if i == j:
                if v:
                    raise InvariantViolation("diagonal bracket must vanish")
                continue
            table.setdefault((i, j), {})[k] = v
        return cls.from_brackets(int(data["dim"]), table)

    def format(self, names: Sequence[str] | None = None) -> list[str]:
        names = list(names or [f"e{i + 1}" for i in range(self.dim)])
        lines = []
        for (i, j), row in sorted(self.nonzero().items()):
            lines.append(f"[{names[i - 1]}, {names[j - 1]}] = {_combo(row, names)}")
        return lines


def _combo(row: dict, names: Sequence[str]) -> str:
    parts = []
    for k, v in sorted(row.items()):
        if v == 1:
            term = names[k - 1]
        elif v == -1:
            term = "-" + names[k - 1]
        else:
            term = f"{v}*{names[k - 1]}"
        parts.append(term)
    return " + ".join(parts).replace("+ -", "- ") or "0"


def structure_constants(basis: Sequence[VectorField]) -> StructureConstants:
    if not linearly_independent(basis):
        raise LinearlyDependentBasisError("basis fields are linearly dependent over Q")
    n = len(basis)
    c = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
    for i, j in itertools.combinations(range(n), 2):
        w = bracket(basis[i], basis[j])
        if w.is_zero():
            continue
        coords = coordinates_in_span(basis, w)
        if coords is None:
            raise NotClosedError(i, j, w)
        for k, v in enumerate(coords):
            c[i][j][k] = v
            c[j][i][k] = -v
    return StructureConstants(n, tuple(map(lambda pl: tuple(map(tuple, pl)), c)))


def change_of_basis(sc: StructureConstants, M: linalg.Matrix) -> StructureConstants:
    """Tensor in the basis e'_a = sum_i M[a][i] e_i (rows of M are the new
    basis vectors in old coordinates)."""
    M = linalg.to_fractions(M)
    n = sc.dim
    if len(M) != n or any(len(r) != n for r in M):
        raise LieAlgebraError("basis change matrix has the wrong shape")
    try:
        Minv = linalg.inverse(M)
    except linalg.SingularMatrixError as exc:
        raise LieAlgebraError("basis change matrix is singular") from exc
    c = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
    for a, b_ in itertools.combinations(range(n), 2):
        old = sc.bracket(M[a], M[b_])
        new = linalg.matvec(linalg.transpose(Minv), old)
        for k in range(n):
            c[a][b_][k] = new[k]
            c[b_][a][k] = -new[k]
    return StructureConstants(n, tuple(map(lambda pl: tuple(map(tuple, pl)), c)))


# ---------------------------------------------------------------- subspaces

def _span(sc: StructureConstants, vectors) -> linalg.Matrix:
    return linalg.row_space([list(v) for v in vectors], sc.dim)


def _bracket_space(sc: StructureConstants, A, B) -> linalg.Matrix:
    return _span(sc, [sc.bracket(a, b_) for a in A for b_ in B])


def derived_algebra(sc: StructureConstants) -> linalg.Matrix:
    full = linalg.identity(sc.dim)
    return _bracket_space(sc, full, full)


def center(sc: StructureConstants) -> linalg.Matrix:
    rows = []
    for e in linalg.identity(sc.dim):
        rows += _ad_rows_for(sc, e)
    return linalg.nullspace(rows, sc.dim)


def _ad_rows_for(sc: StructureConstants, e):
    # rows of the linear map z -> [z, e]
    cols = [sc.bracket(z, e) for z in linalg.identity(sc.dim)]
    return linalg.transpose(cols)


def derived_series(sc: StructureConstants) -> list[int]:
    dims = [sc.dim]
    cur = linalg.identity(sc.dim)
    while True:
        nxt = _bracket_space(sc, cur, cur)
        if len(nxt) == len(cur):
            break
        dims.append(len(nxt))
        cur = nxt
        if not cur:
            break
    return dims


def lower_central_series(sc: StructureConstants) -> list[int]:
    dims = [sc.dim]
    full = linalg.identity(sc.dim)
    cur = full
    while True:
        nxt = _bracket_space(sc, full, cur)
        if len(nxt) == len(cur):
            break
        dims.append(len(nxt))
        cur = nxt
        if not cur:
            break
    return dims


def killing_form(sc: StructureConstants) -> linalg.Matrix:
    ads = [sc.ad(e) for e in linalg.identity(sc.dim)]
    return [[linalg.trace(linalg.matmul(a, b_)) for b_ in ads] for a in ads]


def radical(sc: StructureConstants) -> linalg.Matrix:
    """Solvable radical: the Killing-orthogonal complement of [g, g]."""
    K = killing_form(sc)
    D = derived_algebra(sc)
    if not D:
        return linalg.identity(sc.dim)
    rows = [linalg.matvec(K, d) for d in D]
    return _span(sc, linalg.nullspace(rows, sc.dim))


def _assoc_closure(mats: list) -> list:
    """Basis (flattened) of the associative algebra generated by mats."""
    if not mats:
        return []
    n = len(mats[0])
    flat = lambda m: [v for row in m for v in row]  # noqa: E731
    unflat = lambda f: [f[i * n:(i + 1) * n] for i in range(n)]  # noqa: E731
    basis = linalg.row_space([flat(m) for m in mats], n * n)
    while True:
        products = [flat(linalg.matmul(unflat(a), g_)) for a in basis for g_ in mats]
        new = linalg.row_space(basis + products, n * n)
        if len(new) == len(basis):
            return [unflat(f) for f in new]
        basis = new


def nilradical(sc: StructureConstants) -> linalg.Matrix:
    """Largest nilpotent ideal: the x in the radical whose ad is nilpotent,
    found as the trace-form radical of the associative envelope of ad(rad)."""
    R = radical(sc)
    if not R:
        return []
    A = _assoc_closure([sc.ad(r) for r in R])
    # x = sum y_i R_i ; condition tr(ad_x B) = 0 for all B in A
    rows = []
    for B in A:
        rows.append([linalg.trace(linalg.matmul(sc.ad(r), B)) for r in R])
    ys = linalg.nullspace(rows, len(R)) if rows else linalg.identity(len(R))
    return _span(sc, [[sum((y[i] * R[i][k] for i in range(len(R))), Fraction(0)) for k in range(sc.dim)]
                      for y in ys])


def levi_decomposition(sc: StructureConstants):
    """(levi_basis, radical_basis) when the radical is abelian, else None.

    A complement S0 of the radical R is corrected by a linear map S0 -> R so
    that it closes under the bracket; with [R, R] = 0 this is a linear problem.
    """
    R = radical(sc)
    n = sc.dim
    if len(R) == n:
        return [], R
    if not R:
        return linalg.identity(n), []
    if _bracket_space(sc, R, R):
        return None
    S0 = linalg.complement_basis(R, n)
    s, r = len(S0), len(R)
    P = linalg.transpose(S0 + R)  # columns = adapted basis

    def split(v):
        co = linalg.solve(P, v, n)
        return co[:s], co[s:]

    # unknowns phi[i][q] -> index i*r + q
    nunk = s * r
    rows, rhs = [], []
    for i, j in itertools.combinations(range(s), 2):
        sig, rpart = split(sc.bracket(S0[i], S0[j]))
        # R-coordinates of [s_i, R_q] and [R_q, s_j]
        lin = [[Fraction(0)] * nunk for _ in range(r)]
        for q in range(r):
            _, a = split(sc.bracket(S0[i], R[q]))
            _, b2 = split(sc.bracket(R[q], S0[j]))
            for m in range(r):
                lin[m][j * r + q] += a[m]
                lin[m][i * r + q] += b2[m]
        for k in range(s):
            if sig[k]:
                for q in range(r):
                    lin[q][k * r + q] -= sig[k]
        for m in range(r):
            rows.append(lin[m])
            rhs.append(-rpart[m])
    sol = linalg.solve(rows, rhs, nunk) if rows else [Fraction(0)] * nunk
    if sol is None:
        return None
    levi = []
    for i in range(s):
        v = list(S0[i])
        for q in range(r):
            for k in range(n):
                v[k] += sol[i * r + q] * R[q][k]
        levi.append(v)
    return levi, R


def _restricted(sc: StructureConstants, sub: linalg.Matrix) -> StructureConstants:
    """Structure constants of a subalgebra in the given basis."""
    m = len(sub)
    c = [[[Fraction(0)] * m for _ in range(m)] for _ in range(m)]
    for i, j in itertools.combinations(range(m), 2):
        co = linalg.coordinates(sub, sc.bracket(sub[i], sub[j]))
        if co is None:
            raise LieAlgebraError("subspace is not a subalgebra")
        for k in range(m):
            c[i][j][k] = co[k]
            c[j][i][k] = -co[k]
    return StructureConstants(m, tuple(map(lambda pl: tuple(map(tuple, pl)), c)))


def profile(sc: StructureConstants) -> dict:
    K = killing_form(sc)
    pos, neg, zero = linalg.inertia(K)
    return {
        "dim": sc.dim,
        "derived_series": derived_series(sc),
        "lower_central_series": lower_central_series(sc),
        "center_dim": len(center(sc)),
        "killing_rank": pos + neg,
        "killing_signature": [pos, neg],
        "nilradical_dim": len(nilradical(sc)),
        "radical_dim": len(radical(sc)),
    }


# ---------------------------------------------------------------- labels

@dataclass(frozen=True)
class AlgebraLabel:
    kind: str  # abelian | A31 | A35 | A540 | unknown
    dim: int
    param: Fraction | None = None
    profile: dict | None = field(default=None, compare=False, hash=False)

    def __str__(self) -> str:
        if self.kind == "abelian":
            return f"abelian({self.dim})"
        if self.kind == "A31":
            return "A_{3,1}"
        if self.kind == "A35":
            a = self.param
            s = str(a.numerator) if a.denominator == 1 else f"{a.numerator}/{a.denominator}"
            return f"A_{{3,5}}^{{{s}}}"
        if self.kind == "A540":
            return "A_{5,40}"
        return f"unknown({json.dumps(self.profile, sort_keys=True)})"

    @classmethod
    def parse(cls, text: str) -> "AlgebraLabel":
        text = text.strip()
        if text.startswith("abelian("):
            return cls("abelian", int(text[8:-1]))
        if text == "A_{3,1}":
            return cls("A31", 3)
        if text.startswith("A_{3,5}^{"):
            return cls("A35", 3, Fraction(text[9:-1]))
        if text == "A_{5,40}":
            return cls("A540", 5)
        raise LieAlgebraError(f"cannot parse algebra label {text!r}")


def target_tensor(label: AlgebraLabel) -> StructureConstants:
    if label.kind == "abelian":
        return StructureConstants.zero(label.dim)
    if label.kind == "A31":
        return StructureConstants.from_brackets(3, {(2, 3): {1: 1}})
    if label.kind == "A35":
        return StructureConstants.from_brackets(3, {(1, 3): {1: 1}, (2, 3): {2: label.param}})
    if label.kind == "A540":
        return StructureConstants.from_brackets(5, {
            (1, 2): {1: 2}, (1, 3): {2: -1}, (2, 3): {3: 2}, (1, 4): {5: 1},
            (2, 4): {4: 1}, (2, 5): {5: -1}, (3, 5): {4: 1},
        })
    raise LieAlgebraError(f"no target tensor for {label}")


def _unknown(sc: StructureConstants) -> tuple[AlgebraLabel, None]:
    return AlgebraLabel("unknown", sc.dim, None, profile(sc)), None


def _canon_dim3(sc: StructureConstants):
    D = derived_algebra(sc)
    Z = center(sc)
    if len(D) == 1 and linalg.in_span(Z, D[0]) and len(Z) == 1:
        comp = linalg.complement_basis(Z, 3)
        e1 = sc.bracket(comp[0], comp[1])
        M = [e1, comp[0], comp[1]]
        return AlgebraLabel("A31", 3), M
    if len(D) != 2 or _bracket_space(sc, D, D):
        return _unknown(sc)
    c = linalg.complement_basis(D, 3)[0]
    # ad_c restricted to D in the basis D
    cols = [linalg.coordinates(D, sc.bracket(c, d)) for d in D]
    A = linalg.transpose(cols)
    tr = A[0][0] + A[1][1]
    det = A[0][0] * A[1][1] - A[0][1] * A[1][0]
    disc = tr * tr - 4 * det
    root = linalg.rational_sqrt(disc)
    if root is None or det == 0:
        return _unknown(sc)
    l1, l2 = (tr + root) / 2, (tr - root) / 2
    if abs(l2) > abs(l1):
        l1, l2 = l2, l1

    def eigvec(lam):
        shifted = [[A[i][j] - (lam if i == j else 0) for j in range(2)] for i in range(2)]
        return linalg.nullspace(shifted, 2)

    if l1 == l2:
        vecs = eigvec(l1)
        if len(vecs) < 2:
            return _unknown(sc)  # A_{3,2}: not diagonalisable
        v1, v2 = vecs
    else:
        v1, v2 = eigvec(l1)[0], eigvec(l2)[0]
    to_g = lambda v: [v[0] * D[0][k] + v[1] * D[1][k] for k in range(3)]  # noqa: E731
    e3 = [-ck / l1 for ck in c]
    M = [to_g(v1), to_g(v2), e3]
    return AlgebraLabel("A35", 3, l2 / l1), M


def _canon_dim5(sc: StructureConstants):
    dec = levi_decomposition(sc)
    if dec is None:
        return _unknown(sc)
    S, R = dec
    if len(S) != 3 or len(R) != 2:
        return _unknown(sc)
    sub = _restricted(sc, S)
    KS = killing_form(sub)
    pos, neg, zero = linalg.inertia(KS)
    if zero or not (pos and neg):
        return _unknown(sc)
    # S acts on R as on its standard module, so the annihilator of a nonzero
    # w in R is spanned by a nilpotent E with w as highest-weight vector.
    lift = lambda y: [sum((y[i] * S[i][k] for i in range(3)), Fraction(0)) for k in range(5)]  # noqa: E731
    w = R[0]
    ann = linalg.nullspace(linalg.transpose([sc.bracket(s_, w) for s_ in S]), 3)
    if len(ann) != 1:
        return _unknown(sc)
    E = lift(ann[0])
    # F0 with [[E, F0], E] = 2E, F0 in S
    cols = [sc.bracket(sc.bracket(E, s_), E) for s_ in S]
    y = linalg.solve(linalg.transpose(cols), [2 * v for v in E], 3)
    if y is None:
        return _unknown(sc)
    H = sc.bracket(E, lift(y))
    # F in S with [H, F] = -2F and [E, F] = H
    rows, rhs = [], []
    for k in range(5):
        rows.append([sc.bracket(H, s_)[k] + 2 * s_[k] for s_ in S])
        rhs.append(Fraction(0))
        rows.append([sc.bracket(E, s_)[k] for s_ in S])
        rhs.append(H[k])
    yf = linalg.solve(rows, rhs, 3)
    if yf is None:
        return _unknown(sc)
    Fv = lift(yf)
    # highest-weight vector v in R: [E, v] = 0, [H, v] = v
    rows = []
    for k in range(5):
        rows.append([sc.bracket(E, r_)[k] for r_ in R])
        rows.append([sc.bracket(H, r_)[k] - r_[k] for r_ in R])
    ns = linalg.nullspace(rows, 2)
    if not ns:
        return _unknown(sc)
    v = [sum((ns[0][i] * R[i][k] for i in range(2)), Fraction(0)) for k in range(5)]
    M = [Fv, H, E, v, sc.bracket(Fv, v)]
    label = AlgebraLabel("A540", 5)
    try:
        ok = change_of_basis(sc, M) == target_tensor(label)
    except LieAlgebraError:
        ok = False
    return (label, M) if ok else _unknown(sc)


def canonical_basis(sc: StructureConstants):
    """(label, M) with change_of_basis(sc, M) == target_tensor(label), or
    (unknown label, None)."""
    if sc.is_abelian():
        return AlgebraLabel("abelian", sc.dim), linalg.identity(sc.dim)
    if sc.dim == 3:
        return _canon_dim3(sc)
    if sc.dim == 5:
        return _canon_dim5(sc)
    return _unknown(sc)


def identify(sc: StructureConstants) -> AlgebraLabel:
    if not 1 <= sc.dim <= 5:
        raise LieAlgebraError("identification covers dimensions 1 to 5")
    return canonical_basis(sc)[0]


def isomorphism(sc1: StructureConstants, sc2: StructureConstants):
    """M with change_of_basis(sc1, M) == sc2, or None if not established."""
    l1, M1 = canonical_basis(sc1)
    l2, M2 = canonical_basis(sc2)
    if M1 is None or M2 is None or l1 != l2:
        return None
    M = linalg.matmul(linalg.inverse(M2), M1)
    return M if change_of_basis(sc1, M) == sc2 else None
