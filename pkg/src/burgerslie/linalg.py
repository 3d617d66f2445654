"""Exact linear algebra over the rationals (and, with a ``simplify`` hook, over
function fields such as Q(u, g, g')).

Matrices are plain lists of rows. Entries are :class:`fractions.Fraction` unless
a caller passes sympy expressions together with ``simplify=sympy.cancel``.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Sequence

Matrix = list[list]


class SingularMatrixError(ValueError):
    pass


def frac(v) -> Fraction:
    """Coerce ints, Fractions and sympy Rationals to Fraction."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    p = getattr(v, "p", None)
    q = getattr(v, "q", None)
    if p is not None and q is not None:
        return Fraction(int(p), int(q))
    raise TypeError(f"not an exact rational: {v!r}")


def to_fractions(M) -> Matrix:
    return [[frac(v) for v in row] for row in M]


def zeros(n: int, m: int | None = None) -> Matrix:
    return [[Fraction(0)] * (n if m is None else m) for _ in range(n)]


def identity(n: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def transpose(M: Matrix) -> Matrix:
    return [list(col) for col in zip(*M)]


def matmul(A: Matrix, B: Matrix) -> Matrix:
    Bt = transpose(B)
    return [[sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in Bt] for row in A]


def matvec(A: Matrix, v: Sequence) -> list:
    return [sum((a * b for a, b in zip(row, v)), Fraction(0)) for row in A]


def trace(A: Matrix) -> Fraction:
    return sum((A[i][i] for i in range(len(A))), Fraction(0))


def rref(M: Matrix, ncols: int | None = None, *, simplify: Callable | None = None):
    """Reduced row echelon form.

    Returns ``(R, pivots)`` where ``R`` holds only the nonzero rows. With
    ``simplify`` every entry is passed through it after each update so that a
    zero test by ``== 0`` is exact.
    """
    simp = simplify or (lambda v: v)
    rows = [[simp(v) for v in row] for row in M]
    if ncols is None:
        ncols = len(rows[0]) if rows else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = rows[r][c]
        rows[r] = [simp(v / inv) for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [simp(a - f * b) for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def rank(M: Matrix) -> int:
    if not M:
        return 0
    return len(rref(M)[0])


def nullspace(M: Matrix, ncols: int | None = None) -> Matrix:
    """Basis of {v : M v = 0}, one vector per free column, free entry = 1."""
    if ncols is None:
        ncols = len(M[0]) if M else 0
    if not M:
        return identity(ncols)
    R, pivots = rref(M, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, pc in zip(R, pivots):
            v[pc] = -row[f]
        basis.append(v)
    return basis


def solve(M: Matrix, rhs: Sequence, ncols: int | None = None, *, simplify: Callable | None = None):
    """One solution of ``M v = rhs`` (free variables set to 0) or None."""
    if ncols is None:
        ncols = len(M[0]) if M else 0
    if not M:
        return [0 * Fraction(0)] * ncols if all(r == 0 for r in rhs) else None
    aug = [list(row) + [r] for row, r in zip(M, rhs)]
    R, pivots = rref(aug, ncols + 1, simplify=simplify)
    if pivots and pivots[-1] == ncols:
        return None
    zero = R[0][0] * 0 if R else Fraction(0)
    v = [zero] * ncols
    for row, pc in zip(R, pivots):
        v[pc] = row[ncols]
    return v


def inverse(M: Matrix) -> Matrix:
    n = len(M)
    aug = [list(row) + idrow for row, idrow in zip(M, identity(n))]
    R, pivots = rref(aug, n)
    if pivots != list(range(n)):
        raise SingularMatrixError("matrix is singular")
    return [row[n:] for row in R]


def row_space(vectors: Matrix, ncols: int) -> Matrix:
    """Reduced basis of the span of ``vectors``."""
    if not vectors:
        return []
    return rref(vectors, ncols)[0]


def in_span(vectors: Matrix, v: Sequence) -> bool:
    if not vectors:
        return all(c == 0 for c in v)
    return rank(list(vectors) + [list(v)]) == rank(vectors)


def complement_basis(sub: Matrix, n: int) -> Matrix:
    """Standard unit vectors completing a basis of ``sub`` to Q^n."""
    out = []
    current = list(sub)
    for i in range(n):
        e = [Fraction(int(i == j)) for j in range(n)]
        if not in_span(current, e):
            out.append(e)
            current.append(e)
    return out


def coordinates(basis: Matrix, v: Sequence):
    """Coefficients c with sum c_i basis_i = v, or None if v is not in the span."""
    return solve(transpose(basis), v, len(basis))


def rational_sqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def congruence_diagonalize(S: Matrix) -> tuple[list[Fraction], Matrix]:
    """(d, P) with P^T S P = diag(d) for a symmetric rational matrix S."""
    A = [list(map(frac, row)) for row in S]
    n = len(A)
    P = identity(n)

    def add_col(dst, src, f):
        # column op on A, P and the matching row op on A
        for m in range(n):
            A[m][dst] += f * A[m][src]
        for m in range(n):
            A[dst][m] += f * A[src][m]
        for m in range(n):
            P[m][dst] += f * P[m][src]

    def swap(i, j):
        A[i], A[j] = A[j], A[i]
        for row in A:
            row[i], row[j] = row[j], row[i]
        for row in P:
            row[i], row[j] = row[j], row[i]

    for k in range(n):
        if A[k][k] == 0:
            j = next((j for j in range(k + 1, n) if A[j][j] != 0), None)
            if j is not None:
                swap(k, j)
            else:
                j = next((j for j in range(k + 1, n) if A[k][j] != 0), None)
                if j is not None:
                    add_col(k, j, Fraction(1))
        if A[k][k] == 0:
            continue
        for i in range(k + 1, n):
            if A[i][k]:
                add_col(i, k, -A[i][k] / A[k][k])
    return [A[k][k] for k in range(n)], P


def inertia(S: Matrix) -> tuple[int, int, int]:
    """(positive, negative, zero) counts of a symmetric rational matrix."""
    d, _ = congruence_diagonalize(S)
    pos = sum(1 for v in d if v > 0)
    neg = sum(1 for v in d if v < 0)
    return pos, neg, len(d) - pos - neg
