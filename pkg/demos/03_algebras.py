"""Structure constants and identification of the symmetry algebras.

    python3 demos/03_algebras.py
"""
from burgerslie import linalg
from burgerslie.liealg import (
    canonical_basis,
    change_of_basis,
    isomorphism,
    killing_form,
    levi_decomposition,
    profile,
    structure_constants,
    _restricted,
)
from burgerslie.prolong import parse_vector_field

X, T = parse_vector_field("1; 0; 0"), parse_vector_field("0; 1; 0")

# g = u: five generators.
burgers = [X, T, parse_vector_field("t*x; t^2; x-t*u"), parse_vector_field("t; 0; 1"),
           parse_vector_field("x; 2*t; -u")]
names = ["X", "T", "B11", "B12", "B13"]
sc = structure_constants(burgers)
print("g = u")
for line in sc.format(names):
    print("  ", line)

levi, rad = levi_decomposition(sc)
print("  Levi factor dim", len(levi), "radical dim", len(rad))
print("  Killing inertia of the Levi factor (+, -, 0):", linalg.inertia(killing_form(_restricted(sc, levi))))
label, M = canonical_basis(sc)
print("  label:", label)
for name, row in zip(["e1", "e2", "e3", "e4", "e5"], M):
    combo = " + ".join(f"({v})*{n}" for v, n in zip(row, names) if v)
    print(f"    {name} = {combo}")

# The three-dimensional algebras.
g2 = structure_constants([X, T, parse_vector_field("x; 2*t; -u/p")])
g3 = structure_constants([X, T, parse_vector_field("t; 0; u")])
g5 = structure_constants([X, T, parse_vector_field("x-t; 2*t; 1+u")])
for tag, alg in (("u^p", g2), ("log u", g3), ("(1-u)/(1+u)", g5)):
    lab, _ = canonical_basis(alg)
    print(f"\ng = {tag}: {lab}")
    for line in alg.format(["X", "T", "B"]):
        print("  ", line)

print("\nprofile of the log case:", profile(g3))

# (X, X+T, B) versus (X, -X+T, B) in the (1-u)/(1+u) algebra.
for rows in ([[1, 0, 0], [1, 1, 0], [0, 0, 1]], [[1, 0, 0], [-1, 1, 0], [0, 0, 1]]):
    print("basis", rows, "->", change_of_basis(g5, rows).format())

M = isomorphism(g2, g5)
print("\nwitness g(u^p) -> g((1-u)/(1+u)):", [[str(v) for v in r] for r in M])
print("verified:", change_of_basis(g2, M) == g5)
