"""Derive the determining equations of nu*u_xx = u_t + g(u)*u_x from scratch.

Starts from the point-symmetry ansatz xi(x,t) d/dx + phi(t) d/dt + (alpha u + beta) d/du,
prolongs it to second order, imposes the equation by eliminating u_t, and
collects what is left by jet monomial. The result is then compared against a
hand-written presentation of the same system.

    python3 demos/01_determining_system.py
"""
from burgerslie.deteq import PDESpec, equivalent_systems, extract_determining, invariance_residual, point_ansatz, reference_system
from burgerslie.prolong import parse_vector_field, prolong2
from burgerslie.symcore import jets_in, to_text

pde = PDESpec()  # g left abstract, nu symbolic

# The dilation x d/dx + 2t d/dt - u d/du, prolonged.
B13 = parse_vector_field("x; 2*t; -u")
pf = prolong2(B13)
print("second prolongation of", B13.to_text())
for name, coeff in list(pf.eta1.items()) + list(pf.eta2.items()):
    print(f"  eta[{name}] = {to_text(coeff)}")

# Invariance residual of the general ansatz on the solution manifold.
residual = invariance_residual(pde, point_ansatz())
print("\njets left in the residual:", sorted(str(j) for j in jets_in(residual)))

system = extract_determining(pde)
print("\ndetermining system")
for monomial, eq in zip(system.monomials, system.equations):
    print(f"  [{monomial}]  {to_text(eq)} = 0")

res = equivalent_systems(system, reference_system())
print("\nequivalent to the reference presentation:", res.equivalent)
print("each extracted equation in terms of the reference equations E0, E1, E2 (dx = total x-derivative):")
for i, combo in enumerate(res.a_in_b):
    print(f"  [{system.monomials[i]}] =", " + ".join(f"({c})*{k}" for k, c in combo.items()))
