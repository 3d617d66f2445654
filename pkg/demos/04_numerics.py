"""Numerical cross-checks: solver accuracy, symmetry flows and solution transport.

    python3 demos/04_numerics.py
"""
import math

import numpy as np

from burgerslie.deteq import PDESpec
from burgerslie.numlab import (
    CATALOG_G,
    FlowMap,
    Grid,
    flow_group_law_error,
    invariance_transport_check,
    jet_residual_check,
    manufactured_convergence,
)
from burgerslie.prolong import parse_vector_field

mms = manufactured_convergence()
print("manufactured solution exp(-t) sin(x), g = u")
for nx, err in zip(mms["nx"], mms["errors"]):
    print(f"  nx = {nx:4d}  max error {err:.3e}")
print("  observed orders:", [round(o, 3) for o in mms["orders"]])

# The projective generator of g = u has a closed-form flow.
B11 = parse_vector_field("t*x; t^2; x-t*u")
pts = np.array([[0.3, 0.2, 0.5], [-0.7, 0.4, 1.0]])
print("\nexp(0.5 B11) applied to", pts.tolist())
print("  ", FlowMap(B11, 0.5)(pts).round(10).tolist())
print("  group law error:", flow_group_law_error(B11, 0.2, 0.3, pts))

# Invariance condition on random jets: symmetry versus the listed minus-branch field.
pde = PDESpec.from_text("u/(1-u)")
good = parse_vector_field("x-t; 2*t; u-1")
bad = parse_vector_field("x+t; 2*t; 1+u")
gi = CATALOG_G("7b")
print("\ng = u/(1-u)")
print("  max |pr2 V F| for", good.to_text(), ":", jet_residual_check(pde, good, g_impl=gi))
print("  max |pr2 V F| for", bad.to_text(), ":", jet_residual_check(pde, bad, g_impl=gi))

# Push a numerical solution through the Galilean boost t d/dx + d/du.
B12 = parse_vector_field("t; 0; 1")
print("\nGalilean transport of a solution of u_t + u u_x = u_xx / 2")
for nx in (32, 64, 128):
    dx = 2 * math.pi / nx
    grid = Grid(0, 2 * math.pi, nx, 0.5, math.ceil(0.5 * 0.5 / (0.25 * dx * dx)))
    out = invariance_transport_check(0.5, CATALOG_G("1"), B12, 0.1, grid, lambda xs: 0.5 + 0.25 * np.sin(xs))
    print(f"  nx = {nx:4d}  residual {out['residual']:.3e}  (untransformed {out['untransformed']:.3e})")
