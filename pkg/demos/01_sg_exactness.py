"""Scharfetter-Gummel versus upwind on a 1D drift-dominated layer.

With U = (u, 0), no source and v = 0 on the west side, v = 1 on the east,
the exact solution is (exp(u x) - 1) / (exp(u) - 1).  The SG flux
reproduces it at the cell centres to rounding, while upwind smears the
boundary layer.
"""
import numpy as np

from fvlinf import SCHARFETTER_GUMMEL_B, UPWIND_B, solve_problem
from fvlinf.presets import sg_exponential

for u in (1.0, 5.0, 20.0):
    pr = sg_exponential(u, 64)
    mesh = pr.mesh()
    exact = pr.exact(*mesh.centers.T)
    row = [f"u = {u:5.1f}"]
    for B in (SCHARFETTER_GUMMEL_B, UPWIND_B):
        v, _, _ = solve_problem(mesh, pr.problem, B)
        row.append(f"{B.label}: {np.max(np.abs(v - exact)):.2e}")
    print(",  ".join(row))

# upwind converges at first order; halving h roughly halves the error
pr = sg_exponential(20.0, 8)
for n in (16, 32, 64, 128):
    mesh = pr.mesh(n, 1)
    v, _, _ = solve_problem(mesh, pr.problem, UPWIND_B)
    print(f"upwind n = {n:4d}: max error {np.max(np.abs(v - pr.exact(*mesh.centers.T))):.3e}")
