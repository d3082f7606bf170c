"""Calibrating the two free constants of the a priori bound.

The Poincare-Sobolev constant and the constant in the bound on max v are
not known in closed form.  ``fvlinf calibrate`` estimates them from runs;
this script does the same through the library.  The calibrated Poincare
constant should change by less than a factor 4 between h and h/2 if it is
really mesh independent.
"""
import numpy as np

from fvlinf import UPWIND_B, assemble, compute_norms, discretize_data, get_preset, normalized_positive_part, \
    random_problem, solve, verify_energy_cascade, verify_uniform_bound
from fvlinf.mesh import dirichlet_on

rng = np.random.default_rng(11)
problems = [random_problem(rng, u_max=2.0, f_max=50.0) for _ in range(3)]
for n in (8, 16, 32, 64):
    worst = 0.0
    for pr in problems:
        mesh = pr.mesh(n, n)
        # the positive part, scaled so that its boundary data is at most 1
        normalized, _ = normalized_positive_part(pr.problem, mesh)
        data = discretize_data(mesh, normalized)
        v = solve(assemble(mesh, data, UPWIND_B))
        norms = compute_norms(normalized, mesh).dominating(data)
        C = verify_energy_cascade(mesh, v, data, norms, UPWIND_B, 12).calibrated_poincare_C
        worst = max(worst, C or 0.0)
    print(f"n = {n:3d}: calibrated Poincare constant {worst:.4g}")

pr = get_preset("noncoercive-swirl")
rep = verify_uniform_bound(pr.problem, UPWIND_B, [(8, 8), (16, 16)], rect=pr.rect,
                           boundary_rule=dirichlet_on(*pr.dirichlet_sides), safety=2.0)
print(f"largest bound constant keeping M_bar >= 2 max v on the swirl case: {rep.calibrated_boundM_C:.4g}")
