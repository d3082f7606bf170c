"""Bounded solutions without coercivity.

The swirl velocity has div U != 0 and no zeroth-order term compensates it,
so the bilinear form is not coercive.  The B-schemes still produce an
M-matrix (column sums >= 0; row sums may be negative) and the discrete
maxima stay bounded as the mesh is refined.
"""
from fvlinf import SCHARFETTER_GUMMEL_B, UPWIND_B, assemble, check_m_matrix, discretize_data, dirichlet_on, \
    get_preset, solve, verify_uniform_bound

pr = get_preset("noncoercive-swirl")
mesh = pr.mesh(32, 32)
data = discretize_data(mesh, pr.problem)
for B in (UPWIND_B, SCHARFETTER_GUMMEL_B):
    system = assemble(mesh, data, B)
    audit = check_m_matrix(system)
    v = solve(system)
    print(f"{B.label:20s} M-matrix {audit.passed}, row sums >= 0: {audit.rowsum_nonnegative}, "
          f"column sums >= 0: {audit.colsum_nonnegative}, v in [{v.min():.4f}, {v.max():.4f}]")

rep = verify_uniform_bound(pr.problem, UPWIND_B, [(8, 8), (16, 16), (32, 32), (64, 64)],
                           rect=pr.rect, boundary_rule=dirichlet_on(*pr.dirichlet_sides))
for lv in rep.levels:
    print(f"{lv.nx:3d}x{lv.ny:<3d} h = {lv.h:.4f}  max|v| = {lv.abs_max:.4f}")
print(f"relative change of the extrema over the ladder: {rep.relative_change:.4f}")
