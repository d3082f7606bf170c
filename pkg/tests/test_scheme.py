import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fvlinf.bfunctions import CENTERED_B, SCHARFETTER_GUMMEL_B, UPWIND_B, get_b
from fvlinf.linalg import SingularMatrixError, SparseMatrix, read_matrix_market, read_vector
from fvlinf.mesh import build_rectangular_mesh, dirichlet_on
from fvlinf.presets import get_preset, random_problem, sg_exponential
from fvlinf.problem import ProblemSpec
from fvlinf.scheme import AssemblyError, FieldEvaluationError, LinearSystem, assemble, assemble_numflux2, \
    check_m_matrix, discretize_data, dump_system, edge_fluxes, read_solution_csv, residual_norm, solve, \
    solve_problem, write_solution_csv

BS = [UPWIND_B, SCHARFETTER_GUMMEL_B]


def test_single_cell_hand_values():
    pr = get_preset("single-cell")
    mesh = pr.mesh()
    data = discretize_data(mesh, pr.problem)
    system = assemble(mesh, data, UPWIND_B)
    # four Dirichlet edges with tau = 2 and B(0) = 1
    np.testing.assert_array_equal(system.matrix.toarray(), [[8.0]])
    np.testing.assert_array_equal(system.rhs, [8.0])
    assert solve(system)[0] == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("B", BS + [CENTERED_B], ids=lambda b: b.label)
@pytest.mark.parametrize("n", [1, 3, 8, 17])
def test_affine_oracle(B, n):
    prob = ProblemSpec.from_expressions(dirichlet="0.25 - 1.5*x + 2*y")
    mesh = build_rectangular_mesh(n, n + 2, (0, 2, -1, 1))
    v, _, _ = solve_problem(mesh, prob, B)
    x, y = mesh.centers.T
    np.testing.assert_allclose(v, 0.25 - 1.5 * x + 2 * y, atol=1e-12)


@pytest.mark.parametrize("u", [-20.0, -1.0, 0.5, 5.0, 20.0])
def test_sg_reproduces_exponential(u):
    pr = sg_exponential(u, 64)
    mesh = pr.mesh()
    v, _, _ = solve_problem(mesh, pr.problem, SCHARFETTER_GUMMEL_B)
    np.testing.assert_allclose(v, pr.exact(*mesh.centers.T), atol=1e-10)


def test_upwind_is_first_order_on_exponential():
    errs = []
    for n in (32, 64, 128):
        pr = sg_exponential(5.0, n)
        mesh = pr.mesh()
        v, _, _ = solve_problem(mesh, pr.problem, UPWIND_B)
        errs.append(np.max(np.abs(v - pr.exact(*mesh.centers.T))))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates > 0.8) and np.all(rates < 1.3)


@pytest.mark.parametrize("B", BS, ids=lambda b: b.label)
def test_flux_forms_and_conservation(B):
    pr = random_problem(np.random.default_rng(3), u_max=15.0, f_max=3.0, compliant=False, n=9)
    mesh = pr.mesh()
    data = discretize_data(mesh, pr.problem)
    system = assemble(mesh, data, B)
    v = solve(system)
    FK, FL = edge_fluxes(mesh, data, B, v, "numflux")
    GK, GL = edge_fluxes(mesh, data, B, v, "numflux2")
    np.testing.assert_allclose(FK, GK, rtol=1e-12, atol=1e-13)
    it = mesh.interior
    np.testing.assert_allclose(FK[it], -FL[it], atol=1e-13)  # local conservation
    np.testing.assert_array_equal(FK[mesh.neumann], 0.0)
    # cell balance: sum of outgoing fluxes + m b v = m f
    bal = mesh.cell_measures * (data.b_K * v - data.f_K)
    np.add.at(bal, mesh.edge_cells[:, 0], FK)
    np.add.at(bal, mesh.edge_cells[it, 1], FL[it])
    assert np.max(np.abs(bal)) <= 1e-11 * max(1.0, np.max(np.abs(mesh.cell_measures * data.f_K)) * mesh.n_cells)
    a1, a2 = system, assemble_numflux2(mesh, data, B)
    np.testing.assert_allclose(a1.matrix.values, a2.matrix.values, rtol=1e-13)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from(BS), st.floats(0.0, 30.0))
def test_monotone_inverse_by_brute_force(seed, B, u_max):
    """The inverse of the scheme matrix is entrywise nonnegative (dense check on small grids)."""
    rng = np.random.default_rng(seed)
    pr = random_problem(rng, u_max=u_max, f_max=1.0, compliant=False, n=int(rng.integers(2, 7)))
    mesh = pr.mesh()
    system = assemble(mesh, discretize_data(mesh, pr.problem), B)
    audit = check_m_matrix(system)
    assert audit.passed
    inv = np.linalg.inv(system.matrix.toarray())
    assert inv.min() >= -1e-12 * np.abs(inv).max()


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from(BS))
def test_comparison_principle(seed, B):
    rng = np.random.default_rng(seed)
    pr = random_problem(rng, u_max=10.0, f_max=2.0, compliant=False, n=8)
    mesh = pr.mesh()
    data = discretize_data(mesh, pr.problem)
    v = solve(assemble(mesh, data, B))
    bump_f = data.with_data(f_K=data.f_K + rng.uniform(0, 1, mesh.n_cells))
    bump_d = bump_f.with_data(vD_edge=data.vD_edge + 0.1)
    for d in (bump_f, bump_d):
        w = solve(assemble(mesh, d, B))
        assert np.all(w >= v - 1e-12)


def test_reversed_ownership_same_solution():
    pr = random_problem(np.random.default_rng(11), u_max=6.0, compliant=False, n=7)
    mesh = pr.mesh()
    data = discretize_data(mesh, pr.problem)
    v = solve(assemble(mesh, data, SCHARFETTER_GUMMEL_B))
    rev = mesh.reversed_ownership()
    w = solve(assemble(rev, data.reversed_ownership(mesh), SCHARFETTER_GUMMEL_B))
    np.testing.assert_allclose(w, v, rtol=1e-12, atol=1e-14)


def test_row_sums_may_be_negative_but_columns_are_not():
    prob = ProblemSpec.from_expressions(velocity=("10*(0.5 - y)*x", "10*(x - 0.5)"), source="1")
    mesh = build_rectangular_mesh(12, 12, boundary_rule=dirichlet_on("west"))
    audit = check_m_matrix(assemble(mesh, discretize_data(mesh, prob), UPWIND_B))
    assert audit.passed and audit.colsum_nonnegative
    assert not audit.rowsum_nonnegative
    assert audit.as_dict()["passed"] is True


def test_centered_guard_and_custom_audit():
    prob = ProblemSpec.from_expressions(velocity=("50", "0"), dirichlet="x")
    mesh = build_rectangular_mesh(8, 8)
    data = discretize_data(mesh, prob)
    with pytest.raises(AssemblyError, match="edge"):
        assemble(mesh, data, CENTERED_B)
    with pytest.raises(AssemblyError, match="structural audit"):
        assemble(mesh, data, get_b("centered-unguarded"))
    fine = build_rectangular_mesh(32, 32)
    assemble(fine, discretize_data(fine, prob), CENTERED_B)  # |U| d = 50/32 < 2


def test_field_errors_are_located():
    mesh = build_rectangular_mesh(4, 4)
    with pytest.raises(FieldEvaluationError, match="dirichlet: edge"):
        discretize_data(mesh, ProblemSpec.from_expressions(dirichlet="exp(1000*x)"))
    with pytest.raises(FieldEvaluationError, match="reaction"):
        discretize_data(mesh, ProblemSpec.from_expressions(reaction="x - 0.9"))
    with pytest.raises(FieldEvaluationError, match="source: cell"):
        discretize_data(mesh, ProblemSpec.from_expressions(source="exp(2000*y)"))


def test_solve_contract_and_singular():
    pr = get_preset("noncoercive-swirl", n=16)
    mesh = pr.mesh()
    system = assemble(mesh, discretize_data(mesh, pr.problem), UPWIND_B)
    v = solve(system, 1e-12, reorder=True)
    assert residual_norm(system, v) <= 1e-12 * (np.abs(system.rhs).max() + system.matrix.norm_inf() *
                                                 np.abs(v).max())
    sing = LinearSystem(SparseMatrix.from_triplets(2, [0, 0, 1, 1], [0, 1, 0, 1], [1.0, 1.0, 1.0, 1.0]),
                        np.ones(2))
    with pytest.raises(SingularMatrixError):
        solve(sing)


def test_outputs(tmp_path):
    pr = get_preset("laplace-linear", n=4)
    mesh = pr.mesh()
    v, _, system = solve_problem(mesh, pr.problem, UPWIND_B)
    write_solution_csv(tmp_path / "s.csv", mesh, v)
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "cell_id,x,y,measure,v"
    np.testing.assert_array_equal(read_solution_csv(tmp_path / "s.csv"), v)
    mtx, rhs = dump_system(tmp_path, system)
    np.testing.assert_array_equal(read_matrix_market(mtx).toarray(), system.matrix.toarray())
    np.testing.assert_array_equal(read_vector(rhs), system.rhs)
