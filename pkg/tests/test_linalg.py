import numpy as np
import pytest
import scipy.sparse as sp

from fvlinf.linalg import SingularMatrixError, SparseMatrix, direct_solve, read_matrix_market, read_vector, \
    spmv, write_matrix_market, write_vector


def test_from_triplets_sums_duplicates():
    A = SparseMatrix.from_triplets(3, [0, 0, 1, 2, 0], [0, 0, 1, 2, 2], [1.0, 2.0, 4.0, 5.0, -1.0])
    np.testing.assert_array_equal(A.toarray(), [[3.0, 0, -1.0], [0, 4.0, 0], [0, 0, 5.0]])
    np.testing.assert_array_equal(A.diagonal(), [3.0, 4.0, 5.0])
    assert A.norm_inf() == 5.0


def test_spmv_matches_dense():
    rng = np.random.default_rng(0)
    M = sp.random(30, 30, density=0.2, random_state=1, format="csr") + sp.identity(30)
    A = SparseMatrix.from_scipy(M)
    x = rng.standard_normal(30)
    np.testing.assert_allclose(spmv(A, x), M.toarray() @ x, rtol=1e-14)
    np.testing.assert_allclose(A @ x, M @ x, rtol=1e-14)


def test_validation():
    with pytest.raises(ValueError):
        SparseMatrix(2, np.array([0, 1]), np.array([0]), np.array([1.0]))
    with pytest.raises(ValueError):
        SparseMatrix.from_triplets(2, [0], [2], [1.0])


@pytest.mark.parametrize("reorder", [False, True])
def test_direct_solve(reorder):
    n = 50
    M = sp.diags([-1.0, 2.5, -1.2], [-1, 0, 1], shape=(n, n), format="csr")
    A = SparseMatrix.from_scipy(M)
    x = np.linspace(-1, 1, n)
    np.testing.assert_allclose(direct_solve(A, M @ x, reorder=reorder), x, rtol=1e-12)


def test_singular_pivot_located():
    A = SparseMatrix.from_triplets(3, [0, 1, 1, 2], [0, 0, 1, 2], [1.0, 1.0, 0.0, 1.0])
    with pytest.raises(SingularMatrixError) as info:
        direct_solve(A, np.ones(3))
    assert info.value.pivot == 1


def test_io_round_trip(tmp_path):
    A = SparseMatrix.from_triplets(3, [0, 1, 2, 2], [0, 1, 0, 2], [1.5, -2.0, 1e-300, 3.0])
    write_matrix_market(tmp_path / "a.mtx", A)
    B = read_matrix_market(tmp_path / "a.mtx")
    np.testing.assert_array_equal(B.toarray(), A.toarray())
    v = np.array([0.1, -2.5e-17, 3.0])
    write_vector(tmp_path / "v.txt", v)
    np.testing.assert_array_equal(read_vector(tmp_path / "v.txt"), v)
