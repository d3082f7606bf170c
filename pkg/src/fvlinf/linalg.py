"""Row-compressed sparse matrices and a deterministic direct solver.

Storage is plain CSR with sorted, unique column indices per row.  Products
and factorizations go through scipy (``csr_matrix`` mat-vec accumulates each
row sequentially in storage order; SuperLU with a pivot threshold of 1 is
ordinary partial pivoting).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sps
import scipy.sparse.linalg as spla

DIRECT_RTOL = 1e-12


class SingularMatrixError(np.linalg.LinAlgError):
    """The matrix is singular; ``pivot`` is the first zero pivot if known."""

    def __init__(self, msg, pivot=None):
        super().__init__(msg)
        self.pivot = pivot


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    n: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ro = np.asarray(self.row_offsets, dtype=np.int64)
        ci = np.asarray(self.col_indices, dtype=np.int64)
        va = np.asarray(self.values, dtype=float)
        if ro.shape != (self.n + 1,) or ro[0] != 0 or ro[-1] != len(ci) or len(ci) != len(va):
            raise ValueError("inconsistent CSR dimensions")
        if np.any(np.diff(ro) < 0):
            raise ValueError("row offsets must be nondecreasing")
        if len(ci) and (ci.min() < 0 or ci.max() >= self.n):
            raise ValueError("column index out of range")
        row_id = np.repeat(np.arange(self.n), np.diff(ro))
        bad = np.flatnonzero((row_id[1:] == row_id[:-1]) & (np.diff(ci) <= 0))
        if bad.size:
            raise ValueError(f"row {row_id[bad[0]]}: column indices not sorted and unique")
        for name, arr in (("row_offsets", ro), ("col_indices", ci), ("values", va)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_triplets(cls, n, rows, cols, vals) -> "SparseMatrix":
        """Assemble from (row, col, value) triplets, summing duplicates in input order."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        order = np.lexsort((cols, rows))  # stable: duplicates keep input order
        rows, cols, vals = rows[order], cols[order], vals[order]
        if len(rows):
            new = np.ones(len(rows), dtype=bool)
            new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(new)
            rows, cols, vals = rows[starts], cols[starts], np.add.reduceat(vals, starts)
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.add.at(offsets, rows + 1, 1)
        return cls(n, np.cumsum(offsets), cols, vals)

    @classmethod
    def from_scipy(cls, A) -> "SparseMatrix":
        A = sps.csr_matrix(A)
        A.sum_duplicates()
        A.sort_indices()
        return cls(A.shape[0], A.indptr, A.indices, A.data)

    @classmethod
    def identity(cls, n) -> "SparseMatrix":
        return cls(n, np.arange(n + 1), np.arange(n), np.ones(n))

    def to_scipy(self) -> sps.csr_matrix:
        return sps.csr_matrix((self.values, self.col_indices, self.row_offsets), shape=(self.n, self.n))

    def toarray(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def row(self, i):
        s, e = self.row_offsets[i], self.row_offsets[i + 1]
        return self.col_indices[s:e], self.values[s:e]

    def diagonal(self) -> np.ndarray:
        return self.to_scipy().diagonal()

    def norm_inf(self) -> float:
        if len(self.values) == 0:
            return 0.0
        return float(np.max(abs(self.to_scipy()).sum(axis=1)))

    def __matmul__(self, x):
        return spmv(self, x)


def spmv(A: SparseMatrix, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (A.n,):
        raise ValueError(f"dimension mismatch: matrix is {A.n}x{A.n}, vector has shape {x.shape}")
    return A.to_scipy() @ x


def _zero_pivot(A: SparseMatrix):
    if A.n > 5000:
        return None
    _, _, U = scipy.linalg.lu(A.toarray())
    d = np.abs(np.diag(U))
    bad = np.flatnonzero(d <= np.finfo(float).eps * max(d.max(initial=0.0), 1.0) * A.n)
    return int(bad[0]) if bad.size else None


def direct_solve(A: SparseMatrix, b, *, reorder: bool = False, refine_steps: int = 2) -> np.ndarray:
    """Solve ``A x = b`` by sparse LU with partial pivoting.

    No column reordering is applied unless ``reorder`` is set (COLAMD).
    A couple of fixed iterative-refinement steps are taken if the residual
    misses ``1e-12 (|b| + |A| |x|)``; the outcome is still deterministic.

    Raises
    ------
    SingularMatrixError
        With the first zero pivot when it can be located.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (A.n,):
        raise ValueError(f"dimension mismatch: matrix is {A.n}x{A.n}, rhs has shape {b.shape}")
    csc = A.to_scipy().tocsc()
    try:
        lu = spla.splu(csc, permc_spec="COLAMD" if reorder else "NATURAL",
                       diag_pivot_thresh=1.0, options={"SymmetricMode": False})
    except RuntimeError as exc:
        pivot = _zero_pivot(A)
        where = f" (zero pivot at row {pivot})" if pivot is not None else ""
        raise SingularMatrixError(f"matrix is singular{where}: {exc}", pivot) from None
    x = lu.solve(b)
    if not np.all(np.isfinite(x)):
        pivot = _zero_pivot(A)
        raise SingularMatrixError("factorization produced non-finite values", pivot)
    bound = DIRECT_RTOL * (np.max(np.abs(b), initial=0.0) + A.norm_inf() * np.max(np.abs(x), initial=0.0))
    for _ in range(refine_steps):
        r = b - spmv(A, x)
        if np.max(np.abs(r), initial=0.0) <= bound:
            break
        x = x + lu.solve(r)
    return x


def write_matrix_market(path, A: SparseMatrix, comment: str = "") -> None:
    scipy.io.mmwrite(str(path), A.to_scipy().tocoo(), comment=comment, precision=17)


def read_matrix_market(path) -> SparseMatrix:
    A = scipy.io.mmread(str(path))
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{path}: matrix is not square {A.shape}")
    return SparseMatrix.from_scipy(A)


def write_vector(path, v) -> None:
    Path(path).write_text("".join(f"{float(x)!r}\n" for x in np.asarray(v, dtype=float)))


def read_vector(path) -> np.ndarray:
    return np.array([float(t) for t in Path(path).read_text().split()])
