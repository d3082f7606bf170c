"""Two-point B-scheme: discrete data, assembly, M-matrix audit and solve.

Row ``K`` of the system is

    sum_{sigma in E_K} F_{K,sigma} + m(K) b_K v_K = m(K) f_K,

with ``F_{K,sigma} = 0`` on Neumann edges and

    F_{K,sigma} = tau_sigma (B(-U_{K,sigma} d_sigma) v_K - B(U_{K,sigma} d_sigma) v_{K,sigma})

otherwise, where ``v_{K,sigma}`` is the neighbour value or the Dirichlet
edge average (moved to the right-hand side).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse.linalg as spla

from .bfunctions import CUSTOM, BFunction, check_b_properties
from .linalg import SingularMatrixError, SparseMatrix, direct_solve, spmv, write_matrix_market, write_vector
from .mesh import DIRICHLET, INTERIOR, Mesh
from .problem import ProblemSpec
from .quadrature import average_per, cell_quadrature, edge_quadrature

DEFAULT_QUADRATURE_ORDER = 3
DEFAULT_SOLVER_TOL = 1e-12


class AssemblyError(ValueError):
    pass


class SolverError(RuntimeError):
    def __init__(self, msg, iterations=None, residual=None):
        super().__init__(msg)
        self.iterations = iterations
        self.residual = residual


class FieldEvaluationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DiscreteData:
    """Cell and edge averages of the problem data.

    ``U_edge[e]`` is ``U_{K,sigma}`` for the owner ``K`` of edge ``e``; the
    other cell sees ``-U_edge[e]``.  ``vD_edge`` is NaN off the Dirichlet
    boundary.
    """
    f_K: np.ndarray
    b_K: np.ndarray
    U_edge: np.ndarray
    vD_edge: np.ndarray
    dirichlet_mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        if np.any(np.asarray(self.b_K) < 0):
            raise ValueError("b_K must be nonnegative")
        for name in ("f_K", "b_K", "U_edge", "vD_edge", "dirichlet_mask"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def vD_values(self) -> np.ndarray:
        return self.vD_edge[self.dirichlet_mask]

    def with_data(self, f_K=None, vD_edge=None) -> "DiscreteData":
        return DiscreteData(self.f_K if f_K is None else f_K, self.b_K, self.U_edge,
                            self.vD_edge if vD_edge is None else vD_edge, self.dirichlet_mask)

    def reversed_ownership(self, mesh: Mesh) -> "DiscreteData":
        """Data matching :meth:`Mesh.reversed_ownership`."""
        U = np.where(mesh.interior, -self.U_edge, self.U_edge)
        return DiscreteData(self.f_K, self.b_K, U, self.vD_edge, self.dirichlet_mask)


def _locate_failure(fn, points, owners, what):
    for i in range(len(points)):
        try:
            with np.errstate(all="ignore"):
                val = np.asarray(fn(points[i:i + 1, 0], points[i:i + 1, 1]), dtype=float)
            ok = np.all(np.isfinite(val))
        except Exception as exc:  # noqa: BLE001 - re-raised with location
            return f"{what} {owners[i]}: {type(exc).__name__}: {exc}"
        if not ok:
            return f"{what} {owners[i]}: non-finite value at {tuple(points[i])}"
    return f"{what}: evaluation failed"


def _evaluate(fn, points, owners, what, label):
    try:
        with np.errstate(all="ignore"):  # overflow is reported below with its location
            val = fn(points[:, 0], points[:, 1])
        val = [np.broadcast_to(np.asarray(v, dtype=float), points[:, 0].shape) for v in val] \
            if isinstance(val, tuple) else np.broadcast_to(np.asarray(val, dtype=float), points[:, 0].shape)
        ok = all(np.all(np.isfinite(v)) for v in (val if isinstance(val, list) else [val]))
    except Exception:  # noqa: BLE001
        ok = False
    if not ok:
        probe = (lambda x, y: np.stack(fn(x, y))) if label == "velocity" else fn
        raise FieldEvaluationError(f"{label}: " + _locate_failure(probe, points, owners, what))
    return val


def discretize_data(mesh: Mesh, problem: ProblemSpec,
                    quadrature_order: int = DEFAULT_QUADRATURE_ORDER) -> DiscreteData:
    """Cell averages of ``f`` and ``b``, edge averages of ``U . n_{K,sigma}`` and ``v^D``."""
    qp, qw, qc = cell_quadrature(mesh, quadrature_order)
    f = _evaluate(problem.source, qp, qc, "cell", "source")
    b = _evaluate(problem.reaction, qp, qc, "cell", "reaction")
    f_K = average_per(f, qw, qc, mesh.n_cells)
    b_K = average_per(b, qw, qc, mesh.n_cells)
    if np.any(b_K < 0):
        k = int(np.argmin(b_K))
        raise FieldEvaluationError(f"reaction: cell {k}: average b_K = {b_K[k]} is negative")

    ep, ew, ee = edge_quadrature(mesh, quadrature_order)
    ux, uy = _evaluate(problem.velocity, ep, ee, "edge", "velocity")
    n = mesh.edge_normals[ee]
    U_edge = average_per(ux * n[:, 0] + uy * n[:, 1], ew, ee, mesh.n_edges)

    vD = np.full(mesh.n_edges, np.nan)
    d_edges = np.flatnonzero(mesh.dirichlet)
    if d_edges.size:
        dp, dw, de = edge_quadrature(mesh, quadrature_order, d_edges)
        g = _evaluate(problem.dirichlet_value, dp, de, "edge", "dirichlet")
        vD[d_edges] = average_per(g, dw, de, mesh.n_edges)[d_edges]
    return DiscreteData(f_K, b_K, U_edge, vD, mesh.dirichlet.copy())


@dataclass(frozen=True, eq=False)
class LinearSystem:
    matrix: SparseMatrix
    rhs: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.n


def _check_b(mesh: Mesh, data: DiscreteData, B: BFunction):
    if B.kind == CUSTOM:
        rep = check_b_properties(B)
        if not rep.ok:
            raise AssemblyError(f"custom B {B.label!r} fails the structural audit: {rep}")
    if B.requires_positivity_guard:
        active = ~mesh.neumann
        s = np.abs(data.U_edge) * mesh.edge_d
        bad = np.flatnonzero(active & (s >= 2.0))
        if bad.size:
            e = int(bad[0])
            raise AssemblyError(f"edge {e}: centered scheme needs |U_K,sigma| d_sigma < 2, got {s[e]!r}")


def _cell_terms(mesh, data):
    k = np.arange(mesh.n_cells)
    return k, k, mesh.cell_measures * data.b_K, mesh.cell_measures * data.f_K


def assemble(mesh: Mesh, data: DiscreteData, B: BFunction) -> LinearSystem:
    """Assemble the scheme from the ``B(-s) v_K - B(s) v_{K,sigma}`` flux form."""
    _check_b(mesh, data, B)
    it = np.flatnonzero(mesh.interior)
    di = np.flatnonzero(mesh.dirichlet)
    K, L = mesh.edge_cells[it, 0], mesh.edge_cells[it, 1]
    tau, s = mesh.edge_tau, data.U_edge * mesh.edge_d
    bm, bp = tau * B(-s), tau * B(s)

    ck, _, cdiag, crhs = _cell_terms(mesh, data)
    Kd = mesh.edge_cells[di, 0]
    rows = np.concatenate([ck, K, K, L, L, Kd])
    cols = np.concatenate([ck, K, L, L, K, Kd])
    vals = np.concatenate([cdiag, bm[it], -bp[it], bp[it], -bm[it], bm[di]])
    rhs = crhs.copy()
    np.add.at(rhs, Kd, bp[di] * data.vD_edge[di])
    return LinearSystem(SparseMatrix.from_triplets(mesh.n_cells, rows, cols, vals), rhs)


def assemble_numflux2(mesh: Mesh, data: DiscreteData, B: BFunction) -> LinearSystem:
    """Assemble from ``tau B(|s|)(v_K - v_{K,sigma}) + m(sigma)(U^+ v_K - U^- v_{K,sigma})``.

    Mathematically identical to :func:`assemble`; kept as an independent
    route for cross-checking.
    """
    _check_b(mesh, data, B)
    it = np.flatnonzero(mesh.interior)
    di = np.flatnonzero(mesh.dirichlet)
    K, L = mesh.edge_cells[it, 0], mesh.edge_cells[it, 1]
    U = data.U_edge
    diff = mesh.edge_tau * B(np.abs(U) * mesh.edge_d)
    up = mesh.edge_measures * np.maximum(U, 0.0)    # m(sigma) U_K^+ == m(sigma) U_L^-
    um = mesh.edge_measures * np.maximum(-U, 0.0)   # m(sigma) U_K^- == m(sigma) U_L^+

    ck, _, cdiag, crhs = _cell_terms(mesh, data)
    Kd = mesh.edge_cells[di, 0]
    rows = np.concatenate([ck, K, K, L, L, Kd])
    cols = np.concatenate([ck, K, L, L, K, Kd])
    vals = np.concatenate([cdiag, diff[it] + up[it], -(diff[it] + um[it]),
                           diff[it] + um[it], -(diff[it] + up[it]), diff[di] + up[di]])
    rhs = crhs.copy()
    np.add.at(rhs, Kd, (diff[di] + um[di]) * data.vD_edge[di])
    return LinearSystem(SparseMatrix.from_triplets(mesh.n_cells, rows, cols, vals), rhs)


def edge_fluxes(mesh: Mesh, data: DiscreteData, B: BFunction, v, form: str = "numflux"):
    """Fluxes ``(F_{K,sigma}, F_{L,sigma})`` per edge, seen from owner and neighbour.

    The neighbour column is NaN on boundary edges; both are 0 on Neumann edges.
    """
    v = np.asarray(v, dtype=float)
    K, L = mesh.edge_cells[:, 0], mesh.edge_cells[:, 1]
    other = np.where(mesh.interior, v[np.maximum(L, 0)], np.where(mesh.dirichlet, data.vD_edge, 0.0))
    tau, U, d, m = mesh.edge_tau, data.U_edge, mesh.edge_d, mesh.edge_measures

    def flux(UK, vK, vS):
        s = UK * d
        if form == "numflux":
            return tau * (B(-s) * vK - B(s) * vS)
        if form == "numflux2":
            return tau * B(np.abs(s)) * (vK - vS) + m * (np.maximum(UK, 0) * vK - np.maximum(-UK, 0) * vS)
        raise ValueError(f"unknown flux form {form!r}")

    FK = np.where(mesh.neumann, 0.0, flux(U, v[K], other))
    FL = np.where(mesh.interior, flux(-U, other, v[K]), np.nan)
    return FK, FL


@dataclass(frozen=True)
class MMatrixAudit:
    """Sign and dominance pattern of the assembled matrix.

    ``passed`` certifies the M-matrix property.  It needs nonpositive
    off-diagonals, a positive diagonal and nonnegative column sums.  B-scheme
    columns telescope to the Dirichlet and reaction terms.  Row sums pick up
    the discrete divergence of ``U``, so ``rowsum_nonnegative`` is reported
    but not required.
    """
    offdiag_nonpositive: bool
    diag_positive: bool
    rowsum_nonnegative: bool
    colsum_nonnegative: bool
    strictly_dominant_rows: list
    strictly_dominant_columns: list

    @property
    def passed(self) -> bool:
        return self.offdiag_nonpositive and self.diag_positive and self.colsum_nonnegative

    def as_dict(self) -> dict:
        return {"offdiag_nonpositive": self.offdiag_nonpositive, "diag_positive": self.diag_positive,
                "rowsum_nonnegative": self.rowsum_nonnegative,
                "colsum_nonnegative": self.colsum_nonnegative,
                "strictly_dominant_rows": list(self.strictly_dominant_rows),
                "strictly_dominant_columns": list(self.strictly_dominant_columns),
                "passed": self.passed}


def check_m_matrix(system: LinearSystem, rtol: float = 1e-12) -> MMatrixAudit:
    A = system.matrix.to_scipy().tocoo()
    off = A.row != A.col
    diag = system.matrix.diagonal()
    absA = abs(A)
    row_abs_off = np.asarray(absA.sum(axis=1)).ravel() - np.abs(diag)
    col_abs_off = np.asarray(absA.sum(axis=0)).ravel() - np.abs(diag)
    rowsum = np.asarray(A.sum(axis=1)).ravel()
    colsum = np.asarray(A.sum(axis=0)).ravel()
    row_scale = rtol * np.maximum(np.abs(diag), row_abs_off)
    col_scale = rtol * np.maximum(np.abs(diag), col_abs_off)
    return MMatrixAudit(
        offdiag_nonpositive=bool(np.all(A.data[off] <= 0)),
        diag_positive=bool(np.all(diag > 0)),
        rowsum_nonnegative=bool(np.all(rowsum >= -row_scale)),
        colsum_nonnegative=bool(np.all(colsum >= -col_scale)),
        strictly_dominant_rows=[int(i) for i in np.flatnonzero(diag - row_abs_off > row_scale)],
        strictly_dominant_columns=[int(i) for i in np.flatnonzero(diag - col_abs_off > col_scale)],
    )


def residual_norm(system: LinearSystem, v) -> float:
    return float(np.max(np.abs(spmv(system.matrix, v) - system.rhs), initial=0.0))


def _residual_bound(system, v, tol):
    return tol * (np.max(np.abs(system.rhs), initial=0.0)
                  + system.matrix.norm_inf() * np.max(np.abs(v), initial=0.0))


def solve(system: LinearSystem, tol: float = DEFAULT_SOLVER_TOL, *, reorder: bool = False) -> np.ndarray:
    """Solve ``M v = S`` to ``|Mv - S| <= tol (|S| + |M| |v|)``.

    A direct sparse LU is tried first; if it misses the contract, restarted
    GMRES with an incomplete-LU preconditioner takes over.

    Raises
    ------
    SingularMatrixError
        The matrix is singular.
    SolverError
        Neither route met the residual contract.
    """
    v = direct_solve(system.matrix, system.rhs, reorder=reorder)
    r = residual_norm(system, v)
    if r <= _residual_bound(system, v, tol):
        return v
    A = system.matrix.to_scipy().tocsc()
    ilu = spla.spilu(A, drop_tol=1e-8)
    M = spla.LinearOperator(A.shape, ilu.solve)
    its = [0]

    def count(_):
        its[0] += 1

    bnorm = np.max(np.abs(system.rhs), initial=0.0)
    v2, info = spla.gmres(A, system.rhs, x0=v, M=M, rtol=tol, atol=tol * bnorm, restart=50,
                          maxiter=200, callback=count, callback_type="pr_norm")
    r2 = residual_norm(system, v2)
    if r2 <= _residual_bound(system, v2, tol):
        return v2
    raise SolverError(f"solver did not converge: residual {r2:.3e} after {its[0]} GMRES iterations",
                      iterations=its[0], residual=r2)


def solve_problem(mesh: Mesh, problem: ProblemSpec, B: BFunction, *,
                  quadrature_order: int = DEFAULT_QUADRATURE_ORDER, tol: float = DEFAULT_SOLVER_TOL):
    """Discretize, assemble and solve; returns ``(v, data, system)``."""
    data = discretize_data(mesh, problem, quadrature_order)
    system = assemble(mesh, data, B)
    return solve(system, tol), data, system


def write_solution_csv(path, mesh: Mesh, v) -> None:
    lines = ["cell_id,x,y,measure,v"]
    for k in range(mesh.n_cells):
        x, y = (float(c) for c in mesh.centers[k])
        lines.append(f"{k},{x!r},{y!r},{float(mesh.cell_measures[k])!r},{float(v[k])!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_solution_csv(path):
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return arr[:, 4]


def dump_system(directory, system: LinearSystem, prefix: str = "system") -> tuple[Path, Path]:
    """Write ``<prefix>.mtx`` (MatrixMarket) and ``<prefix>_rhs.txt``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    mtx, vec = d / f"{prefix}.mtx", d / f"{prefix}_rhs.txt"
    write_matrix_market(mtx, system.matrix)
    write_vector(vec, system.rhs)
    return mtx, vec


__all__ = [
    "AssemblyError", "SolverError", "SingularMatrixError", "FieldEvaluationError", "DiscreteData",
    "LinearSystem", "MMatrixAudit", "discretize_data", "assemble", "assemble_numflux2", "edge_fluxes",
    "check_m_matrix", "solve", "solve_problem", "residual_norm", "write_solution_csv", "dump_system",
    "INTERIOR", "DIRICHLET",
]
