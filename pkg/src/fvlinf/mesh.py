"""Admissible two-point-flux meshes of 2D polygonal domains.

A :class:`Mesh` stores cell-centred geometry as flat numpy arrays (one row
per cell or per edge).  Interior edges carry an owner cell ``K_sigma``
(column 0 of :attr:`Mesh.edge_cells`), and the stored unit normal points
out of the owner.  Dirichlet and Neumann edges have ``-1`` in column 1.

The text format read by :func:`load_mesh` and written by :func:`save_mesh`::

    mesh <p> <ncells> <nedges>
    xi <value>                                   # optional
    cell <id> <x> <y> <measure>
    edge <id> <I|D|N> <cellA> <cellB|-1> <measure> <d_sigma> <mx> <my> <nx> <ny> [tau]
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.spatial.distance import pdist

INTERIOR, DIRICHLET, NEUMANN = 0, 1, 2
KIND_CODES = {"I": INTERIOR, "D": DIRICHLET, "N": NEUMANN}
KIND_LETTERS = {v: k for k, v in KIND_CODES.items()}

ORTHOGONALITY_TOL = 1e-10  # radians
_GEOM_RTOL = 1e-9


class MeshError(ValueError):
    """Raised for malformed or non-admissible meshes."""


@dataclass(frozen=True)
class Point:
    coordinates: tuple[float, ...]


@dataclass(frozen=True)
class Cell:
    id: int
    center: Point
    measure: float
    edge_ids: tuple[int, ...]


@dataclass(frozen=True)
class Edge:
    id: int
    kind: str  # "I", "D" or "N"
    cells: tuple[int, int]  # (K, L) or (K, -1)
    measure: float
    d_sigma: float
    tau: float
    owner: int
    midpoint: Point
    normal_from_owner: tuple[float, ...]


@dataclass(frozen=True)
class AdmissibilityReport:
    xi_measured: float
    inegvol_ok: bool
    orthogonality_ok: bool
    worst_cell: int
    max_angle_deviation: float


def _readonly(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _point_segment_distance(p, a, b):
    """Row-wise Euclidean distance from points ``p`` to segments ``[a, b]``."""
    ab = b - a
    t = np.einsum("ij,ij->i", p - a, ab) / np.einsum("ij,ij->i", ab, ab)
    t = np.clip(t, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(p - proj, axis=1)


class Mesh:
    """Immutable admissible mesh.

    Use :func:`build_rectangular_mesh`, :func:`load_mesh` or
    :meth:`Mesh.from_arrays`; the constructor is not meant to be called
    directly.
    """

    def __init__(self, *, dimension, centers, cell_measures, edge_kind, edge_cells,
                 edge_measures, edge_d, edge_tau, edge_midpoints, edge_normals,
                 cell_edges, xi, size_h, domain_diameter, domain_measure):
        self.dimension = int(dimension)
        self.centers = centers
        self.cell_measures = cell_measures
        self.edge_kind = edge_kind
        self.edge_cells = edge_cells
        self.edge_measures = edge_measures
        self.edge_d = edge_d
        self.edge_tau = edge_tau
        self.edge_midpoints = edge_midpoints
        self.edge_normals = edge_normals
        self.cell_edges = cell_edges
        self.xi = float(xi)
        self.size_h = float(size_h)
        self.domain_diameter = float(domain_diameter)
        self.domain_measure = float(domain_measure)

    # -- construction -----------------------------------------------------
    @classmethod
    def from_arrays(cls, centers, cell_measures, edge_kind, edge_cells, edge_measures,
                    edge_d, edge_midpoints, edge_normals, *, xi=None, edge_tau=None,
                    dimension=2, check_owner_order=False):
        """Validate raw geometry and build a mesh.

        Parameters
        ----------
        centers : (ncells, 2) array
            Cell points ``x_K``.
        edge_kind : (nedges,) int array
            ``INTERIOR``, ``DIRICHLET`` or ``NEUMANN``.
        edge_cells : (nedges, 2) int array
            Owner cell first; ``-1`` in the second column for boundary edges.
        xi : float, optional
            Declared regularity constant. The mesh is rejected if the
            measured constant is smaller.  Defaults to the measured value.
        edge_tau : (nedges,) array, optional
            Stored transmissibilities, checked against ``measure / d_sigma``.

        Raises
        ------
        MeshError
            Naming the first offending cell or edge.
        """
        if dimension != 2:
            raise MeshError(f"only p = 2 meshes are supported, got p = {dimension}")
        centers = np.asarray(centers, dtype=float).reshape(-1, 2)
        cm = np.asarray(cell_measures, dtype=float).ravel()
        kind = np.asarray(edge_kind, dtype=np.int64).ravel()
        ec = np.asarray(edge_cells, dtype=np.int64).reshape(-1, 2)
        em = np.asarray(edge_measures, dtype=float).ravel()
        ed = np.asarray(edge_d, dtype=float).ravel()
        mid = np.asarray(edge_midpoints, dtype=float).reshape(-1, 2)
        nrm = np.asarray(edge_normals, dtype=float).reshape(-1, 2)
        nc, ne = len(centers), len(kind)
        if nc == 0 or ne == 0:
            raise MeshError("mesh has no cells or no edges")
        if not (len(cm) == nc and len(ec) == len(em) == len(ed) == len(mid) == len(nrm) == ne):
            raise MeshError("inconsistent array lengths")
        if not (np.all(np.isfinite(centers)) and np.all(np.isfinite(mid)) and np.all(np.isfinite(nrm))):
            raise MeshError("non-finite coordinates")

        bad = np.flatnonzero(~(cm > 0))
        if bad.size:
            raise MeshError(f"cell {bad[0]}: measure must be positive, got {cm[bad[0]]}")
        bad = np.flatnonzero(~np.isin(kind, [INTERIOR, DIRICHLET, NEUMANN]))
        if bad.size:
            raise MeshError(f"edge {bad[0]}: unknown kind code {kind[bad[0]]}")
        bad = np.flatnonzero(~((em > 0) & (ed > 0)))
        if bad.size:
            raise MeshError(f"edge {bad[0]}: measure and d_sigma must be positive")
        interior = kind == INTERIOR
        bad = np.flatnonzero((ec[:, 0] < 0) | (ec[:, 0] >= nc)
                             | (interior & ((ec[:, 1] < 0) | (ec[:, 1] >= nc) | (ec[:, 1] == ec[:, 0])))
                             | (~interior & (ec[:, 1] != -1)))
        if bad.size:
            raise MeshError(f"edge {bad[0]}: invalid cell references {tuple(ec[bad[0]])}")
        if check_owner_order:
            bad = np.flatnonzero(interior & (ec[:, 0] > ec[:, 1]))
            if bad.size:
                raise MeshError(f"edge {bad[0]}: owner is not the lower cell index")
        bad = np.flatnonzero(np.abs(np.linalg.norm(nrm, axis=1) - 1.0) > 1e-12)
        if bad.size:
            raise MeshError(f"edge {bad[0]}: normal is not a unit vector")
        if not np.any(kind == DIRICHLET):
            raise MeshError("no Dirichlet edge: the Dirichlet boundary must have positive measure")

        tau = em / ed
        if edge_tau is not None:
            stored = np.asarray(edge_tau, dtype=float).ravel()
            bad = np.flatnonzero(np.abs(stored - tau) > 4 * np.finfo(float).eps * np.abs(tau))
            if bad.size:
                i = bad[0]
                raise MeshError(f"edge {i}: stored tau {stored[i]!r} != measure/d_sigma {tau[i]!r}")

        tangent = np.column_stack([-nrm[:, 1], nrm[:, 0]])
        a = mid - 0.5 * em[:, None] * tangent
        b = mid + 0.5 * em[:, None] * tangent

        # d_sigma must match the geometry
        owner = ec[:, 0]
        geo_d = np.empty(ne)
        geo_d[interior] = np.linalg.norm(centers[ec[interior, 1]] - centers[owner[interior]], axis=1)
        bnd = ~interior
        geo_d[bnd] = _point_segment_distance(centers[owner[bnd]], a[bnd], b[bnd])
        bad = np.flatnonzero(np.abs(geo_d - ed) > _GEOM_RTOL * np.maximum(ed, geo_d))
        if bad.size:
            i = bad[0]
            raise MeshError(f"edge {i}: d_sigma {ed[i]!r} does not match geometric distance {geo_d[i]!r}")
        if np.any(interior):
            seg = centers[ec[interior, 1]] - centers[owner[interior]]
            bad = np.flatnonzero(np.einsum("ij,ij->i", seg, nrm[interior]) <= 0)
            if bad.size:
                i = np.flatnonzero(interior)[bad[0]]
                raise MeshError(f"edge {i}: normal does not point from owner towards the neighbour")

        # incidence
        cell_lists: list[list[int]] = [[] for _ in range(nc)]
        for e in range(ne):
            cell_lists[ec[e, 0]].append(e)
            if interior[e]:
                cell_lists[ec[e, 1]].append(e)
        for k, lst in enumerate(cell_lists):
            if not lst:
                raise MeshError(f"cell {k}: no edges")
        cell_edges = tuple(_readonly(lst, np.int64) for lst in cell_lists)

        # closed boundary and measure of each cell, from the outward normals
        flux_n = np.zeros((nc, 2))
        area = np.zeros(nc)
        for side, sgn in ((0, 1.0), (1, -1.0)):
            sel = ec[:, side] >= 0
            k = ec[sel, side]
            n_out = sgn * nrm[sel]
            np.add.at(flux_n, k, em[sel, None] * n_out)
            np.add.at(area, k, 0.5 * em[sel] * np.einsum("ij,ij->i", mid[sel] - centers[k], n_out))
        perim = np.zeros(nc)
        np.add.at(perim, ec[:, 0], em)
        np.add.at(perim, ec[interior, 1], em[interior])
        bad = np.flatnonzero(np.linalg.norm(flux_n, axis=1) > 1e-9 * perim)
        if bad.size:
            raise MeshError(f"cell {bad[0]}: edges do not form a closed polygon")
        bad = np.flatnonzero(np.abs(area - cm) > _GEOM_RTOL * cm)
        if bad.size:
            k = bad[0]
            raise MeshError(f"cell {k}: measure {cm[k]!r} does not match polygon area {area[k]!r}")

        dom_measure = float(np.sum(cm))
        bnd_area = 0.5 * float(np.sum(em[bnd] * np.einsum("ij,ij->i", mid[bnd], nrm[bnd])))
        if abs(bnd_area - dom_measure) > 1e-10 * dom_measure:
            raise MeshError(f"sum of cell measures {dom_measure!r} differs from domain measure {bnd_area!r}")

        bverts = np.vstack([a[bnd], b[bnd]])
        diam = float(pdist(bverts).max()) if len(bverts) > 1 else 0.0
        h = 0.0
        for k, lst in enumerate(cell_lists):
            verts = np.vstack([a[lst], b[lst]])
            h = max(h, float(pdist(verts).max()))

        mesh = cls(dimension=dimension, centers=_readonly(centers), cell_measures=_readonly(cm),
                   edge_kind=_readonly(kind, np.int64), edge_cells=_readonly(ec, np.int64),
                   edge_measures=_readonly(em), edge_d=_readonly(ed), edge_tau=_readonly(tau),
                   edge_midpoints=_readonly(mid), edge_normals=_readonly(nrm), cell_edges=cell_edges,
                   xi=1.0, size_h=h, domain_diameter=diam, domain_measure=dom_measure)
        ratios, cells_of = _xi_ratios(mesh)
        measured = float(ratios.min())
        if xi is None:
            xi = measured
        elif not xi > 0:
            raise MeshError(f"declared xi must be positive, got {xi}")
        elif measured < xi * (1 - 1e-12):
            k = int(cells_of[np.argmin(ratios)])
            raise MeshError(f"cell {k}: regularity constraint violated "
                            f"(measured xi {measured!r} < declared {xi!r})")
        mesh.xi = float(xi)
        return mesh

    # -- sizes and views --------------------------------------------------
    @property
    def n_cells(self) -> int:
        return len(self.centers)

    @property
    def n_edges(self) -> int:
        return len(self.edge_kind)

    @property
    def interior(self) -> np.ndarray:
        return self.edge_kind == INTERIOR

    @property
    def dirichlet(self) -> np.ndarray:
        return self.edge_kind == DIRICHLET

    @property
    def neumann(self) -> np.ndarray:
        return self.edge_kind == NEUMANN

    def edge_endpoints(self):
        """Endpoints ``(a, b)`` of every edge, counter-clockwise for the owner."""
        t = np.column_stack([-self.edge_normals[:, 1], self.edge_normals[:, 0]])
        half = 0.5 * self.edge_measures[:, None] * t
        return self.edge_midpoints - half, self.edge_midpoints + half

    def bounding_box(self):
        a, b = self.edge_endpoints()
        pts = np.vstack([a, b])
        return (float(pts[:, 0].min()), float(pts[:, 0].max()),
                float(pts[:, 1].min()), float(pts[:, 1].max()))

    @property
    def cells(self) -> list[Cell]:
        return [Cell(k, Point(tuple(self.centers[k])), float(self.cell_measures[k]),
                     tuple(int(e) for e in self.cell_edges[k])) for k in range(self.n_cells)]

    @property
    def edges(self) -> list[Edge]:
        out = []
        for e in range(self.n_edges):
            k, l = (int(c) for c in self.edge_cells[e])
            out.append(Edge(e, KIND_LETTERS[int(self.edge_kind[e])], (k, l),
                            float(self.edge_measures[e]), float(self.edge_d[e]),
                            float(self.edge_tau[e]), k, Point(tuple(self.edge_midpoints[e])),
                            tuple(self.edge_normals[e])))
        return out

    def reversed_ownership(self) -> "Mesh":
        """Copy of the mesh with every interior edge owned by its other cell."""
        ec = np.array(self.edge_cells)
        nrm = np.array(self.edge_normals)
        it = self.interior
        ec[it] = ec[it][:, ::-1]
        nrm[it] = -nrm[it]
        return Mesh.from_arrays(self.centers, self.cell_measures, self.edge_kind, ec,
                                self.edge_measures, self.edge_d, self.edge_midpoints, nrm,
                                xi=self.xi, dimension=self.dimension)

    def __repr__(self):
        return (f"Mesh(n_cells={self.n_cells}, n_edges={self.n_edges}, h={self.size_h:.4g}, "
                f"xi={self.xi:.4g})")


def _xi_ratios(mesh: Mesh):
    """``d(x_K, sigma) / d_sigma`` for every (cell, edge) incidence."""
    a, b = mesh.edge_endpoints()
    ec = mesh.edge_cells
    ks = [ec[:, 0]]
    es = [np.arange(mesh.n_edges)]
    it = np.flatnonzero(mesh.interior)
    ks.append(ec[it, 1])
    es.append(it)
    k = np.concatenate(ks)
    e = np.concatenate(es)
    dist = _point_segment_distance(mesh.centers[k], a[e], b[e])
    return dist / mesh.edge_d[e], k


def check_admissibility(mesh: Mesh) -> AdmissibilityReport:
    """Measure the regularity constant and test inegvol and orthogonality.

    ``xi_measured`` is the minimum of ``d(x_K, sigma) / d_sigma`` over all
    incidences; ``worst_cell`` is the cell attaining it.
    """
    ratios, cells_of = _xi_ratios(mesh)
    i = int(np.argmin(ratios))
    xi = float(ratios[i])

    lhs = np.zeros(mesh.n_cells)
    md = mesh.edge_measures * mesh.edge_d
    np.add.at(lhs, mesh.edge_cells[:, 0], md)
    it = mesh.interior
    np.add.at(lhs, mesh.edge_cells[it, 1], md[it])
    rhs = mesh.dimension / xi * mesh.cell_measures
    inegvol_ok = bool(np.all(lhs <= rhs * (1 + 1e-12)))

    max_dev = 0.0
    if np.any(it):
        seg = mesh.centers[mesh.edge_cells[it, 1]] - mesh.centers[mesh.edge_cells[it, 0]]
        nrm = mesh.edge_normals[it]
        cross = seg[:, 0] * nrm[:, 1] - seg[:, 1] * nrm[:, 0]
        dot = np.einsum("ij,ij->i", seg, nrm)
        max_dev = float(np.max(np.arctan2(np.abs(cross), dot)))
    return AdmissibilityReport(xi_measured=xi, inegvol_ok=inegvol_ok,
                               orthogonality_ok=max_dev <= ORTHOGONALITY_TOL,
                               worst_cell=int(cells_of[i]), max_angle_deviation=max_dev)


# -- boundary classification --------------------------------------------
BoundaryRule = Callable[[np.ndarray, np.ndarray], str]

_SIDE_NORMALS = {"west": (-1.0, 0.0), "east": (1.0, 0.0), "south": (0.0, -1.0), "north": (0.0, 1.0)}


def all_dirichlet(midpoint, normal) -> str:
    return "D"


def dirichlet_on(*sides: str) -> BoundaryRule:
    """Boundary rule marking the named rectangle sides Dirichlet, the rest Neumann.

    >>> rule = dirichlet_on("west")
    >>> rule((0.0, 0.5), (-1.0, 0.0))
    'D'
    """
    unknown = set(sides) - set(_SIDE_NORMALS)
    if unknown:
        raise ValueError(f"unknown side(s) {sorted(unknown)}; expected {sorted(_SIDE_NORMALS)}")
    targets = [np.array(_SIDE_NORMALS[s]) for s in sides]

    def rule(midpoint, normal):
        n = np.asarray(normal, dtype=float)
        return "D" if any(np.allclose(n, t) for t in targets) else "N"

    rule.sides = tuple(sides)
    return rule


def _classify(rule, midpoint, normal) -> int:
    label = rule(midpoint, normal)
    label = {"Dirichlet": "D", "Neumann": "N"}.get(label, label)
    if label not in ("D", "N"):
        raise MeshError(f"boundary rule returned {label!r} at {tuple(midpoint)}; expected 'D' or 'N'")
    return KIND_CODES[label]


def build_rectangular_mesh(nx: int, ny: int, rect: Sequence[float] = (0.0, 1.0, 0.0, 1.0),
                           boundary_rule: BoundaryRule = all_dirichlet) -> Mesh:
    """Uniform tensor grid of ``rect = (x0, x1, y0, y1)`` with centroid cell points.

    Cells are numbered ``i + nx * j`` (x fastest).  Interior edges are owned by
    the lower-index cell, so their normals point in +x or +y.
    """
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise MeshError(f"nx and ny must be positive integers, got ({nx}, {ny})")
    nx, ny = int(nx), int(ny)
    x0, x1, y0, y1 = (float(v) for v in rect)
    if not (x1 > x0 and y1 > y0):
        raise MeshError(f"degenerate rectangle {tuple(rect)}")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    dx, dy = np.diff(xs), np.diff(ys)
    cx, cy = 0.5 * (xs[:-1] + xs[1:]), 0.5 * (ys[:-1] + ys[1:])
    CX, CY = np.meshgrid(cx, cy)  # shape (ny, nx), x fastest when raveled
    centers = np.column_stack([CX.ravel(), CY.ravel()])
    measures = np.outer(dy, dx).ravel()

    def cid(i, j):
        return i + nx * j

    kind, cells, meas, dsig, mids, nrms = [], [], [], [], [], []

    def add(k, l, m, d, mid, n):
        kind.append(k)
        cells.append(l)
        meas.append(m)
        dsig.append(d)
        mids.append(mid)
        nrms.append(n)

    # x-faces: vertical edges at xs[i]
    for j in range(ny):
        for i in range(nx + 1):
            mid = (xs[i], cy[j])
            if i == 0:
                n = (-1.0, 0.0)
                add(_classify(boundary_rule, np.array(mid), np.array(n)), (cid(0, j), -1),
                    dy[j], cx[0] - xs[0], mid, n)
            elif i == nx:
                n = (1.0, 0.0)
                add(_classify(boundary_rule, np.array(mid), np.array(n)), (cid(nx - 1, j), -1),
                    dy[j], xs[nx] - cx[nx - 1], mid, n)
            else:
                add(INTERIOR, (cid(i - 1, j), cid(i, j)), dy[j], cx[i] - cx[i - 1], mid, (1.0, 0.0))
    # y-faces: horizontal edges at ys[j]
    for j in range(ny + 1):
        for i in range(nx):
            mid = (cx[i], ys[j])
            if j == 0:
                n = (0.0, -1.0)
                add(_classify(boundary_rule, np.array(mid), np.array(n)), (cid(i, 0), -1),
                    dx[i], cy[0] - ys[0], mid, n)
            elif j == ny:
                n = (0.0, 1.0)
                add(_classify(boundary_rule, np.array(mid), np.array(n)), (cid(i, ny - 1), -1),
                    dx[i], ys[ny] - cy[ny - 1], mid, n)
            else:
                add(INTERIOR, (cid(i, j - 1), cid(i, j)), dx[i], cy[j] - cy[j - 1], mid, (0.0, 1.0))

    if DIRICHLET not in kind:
        raise MeshError("boundary rule marks every boundary edge Neumann; need m(Gamma_D) > 0")
    return Mesh.from_arrays(centers, measures, kind, cells, meas, dsig, mids, nrms,
                            check_owner_order=True)


# -- text format --------------------------------------------------------
def save_mesh(mesh: Mesh, path, *, with_tau: bool = False, declare_xi: bool = False) -> None:
    lines = [f"mesh {mesh.dimension} {mesh.n_cells} {mesh.n_edges}"]
    if declare_xi:
        lines.append(f"xi {mesh.xi!r}")
    c, cm = mesh.centers.tolist(), mesh.cell_measures.tolist()
    for k in range(mesh.n_cells):
        lines.append(f"cell {k} {c[k][0]!r} {c[k][1]!r} {cm[k]!r}")
    ec, em, ed = mesh.edge_cells.tolist(), mesh.edge_measures.tolist(), mesh.edge_d.tolist()
    mid, nrm, tau = mesh.edge_midpoints.tolist(), mesh.edge_normals.tolist(), mesh.edge_tau.tolist()
    for e in range(mesh.n_edges):
        row = (f"edge {e} {KIND_LETTERS[int(mesh.edge_kind[e])]} {ec[e][0]} {ec[e][1]} "
               f"{em[e]!r} {ed[e]!r} {mid[e][0]!r} {mid[e][1]!r} {nrm[e][0]!r} {nrm[e][1]!r}")
        if with_tau:
            row += f" {tau[e]!r}"
        lines.append(row)
    Path(path).write_text("\n".join(lines) + "\n")


def load_mesh(path) -> Mesh:
    """Read a mesh in the text format and verify every invariant.

    Raises
    ------
    MeshError
        On parse failures (with the line number) and invariant violations.
    """
    header = None
    xi = None
    cells: dict[int, tuple] = {}
    edges: dict[int, tuple] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if tok[0] == "mesh":
                if header is not None or len(tok) != 4:
                    raise ValueError("bad or repeated header")
                header = (int(tok[1]), int(tok[2]), int(tok[3]))
            elif tok[0] == "xi":
                xi = float(tok[1])
            elif tok[0] == "cell":
                if len(tok) != 5:
                    raise ValueError("cell line needs 5 fields")
                cid = int(tok[1])
                if cid in cells:
                    raise ValueError(f"duplicate cell {cid}")
                cells[cid] = (float(tok[2]), float(tok[3]), float(tok[4]))
            elif tok[0] == "edge":
                if len(tok) not in (11, 12):
                    raise ValueError("edge line needs 11 or 12 fields")
                eid = int(tok[1])
                if eid in edges:
                    raise ValueError(f"duplicate edge {eid}")
                if tok[2] not in KIND_CODES:
                    raise ValueError(f"unknown edge kind {tok[2]!r}")
                vals = [float(t) for t in tok[5:]]
                edges[eid] = (KIND_CODES[tok[2]], int(tok[3]), int(tok[4]), *vals)
            else:
                raise ValueError(f"unknown record {tok[0]!r}")
        except (ValueError, IndexError) as exc:
            raise MeshError(f"{path}:{lineno}: {exc}") from None
    if header is None:
        raise MeshError(f"{path}: missing 'mesh' header")
    p, nc, ne = header
    if sorted(cells) != list(range(nc)):
        raise MeshError(f"{path}: expected cells 0..{nc - 1}, found {len(cells)} records")
    if sorted(edges) != list(range(ne)):
        raise MeshError(f"{path}: expected edges 0..{ne - 1}, found {len(edges)} records")
    if p != 2:
        raise MeshError(f"{path}: only p = 2 is supported, got {p}")
    C = np.array([cells[k] for k in range(nc)])
    # row = (kind, owner, other, measure, d, mx, my, nx, ny[, tau])
    E = [edges[e] for e in range(ne)]
    tau = None
    if any(len(row) == 10 for row in E):
        tau = np.array([row[9] if len(row) == 10 else row[3] / row[4] for row in E])
    return Mesh.from_arrays(
        C[:, :2], C[:, 2],
        [row[0] for row in E], [(row[1], row[2]) for row in E],
        [row[3] for row in E], [row[4] for row in E],
        [(row[5], row[6]) for row in E], [(row[7], row[8]) for row in E],
        xi=xi, edge_tau=tau, dimension=p)
