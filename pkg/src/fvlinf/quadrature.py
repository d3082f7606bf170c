"""Gauss rules on mesh cells and edges."""
from __future__ import annotations

import numpy as np
from numpy.polynomial.legendre import leggauss

from .mesh import Mesh


def gauss01(n: int):
    """``n``-point Gauss-Legendre rule on [0, 1]."""
    if n < 1:
        raise ValueError(f"quadrature order must be >= 1, got {n}")
    x, w = leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _cell_boxes(mesh: Mesh):
    """Axis-aligned rectangles among the cells: mask and (x0, x1, y0, y1)."""
    cache = getattr(mesh, "_box_cache", None)
    if cache is not None:
        return cache
    a, b = mesh.edge_endpoints()
    axis = np.isclose(np.abs(mesh.edge_normals).max(axis=1), 1.0, rtol=0, atol=1e-14)
    mask = np.zeros(mesh.n_cells, dtype=bool)
    boxes = np.zeros((mesh.n_cells, 4))
    for k, lst in enumerate(mesh.cell_edges):
        pts = np.vstack([a[lst], b[lst]])
        box = (pts[:, 0].min(), pts[:, 0].max(), pts[:, 1].min(), pts[:, 1].max())
        boxes[k] = box
        area = (box[1] - box[0]) * (box[3] - box[2])
        mask[k] = (len(lst) == 4 and bool(np.all(axis[lst]))
                   and abs(area - mesh.cell_measures[k]) <= 1e-12 * mesh.cell_measures[k])
    mesh._box_cache = (mask, boxes)
    return mask, boxes


def cell_quadrature(mesh: Mesh, order: int):
    """Nodes, weights and owning cell of a rule integrating over every cell.

    Rectangles get the tensor rule; other cells are fanned into triangles
    ``(x_K, a, b)`` over their edges and integrated with a collapsed
    (Duffy) tensor rule, using signed areas so the fan is exact even when
    ``x_K`` lies outside the cell.
    """
    g, w = gauss01(order)
    mask, boxes = _cell_boxes(mesh)
    pts, wts, cid = [], [], []

    rk = np.flatnonzero(mask)
    if rk.size:
        X, Y = np.meshgrid(g, g, indexing="ij")
        W = np.outer(w, w)
        bx = boxes[rk]
        dx = (bx[:, 1] - bx[:, 0])[:, None]
        dy = (bx[:, 3] - bx[:, 2])[:, None]
        px = bx[:, 0:1] + dx * X.ravel()[None, :]
        py = bx[:, 2:3] + dy * Y.ravel()[None, :]
        pts.append(np.column_stack([px.ravel(), py.ravel()]))
        wts.append((dx * dy * W.ravel()[None, :]).ravel())
        cid.append(np.repeat(rk, order * order))

    other = np.flatnonzero(~mask)
    if other.size:
        a, b = mesh.edge_endpoints()
        U, V = np.meshgrid(g, g, indexing="ij")
        u, v = U.ravel(), V.ravel()
        wuv = np.outer(w, w).ravel() * (1.0 - u)
        xi, eta = u, v * (1.0 - u)
        for k in other:
            xk = mesh.centers[k]
            for e in mesh.cell_edges[k]:
                p, q = (a[e], b[e]) if mesh.edge_cells[e, 0] == k else (b[e], a[e])
                e1, e2 = p - xk, q - xk
                det = e1[0] * e2[1] - e1[1] * e2[0]  # twice the signed area
                pts.append(xk + xi[:, None] * e1 + eta[:, None] * e2)
                wts.append(det * wuv)
                cid.append(np.full(len(u), k))
    return np.vstack(pts), np.concatenate(wts), np.concatenate(cid)


def edge_quadrature(mesh: Mesh, order: int, edges=None):
    """Nodes and averaging weights (summing to 1 per edge) on the given edges."""
    g, w = gauss01(order)
    e = np.arange(mesh.n_edges) if edges is None else np.asarray(edges, dtype=np.int64)
    a, b = mesh.edge_endpoints()
    a, b = a[e], b[e]
    pts = a[:, None, :] + g[None, :, None] * (b - a)[:, None, :]
    return pts.reshape(-1, 2), np.tile(w, len(e)), np.repeat(e, order)


def average_per(values, weights, owners, n):
    """Weighted averages grouped by owner.

    Sums are divided by the per-owner weight totals (the cell measure, or 1
    on edges, up to rounding), which keeps averages of constants exact.
    Owners without nodes get 0.
    """
    out = np.zeros(n)
    wsum = np.zeros(n)
    np.add.at(out, owners, weights * values)
    np.add.at(wsum, owners, weights)
    return np.divide(out, wsum, out=np.zeros(n), where=wsum != 0)
