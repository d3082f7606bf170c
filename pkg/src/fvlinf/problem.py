"""Continuous problem data and their sampled sup-norms."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .expr import compile_expr
from .mesh import Mesh
from .quadrature import cell_quadrature, edge_quadrature


class ProblemError(ValueError):
    pass


@dataclass(frozen=True)
class ProblemSpec:
    """Data of ``div(-grad v + U v) + b v = f`` with ``v = v^D`` on the Dirichlet part.

    Every field is a vectorized callable of ``(x, y)``; ``velocity`` returns
    the pair ``(U_x, U_y)``.  ``expressions`` keeps the source strings when
    the problem was built from text, so runs can be recorded and replayed.
    """
    velocity: Callable
    reaction: Callable
    source: Callable
    dirichlet_value: Callable
    name: str = "custom"
    expressions: dict | None = field(default=None, compare=False)

    @classmethod
    def from_expressions(cls, velocity=("0", "0"), reaction="0", source="0", dirichlet="0",
                         name="custom") -> "ProblemSpec":
        ux, uy = (compile_expr(str(e)) for e in velocity)
        exprs = {"velocity": [str(velocity[0]), str(velocity[1])], "reaction": str(reaction),
                 "source": str(source), "dirichlet": str(dirichlet)}
        return cls(lambda x, y: (ux(x, y), uy(x, y)), compile_expr(str(reaction)),
                   compile_expr(str(source)), compile_expr(str(dirichlet)), name, exprs)

    def _with(self, source_map, dirichlet_map, src_expr, dir_expr, suffix):
        f, g = self.source, self.dirichlet_value
        exprs = None
        if self.expressions is not None:
            exprs = dict(self.expressions,
                         source=src_expr.format(self.expressions["source"]),
                         dirichlet=dir_expr.format(self.expressions["dirichlet"]))
        return replace(self, source=lambda x, y: source_map(f(x, y)),
                       dirichlet_value=lambda x, y: dirichlet_map(g(x, y)),
                       name=f"{self.name}{suffix}", expressions=exprs)

    def positive_part(self) -> "ProblemSpec":
        """Same operator with data ``f^+`` and ``(v^D)^+``."""
        pos = lambda a: np.maximum(a, 0.0)
        return self._with(pos, pos, "max({}, 0)", "max({}, 0)", "+")

    def negative_part(self) -> "ProblemSpec":
        """Same operator with data ``f^-`` and ``(v^D)^-``."""
        neg = lambda a: np.maximum(-a, 0.0)
        return self._with(neg, neg, "max(-({}), 0)", "max(-({}), 0)", "-")

    def negated_data(self) -> "ProblemSpec":
        neg = lambda a: -a
        return self._with(neg, neg, "-({})", "-({})", "~")

    def scaled_data(self, lam: float) -> "ProblemSpec":
        """Multiply ``f`` and ``v^D`` by ``lam``."""
        lam = float(lam)
        mul = lambda a: lam * a
        return self._with(mul, mul, f"{lam!r}*({{}})", f"{lam!r}*({{}})", f"*{lam:g}")


@dataclass(frozen=True)
class Norms:
    """Sup-norms of the data.

    These are sampled lower estimates of the true sup unless ``sampled`` is
    False.  :meth:`dominating` raises them so they also bound the discrete
    averages actually used by the scheme.
    """
    U_inf: float
    f_inf: float
    f_plus: float
    f_minus: float
    vD_plus: float
    vD_minus: float
    b_min: float = 0.0
    sampled: bool = True

    def dominating(self, data) -> "Norms":
        uk = float(np.max(np.abs(data.U_edge), initial=0.0))
        fk = np.asarray(data.f_K)
        vd = data.vD_values()
        return replace(
            self,
            U_inf=max(self.U_inf, uk),
            f_inf=max(self.f_inf, float(np.max(np.abs(fk), initial=0.0))),
            f_plus=max(self.f_plus, float(np.max(fk, initial=0.0))),
            f_minus=max(self.f_minus, float(np.max(-fk, initial=0.0))),
            vD_plus=max(self.vD_plus, float(np.max(vd, initial=0.0))),
            vD_minus=max(self.vD_minus, float(np.max(-vd, initial=0.0))),
        )

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _is_rectangle(mesh: Mesh) -> bool:
    x0, x1, y0, y1 = mesh.bounding_box()
    return abs((x1 - x0) * (y1 - y0) - mesh.domain_measure) <= 1e-12 * mesh.domain_measure


def compute_norms(problem: ProblemSpec, mesh: Mesh, *, lattice: int = 64,
                  quadrature_order: int = 3) -> Norms:
    """Estimate the data sup-norms by sampling.

    Samples are a ``lattice x lattice`` grid (rectangular domains only),
    cell quadrature nodes and cell vertices for ``U``, ``b`` and ``f``,
    every edge quadrature node for ``U``, and Dirichlet edge nodes and
    endpoints for ``v^D``.
    """
    cq, _, _ = cell_quadrature(mesh, quadrature_order)
    eq, _, _ = edge_quadrature(mesh, quadrature_order)
    a, b = mesh.edge_endpoints()
    pts = [cq, eq, a, b, mesh.centers]
    if lattice and _is_rectangle(mesh):
        x0, x1, y0, y1 = mesh.bounding_box()
        X, Y = np.meshgrid(np.linspace(x0, x1, lattice), np.linspace(y0, y1, lattice))
        pts.append(np.column_stack([X.ravel(), Y.ravel()]))
    P = np.vstack(pts)
    ux, uy = problem.velocity(P[:, 0], P[:, 1])
    speed = np.hypot(np.broadcast_to(ux, P[:, 0].shape), np.broadcast_to(uy, P[:, 0].shape))
    f = np.broadcast_to(problem.source(P[:, 0], P[:, 1]), P[:, 0].shape)
    bv = np.broadcast_to(problem.reaction(P[:, 0], P[:, 1]), P[:, 0].shape)
    dq, _, _ = edge_quadrature(mesh, quadrature_order, np.flatnonzero(mesh.dirichlet))
    D = np.vstack([dq, a[mesh.dirichlet], b[mesh.dirichlet]])
    g = np.broadcast_to(problem.dirichlet_value(D[:, 0], D[:, 1]), D[:, 0].shape)
    for name, arr in (("velocity", speed), ("source", f), ("reaction", bv), ("dirichlet", g)):
        if not np.all(np.isfinite(arr)):
            raise ProblemError(f"{name} field is not finite at some sample point")
    if np.min(bv) < 0:
        i = int(np.argmin(bv))
        raise ProblemError(f"reaction must be nonnegative; b = {bv[i]} at {tuple(P[i])}")
    return Norms(U_inf=float(speed.max()), f_inf=float(np.abs(f).max()),
                 f_plus=float(np.maximum(f, 0).max()), f_minus=float(np.maximum(-f, 0).max()),
                 vD_plus=float(np.maximum(g, 0).max(initial=0.0)),
                 vD_minus=float(np.maximum(-g, 0).max(initial=0.0)),
                 b_min=float(bv.min()))
