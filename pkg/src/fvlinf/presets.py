"""Named problem setups and seeded random problem generators."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import Mesh, build_rectangular_mesh, dirichlet_on
from .problem import ProblemSpec

ALL_SIDES = ("west", "east", "south", "north")


@dataclass(frozen=True)
class Preset:
    name: str
    problem: ProblemSpec
    nx: int
    ny: int
    rect: tuple = (0.0, 1.0, 0.0, 1.0)
    dirichlet_sides: tuple = ALL_SIDES
    exact: object = field(default=None, compare=False)
    description: str = ""

    @property
    def boundary_rule(self):
        return dirichlet_on(*self.dirichlet_sides)

    def mesh(self, nx: int | None = None, ny: int | None = None) -> Mesh:
        return build_rectangular_mesh(nx or self.nx, ny or self.ny, self.rect, self.boundary_rule)


def single_cell() -> Preset:
    return Preset("single-cell", ProblemSpec.from_expressions(dirichlet="1", name="single-cell"), 1, 1,
                  exact=lambda x, y: np.ones_like(x), description="one cell, v^D = 1")


def laplace_linear(n: int = 16) -> Preset:
    return Preset("laplace-linear", ProblemSpec.from_expressions(dirichlet="x", name="laplace-linear"),
                  n, n, exact=lambda x, y: np.asarray(x, dtype=float),
                  description="Laplace problem with affine Dirichlet data")


def sg_exponential(u: float = 5.0, n: int = 64) -> Preset:
    """Strip ``[0,1] x [0,1/n]`` with ``U = (u, 0)``, ``v = 0`` west, ``v = 1`` east.

    The exact solution ``expm1(u x) / expm1(u)`` is reproduced at the cell
    centres by the Scharfetter-Gummel scheme.
    """
    prob = ProblemSpec.from_expressions(velocity=(repr(float(u)), "0"), dirichlet="x", name="sg-exponential")
    return Preset("sg-exponential", prob, n, 1, (0.0, 1.0, 0.0, 1.0 / n), ("west", "east"),
                  exact=lambda x, y: np.expm1(u * np.asarray(x)) / np.expm1(u),
                  description="1D-like strip, constant drift")


def noncoercive_swirl(n: int = 32) -> Preset:
    prob = ProblemSpec.from_expressions(velocity=("10*(0.5 - y)", "10*(x - 0.5)"), reaction="0",
                                        source="1", dirichlet="x + y", name="noncoercive-swirl")
    return Preset("noncoercive-swirl", prob, n, n, dirichlet_sides=("west", "south"),
                  description="rotational drift, b = 0, Dirichlet on west and south only")


def mixed_sign_source(n: int = 32) -> Preset:
    prob = ProblemSpec.from_expressions(velocity=("1", "0.5"), reaction="0",
                                        source="10*sin(2*pi*x)*sin(2*pi*y)",
                                        dirichlet="cos(3*y) - x", name="mixed-sign-source")
    return Preset("mixed-sign-source", prob, n, n, description="sign-changing source and boundary data")


PRESETS = {
    "single-cell": single_cell,
    "laplace-linear": laplace_linear,
    "sg-exponential": sg_exponential,
    "noncoercive-swirl": noncoercive_swirl,
    "mixed-sign-source": mixed_sign_source,
}


def get_preset(name: str, **kwargs) -> Preset:
    try:
        return PRESETS[name](**kwargs)
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None


def _num(x) -> str:
    return repr(float(x))


def _wave(rng, amp):
    k, l = rng.uniform(0.5, 4.0, 2)
    p, q = rng.uniform(0, 2 * np.pi, 2)
    return f"{_num(amp)}*sin({_num(k)}*x + {_num(p)})*cos({_num(l)}*y + {_num(q)})"


def random_problem(rng: np.random.Generator, *, u_max: float = 2.0, f_max: float = 1.0,
                   compliant: bool = True, reaction: bool = True, n: int = 16) -> Preset:
    """A random smooth problem on the unit square.

    With ``compliant`` set, ``0 <= f <= f_max`` and ``0 <= v^D <= 1``;
    otherwise both change sign.  ``|U| <= u_max`` pointwise.  At least one
    side is Dirichlet.
    """
    # |U| <= sqrt(2) * (|a| + |c|) per component; scale so the bound is a draw in [0, u_max]
    target = rng.uniform(0.0, u_max)
    a1, c1, a2, c2 = rng.uniform(-1, 1, 4)
    scale = target / (np.sqrt(2.0) * max(abs(a1) + abs(c1), abs(a2) + abs(c2), 1e-12))
    ux = f"{_wave(rng, scale * a1)} + {_num(scale * c1)}"
    uy = f"{_wave(rng, scale * a2)} + {_num(scale * c2)}"
    if compliant:
        fa = rng.uniform(0.0, f_max)
        src = f"{_num(fa / 2)}*(1 + {_wave(rng, 1.0)})"
        ga = rng.uniform(0.0, 1.0)
        dirichlet = f"{_num(ga / 2)}*(1 + {_wave(rng, 1.0)})"
    else:
        src = f"{_wave(rng, f_max)} + {_num(rng.uniform(-0.3, 0.3) * f_max)}"
        dirichlet = f"{_wave(rng, 1.0)} + {_num(rng.uniform(-0.5, 0.5))}"
    b = f"{_num(rng.uniform(0, 1))}*(1 + {_wave(rng, 1.0)})" if reaction and rng.random() < 0.5 else "0"
    mask = rng.random(4) < 0.6
    if not mask.any():
        mask[rng.integers(4)] = True
    sides = tuple(s for s, on in zip(ALL_SIDES, mask) if on)
    prob = ProblemSpec.from_expressions(velocity=(ux, uy), reaction=b, source=src, dirichlet=dirichlet,
                                        name="random")
    return Preset("random", prob, n, n, dirichlet_sides=sides)
