"""De Giorgi truncation energies and audits of the L-infinity bound chain.

The theorem-grade checks here are the fundamental energy estimate
(:func:`check_fundamental_estimate`) and the sequence lemma
(:func:`sequence_bound`).  Inequalities that involve constants with no
known value (the discrete Poincare-Sobolev constant and the constant of the
a priori bound) are evaluated with configurable constants and can be
calibrated from observed runs.  Those results are diagnostics, not verdicts.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .bfunctions import CENTERED, SCHARFETTER_GUMMEL, UPWIND, BFunction
from .mesh import Mesh, build_rectangular_mesh
from .problem import Norms, ProblemSpec, compute_norms
from .scheme import DEFAULT_QUADRATURE_ORDER, DEFAULT_SOLVER_TOL, DiscreteData, assemble, \
    discretize_data, solve

DEFAULT_M_MAX = 12
_AUDIT_RTOL = 1e-10
_LOG_RTOL = math.log1p(1e-6)


# -- thresholds and energies ----------------------------------------------
def truncation_threshold(m: int) -> float:
    """``C_m = 2 (1 - 2^-m)``; ``C_1 = 1`` and ``C_m -> 2``."""
    if int(m) != m or m < 1:
        raise ValueError(f"truncation level must be an integer >= 1, got {m}")
    return 2.0 * (1.0 - 2.0 ** (-int(m)))


def _vD_array(mesh: Mesh, vD_edge):
    if isinstance(vD_edge, DiscreteData):
        vD_edge = vD_edge.vD_edge
    vD = np.asarray(vD_edge, dtype=float)
    if vD.shape == (mesh.n_edges,):
        return vD
    d = np.flatnonzero(mesh.dirichlet)
    if vD.shape != d.shape:
        raise ValueError(f"vD_edge must have one value per edge or per Dirichlet edge ({d.size})")
    full = np.full(mesh.n_edges, np.nan)
    full[d] = vD
    return full


def _phi(s):
    s = np.asarray(s, dtype=float)
    return np.where(s >= 0, s / (1.0 + np.maximum(s, 0.0)), 0.0)


def _energy_at(mesh: Mesh, v, vD, threshold: float):
    v = np.asarray(v, dtype=float)
    act = ~mesh.neumann
    K, L = mesh.edge_cells[act, 0], mesh.edge_cells[act, 1]
    other = np.where(mesh.interior[act], v[np.maximum(L, 0)], vD[act])
    wK, wS = v[K] - threshold, other - threshold
    pK, pS = np.maximum(wK, 0.0), np.maximum(wS, 0.0)
    tau = mesh.edge_tau[act]
    E = float(np.sum(tau * (np.log1p(pS) - np.log1p(pK)) ** 2))
    F = float(np.sum(tau * (pS - pK) * (_phi(wS) - _phi(wK))))
    return E, F


def energy(mesh: Mesh, v, vD_edge, m: int) -> tuple[float, float]:
    """Truncation energies ``(E_m, F_m)`` of the cell field ``v``.

    Sums run over interior and Dirichlet edges; on a Dirichlet edge the
    outer value is ``v_sigma^D`` (possibly below ``C_m``, in which case the
    positive part removes it).
    """
    return _energy_at(mesh, v, _vD_array(mesh, vD_edge), truncation_threshold(m))


def level_set_measure(mesh: Mesh, v, threshold: float) -> float:
    """Total measure of the cells with ``v_K > threshold`` (strict)."""
    v = np.asarray(v, dtype=float)
    return float(np.sum(mesh.cell_measures[v > threshold]))


# -- beta_U -------------------------------------------------------------
def _golden_min(fn, a, b, iters=80):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    return min(fc, fd)


def beta_u(B: BFunction, norm_U_inf: float, diameter: float) -> float:
    """``inf_{|x| <= |U|_inf} B(diam x)``, clamped to ``(0, 1]``.

    Closed forms for upwind (1) and the decreasing Scharfetter-Gummel and
    centred functions; custom B uses a 2001-point scan refined by golden
    section around the smallest sample.
    """
    if norm_U_inf < 0 or not diameter > 0:
        raise ValueError("need norm_U_inf >= 0 and diameter > 0")
    a = float(norm_U_inf) * float(diameter)
    if a == 0.0:
        return 1.0
    if B.kind == UPWIND:
        val = 1.0
    elif B.kind in (SCHARFETTER_GUMMEL, CENTERED):
        val = float(B(np.array([a]))[0])
    else:
        xs = np.linspace(-a, a, 2001)
        vals = B(xs)
        i = int(np.argmin(vals))
        lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
        val = min(float(vals[i]), _golden_min(lambda s: float(B(np.array([s]))[0]), lo, hi))
    if not val > 0:
        raise ValueError(f"B({B.label}) is not positive on [-{a}, {a}] (inf = {val}); beta_U undefined")
    return min(val, 1.0)


@dataclass(frozen=True)
class BoundConstants:
    beta_U: float
    p: int
    xi: float
    norm_U_inf: float
    norm_f_inf: float
    eta: float = 1.0
    poincare_C: float = 1.0
    boundM_C: float = 1.0

    def __post_init__(self):
        if not 0 < self.beta_U <= 1:
            raise ValueError(f"beta_U must lie in (0, 1], got {self.beta_U}")
        for name in ("eta", "poincare_C", "boundM_C", "xi"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def for_problem(cls, mesh: Mesh, norms: Norms, B: BFunction, **configurable) -> "BoundConstants":
        return cls(beta_U=beta_u(B, norms.U_inf, mesh.domain_diameter), p=mesh.dimension,
                   xi=mesh.xi, norm_U_inf=norms.U_inf, norm_f_inf=norms.f_inf, **configurable)

    @property
    def energy_factor(self) -> float:
        """``(4p / beta^2)(|U|^2 + |f|)``, the slope of the fundamental estimate."""
        return 4.0 * self.p / self.beta_U ** 2 * (self.norm_U_inf ** 2 + self.norm_f_inf)

    def as_dict(self) -> dict:
        return asdict(self)


# -- fundamental estimate -----------------------------------------------
@dataclass(frozen=True)
class EnergyReport:
    m: int
    C_m: float
    E_m: float
    F_m: float
    level_set_measure: float
    rhs_bound: float
    holds: bool | None
    applicable: bool = True
    reason: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def compliance(data: DiscreteData) -> str:
    """Empty string if ``f_K >= 0`` and ``v_sigma^D`` in [0, 1], else the reason."""
    if np.any(data.f_K < 0):
        return f"f_K < 0 on {int(np.sum(data.f_K < 0))} cells"
    vd = data.vD_values()
    if np.any((vd < 0) | (vd > 1)):
        return "v_sigma^D outside [0, 1]"
    return ""


def check_fundamental_estimate(mesh: Mesh, v, data: DiscreteData, norms: Norms, B: BFunction,
                               m: int, constants: BoundConstants | None = None) -> EnergyReport:
    """Audit ``E_m <= (4p/beta^2)(|U|^2 + |f|) m({v > C_m})``.

    The norms are first raised to dominate the discrete data.  When the data
    are not compliant the report is marked not applicable and carries no
    verdict.
    """
    C = truncation_threshold(m)
    E, F = energy(mesh, v, data, m)
    meas = level_set_measure(mesh, v, C)
    reason = compliance(data)
    if reason:
        return EnergyReport(m, C, E, F, meas, float("nan"), None, False, reason)
    if constants is None:
        constants = BoundConstants.for_problem(mesh, norms.dominating(data), B)
    rhs = constants.energy_factor * meas
    return EnergyReport(m, C, E, F, meas, rhs, bool(E <= rhs * (1 + _AUDIT_RTOL)))


# -- sequence lemma -----------------------------------------------------
@dataclass(frozen=True)
class SequenceBound:
    bound_n: float
    smallness_threshold: float
    log_bound_n: float


def sequence_bound(u0: float, Kconst: float, rho: float, alpha: float, n: int) -> SequenceBound:
    """Closed-form bound for ``u_{n+1} <= K rho^n u_n^alpha``.

    ``bound_n = (u0 rho^(1/(a-1)^2) K^(1/(a-1)))^(a^n) rho^(-(n(a-1)+1)/(a-1)^2) K^(-1/(a-1))``.
    Evaluated with plain powers when that cannot overflow, else in log space.
    A ``u0`` within rounding of the smallness threshold is treated as equal.
    """
    if not alpha > 1:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    if not (Kconst > 0 and rho > 0):
        raise ValueError("K and rho must be positive")
    if u0 < 0 or int(n) != n or n < 0:
        raise ValueError("need u0 >= 0 and integer n >= 0")
    a1 = alpha - 1.0
    lr, lk = math.log(rho), math.log(Kconst)
    log_thr = -lr / a1 ** 2 - lk / a1
    thr = _safe_exp(log_thr)
    tail = -(n * a1 + 1.0) / a1 ** 2 * lr - lk / a1
    if u0 == 0:
        return SequenceBound(0.0, thr, -math.inf)
    log_base = math.log(u0) - log_thr
    if abs(log_base) <= 4 * np.finfo(float).eps * max(1.0, abs(log_thr)):
        log_base = 0.0
    power = alpha ** n
    log_bound = power * log_base + tail
    factors = (log_bound, power * log_base, lr / a1 ** 2, lk / a1, tail)
    if all(abs(v) < 700 for v in factors):
        base = u0 * rho ** (1.0 / a1 ** 2) * Kconst ** (1.0 / a1) if log_base else 1.0
        bound = base ** power * rho ** (-(n * a1 + 1.0) / a1 ** 2) * Kconst ** (-1.0 / a1)
    else:
        bound = _safe_exp(log_bound)
    return SequenceBound(bound, thr, log_bound)


def _safe_exp(t: float) -> float:
    return math.exp(t) if t < 709 else math.inf


# -- cascade ------------------------------------------------------------
@dataclass(frozen=True)
class CascadeLevel:
    m: int
    C_m: float
    E_m: float
    level_set_measure: float
    fundamental_holds: bool | None
    majmes_bound: float | None
    majmes_ok: bool | None
    recursion_bound: float | None
    recursion_ok: bool | None
    trivial: bool
    poincare_ratio: float | None


@dataclass(frozen=True)
class CascadeReport:
    levels: list
    calibrated_poincare_C: float | None
    C_tilde: float
    constants: BoundConstants

    @property
    def all_majmes_ok(self) -> bool:
        return all(l.majmes_ok is not False for l in self.levels)

    def as_dict(self) -> dict:
        return {"levels": [asdict(l) for l in self.levels],
                "calibrated_poincare_C": self.calibrated_poincare_C,
                "C_tilde": self.C_tilde, "constants": self.constants.as_dict()}


def verify_energy_cascade(mesh: Mesh, v, data: DiscreteData, norms: Norms, B: BFunction,
                          m_max: int = DEFAULT_M_MAX, constants: BoundConstants | None = None) -> CascadeReport:
    """Evaluate the level-set measure bound and the energy recursion for m = 2..m_max.

    For each level the measure bound uses the configured ``poincare_C``:

        m({v > C_m}) <= poincare_C / (xi^1.5 log(1 + 2^(1-m))^3) E_{m-1}^1.5

    and the recursion ``E_m <= energy_factor/p * C_tilde / xi^1.5 * 8^(m-1)
    E_{m-1}^1.5`` uses ``C_tilde = p poincare_C / log(2)^3``.  Level 1 is the
    base of the cascade and is checked only against the fundamental
    estimate.  ``calibrated_poincare_C`` is the smallest constant under
    which every measure bound holds; it is None when no level is active.
    """
    if constants is None:
        constants = BoundConstants.for_problem(mesh, norms.dominating(data), B)
    xi15 = constants.xi ** 1.5
    C_tilde = constants.p * constants.poincare_C / math.log(2.0) ** 3
    slope = constants.energy_factor / constants.p  # 4/beta^2 (|U|^2 + |f|)
    levels, ratios = [], []
    E_prev = None
    for m in range(1, m_max + 1):
        fund = check_fundamental_estimate(mesh, v, data, norms, B, m, constants)
        E, meas = fund.E_m, fund.level_set_measure
        trivial = meas == 0.0
        mb = mo = rb = ro = ratio = None
        if m >= 2:
            lg3 = math.log1p(2.0 ** (1 - m)) ** 3
            mb = constants.poincare_C / (xi15 * lg3) * E_prev ** 1.5
            mo = bool(meas <= mb * (1 + _AUDIT_RTOL)) or trivial
            rb = slope * C_tilde / xi15 * 8.0 ** (m - 1) * E_prev ** 1.5
            ro = bool(E <= rb * (1 + _AUDIT_RTOL)) or E == 0.0
            if not trivial:
                ratio = math.inf if E_prev == 0 else meas * xi15 * lg3 / E_prev ** 1.5
                ratios.append(ratio)
        levels.append(CascadeLevel(m, fund.C_m, E, meas, fund.holds, mb, mo, rb, ro, trivial, ratio))
        E_prev = E
    return CascadeReport(levels, max(ratios) if ratios else None, C_tilde, constants)


# -- sign decomposition --------------------------------------------------
@dataclass(frozen=True, eq=False)
class Decomposition:
    P: np.ndarray
    N: np.ndarray
    v: np.ndarray
    residual: float


def normalized_positive_part(problem: ProblemSpec, mesh: Mesh,
                             quadrature_order: int = DEFAULT_QUADRATURE_ORDER) -> tuple[ProblemSpec, float]:
    """The positive-part problem divided by ``V = max(|(v^D)^+|, 1)``, and ``V``.

    Its source is nonnegative and its boundary data lies in [0, 1], so it
    is compliant by construction whatever the signs of the original data.
    """
    pos = problem.positive_part()
    data = discretize_data(mesh, pos, quadrature_order)
    V = max(float(np.max(data.vD_values(), initial=0.0)), compute_norms(pos, mesh).vD_plus, 1.0)
    return pos.scaled_data(1.0 / V), V


def decompose_signed(mesh: Mesh, problem: ProblemSpec, B: BFunction, tol: float = DEFAULT_SOLVER_TOL,
                     quadrature_order: int = DEFAULT_QUADRATURE_ORDER) -> Decomposition:
    """Solve with ``(f^+, (v^D)^+)``, ``(f^-, (v^D)^-)`` and ``(f, v^D)``.

    The three solves share the matrix, so ``v = P - N`` holds to solver
    accuracy by linearity.
    """
    sols = []
    for prob in (problem.positive_part(), problem.negative_part(), problem):
        data = discretize_data(mesh, prob, quadrature_order)
        sols.append(solve(assemble(mesh, data, B), tol))
    P, N, v = sols
    return Decomposition(P, N, v, float(np.max(np.abs(v - (P - N)), initial=0.0)))


# -- a priori bound -----------------------------------------------------
def _signed_norms(norms: Norms, sign: str):
    if sign == "plus":
        return norms.f_plus, max(norms.vD_plus, 1.0)
    if sign == "minus":
        return norms.f_minus, max(norms.vD_minus, 1.0)
    raise ValueError(f"sign must be 'plus' or 'minus', got {sign!r}")


def _bound_lhs_over_t2(t, U2, f, V):
    """Left side of the a priori bound inequality divided by ``log(M/V)^2``."""
    fm = f / V * math.exp(-t)
    return (U2 * (U2 + f / V) / t ** 2 + fm) * (U2 + fm) ** 2


def a_priori_bound(norms: Norms, constants: BoundConstants, sign: str = "plus") -> float:
    """Smallest ``M > V`` with

        [|U|^2(|U|^2 + f/V) + (f/M) log(M/V)^2] (|U|^2 + f/M)^2 <= C beta^4 log(M/V)^2,

    where ``f = |f^+|`` and ``V = max(|(v^D)^+|, 1)`` (or the negative parts).

    Searched in ``t = log(M/V)``: ``t`` doubles from ``log 2`` until
    feasible, then bisection narrows ``M`` to a relative 1e-6 (at most 200
    steps).  Divided by ``t^2`` the left side decreases in ``t``, so the
    feasible set is a half-line.  Returns ``inf`` when ``M`` overflows.
    """
    f, V = _signed_norms(norms, sign)
    U2 = constants.norm_U_inf ** 2
    rhs = constants.boundM_C * constants.beta_U ** 4
    feasible = lambda t: _bound_lhs_over_t2(t, U2, f, V) <= rhs
    lo, hi = 0.0, math.log(2.0)
    while not feasible(hi):
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            return math.inf
    for _ in range(200):
        if hi - lo <= _LOG_RTOL:
            break
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return V * math.exp(hi) if hi < 700 else math.inf


def calibrate_boundM_C(norms: Norms, constants: BoundConstants, observed: float, sign: str = "plus",
                       safety: float = 2.0) -> float | None:
    """Largest ``boundM_C`` for which :func:`a_priori_bound` is at least ``safety * observed``.

    None means unconstrained: the bound always exceeds ``V``, so an
    observed extreme at or below ``V`` (up to a relative 1e-9 for solver
    rounding) constrains no constant.
    """
    f, V = _signed_norms(norms, sign)
    if observed <= V * (1 + 1e-9):
        return None
    target = safety * observed
    t = math.log(target / V)
    return _bound_lhs_over_t2(t, constants.norm_U_inf ** 2, f, V) / constants.beta_U ** 4


# -- uniform bound across refinements ------------------------------------
@dataclass(frozen=True)
class RefinementLevel:
    nx: int
    ny: int
    h: float
    v_max: float | None = None
    v_min: float | None = None
    abs_max: float | None = None
    P_max: float | None = None
    N_max: float | None = None
    M_bar: float | None = None
    M_underbar: float | None = None
    bounded: bool | None = None
    decomposition_residual: float | None = None
    calibration_plus: float | None = None
    calibration_minus: float | None = None
    error: str | None = None


@dataclass(frozen=True)
class UniformBoundReport:
    levels: list
    relative_change: float | None
    h_independent: bool | None
    all_bounded: bool
    constants: dict

    @property
    def passed(self) -> bool:
        return self.all_bounded and self.h_independent is not False \
            and all(l.error is None for l in self.levels)

    @property
    def calibrated_boundM_C(self) -> float | None:
        vals = [c for l in self.levels for c in (l.calibration_plus, l.calibration_minus) if c is not None]
        return min(vals) if vals else None

    def as_dict(self) -> dict:
        return {"levels": [asdict(l) for l in self.levels], "relative_change": self.relative_change,
                "h_independent": self.h_independent, "all_bounded": self.all_bounded,
                "constants": self.constants, "passed": self.passed,
                "calibrated_boundM_C": self.calibrated_boundM_C}


def verify_uniform_bound(problem: ProblemSpec, B: BFunction, refinements: Sequence[tuple[int, int]],
                         constants: dict | None = None, *, rect=(0.0, 1.0, 0.0, 1.0),
                         boundary_rule=None, quadrature_order: int = DEFAULT_QUADRATURE_ORDER,
                         tol: float = DEFAULT_SOLVER_TOL, max_change: float = 0.10,
                         safety: float = 2.0) -> UniformBoundReport:
    """Solve on each refinement and compare the extrema with the a priori bounds.

    ``constants`` holds the configurable ``eta``, ``poincare_C`` and
    ``boundM_C``.  Each level also reports the ``boundM_C`` it would
    tolerate (see :func:`calibrate_boundM_C`).  A failed level is recorded
    and the remaining levels still run.
    """
    from .mesh import all_dirichlet

    configurable = dict(constants or {})
    rule = boundary_rule or all_dirichlet
    levels = []
    for nx, ny in refinements:
        try:
            mesh = build_rectangular_mesh(nx, ny, rect, rule)
            dec = decompose_signed(mesh, problem, B, tol, quadrature_order)
            data = discretize_data(mesh, problem, quadrature_order)
            norms = compute_norms(problem, mesh, quadrature_order=quadrature_order).dominating(data)
            bc = BoundConstants.for_problem(mesh, norms, B, **configurable)
            Mb, Mu = a_priori_bound(norms, bc, "plus"), a_priori_bound(norms, bc, "minus")
            vmax, vmin = float(dec.v.max()), float(dec.v.min())
            Pm, Nm = float(dec.P.max()), float(dec.N.max())
            levels.append(RefinementLevel(
                nx, ny, mesh.size_h, vmax, vmin, float(np.abs(dec.v).max()), Pm, Nm, Mb, Mu,
                bool(vmax <= Mb and -vmin <= Mu and Pm <= Mb and Nm <= Mu), dec.residual,
                calibrate_boundM_C(norms, bc, max(Pm, vmax), "plus", safety),
                calibrate_boundM_C(norms, bc, max(Nm, -vmin), "minus", safety)))
        except Exception as exc:  # noqa: BLE001 - recorded per level
            levels.append(RefinementLevel(nx, ny, float("nan"), error=f"{type(exc).__name__}: {exc}"))
    ok = [l for l in levels if l.error is None]
    change = indep = None
    if len(ok) >= 2:
        a, b = ok[-2].abs_max, ok[-1].abs_max
        change = abs(b - a) / max(abs(b), np.finfo(float).tiny)
        indep = bool(change < max_change)
    return UniformBoundReport(levels, change, indep, all(l.bounded for l in ok), configurable)


# -- combined report ----------------------------------------------------
@dataclass
class DeGiorgiReport:
    levels: list = field(default_factory=list)
    constants: BoundConstants | None = None
    decomposition_residual: float | None = None
    M_bar: float | None = None
    M_underbar: float | None = None
    uniform_bound_observed: float | None = None
    refinements: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "levels": [l.as_dict() if hasattr(l, "as_dict") else l for l in self.levels],
            "constants": self.constants.as_dict() if self.constants else None,
            "decomposition_residual": self.decomposition_residual,
            "M_bar": self.M_bar, "M_underbar": self.M_underbar,
            "uniform_bound_observed": self.uniform_bound_observed,
            "refinements": [asdict(r) if not isinstance(r, dict) else r for r in self.refinements],
            **self.extra,
        }

    def to_json(self) -> str:
        from .report import dumps
        return dumps(self.as_dict())

    def write_level_csv(self, path) -> None:
        from .report import write_level_csv
        write_level_csv(path, [l.as_dict() if hasattr(l, "as_dict") else l for l in self.levels])


__all__ = [
    "truncation_threshold", "energy", "level_set_measure", "beta_u", "BoundConstants", "EnergyReport",
    "check_fundamental_estimate", "SequenceBound", "sequence_bound", "CascadeLevel", "CascadeReport",
    "verify_energy_cascade", "Decomposition", "decompose_signed", "a_priori_bound", "calibrate_boundM_C",
    "RefinementLevel", "UniformBoundReport", "verify_uniform_bound", "DeGiorgiReport",
]
