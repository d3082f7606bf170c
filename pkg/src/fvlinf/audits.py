"""Seeded randomized audit suites shared by the CLI and the acceptance tests."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .bfunctions import SCHARFETTER_GUMMEL_B, UPWIND_B
from .degiorgi import DEFAULT_M_MAX, check_fundamental_estimate, decompose_signed, energy, \
    sequence_bound
from .mesh import build_rectangular_mesh, dirichlet_on
from .presets import random_problem
from .problem import compute_norms
from .scheme import DEFAULT_SOLVER_TOL, assemble, assemble_numflux2, check_m_matrix, discretize_data, \
    solve

DEFAULT_KINDS = (UPWIND_B, SCHARFETTER_GUMMEL_B)


@dataclass
class CompliantSuiteResult:
    trials: int
    records: list = field(default_factory=list)

    @property
    def m_matrix_failures(self) -> int:
        return sum(not r["m_matrix"] for r in self.records)

    @property
    def positivity_failures(self) -> int:
        return sum(r["min_v"] < -r["positivity_tol"] for r in self.records)

    @property
    def fundamental_violations(self) -> list:
        return [(r["trial"], r["B"], lv["m"]) for r in self.records for lv in r["levels"] if lv["holds"] is False]

    @property
    def active_levels(self) -> int:
        return sum(lv["level_set_measure"] > 0 for r in self.records for lv in r["levels"])

    @property
    def passed(self) -> bool:
        return not (self.m_matrix_failures or self.positivity_failures or self.fundamental_violations)

    def summary(self) -> dict:
        worst = max((lv["E_m"] / lv["rhs_bound"] for r in self.records for lv in r["levels"]
                     if lv["rhs_bound"] and lv["rhs_bound"] > 0), default=0.0)
        return {"trials": self.trials, "solves": len(self.records),
                "m_matrix_failures": self.m_matrix_failures,
                "positivity_failures": self.positivity_failures,
                "fundamental_violations": [list(v) for v in self.fundamental_violations],
                "active_levels": self.active_levels, "worst_energy_ratio": worst, "passed": self.passed}


def compliant_suite(seed: int, trials: int = 50, n: int = 16, *, kinds=DEFAULT_KINDS,
                    m_max: int = DEFAULT_M_MAX, u_max: float = 2.0, f_max: float = 1.0,
                    tol: float = DEFAULT_SOLVER_TOL, positivity_tol: float = 1e-10) -> CompliantSuiteResult:
    """Random problems with ``f >= 0`` and ``v^D`` in [0, 1], solved with every B in ``kinds``.

    Each solve is audited for the M-matrix certificate, positivity and the
    fundamental energy estimate at ``m = 1..m_max``.
    """
    rng = np.random.default_rng(seed)
    out = CompliantSuiteResult(trials)
    for t in range(trials):
        pr = random_problem(rng, u_max=u_max, f_max=f_max, n=n)
        mesh = pr.mesh()
        data = discretize_data(mesh, pr.problem)
        norms = compute_norms(pr.problem, mesh)
        for B in kinds:
            system = assemble(mesh, data, B)
            audit = check_m_matrix(system)
            v = solve(system, tol)
            levels = [check_fundamental_estimate(mesh, v, data, norms, B, m).as_dict()
                      for m in range(1, m_max + 1)]
            out.records.append({"trial": t, "B": B.label, "m_matrix": audit.passed,
                                "min_v": float(v.min()), "max_v": float(v.max()),
                                "positivity_tol": positivity_tol, "levels": levels})
    return out


def flux_form_suite(seed: int, count: int = 20, max_n: int = 32, kinds=DEFAULT_KINDS) -> dict:
    """Compare the two flux forms on random grids.

    Returns the worst entrywise relative gap of the matrices and the worst
    normwise gap ``|r1 - r2|_inf / |r1|_inf`` of the right-hand sides (the
    rhs sums terms of both signs, so entrywise comparison is ill-conditioned).
    """
    rng = np.random.default_rng(seed)
    worst_a, worst_r = 0.0, 0.0
    for i in range(count):
        nx, ny = (int(v) for v in rng.integers(1, max_n + 1, 2))
        if i == 0:
            nx = ny = max_n
        pr = random_problem(rng, u_max=rng.uniform(0, 40), f_max=5.0, compliant=False)
        mesh = build_rectangular_mesh(nx, ny, pr.rect, dirichlet_on(*pr.dirichlet_sides))
        data = discretize_data(mesh, pr.problem)
        B = kinds[i % len(kinds)]
        s1, s2 = assemble(mesh, data, B), assemble_numflux2(mesh, data, B)
        if not (np.array_equal(s1.matrix.row_offsets, s2.matrix.row_offsets)
                and np.array_equal(s1.matrix.col_indices, s2.matrix.col_indices)):
            return {"matrix": math.inf, "rhs": math.inf}
        a, b = s1.matrix.values, s2.matrix.values
        scale = np.maximum(np.abs(a), np.abs(b))
        gap = np.abs(a - b) / np.where(scale > 0, scale, 1.0)
        worst_a = max(worst_a, float(gap.max(initial=0.0)))
        rs = float(np.abs(s1.rhs).max(initial=0.0))
        if rs > 0:
            worst_r = max(worst_r, float(np.abs(s1.rhs - s2.rhs).max()) / rs)
    return {"matrix": worst_a, "rhs": worst_r}


@dataclass
class LemmaAuditResult:
    trials: int
    dominance_failures: list = field(default_factory=list)
    decay_failures: list = field(default_factory=list)
    exact_case: float = float("nan")

    @property
    def passed(self) -> bool:
        return not self.dominance_failures and not self.decay_failures and self.exact_case == 1 / 256

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def lemma_suite(seed: int, trials: int = 100, n_max: int = 60, rtol: float = 1e-9) -> LemmaAuditResult:
    """Direct recursion ``u_{n+1} = c_n K rho^n u_n^alpha`` against the closed-form bound.

    ``c_n`` is 1 (the extremal sequence, equal to the bound up to rounding)
    in half of the trials and uniform in (0, 1] otherwise.  ``u0`` is drawn
    below the smallness threshold, with parameters resampled until that
    threshold is a normal float.  The recursion is run on ``L_n = log u_n``,
    where it is affine: a plain float recursion on ``u_n`` amplifies
    relative rounding error by ``alpha`` per step and underflows, while
    in log space both ``L_n`` and its rounding error grow like ``alpha^n``.
    Dominance is ``L_n <= log bound_n + rtol max(1, |log bound_n|)``.  The
    sequence must also drop below 1e-12 by the first ``n`` at which the
    bound does.
    """
    rng = np.random.default_rng(seed)
    res = LemmaAuditResult(trials)
    log_small = math.log(1e-12)
    for t in range(trials):
        while True:  # keep the threshold (hence u0) a normal float
            alpha = 3.0 - rng.uniform(0.0, 2.0)  # (1, 3]
            rho = rng.uniform(1.0, 10.0)
            K = float(10.0 ** rng.uniform(-2, 2))
            log_thr = -math.log(rho) / (alpha - 1) ** 2 - math.log(K) / (alpha - 1)
            if abs(log_thr) < 600:
                break
        u0 = math.exp(log_thr) * rng.uniform(0.0, 1.0)
        tight = t % 2 == 0
        L = math.log(u0) if u0 > 0 else -math.inf
        lk, lr = math.log(K), math.log(rho)
        n_small = None
        for n in range(n_max + 1):
            lb = sequence_bound(u0, K, rho, alpha, n).log_bound_n
            if L != -math.inf and not L <= lb + rtol * max(1.0, abs(lb)):
                res.dominance_failures.append((t, n, L, lb))
                break
            if n_small is None and lb < log_small:
                n_small = n
                if not L < log_small:
                    res.decay_failures.append((t, n, L))
            lc = 0.0 if tight else math.log(rng.uniform(np.finfo(float).tiny, 1.0))
            L = lc + lk + n * lr + alpha * L
    res.exact_case = sequence_bound(0.5, 1.0, 1.0, 2.0, 3).bound_n
    return res


def decomposition_suite(seed: int, count: int = 20, n: int = 8, tol: float = DEFAULT_SOLVER_TOL,
                        kinds=DEFAULT_KINDS):
    """Worst ``|v - (P - N)|`` and most negative entry of P or N over random mixed-sign problems."""
    rng = np.random.default_rng(seed)
    worst_res, worst_neg = 0.0, 0.0
    for i in range(count):
        pr = random_problem(rng, u_max=4.0, f_max=5.0, compliant=False, n=n)
        dec = decompose_signed(pr.mesh(), pr.problem, kinds[i % len(kinds)], tol)
        worst_res = max(worst_res, dec.residual)
        worst_neg = min(worst_neg, float(dec.P.min()), float(dec.N.min()))
    return worst_res, worst_neg


def orientation_suite(seed: int, count: int = 10, n: int = 12, m_max: int = DEFAULT_M_MAX) -> float:
    """Worst relative change of ``E_m`` when every interior edge changes owner."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        nx, ny = (int(v) for v in rng.integers(2, n + 1, 2))
        mask = rng.random(4) < 0.5
        mask[0] = True
        sides = [s for s, on in zip(("west", "east", "south", "north"), mask) if on]
        mesh = build_rectangular_mesh(nx, ny, boundary_rule=dirichlet_on(*sides))
        rev = mesh.reversed_ownership()
        v = rng.uniform(0.0, 3.0, mesh.n_cells)
        vD = np.where(mesh.dirichlet, rng.uniform(0.0, 2.5, mesh.n_edges), np.nan)
        for m in range(1, m_max + 1):
            e1, _ = energy(mesh, v, vD, m)
            e2, _ = energy(rev, v, vD, m)
            if e1 or e2:
                worst = max(worst, abs(e1 - e2) / max(abs(e1), abs(e2)))
    return worst
