"""Command line entry point: ``fvlinf {solve,verify,calibrate,mesh-check}``.

Exit codes: 0 success, 1 config error, 2 mesh error, 3 assembly error,
4 solver failure, 5 audit failure.
"""
from __future__ import annotations

import argparse
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .audits import compliant_suite, lemma_suite
from .bfunctions import PositivityViolation, check_b_properties
from .config import RANDOM_STUDY, ConfigError, RunConfig
from .degiorgi import BoundConstants, DeGiorgiReport, a_priori_bound, check_fundamental_estimate, \
    decompose_signed, normalized_positive_part, verify_energy_cascade, verify_uniform_bound
from .expr import ExpressionError
from .linalg import SingularMatrixError
from .mesh import MeshError, build_rectangular_mesh, check_admissibility, dirichlet_on, load_mesh
from .presets import ALL_SIDES, get_preset, random_problem
from .problem import ProblemError, ProblemSpec, compute_norms
from .report import write_json
from .scheme import AssemblyError, FieldEvaluationError, SolverError, assemble, check_m_matrix, \
    discretize_data, dump_system, residual_norm, solve, write_solution_csv

EXIT_OK, EXIT_CONFIG, EXIT_MESH, EXIT_ASSEMBLY, EXIT_SOLVER, EXIT_AUDIT = range(6)


class AuditFailure(RuntimeError):
    pass


def _classify(exc: BaseException) -> int | None:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, MeshError):
        return EXIT_MESH
    if isinstance(exc, (AssemblyError, PositivityViolation, FieldEvaluationError, ProblemError,
                        ExpressionError)):
        return EXIT_ASSEMBLY
    if isinstance(exc, (SolverError, SingularMatrixError)):
        return EXIT_SOLVER
    if isinstance(exc, AuditFailure):
        return EXIT_AUDIT
    return None


# -- case construction -------------------------------------------------------
class Case:
    """Mesh, problem and (when known) exact solution described by a config."""

    def __init__(self, cfg: RunConfig):
        m, p = cfg["mesh"], cfg["problem"]
        self.preset = get_preset(p["preset"]) if p["preset"] else None
        if self.preset is not None:
            self.problem = self.preset.problem
            self.rect, self.sides = self.preset.rect, self.preset.dirichlet_sides
            nx, ny = m["nx"] or self.preset.nx, m["ny"] or m["nx"] or self.preset.ny
        else:
            self.problem = ProblemSpec.from_expressions(
                velocity=(p["velocity_x"] or "0", p["velocity_y"] or "0"), reaction=p["reaction"] or "0",
                source=p["source"] or "0", dirichlet=p["dirichlet"] or "0", name="custom")
            self.rect = tuple(m["rect"])
            self.sides = ALL_SIDES if "all" in m["dirichlet"] else tuple(m["dirichlet"])
            nx, ny = m["nx"] or 16, m["ny"] or m["nx"] or 16
        self.grid = (nx, ny)
        if m["file"]:
            self.mesh = load_mesh(m["file"])
        else:
            self.mesh = build_rectangular_mesh(nx, ny, self.rect, dirichlet_on(*self.sides))

    @property
    def exact(self):
        return self.preset.exact if self.preset is not None else None

    def describe(self) -> dict:
        return {"problem": self.problem.name, "expressions": self.problem.expressions,
                "n_cells": self.mesh.n_cells, "n_edges": self.mesh.n_edges}


def _manifest(cfg: RunConfig, command: str, outputs, results: dict) -> dict:
    # no timestamps or host names: the manifest must be identical across reruns
    return {"command": command, "config": cfg.to_dict(), "seed": cfg["degiorgi"]["seed"],
            "outputs": sorted(outputs), "results": results,
            "versions": {"fvlinf": __version__, "python": platform.python_version(),
                         "numpy": np.__version__, "scipy": scipy.__version__}}


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- verbs ---------------------------------------------------------------------
def run_solve(cfg: RunConfig, log=print) -> int:
    B = cfg.b_function()
    case = Case(cfg)
    order, tol = cfg["scheme"]["quadrature_order"], cfg["solver"]["tol"]
    data = discretize_data(case.mesh, case.problem, order)
    system = assemble(case.mesh, data, B)
    audit = check_m_matrix(system)
    v = solve(system, tol, reorder=cfg["solver"]["reorder"])

    out = _out_dir(cfg)
    outputs = ["solution.csv", "m_matrix.json", "manifest.json"]
    write_solution_csv(out / "solution.csv", case.mesh, v)
    write_json(out / "m_matrix.json", audit.as_dict())
    if cfg["output"]["dump_system"]:
        dump_system(out, system)
        outputs += ["system.mtx", "system_rhs.txt"]
    results = {**case.describe(), "B": B.label, "m_matrix_passed": audit.passed,
               "residual": residual_norm(system, v), "v_min": float(v.min()), "v_max": float(v.max())}
    if case.exact is not None and not cfg["mesh"]["file"]:
        c = case.mesh.centers
        results["max_nodal_error"] = float(np.max(np.abs(v - case.exact(c[:, 0], c[:, 1]))))
    write_json(out / "manifest.json", _manifest(cfg, "solve", outputs, results))
    log(f"solve: {case.mesh.n_cells} cells, v in [{v.min():.6g}, {v.max():.6g}], "
        f"M-matrix {'ok' if audit.passed else 'FAILED'}")
    return EXIT_OK


def run_verify(cfg: RunConfig, log=print) -> int:
    B = cfg.b_function()
    bprops = check_b_properties(B)
    out = _out_dir(cfg)
    d = cfg["degiorgi"]
    if not bprops.ok:
        write_json(out / "b_properties.json", bprops.__dict__)
        log(f"verify: B function {B.label!r} fails the property audit; nothing assembled")
        return EXIT_AUDIT

    order, tol, seed = cfg["scheme"]["quadrature_order"], cfg["solver"]["tol"], d["seed"]
    configurable = {k: d[k] for k in ("eta", "poincare_C", "boundM_C")}
    audits = {"b_properties": bprops.ok}

    suite = compliant_suite(seed, d["trials"], d["grid"], kinds=(B,), m_max=d["m_max"], u_max=d["u_max"],
                            f_max=d["f_max"], tol=tol) if d["trials"] else None
    if suite is not None:
        audits["random_m_matrix"] = suite.m_matrix_failures == 0
        audits["random_positivity"] = suite.positivity_failures == 0
        audits["random_fundamental_estimate"] = not suite.fundamental_violations
    lemma = lemma_suite(seed, d["lemma_trials"])
    audits["sequence_lemma"] = lemma.passed

    case = Case(cfg)
    mesh, problem = case.mesh, case.problem
    data = discretize_data(mesh, problem, order)
    system = assemble(mesh, data, B)
    mm = check_m_matrix(system)
    audits["m_matrix"] = mm.passed
    dec = decompose_signed(mesh, problem, B, tol, order)
    audits["decomposition"] = dec.residual <= 10 * tol
    audits["decomposition_signs"] = bool(min(dec.P.min(), dec.N.min()) >= -tol)

    normalized, V = normalized_positive_part(problem, mesh, order)
    ndata = discretize_data(mesh, normalized, order)
    nv = solve(assemble(mesh, ndata, B), tol)
    nnorms = compute_norms(normalized, mesh, quadrature_order=order).dominating(ndata)
    nconst = BoundConstants.for_problem(mesh, nnorms, B, **configurable)
    levels = [check_fundamental_estimate(mesh, nv, ndata, nnorms, B, m, nconst) for m in range(1, d["m_max"] + 1)]
    audits["fundamental_estimate"] = all(l.holds is not False for l in levels)
    cascade = verify_energy_cascade(mesh, nv, ndata, nnorms, B, d["m_max"], nconst)

    norms = compute_norms(problem, mesh, quadrature_order=order).dominating(data)
    const = BoundConstants.for_problem(mesh, norms, B, **configurable)
    uniform = None
    if d["refinements"]:
        uniform = verify_uniform_bound(problem, B, [tuple(g) for g in d["refinements"]], configurable,
                                       rect=case.rect, boundary_rule=dirichlet_on(*case.sides),
                                       quadrature_order=order, tol=tol, max_change=d["max_change"],
                                       safety=d["safety"])

    report = DeGiorgiReport(
        levels=levels, constants=const, decomposition_residual=dec.residual,
        M_bar=a_priori_bound(norms, const, "plus"), M_underbar=a_priori_bound(norms, const, "minus"),
        uniform_bound_observed=float(np.max(np.abs(dec.v))),
        refinements=uniform.levels if uniform else [],
        extra={"audits": audits, "passed": all(audits.values()), "B": B.label, "seed": seed,
               "case": case.describe(), "norms": norms.as_dict(), "normalization_V": V,
               "normalized_constants": nconst.as_dict(), "m_matrix": mm.as_dict(),
               "v_min": float(dec.v.min()), "v_max": float(dec.v.max()),
               "P_max": float(dec.P.max()), "N_max": float(dec.N.max()),
               "cascade": cascade.as_dict(), "lemma": lemma.as_dict(),
               "random_suite": suite.summary() if suite else None,
               "uniform_bound": ({k: v for k, v in uniform.as_dict().items() if k != "levels"}
                                 if uniform else None),
               "norms_note": "data sup-norms are sampled lower estimates, raised to dominate the discrete data"})
    (out / "degiorgi_report.json").write_text(report.to_json())
    report.write_level_csv(out / "levels.csv")
    outputs = ["degiorgi_report.json", "levels.csv", "manifest.json"]
    write_json(out / "manifest.json", _manifest(cfg, "verify", outputs, {"audits": audits}))
    failed = sorted(k for k, ok in audits.items() if not ok)
    log("verify: all theorem-grade audits passed" if not failed else f"verify: FAILED {', '.join(failed)}")
    return EXIT_AUDIT if failed else EXIT_OK


def _study_cases(name: str, cfg: RunConfig):
    """``(problem, rect, sides)`` triples of a study.

    The random study draws ``trials`` compliant problems with a source
    strong enough (``f_max``) that levels ``m >= 2`` become active.
    """
    c = cfg["calibrate"]
    if name == RANDOM_STUDY:
        rng = np.random.default_rng(cfg["degiorgi"]["seed"])
        prs = [random_problem(rng, u_max=c["u_max"], f_max=c["f_max"]) for _ in range(c["trials"])]
    else:
        prs = [get_preset(name)]
    return [(pr.problem, pr.rect, pr.dirichlet_sides) for pr in prs]


def _none_as_unconstrained(x):
    return "unconstrained" if x is None else x


def _max_or_none(vals):
    vals = [v for v in vals if v is not None]
    return max(vals) if vals else None


def _min_or_none(vals):
    vals = [v for v in vals if v is not None]
    return min(vals) if vals else None


def _calibrate_level(problem, mesh, B, m_max, order, tol, configurable):
    normalized, _ = normalized_positive_part(problem, mesh, order)
    ndata = discretize_data(mesh, normalized, order)
    nv = solve(assemble(mesh, ndata, B), tol)
    nnorms = compute_norms(normalized, mesh, quadrature_order=order).dominating(ndata)
    casc = verify_energy_cascade(mesh, nv, ndata, nnorms, B, m_max,
                                 BoundConstants.for_problem(mesh, nnorms, B, **configurable))
    return casc.calibrated_poincare_C, sum(l.m >= 2 and not l.trivial for l in casc.levels)


def run_calibrate(cfg: RunConfig, log=print) -> int:
    """Smallest ``poincare_C`` and largest ``boundM_C`` consistent with every run of each study.

    ``poincare_C`` comes from the level-set measure bounds of the
    normalized positive-part problem (compliant by construction);
    ``boundM_C`` from the observed extrema against the a priori bound.
    """
    B = cfg.b_function()
    c, d = cfg["calibrate"], cfg["degiorgi"]
    order, tol = cfg["scheme"]["quadrature_order"], cfg["solver"]["tol"]
    configurable = {k: d[k] for k in ("eta", "poincare_C", "boundM_C")}
    grids = [tuple(g) for g in c["refinements"]]
    studies = {}
    for name in c["studies"]:
        rows = [{"nx": nx, "ny": ny, "poincare_C": [], "boundM_C": [], "active_levels": 0, "abs_max": 0.0}
                for nx, ny in grids]
        for problem, rect, sides in _study_cases(name, cfg):
            rule = dirichlet_on(*sides)
            uniform = verify_uniform_bound(problem, B, grids, configurable, rect=rect, boundary_rule=rule,
                                           quadrature_order=order, tol=tol, safety=d["safety"])
            for row, ul in zip(rows, uniform.levels):
                if ul.error is not None:
                    raise SolverError(f"study {name} at {ul.nx}x{ul.ny}: {ul.error}")
                mesh = build_rectangular_mesh(ul.nx, ul.ny, rect, rule)
                pc, active = _calibrate_level(problem, mesh, B, c["m_max"], order, tol, configurable)
                row["h"] = mesh.size_h
                row["poincare_C"].append(pc)
                row["boundM_C"] += [ul.calibration_plus, ul.calibration_minus]
                row["active_levels"] += active
                row["abs_max"] = max(row["abs_max"], ul.abs_max)
        for row in rows:
            row["poincare_C"] = _max_or_none(row["poincare_C"])
            row["boundM_C"] = _min_or_none(row["boundM_C"])
        pc = [r["poincare_C"] for r in rows if r["poincare_C"] is not None]
        ratio = max(pc) / min(pc) if len(pc) >= 2 and min(pc) > 0 else None
        studies[name] = {
            "levels": [dict(r, poincare_C=_none_as_unconstrained(r["poincare_C"]),
                            boundM_C=_none_as_unconstrained(r["boundM_C"])) for r in rows],
            "poincare_C": _none_as_unconstrained(_max_or_none(pc)),
            "boundM_C": _none_as_unconstrained(_min_or_none(r["boundM_C"] for r in rows)),
            "poincare_C_spread": ratio, "within_factor_4": None if ratio is None else bool(ratio <= 4.0)}
    keep = lambda key: [s[key] for s in studies.values() if s[key] != "unconstrained"]
    result = {"B": B.label, "seed": d["seed"], "studies": studies,
              "poincare_C": _none_as_unconstrained(_max_or_none(keep("poincare_C"))),
              "boundM_C": _none_as_unconstrained(_min_or_none(keep("boundM_C"))),
              "notes": {"poincare_C": "smallest constant making every level-set measure bound hold",
                        "boundM_C": "largest constant keeping the a priori bound above safety * observed extremes"}}
    out = _out_dir(cfg)
    write_json(out / "calibration.json", result)
    write_json(out / "manifest.json", _manifest(cfg, "calibrate", ["calibration.json", "manifest.json"],
                                                {"poincare_C": result["poincare_C"], "boundM_C": result["boundM_C"]}))
    log(f"calibrate: poincare_C = {result['poincare_C']}, boundM_C = {result['boundM_C']}")
    return EXIT_OK


def run_mesh_check(cfg: RunConfig, log=print) -> int:
    case = Case(cfg)
    mesh = case.mesh
    adm = check_admissibility(mesh)
    ok = bool(adm.inegvol_ok and adm.orthogonality_ok)
    result = {"n_cells": mesh.n_cells, "n_edges": mesh.n_edges, "n_interior": int(mesh.interior.sum()),
              "n_dirichlet": int(mesh.dirichlet.sum()), "n_neumann": int(mesh.neumann.sum()),
              "xi": mesh.xi, "size_h": mesh.size_h, "admissibility": adm.__dict__, "admissible": ok}
    out = _out_dir(cfg)
    write_json(out / "mesh_check.json", result)
    log(f"mesh-check: {mesh.n_cells} cells, xi = {adm.xi_measured:.6g}, "
        f"{'admissible' if ok else 'NOT admissible'}")
    return EXIT_OK if ok else EXIT_MESH


VERBS = {"solve": run_solve, "verify": run_verify, "calibrate": run_calibrate, "mesh-check": run_mesh_check}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fvlinf", description=__doc__.splitlines()[0])
    ap.add_argument("verb", choices=sorted(VERBS))
    ap.add_argument("--config", help="INI (or JSON manifest) configuration file; defaults apply without it")
    ap.add_argument("--out", help="output directory, overrides [output] dir")
    ap.add_argument("--seed", type=int, help="random seed (u64), overrides [degiorgi] seed")
    ap.add_argument("--quiet", action="store_true", help="print nothing on success")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    log = (lambda *a, **k: None) if args.quiet else print
    try:
        cfg = RunConfig.from_file(args.config) if args.config else RunConfig.default()
        cfg = cfg.with_seed(args.seed).with_output(args.out)
        return VERBS[args.verb](cfg, log)
    except Exception as exc:  # noqa: BLE001 - mapped to the exit-code contract
        code = _classify(exc)
        if code is None:
            raise
        print(f"fvlinf {args.verb}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
