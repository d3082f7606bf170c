import csv
import json
import subprocess
import sys

import pytest

from fvlinf.cli import EXIT_ASSEMBLY, EXIT_AUDIT, EXIT_CONFIG, EXIT_MESH, EXIT_OK, EXIT_SOLVER, main


def run(tmp_path, verb, ini=None, *extra):
    args = [verb, "--out", str(tmp_path / "out"), "--quiet", *extra]
    if ini is not None:
        tmp_path.mkdir(parents=True, exist_ok=True)
        cfg = tmp_path / "run.ini"
        cfg.write_text(ini)
        args += ["--config", str(cfg)]
    return main(args), tmp_path / "out"


def test_exit_codes_are_distinct():
    assert [EXIT_OK, EXIT_CONFIG, EXIT_MESH, EXIT_ASSEMBLY, EXIT_SOLVER, EXIT_AUDIT] == list(range(6))


def test_single_cell(tmp_path):
    code, out = run(tmp_path, "solve", "[problem]\npreset = single-cell\n")
    assert code == EXIT_OK
    rows = list(csv.reader((out / "solution.csv").open()))
    assert len(rows) == 2 and float(rows[1][-1]) == pytest.approx(1.0, abs=1e-14)
    assert json.loads((out / "m_matrix.json").read_text())["passed"]


def test_laplace_linear_error_and_dump(tmp_path):
    code, out = run(tmp_path, "solve", "[problem]\npreset = laplace-linear\n[scheme]\nkind = scharfetter_gummel\n"
                                        "[output]\ndump_system = true\n")
    assert code == EXIT_OK
    man = json.loads((out / "manifest.json").read_text())
    assert man["results"]["max_nodal_error"] < 1e-10
    assert man["outputs"] == sorted(["solution.csv", "m_matrix.json", "manifest.json", "system.mtx",
                                     "system_rhs.txt"])
    assert (out / "system.mtx").read_text().startswith("%%MatrixMarket")


@pytest.mark.parametrize("verb, ini, code", [
    ("solve", "[scheme]\nkind = bogus\n", EXIT_CONFIG),
    ("solve", "[problem]\nsource = 1 + foo\n", EXIT_ASSEMBLY),
    ("solve", "[mesh]\nnx = 4\n[solver]\ntol = 1e-300\n[problem]\npreset = noncoercive-swirl\n", EXIT_SOLVER),
])
def test_failures_leave_no_artifacts(tmp_path, verb, ini, code):
    got, out = run(tmp_path, verb, ini)
    assert got == code
    assert not (out / "solution.csv").exists()


def test_missing_config_file(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.ini"), "--quiet"]) == EXIT_CONFIG


def test_mesh_errors(tmp_path):
    (tmp_path / "m.txt").write_text("garbage\n")
    code, out = run(tmp_path, "mesh-check", f"[mesh]\nfile = {tmp_path / 'm.txt'}\n")
    assert code == EXIT_MESH


def test_mesh_check(tmp_path):
    code, out = run(tmp_path, "mesh-check", "[mesh]\nnx = 5\nny = 3\n")
    assert code == EXIT_OK
    res = json.loads((out / "mesh_check.json").read_text())
    assert res["n_cells"] == 15 and res["admissible"] and res["n_dirichlet"] == 16


def test_corrupted_b_stops_before_assembly(tmp_path):
    code, out = run(tmp_path, "verify", "[scheme]\nkind = custom\nhook = centered-unguarded\n")
    assert code == EXIT_AUDIT
    assert sorted(p.name for p in out.iterdir()) == ["b_properties.json"]


def test_verify_refinement_ladder(tmp_path):
    code, out = run(tmp_path, "verify", "[problem]\npreset = noncoercive-swirl\n[mesh]\nnx = 8\n"
                                         "[degiorgi]\ntrials = 3\nrefinements = 8x8, 16x16\n")
    assert code == EXIT_OK
    rep = json.loads((out / "degiorgi_report.json").read_text())
    assert [(r["nx"], r["ny"]) for r in rep["refinements"]] == [(8, 8), (16, 16)]
    for r in rep["refinements"]:
        assert r["v_max"] >= r["v_min"] and "M_bar" in r and r["error"] is None
    assert rep["passed"] and all(rep["audits"].values())
    assert (out / "levels.csv").read_text().count("\n") == 13


def test_seed_override_changes_random_suite(tmp_path):
    ini = "[mesh]\nnx = 6\n[degiorgi]\ntrials = 2\ngrid = 6\nf_max = 30\n"
    _, out1 = run(tmp_path / "a", "verify", ini, "--seed", "1")
    _, out2 = run(tmp_path / "b", "verify", ini, "--seed", "2")
    r1, r2 = (json.loads((o / "degiorgi_report.json").read_text()) for o in (out1, out2))
    assert r1["seed"] == 1 and r2["seed"] == 2
    assert r1["random_suite"]["worst_energy_ratio"] != r2["random_suite"]["worst_energy_ratio"]


def test_manifest_replay(tmp_path):
    ini = "[problem]\npreset = mixed-sign-source\n[mesh]\nnx = 8\n[degiorgi]\ntrials = 2\n"
    code, out = run(tmp_path / "a", "verify", ini)
    assert code == EXIT_OK
    again = tmp_path / "b"
    assert main(["verify", "--config", str(out / "manifest.json"), "--out", str(again), "--quiet"]) == EXIT_OK
    assert (out / "degiorgi_report.json").read_bytes() == (again / "degiorgi_report.json").read_bytes()


def test_calibrate_trivial_and_empty(tmp_path):
    code, out = run(tmp_path, "calibrate", "[calibrate]\nstudies = single-cell\nrefinements = 1x1\n")
    assert code == EXIT_OK
    res = json.loads((out / "calibration.json").read_text())
    assert res["poincare_C"] == "unconstrained" and res["boundM_C"] == "unconstrained"
    code, _ = run(tmp_path / "e", "calibrate", "[calibrate]\nstudies =\n")
    assert code == EXIT_CONFIG


def test_calibrate_random_study_within_factor_4(tmp_path):
    code, out = run(tmp_path, "calibrate", "[calibrate]\nrefinements = 8x8, 16x16\ntrials = 3\n")
    assert code == EXIT_OK
    study = json.loads((out / "calibration.json").read_text())["studies"]["random-compliant"]
    assert all(lv["active_levels"] > 0 for lv in study["levels"])
    assert study["within_factor_4"] is True and 1.0 <= study["poincare_C_spread"] <= 4.0
    assert isinstance(study["poincare_C"], float) and study["poincare_C"] > 0


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "fvlinf.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for verb in ("solve", "verify", "calibrate", "mesh-check"):
        assert verb in res.stdout
