import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fvlinf.mesh import DIRICHLET, NEUMANN, MeshError, build_rectangular_mesh, check_admissibility, \
    dirichlet_on, load_mesh, save_mesh


def test_grid_counts_and_numbering():
    mesh = build_rectangular_mesh(3, 2)
    assert mesh.n_cells == 6
    assert mesh.n_edges == (3 + 1) * 2 + 3 * (2 + 1)
    np.testing.assert_allclose(mesh.centers[4], [0.5, 0.75])  # i + nx*j with i = 1, j = 1
    assert np.all(mesh.edge_cells[mesh.interior, 0] < mesh.edge_cells[mesh.interior, 1])


def test_single_cell_geometry():
    mesh = build_rectangular_mesh(1, 1)
    assert mesh.n_cells == 1 and mesh.n_edges == 4
    np.testing.assert_allclose(mesh.edge_d, 0.5)
    np.testing.assert_allclose(mesh.edge_tau, 2.0)
    assert mesh.xi == pytest.approx(1.0)


def test_uniform_grid_regularity():
    mesh = build_rectangular_mesh(4, 4)
    rep = check_admissibility(mesh)
    assert rep.xi_measured == pytest.approx(0.5)
    assert rep.inegvol_ok and rep.orthogonality_ok
    assert rep.max_angle_deviation == 0.0


def test_boundary_rule():
    mesh = build_rectangular_mesh(4, 2, boundary_rule=dirichlet_on("west", "south"))
    d = mesh.edge_midpoints[mesh.dirichlet]
    assert np.all((d[:, 0] == 0.0) | (d[:, 1] == 0.0))
    assert mesh.dirichlet.sum() == 2 + 4 and mesh.neumann.sum() == 2 + 4
    with pytest.raises(MeshError, match="Neumann"):
        build_rectangular_mesh(2, 2, boundary_rule=lambda m, n: "N")
    with pytest.raises(ValueError):
        dirichlet_on("up")


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.floats(0.1, 5.0), st.floats(0.1, 5.0))
def test_invariants_on_random_grids(nx, ny, w, h):
    mesh = build_rectangular_mesh(nx, ny, (-1.0, -1.0 + w, 2.0, 2.0 + h))
    assert mesh.cell_measures.sum() == pytest.approx(w * h, rel=1e-12)
    np.testing.assert_allclose(mesh.edge_tau, mesh.edge_measures / mesh.edge_d, rtol=1e-15)
    np.testing.assert_allclose(np.linalg.norm(mesh.edge_normals, axis=1), 1.0)
    assert check_admissibility(mesh).inegvol_ok
    assert mesh.size_h == pytest.approx(np.hypot(w / nx, h / ny))


def test_round_trip(tmp_path):
    mesh = build_rectangular_mesh(5, 3, (0, 2, 0, 1), dirichlet_on("east"))
    path = tmp_path / "m.txt"
    save_mesh(mesh, path, with_tau=True, declare_xi=True)
    back = load_mesh(path)
    for attr in ("centers", "cell_measures", "edge_kind", "edge_cells", "edge_measures", "edge_d",
                 "edge_tau", "edge_midpoints", "edge_normals"):
        np.testing.assert_array_equal(getattr(back, attr), getattr(mesh, attr))
    assert back.xi == mesh.xi
    assert set(np.unique(back.edge_kind)) == {0, DIRICHLET, NEUMANN}


def _corrupt(tmp_path, edit):
    path = tmp_path / "m.txt"
    save_mesh(build_rectangular_mesh(2, 2), path, with_tau=True)
    lines = path.read_text().splitlines()
    edit(lines)
    path.write_text("\n".join(lines) + "\n")
    return path


def _edge_line(lines, e):
    return next(i for i, l in enumerate(lines) if l.startswith(f"edge {e} "))


def test_corrupted_tau_names_edge(tmp_path):
    def edit(lines):
        i = _edge_line(lines, 3)
        tok = lines[i].split()
        tok[-1] = repr(float(tok[-1]) * (1 + 1e-6))
        lines[i] = " ".join(tok)
    with pytest.raises(MeshError, match="edge 3: stored tau"):
        load_mesh(_corrupt(tmp_path, edit))


def test_wrong_distance_and_normal(tmp_path):
    def edit_d(lines):
        i = _edge_line(lines, 1)
        tok = lines[i].split()
        tok[6] = "0.3"
        tok[-1] = repr(float(tok[5]) / 0.3)
        lines[i] = " ".join(tok)
    with pytest.raises(MeshError, match="edge 1: d_sigma"):
        load_mesh(_corrupt(tmp_path, edit_d))

    def edit_n(lines):
        i = _edge_line(lines, 1)  # interior x-face, normal (1, 0)
        tok = lines[i].split()
        tok[9], tok[10] = "-1.0", "0.0"
        lines[i] = " ".join(tok)
    with pytest.raises(MeshError, match="edge 1"):
        load_mesh(_corrupt(tmp_path, edit_n))


def test_parse_errors_report_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("mesh 2 1 4\ncell 0 0.5 0.5\n")
    with pytest.raises(MeshError, match=":2:"):
        load_mesh(path)
    path.write_text("cell 0 0.5 0.5 1.0\n")
    with pytest.raises(MeshError, match="header"):
        load_mesh(path)


def test_declared_xi_too_large(tmp_path):
    path = tmp_path / "m.txt"
    save_mesh(build_rectangular_mesh(2, 2), path)
    path.write_text(path.read_text().replace("\n", "\nxi 0.75\n", 1))
    with pytest.raises(MeshError, match="regularity"):
        load_mesh(path)


def test_reversed_ownership_is_consistent():
    mesh = build_rectangular_mesh(3, 3)
    rev = mesh.reversed_ownership()
    it = mesh.interior
    np.testing.assert_array_equal(rev.edge_cells[it], mesh.edge_cells[it][:, ::-1])
    np.testing.assert_array_equal(rev.edge_normals[it], -mesh.edge_normals[it])
    np.testing.assert_array_equal(rev.edge_tau, mesh.edge_tau)


def test_views():
    mesh = build_rectangular_mesh(2, 1)
    assert len(mesh.cells) == 2 and len(mesh.edges) == mesh.n_edges
    assert mesh.edges[0].kind == "D"
    assert mesh.bounding_box() == (0.0, 1.0, 0.0, 1.0)
