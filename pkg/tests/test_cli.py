import json

import numpy as np
import pytest

import framefieldops as ff
from framefieldops import meshgen
from framefieldops.cli import (
    EXIT_INPUT,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VALIDATION,
    main,
)


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    disk = meshgen.disk(6)
    ff.save_mesh(disk, root / "disk.off")
    ball = ff.refine_uniform(meshgen.ball())
    ff.save_mesh(ball, root / "ball.mesh")
    assert main(
        ["-o", str(root / "gen"), "field", "gen", "--mesh", str(root / "disk.off"),
         "--kind", "harmonic2d"]
    ) == EXIT_OK
    return root


def test_field_gen_variants(workspace):
    assert main(
        ["-o", str(workspace / "helical"), "field", "gen",
         "--mesh", str(workspace / "ball.mesh"), "--kind", "helical",
         "--pitch", "0.4"]
    ) == EXIT_OK
    assert main(
        ["-o", str(workspace / "coframe"), "field", "gen",
         "--mesh", str(workspace / "disk.off"), "--kind", "coframe",
         "--map", "polynomial", "--c", "0.04"]
    ) == EXIT_OK
    assert (workspace / "coframe" / "warped_disk.off").exists()
    warped = ff.load_mesh(workspace / "coframe" / "warped_disk.off")
    field = ff.load_field(warped, workspace / "coframe" / "field.csv")
    assert field.kind == "conformal_octahedral"
    # helical with zero pitch equals the constant axis field
    assert main(
        ["-o", str(workspace / "flat"), "field", "gen",
         "--mesh", str(workspace / "ball.mesh"), "--kind", "helical",
         "--pitch", "0.0"]
    ) == EXIT_OK
    ball = ff.load_mesh(workspace / "ball.mesh")
    flat = ff.load_field(ball, workspace / "flat" / "field.csv")
    const = ff.constant_field(ball, ff.axis_frame(3))
    assert np.abs(flat.forms() - const.forms()).max() < 1e-12


def test_assemble_writes_matrixmarket(workspace):
    out = workspace / "asm"
    assert main(
        ["-o", str(out), "assemble", "--mesh", str(workspace / "disk.off"),
         "--field", str(workspace / "gen" / "field.csv"),
         "--epsilon", "0.2", "--bc", "neumann"]
    ) == EXIT_OK
    from scipy.io import mmread

    A = mmread(out / "operator.mtx").tocsr()
    M = mmread(out / "mass.mtx").tocsr()
    disk = ff.load_mesh(workspace / "disk.off")
    field = ff.load_field(disk, workspace / "gen" / "field.csv")
    op = ff.assemble_operator(disk, field, 0.2, "neumann")
    assert abs(A - op.matrix).max() < 1e-15
    assert np.abs(M.diagonal() - op.vertex_mass).max() < 1e-15
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["inputs"] and manifest["versions"]["framefieldops"]


def test_eigs_flags_zero_mode(workspace):
    out = workspace / "eigs"
    assert main(
        ["-o", str(out), "eigs", "--mesh", str(workspace / "disk.off"),
         "--field", str(workspace / "gen" / "field.csv"), "--num", "10"]
    ) == EXIT_OK
    lines = (out / "eigenvalues.csv").read_text().strip().splitlines()
    header, first = lines[0], lines[1].split(",")
    assert header == "index,eigenvalue,zero_mode"
    assert first[2] == "1"  # Neumann constant mode flagged
    rows = np.loadtxt(out / "eigs.csv", delimiter=",")
    assert rows.shape[0] == 10


def test_diffuse_deterministic_rerun(workspace):
    args = ["diffuse", "--mesh", str(workspace / "disk.off"),
            "--field", str(workspace / "gen" / "field.csv"),
            "--epsilon", "0.04", "--tau", "1e-5", "--impulse", "0"]
    assert main(["-o", str(workspace / "d1"), *args]) == EXIT_OK
    assert main(["-o", str(workspace / "d2"), *args]) == EXIT_OK
    b1 = (workspace / "d1" / "diffused.csv").read_bytes()
    b2 = (workspace / "d2" / "diffused.csv").read_bytes()
    assert b1 == b2
    v1 = (workspace / "d1" / "diffused.vtk").read_bytes()
    v2 = (workspace / "d2" / "diffused.vtk").read_bytes()
    assert v1 == v2


def test_dirichlet_and_distance_and_color(workspace):
    assert main(
        ["-o", str(workspace / "dir"), "dirichlet",
         "--mesh", str(workspace / "disk.off"),
         "--field", str(workspace / "gen" / "field.csv"), "--epsilon", "0.05",
         "--periods", "3"]
    ) == EXIT_OK
    assert main(
        ["-o", str(workspace / "dist"), "distance",
         "--mesh", str(workspace / "disk.off"),
         "--field", str(workspace / "gen" / "field.csv"),
         "--modes", "24", "--source", "0", "--trace", "30,60"]
    ) == EXIT_OK
    assert (workspace / "dist" / "paths.obj").exists()
    d = np.loadtxt(workspace / "dist" / "distance.csv", delimiter=",")
    assert d[0] == 0.0 and d[1:].min() > 0.0

    disk = ff.load_mesh(workspace / "disk.off")
    nb = len(ff.compute_measures(disk).boundary_vertices)
    colors = np.random.default_rng(1).uniform(0.0, 1.0, (nb, 3))
    np.savetxt(workspace / "colors.csv", colors, delimiter=",")
    assert main(
        ["-o", str(workspace / "col"), "color",
         "--mesh", str(workspace / "disk.off"),
         "--field", str(workspace / "gen" / "field.csv"),
         "--boundary-colors", str(workspace / "colors.csv")]
    ) == EXIT_OK
    col = np.loadtxt(workspace / "col" / "colors.csv", delimiter=",")
    assert col.min() >= colors.min() - 1e-12
    assert col.max() <= colors.max() + 1e-12


def test_exit_codes(workspace, monkeypatch, tmp_path):
    assert main(["-o", str(tmp_path), "assemble", "--mesh", "/no/such.off",
                 "--field", "x"]) == EXIT_INPUT
    assert main(["definitely-not-a-command"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE

    # numerical failures map to their own code
    import framefieldops.cli as cli

    def boom(*a, **k):
        raise ff.NumericalError("synthetic failure")

    monkeypatch.setattr(cli, "assemble_operator", boom)
    assert main(
        ["-o", str(tmp_path), "assemble", "--mesh", str(workspace / "disk.off"),
         "--field", str(workspace / "gen" / "field.csv")]
    ) == EXIT_NUMERICAL


def test_validate_exit_codes(monkeypatch, tmp_path):
    import framefieldops.cli as cli
    from framefieldops.validation import ValidationReport

    def fake_pass(**kw):
        return ValidationReport("warp", True, "ok", ["c"], [{"c": 0.0}])

    def fake_fail(**kw):
        return ValidationReport("warp", False, "bad", ["c"], [{"c": 0.0}])

    monkeypatch.setitem(cli.VALIDATORS, "warp", fake_pass)
    assert main(["-o", str(tmp_path), "validate", "warp"]) == EXIT_OK
    monkeypatch.setitem(cli.VALIDATORS, "warp", fake_fail)
    assert main(["-o", str(tmp_path), "validate", "warp"]) == EXIT_VALIDATION
    assert (tmp_path / "warp.csv").exists()


def test_validate_small_runs(tmp_path):
    # the isotropy check needs the isoline resolved, so anisotropy runs at
    # its default disk size (still a couple of seconds)
    assert main(
        ["-o", str(tmp_path / "aniso"), "validate", "anisotropy"]
    ) == EXIT_OK
    assert main(
        ["-o", str(tmp_path / "dir"), "validate", "dirichlet-convergence"]
    ) == EXIT_OK
