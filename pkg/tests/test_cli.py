import numpy as np
import pytest

from polarct import cli, fileio
from polarct.errors import NumericalError


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def table_csv(tmp_path):
    """Shepp-Logan over a unit background, so every cell is strictly positive."""
    from polarct.phantom import shepp_logan_2d

    rows = [[0.5, 1.2, 1.2, 0, 0, 0]] + shepp_logan_2d().tolist()
    path = tmp_path / "table.csv"
    path.write_text("A,a,b,x0,y0,phi\n" + "\n".join(",".join(map(repr, r)) for r in rows) + "\n")
    return path


def test_full_pipeline(tmp_path, capsys):
    d = tmp_path
    assert run("phantom", "--n", 16, "--out", d / "ph.fld") == 0
    assert (d / "ph.img").exists()
    assert run("project", "--field", d / "ph.fld", "--views", 10, "--detectors", 31,
               "--spacing", 0.07, "--out", d / "p.prj") == 0
    assert run("reconstruct", "--proj", d / "p.prj", "--max-sweeps", 3, "--out", d / "r.fld") == 0
    assert run("map", "--field", d / "r.fld", "--out", d / "r.img", "--pgm", d / "r") == 0
    assert (d / "r_0000.pgm").exists()
    assert run("metrics", "--ref", d / "ph.img", "--test", d / "r.img", "--row", 8,
               "--out", d / "m.txt") == 0
    out = capsys.readouterr().out
    assert "ssim = " in out and "profile.ref = " in out
    report = fileio.read_meta(d / "r.fld")
    assert report["solver.beta"] == "0.4" and report["solver.zero_lines"] == "damp"
    assert (d / "r.fld.report").read_text().count("report.residual.") == 3


def test_map_of_phantom_matches_companion(tmp_path, capsys):
    d = tmp_path
    run("phantom", "--n", 32, "--out", d / "ph.fld")
    run("map", "--field", d / "ph.fld", "--out", d / "m.img")
    capsys.readouterr()
    run("metrics", "--ref", d / "ph.img", "--test", d / "m.img")
    vals = dict(line.split(" = ") for line in capsys.readouterr().out.splitlines())
    assert float(vals["ssim"]) == 1.0 and float(vals["rmse"]) == 0.0


def test_3d_pipeline(tmp_path):
    d = tmp_path
    assert run("phantom", "--kind", "shepp-logan-3d", "--n", 8, "--out", d / "v.fld") == 0
    assert run("project", "--field", d / "v.fld", "--views", 4, "--detectors", 9,
               "--spacing", 0.12, "--out", d / "v.prj") == 0
    data, meta = fileio.read_projections(d / "v.prj")
    assert data.shape == (4, 81) and meta["geometry.n_v"] == "9"
    assert run("reconstruct", "--proj", d / "v.prj", "--max-sweeps", 2, "--out", d / "v2.fld") == 0


def test_closure_run(tmp_path, table_csv):
    d = tmp_path
    assert run("phantom", "--n", 16, "--table", table_csv, "--out", d / "t.fld") == 0
    assert run("project", "--field", d / "t.fld", "--views", 20, "--detectors", 41,
               "--spacing", 0.05, "--out", d / "t.prj") == 0
    assert run("reconstruct", "--proj", d / "t.prj", "--beta", 1.0, "-e", 1e-10,
               "--max-sweeps", 5000, "--out", d / "r.fld") == 0
    rep = dict(line.split(" = ", 1) for line in (d / "r.fld.report").read_text().splitlines())
    assert rep["report.converged"] == "True"
    assert run("project", "--field", d / "r.fld", "--views", 20, "--detectors", 41,
               "--spacing", 0.05, "--out", d / "again.prj") == 0
    want, _ = fileio.read_projections(d / "t.prj")
    got, _ = fileio.read_projections(d / "again.prj")
    nz = want > 0
    assert np.max(np.abs(got[nz] - want[nz]) / want[nz]) <= 1e-6


@pytest.mark.parametrize("argv", [
    ["nonsense"],
    ["reconstruct", "--proj", "missing.prj", "--out", "x"],
    ["phantom", "--n", "7", "--out", "x.fld"],
])
def test_usage_and_input_errors_exit_1(tmp_path, monkeypatch, capsys, argv):
    monkeypatch.chdir(tmp_path)
    assert cli.main(argv) == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert err[-1].startswith("polarct: error:")


def test_bad_beta_and_bad_magic_exit_1(tmp_path, capsys):
    d = tmp_path
    run("phantom", "--n", 8, "--out", d / "ph.fld")
    run("project", "--field", d / "ph.fld", "--views", 4, "--detectors", 11, "--out", d / "p.prj")
    assert run("reconstruct", "--proj", d / "p.prj", "--beta", 2.5, "--out", d / "r.fld") == 1
    assert run("reconstruct", "--proj", d / "ph.fld", "--out", d / "r.fld") == 1
    assert "byte offset 0" in capsys.readouterr().err


def test_numerical_failure_exits_2(tmp_path, monkeypatch, capsys):
    d = tmp_path
    run("phantom", "--n", 8, "--out", d / "ph.fld")
    run("project", "--field", d / "ph.fld", "--views", 4, "--detectors", 11, "--out", d / "p.prj")

    def boom(*a, **k):
        raise NumericalError("field became non-finite in sweep 1")

    monkeypatch.setattr(cli, "reconstruct", boom)
    assert run("reconstruct", "--proj", d / "p.prj", "--out", d / "r.fld") == 2
    assert "non-finite" in capsys.readouterr().err


def test_sidecar_records_configuration(tmp_path):
    d = tmp_path
    run("phantom", "--n", 8, "--seed", 42, "--threads", 2, "--out", d / "ph.fld")
    meta = fileio.read_meta(d / "ph.fld")
    for key in ("command", "seed", "threads", "grid.N", "grid.r", "phantom.kind", "path.field"):
        assert key in meta, key
    assert meta["seed"] == "42" and meta["command"] == "phantom"
