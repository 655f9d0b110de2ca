"""Front door: scene files, exit codes, CSV output, determinism."""

import subprocess
import sys

import numpy as np
import pytest

from ising_boson.boson import Cos, Scene, correlate
from ising_boson.cli import run
from ising_boson.errors import SceneError
from ising_boson.geometry import Circle, CircularDomain
from ising_boson.scenes import build_scene, load_scene

SIGMA_HP = """
schema = 1

[domain]
model = "half-plane"

[[insertions]]
x = 0.0
y = 1.0
field = "sigma"

[[insertions]]
x = 0.0
y = 2.0
field = "sigma"
"""

EPS_DISK = """
schema = 1

[domain]
model = "circular"
[domain.outer]
re = 0.0
im = 0.0
radius = 1.0

[[insertions]]
x = 0.0
y = 0.0
field = "epsilon"
"""

COS_ANNULUS = """
schema = 1

[domain]
[domain.outer]
re = 0.0
im = 0.0
radius = 1.0
[[domain.holes]]
re = 0.0
im = 0.0
radius = 0.4

[[insertions]]
x = 0.7
y = 0.0
field = "cos"
gamma = 0.7071067811865476

[[insertions]]
x = -0.6
y = 0.1
field = "cos"
gamma = 0.7071067811865476
"""


def scene_file(tmp_path, text, name="scene.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_compute_sigma_anchor(tmp_path, capsys):
    path = scene_file(tmp_path, SIGMA_HP)
    assert run(["compute", path]) == 0
    out = capsys.readouterr().out
    fields = out.strip().split()
    assert len(fields) == 3
    want = 2.0 ** -0.75 * 2.0 / np.sqrt(3.0)
    assert abs(float(fields[0]) - want) < 1e-10
    assert float(fields[1]) == 0.0
    assert 0.0 < float(fields[2]) < 1e-6


def test_compute_is_deterministic(tmp_path, capsys):
    path = scene_file(tmp_path, SIGMA_HP)
    assert run(["compute", path]) == 0
    first = capsys.readouterr().out
    assert run(["compute", path]) == 0
    assert capsys.readouterr().out == first


def test_compute_parity_diagnostic(tmp_path, capsys):
    text = SIGMA_HP.rsplit("[[insertions]]", 1)[0]  # drop the second spin
    path = scene_file(tmp_path, text)
    assert run(["compute", path]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].split() == ["0", "0", "0"]
    assert lines[1].startswith("diagnostic: parity-violating")


def test_compute_boson_mode_matches_engine(tmp_path, capsys):
    path = scene_file(tmp_path, COS_ANNULUS)
    assert run(["compute", path]) == 0
    got = float(capsys.readouterr().out.split()[0])
    dom = CircularDomain(outer=Circle(0j, 1.0), holes=(Circle(0j, 0.4),))
    g = 0.7071067811865476
    want = correlate(Scene(dom), [(0.7, Cos(g)), (-0.6 + 0.1j, Cos(g))]).value
    assert abs(got - want.real) < 1e-12 * abs(want.real)


def test_sweep_csv_layout_and_determinism(tmp_path, capsys, monkeypatch):
    path = scene_file(tmp_path, SIGMA_HP)
    out1, out2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    args = ["sweep", path, "--from", "0.5,1.0", "--to", "0.5,3.0",
            "--steps", "5"]
    assert run(args + ["--output", out1]) == 0
    monkeypatch.setenv("ISING_BOSON_THREADS", "1")
    assert run(args + ["--output", out2]) == 0
    b1 = open(out1, "rb").read()
    assert b1 == open(out2, "rb").read()  # serial and pooled runs agree
    lines = b1.decode().strip().splitlines()
    assert lines[0] == "re,im,value_re,value_im,err_est"
    assert len(lines) == 6
    rows = [[float(x) for x in ln.split(",")] for ln in lines[1:]]
    assert [r[1] for r in rows] == [1.0, 1.5, 2.0, 2.5, 3.0]  # grid order
    assert all(r[0] == 0.5 for r in rows)
    for r in rows:
        assert r[2] > 0.0 and r[3] == 0.0 and r[4] > 0.0
    # moved point is the last insertion; first stays at i
    from ising_boson.ising import Sigma, ising_correlation_squared
    from ising_boson.boson import Scene as BScene
    from ising_boson.geometry import HalfPlaneDomain
    sc = BScene(HalfPlaneDomain())
    want = ising_correlation_squared(
        sc, [(1j, Sigma()), (0.5 + 2j, Sigma())]).value.real
    assert abs(rows[2][2] - want) < 1e-12


def test_sweep_usage_errors(tmp_path, capsys):
    path = scene_file(tmp_path, SIGMA_HP)
    base = ["sweep", path, "--from", "0,1", "--to", "0,2", "--output",
            str(tmp_path / "c.csv")]
    assert run(base + ["--index", "5"]) == 1
    assert "error[E_USAGE]" in capsys.readouterr().err
    assert run(base + ["--steps", "0"]) == 1
    assert "error[E_USAGE]" in capsys.readouterr().err
    assert run(["sweep", path, "--from", "zero,1", "--to", "0,2",
                "--output", str(tmp_path / "c.csv")]) == 1
    assert "error[E_USAGE]" in capsys.readouterr().err


def test_threads_env_validation(tmp_path, capsys, monkeypatch):
    path = scene_file(tmp_path, SIGMA_HP)
    monkeypatch.setenv("ISING_BOSON_THREADS", "zero")
    args = ["sweep", path, "--from", "0.5,1", "--to", "0.5,2", "--steps", "2",
            "--output", str(tmp_path / "t.csv")]
    assert run(args) == 1
    assert "ISING_BOSON_THREADS" in capsys.readouterr().err
    monkeypatch.setenv("ISING_BOSON_THREADS", "2")
    assert run(args) == 0


def test_verify_filter_and_exit(capsys):
    assert run(["verify", "pairing"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "name,residual,tolerance,comparison,status"
    assert len(lines) == 3
    for ln in lines[1:]:
        name, resid, tol, op, status = ln.split(",")
        assert status == "pass"
        float(resid), float(tol)
        assert op in ("<", ">")
    assert run(["verify", "annulus_tau", "--tol-theta", "1e-12"]) == 0
    capsys.readouterr()
    assert run(["verify", "no_such_check"]) == 1
    assert "error[E_USAGE]" in capsys.readouterr().err


def test_covariance_check_scale_and_cayley(tmp_path, capsys):
    path = scene_file(tmp_path, EPS_DISK)
    assert run(["covariance-check", path, "--map", "scale:2.0"]) == 0
    out = capsys.readouterr().out
    resid = float(out.strip().splitlines()[-1].split()[-1])
    assert resid < 1e-10
    assert run(["covariance-check", path, "--map", "cayley"]) == 0
    out = capsys.readouterr().out
    assert float(out.strip().splitlines()[-1].split()[-1]) < 1e-8
    assert run(["covariance-check", path, "--map", "squeeze:2"]) == 1
    assert "error[E_NOT_CIRCLE_MAP]" in capsys.readouterr().err
    assert run(["covariance-check", path, "--map", "scale:-1.0"]) == 1
    assert "error[E_NOT_CIRCLE_MAP]" in capsys.readouterr().err


def test_exit_code_validation_errors(tmp_path, capsys):
    assert run(["compute", str(tmp_path / "missing.toml")]) == 1
    assert "error[E_SCENE]" in capsys.readouterr().err
    bad = scene_file(tmp_path, "schema = [not toml", name="bad.toml")
    assert run(["compute", bad]) == 1
    assert "error[E_SCENE]" in capsys.readouterr().err
    outside = EPS_DISK.replace("x = 0.0", "x = 5.0")
    assert run(["compute", scene_file(tmp_path, outside)]) == 1
    err = capsys.readouterr().err
    assert "error[E_SCENE]" in err and "outside domain" in err
    assert run([]) == 1
    assert "error[E_USAGE]" in capsys.readouterr().err


def test_scene_loader_rejections(tmp_path):
    def reject(text, needle):
        with pytest.raises(SceneError) as ei:
            load_scene(scene_file(tmp_path, text, name="r.toml"))
        assert needle in str(ei.value)

    reject(SIGMA_HP.replace("schema = 1", "schema = 2"), "schema")
    reject(SIGMA_HP.replace('field = "sigma"', 'field = "spin"'), "unknown field")
    reject(SIGMA_HP.replace('field = "sigma"',
                            'field = "sigma"\ngamma = 1.0'), "takes no gamma")
    reject(COS_ANNULUS.replace("gamma = 0.7071067811865476", ""),
           "missing key 'gamma'")
    reject(SIGMA_HP + '\n[[insertions]]\nx = 0.3\ny = 0.9\nfield = "dphi"\n',
           "mixes")
    reject(SIGMA_HP + "\n[tolerances]\nquadrature = 1e-8\n",
           "unknown tolerance")
    reject(SIGMA_HP + "\n[tolerances]\nboundary = 2.0\n", "(0, 1)")
    reject(SIGMA_HP + '\n[[bc.arcs]]\ncomponent = 0\nstart = 0.0\n'
           'end = 0.0\ncondition = "wired"\n', "half-plane")
    reject(SIGMA_HP.replace('field = "sigma"', 'field = "boundary_sigma"'),
           "half-plane")
    reject(EPS_DISK.replace("[[insertions]]", "[extra]\na = 1\n[[insertions]]")
           .replace("radius = 1.0", "radius = -1.0"), "radius")


def test_scene_tolerances_reach_engine(tmp_path):
    text = EPS_DISK + "\n[tolerances]\nboundary = 1e-7\nlattice = 1e-10\n"
    spec = load_scene(scene_file(tmp_path, text, name="tols.toml"))
    assert spec.scene.tol == 1e-7
    assert spec.scene.ensemble.tail_target == 1e-10
    spec2 = load_scene(scene_file(tmp_path, text, name="tols.toml"),
                       {"boundary": 1e-8, "lattice": None, "theta": None})
    assert spec2.scene.tol == 1e-8
    assert spec2.tolerances["theta"] == 1e-14


def test_mixed_bc_scene_builds(tmp_path):
    text = """
schema = 1

[domain]
[domain.outer]
re = 0.0
im = 0.0
radius = 1.0

[bc]
marked_arc = 0
[[bc.arcs]]
component = 0
start = 0.0
end = 3.141592653589793
condition = "wired"
[[bc.arcs]]
component = 0
start = 3.141592653589793
end = 0.0
condition = "free"

[[insertions]]
x = 0.2
y = 0.1
field = "sigma"

[[insertions]]
x = -0.3
y = -0.2
field = "sigma"
"""
    spec = load_scene(scene_file(tmp_path, text, name="mixed.toml"))
    assert spec.mode == "ising"
    assert len(spec.scene.bc.arcs) == 2
    # doc dict path agrees with the file path
    import tomli
    spec2 = build_scene(tomli.loads(text))
    assert spec2.scene.bc.arcs == spec.scene.bc.arcs


def test_module_entry_point(tmp_path):
    path = scene_file(tmp_path, SIGMA_HP)
    proc = subprocess.run(
        [sys.executable, "-m", "ising_boson.cli", "compute", path],
        capture_output=True, text=True)
    assert proc.returncode == 0
    want = 2.0 ** -0.75 * 2.0 / np.sqrt(3.0)
    assert abs(float(proc.stdout.split()[0]) - want) < 1e-10
