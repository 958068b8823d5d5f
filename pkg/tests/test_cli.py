import json

import jsonschema
import numpy as np
import pytest

from radialgraph.cli import main
from radialgraph.solver import REPORT_SCHEMA

UNIT = """
domain.kind = ball
domain.R = 0.7
curvature.kind = constant
curvature.c = 1.0
grid.h = Rc/32
"""

POWER = """
domain.kind = ball
domain.R = 0.7
curvature.kind = power_law
curvature.m = 2
curvature.omega = 1.5
grid.h = Rc/16
continuation.steps = 2
"""


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_solve_unit_curvature(tmp_path):
    cfg = write(tmp_path, UNIT)
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out), "--mesh"]) == 0
    rep = json.loads((out / "report.json").read_text())
    jsonschema.validate(rep, REPORT_SCHEMA)
    assert rep["converged"] and rep["residual"] < 1e-10
    data = np.genfromtxt(out / "u.csv", delimiter=",", names=True)
    assert np.max(np.abs(data["u"])) < 1e-10
    assert (out / "u.csv").read_text().splitlines()[0] == "i,j,y1,y2,u"
    obj = (out / "surface.obj").read_text().splitlines()
    assert obj[0].startswith("v ") and any(l.startswith("f ") for l in obj)


def test_solve_without_mesh_flag(tmp_path):
    cfg = write(tmp_path, UNIT)
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    assert not (out / "surface.obj").exists()


def test_solve_reproducible(tmp_path):
    cfg = write(tmp_path, POWER)
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["solve", "--config", cfg, "--out", str(d), "--mesh"]) == 0
    for name in ("u.csv", "report.json", "surface.obj"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_curvature_of_solution(tmp_path):
    cfg = write(tmp_path, UNIT)
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    assert main(["curvature", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "curvature.csv").read_text().splitlines()
    assert lines[0] == "i,j,y1,y2,H"
    H = np.genfromtxt(out / "curvature.csv", delimiter=",", names=True)["H"]
    assert np.max(np.abs(H - 1)) <= 1e-10


def test_check_hypotheses_power_law(tmp_path):
    cfg = write(tmp_path, POWER.replace("omega = 1.5", "omega = 1.0"))
    out = tmp_path / "out"
    assert main(["check-hypotheses", "--config", cfg, "--out", str(out)]) == 0
    rep = json.loads((out / "hypotheses.json").read_text())
    assert rep["thm13_i"]["pass"] and rep["thm13_ii"]["pass"]


def test_certify_and_seed(tmp_path):
    cfg = write(tmp_path, POWER + "certificate.boundary_samples = 8\n"
                "certificate.interior_samples = 1000\n")
    runs = []
    for name, seed in (("a", "0"), ("b", "0"), ("c", "5")):
        out = tmp_path / name
        assert main(["certify", "--config", cfg, "--out", str(out), "--seed", seed]) == 0
        runs.append((out / "certificate.json").read_bytes())
    assert runs[0] == runs[1] and runs[0] != runs[2]
    assert json.loads(runs[0])["valid"]


def test_oracle_ode(tmp_path):
    cfg = write(tmp_path, POWER)
    out = tmp_path / "out"
    assert main(["oracle-ode", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "profile.csv").read_text().splitlines()
    assert lines[0] == "rho,u,du"


def test_convergence_study(tmp_path):
    cfg = write(tmp_path, "domain.R = 0.8\ngrid.h = Rc/32\nstudy.levels = 16,32,64\n")
    out = tmp_path / "out"
    assert main(["convergence-study", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "convergence.csv").read_text().splitlines()
    assert lines[0] == "h,error,order"
    orders = [float(l.split(",")[2]) for l in lines[2:]]
    assert len(orders) == 2 and min(orders) >= 1.7


@pytest.mark.parametrize("text", [UNIT + "bogus.key = 1\n",
                                  UNIT + "solver.epsilon = 1.5\n",
                                  UNIT.replace("domain.R = 0.7", "domain.R = -1"),
                                  UNIT + "curvature.r1 = 1.2\n",
                                  UNIT + "grid.h = 0\n"])
def test_invalid_config_exit_2(tmp_path, capsys, text):
    cfg = write(tmp_path, text)
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "error" in capsys.readouterr().err


def test_unknown_key_named(tmp_path, capsys):
    cfg = write(tmp_path, UNIT + "bogus.key = 1\n")
    main(["solve", "--config", cfg, "--out", str(tmp_path / "o")])
    assert "bogus.key" in capsys.readouterr().err


def test_missing_config_exit_2(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "none.cfg")]) == 2


def test_non_convergence_exit_3(tmp_path, capsys):
    cfg = write(tmp_path, POWER + "solver.max_iter = 1\nsolver.tol = 1e-15\n")
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 3
    assert str(out / "report.json") in capsys.readouterr().err
    assert not json.loads((out / "report.json").read_text())["converged"]
