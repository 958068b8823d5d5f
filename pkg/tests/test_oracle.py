import numpy as np
import pytest
from hypothesis import given, strategies as st

import radialgraph.lorentz as lz
from radialgraph.curvature import ConstantSpec, PowerLawSpec
from radialgraph.oracle import (ChartFunction, ExactHyperboloid, OracleError, manufactured,
                                quadratic_bump, radial_ode_solve)

P0 = (0.0, 0.0, 0.2)


def hpoints(max_norm=0.9):
    return st.tuples(st.floats(0, max_norm), st.floats(0, 2 * np.pi)).map(
        lambda t: lz.from_ball(t[0] * np.array([np.cos(t[1]), np.sin(t[1])])))


# -- hyperboloids -----------------------------------------------------------------

@given(hpoints())
def test_hyperboloid_on_quadric(q):
    for p0, r in ((P0, 1.0), ((0.1, -0.05, 0.3), 1.5)):
        ex = ExactHyperboloid(p0, r)
        scale = np.exp(2 * ex.height(q))
        assert abs(ex.quadric_residual(q)) <= 1e-12 * max(1, scale)


@given(hpoints())
def test_centred_hyperboloid_is_trivial(q):
    assert abs(ExactHyperboloid((0, 0, 0), 1.0).height(q)) <= 1e-15


@given(hpoints())
def test_hyperboloid_closed_form(q):
    ref = np.log(0.2 * q[2] + np.sqrt(0.04 * q[2] ** 2 + 0.96))
    assert abs(ExactHyperboloid(P0, 1.0).height(q) - ref) <= 1e-14


def test_hyperboloid_rejections():
    with pytest.raises(OracleError):
        ExactHyperboloid(P0, 0.0)
    with pytest.raises(OracleError):
        ExactHyperboloid((1.0, 0, 0.2), 1.0)


def test_hyperboloid_chart_derivatives_vs_differences():
    f = ExactHyperboloid((0.1, -0.05, 0.3), 1.5).chart_function()
    y = np.array([0.2, -0.3])
    h = 1e-5
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        fd = (f(y + e) - f(y - e)) / (2 * h)
        assert abs(fd - f.df(y)[k]) <= 1e-8
        fd2 = (f.df(y + e) - f.df(y - e)) / (2 * h)
        assert np.max(np.abs(fd2 - f.d2f(y)[k])) <= 1e-7


# -- radial ODE -----------------------------------------------------------------------

def test_ode_unit_curvature_gives_zero():
    prof = radial_ode_solve(ConstantSpec(1.0).extend(), 0.7)
    assert np.max(np.abs(prof.u)) <= 1e-12 and abs(prof.u0) <= 1e-12


def test_ode_matches_hyperboloid():
    R = 0.8
    ex = ExactHyperboloid(P0, 1.0)
    b = float(np.log(0.2 * np.cosh(R) + np.sqrt(0.04 * np.cosh(R) ** 2 + 0.96)))
    prof = radial_ode_solve(ConstantSpec(1.0).extend(), R, boundary=b)
    rho = prof.rho
    q = np.stack([np.sinh(rho), np.zeros_like(rho), np.cosh(rho)], -1)
    assert np.max(np.abs(prof.u - ex.height(q))) <= 1e-8
    assert np.max(np.abs(prof(rho) - prof.u)) <= 1e-12


def test_ode_power_law_unit_omega_is_trivial():
    # m = 2, omega = 1: e^u H(e^u q) = e^{-u}, so u = 0 already solves it
    prof = radial_ode_solve(PowerLawSpec(2).extend(), 0.7)
    assert np.max(np.abs(prof.u)) <= 1e-12


def test_ode_power_law_within_bounds():
    prof = radial_ode_solve(PowerLawSpec(2, 1.5).extend(), 0.7)
    assert np.all(prof.u >= np.log(0.5)) and np.all(prof.u <= np.log(2.0))
    assert np.all(np.abs(prof.du) < 1)
    # e^u H > 1 at u = 0 makes the profile convex, so it dips below the boundary value
    assert prof.u0 < 0 and np.all(np.diff(prof.u) > 0)


def test_ode_profile_csv(tmp_path):
    prof = radial_ode_solve(PowerLawSpec(2).extend(), 0.5, npts=11)
    path = tmp_path / "p.csv"
    prof.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "rho,u,du" and len(lines) == 12


def test_ode_inverse_radius_keeps_constants():
    # H = 1/rho extends to 1/rho for all rho, so every constant height solves the ODE
    spec = PowerLawSpec(1.0, omega=lambda q: np.ones(np.shape(q)[:-1])).extend()
    prof = radial_ode_solve(spec, 0.5, boundary=3.0)
    assert np.max(np.abs(prof.u - 3.0)) <= 1e-10


# -- manufactured specs ------------------------------------------------------------

@given(hpoints(), st.floats(0.2, 5.0))
def test_manufactured_zero(q, rho):
    zero = ChartFunction(lambda y: np.zeros(y.shape[:-1]),
                         lambda y: np.zeros(y.shape),
                         lambda y: np.zeros(y.shape + (2,)))
    assert abs(manufactured(zero).value(q, rho) - 1 / rho) <= 1e-12 / rho


def test_manufactured_reproduces_graph_curvature():
    f = quadratic_bump(0.1, 0.6)
    spec = manufactured(f)
    y = np.array([[0.1, 0.2], [-0.3, 0.05], [0.0, 0.0]])
    q = lz.from_ball(y)
    assert np.allclose(spec.value(q, np.exp(f(y))), f.mean_curvature(y), rtol=1e-13)
    lam = np.array([0.5, 1.0, 3.0])
    assert np.all(spec.radial_derivative(q[0], lam) == 0)
    assert np.allclose(lam * spec.value(q[0], lam), spec.value(q[0], 1.0), rtol=1e-14)


def test_manufactured_rejects_non_spacelike():
    steep = quadratic_bump(5.0, 0.6)
    with pytest.raises(OracleError):
        manufactured(steep).value(lz.from_ball(np.array([0.5, 0.0])), 1.0)
