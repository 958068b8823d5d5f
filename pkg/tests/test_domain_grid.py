import numpy as np
import pytest
from hypothesis import given, strategies as st

import radialgraph.lorentz as lz
from radialgraph.domain import DomainError, HDomain
from radialgraph.grid import (EXTERIOR, INTERIOR, KNOWN, NEAR_BOUNDARY, Grid, GridError,
                             ScalarField)

OFF_CENTER = lz.from_ball(np.array([0.2, -0.1]))


def star_domain():
    phi = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    return HDomain.star(phi, 0.4 + 0.08 * np.cos(3 * phi) + 0.03 * np.sin(2 * phi))


DOMAINS = {
    "ball": lambda: HDomain.ball(0.7),
    "ball_off_center": lambda: HDomain.ball(0.5, center=OFF_CENTER),
    "star": star_domain,
}


@pytest.fixture(params=sorted(DOMAINS))
def domain(request):
    return DOMAINS[request.param]()


# -- domains ------------------------------------------------------------------

@pytest.mark.parametrize("R, center", [(0.7, None), (0.5, OFF_CENTER), (1.3, OFF_CENTER)])
def test_ball_boundary_on_sphere(R, center):
    dom = HDomain.ball(R) if center is None else HDomain.ball(R, center=center)
    d = lz.geodesic_distance(dom.boundary_points(257), dom.center)
    assert np.max(np.abs(d - R)) <= 1e-10


def test_ball_disk_matches_distance():
    dom = HDomain.ball(0.9, center=OFF_CENTER)
    y = np.random.default_rng(3).uniform(-0.9, 0.9, size=(4000, 2))
    y = y[np.linalg.norm(y, axis=1) < 0.95]
    d = lz.geodesic_distance(lz.from_ball(y), dom.center) - 0.9
    far = np.abs(d) > 1e-9
    assert np.array_equal(dom.levelset(y[far]) < 0, d[far] < 0)


def test_star_boundary_and_regularity():
    dom = star_domain()
    yb = dom.boundary_chart(500)
    assert np.max(np.abs(dom.levelset(yb))) <= 1e-10
    sp = dom._spline
    for k in range(3):
        assert abs(sp(0, k) - sp(2 * np.pi, k)) <= 1e-10


@pytest.mark.parametrize("radius", [np.array([0.3, -0.1, 0.3, 0.3]), np.full(4, 1.2)])
def test_star_rejects_bad_radius(radius):
    with pytest.raises(DomainError):
        HDomain.star(np.linspace(0, 2 * np.pi, 4, endpoint=False), radius)


def test_ball_rejects_nonpositive():
    with pytest.raises(DomainError):
        HDomain.ball(0.0)


def test_interior_samples(domain):
    a = domain.interior_chart(1500, seed=7)
    b = domain.interior_chart(1500, seed=7)
    assert len(a) == 1500 and np.array_equal(a, b)
    assert np.all(domain.levelset(a) < 0)


def test_outward_normal(domain):
    qb = domain.boundary_points(64)
    for q in qb:
        nu = domain.outward_normal(q)
        assert abs(lz.inner(nu, nu) - 1) <= 1e-10
        assert abs(lz.inner(nu, q)) <= 1e-10
        out = lz.geodesic_point(q, nu, 1e-4)
        inside = lz.geodesic_point(q, nu, -1e-4)
        assert domain.levelset(lz.to_ball(out)) > 0 > domain.levelset(lz.to_ball(inside))


# -- grids ---------------------------------------------------------------------

def quadratic(y):
    return 0.3 + 0.5 * y[..., 0] - 0.2 * y[..., 1] + 0.7 * y[..., 0] ** 2 \
        - 0.4 * y[..., 0] * y[..., 1] + 0.9 * y[..., 1] ** 2


QUAD_D = {"d1": lambda y: 0.5 + 1.4 * y[:, 0] - 0.4 * y[:, 1],
          "d2": lambda y: -0.2 - 0.4 * y[:, 0] + 1.8 * y[:, 1],
          "d11": lambda y: np.full(len(y), 1.4), "d22": lambda y: np.full(len(y), 1.8),
          "d12": lambda y: np.full(len(y), -0.4)}


@pytest.mark.parametrize("N", [8, 16, 33])
def test_stencils_exact_on_quadratics(domain, N):
    g = Grid(domain, domain.chart_radius / N, g=quadratic)
    u = quadratic(g.node_y)
    for key, exact in QUAD_D.items():
        err = np.max(np.abs(g.ops[key].apply(u) - exact(g.node_y)))
        assert err <= 1e-8, (key, err)


def test_cross_term_second_order():
    dom = HDomain.ball(0.7)
    f = lambda y: np.sin(2 * y[..., 0]) * np.sin(3 * y[..., 1])
    ex = lambda y: 6 * np.cos(2 * y[:, 0]) * np.cos(3 * y[:, 1])
    errs = []
    for N in (16, 32, 64):
        g = Grid(dom, dom.chart_radius / N, g=f)
        sel = np.isin(g.cross_mode, (2, 3, 4))
        errs.append(np.max(np.abs(g.ops["d12"].apply(f(g.node_y))[sel] - ex(g.node_y)[sel])))
    assert errs[0] / errs[1] >= 3.0 and errs[1] / errs[2] >= 3.0


def test_node_classes(domain):
    g = Grid(domain, domain.chart_radius / 24)
    assert set(np.unique(g.node_class)) <= {EXTERIOR, INTERIOR, NEAR_BOUNDARY, KNOWN}
    ij = g.node_ij
    # every stencil arm ends at an unknown node, a known node or a boundary cut in (0, h]
    assert np.all(g.arms > 0) and np.all(g.arms <= g.h * (1 + 1e-14))
    cut_arms = g.arms[g.near_boundary]
    assert np.all(cut_arms >= g.merge_tol * g.h)
    assert np.all(g.domain.levelset(g.node_y) < 0)
    assert g.describe()["unknowns"] == len(ij)


def test_merge_rule():
    dom = HDomain.ball(0.7)
    Rc = dom.chart_radius
    # spacing chosen so the node on the axis sits just inside the boundary
    h = Rc / (10 + 1e-5)
    g = Grid(dom, h)
    assert g.known.sum() >= 1
    assert np.all(g.arms >= 1e-3 * h)


def test_scalar_field_shape_check():
    g = Grid(HDomain.ball(0.7), 0.05)
    with pytest.raises(GridError):
        ScalarField(g, np.zeros((3, 3)))


def test_from_unknowns_carries_boundary_data():
    dom = HDomain.ball(0.7)
    g = Grid(dom, dom.chart_radius / (10 + 1e-5), g=quadratic)
    f = ScalarField.constant(g, 0.0)
    assert np.allclose(f.values[g.known], quadratic(g.Y[g.known]), atol=0)
    assert np.all(np.isnan(f.values[~(g.known | g.unknown)]))


@given(st.floats(0.2, 1.5), st.integers(6, 20))
def test_grid_encloses_ball(R, N):
    dom = HDomain.ball(R)
    g = Grid(dom, dom.chart_radius / N)
    assert g.n_unknown > 0
