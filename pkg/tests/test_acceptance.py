"""Acceptance criteria 1-10.

Each test records one row in ``conftest.ACCEPTANCE`` before asserting, so the
terminal summary lists a PASS/FAIL line per criterion even when one fails.
"""

import time

import numpy as np
import pytest
from scipy.integrate import quad

import radialgraph.lorentz as lz
from conftest import ACCEPTANCE
from radialgraph.barriers import barrier_increment, certify
from radialgraph.curvature import ConstantSpec, PowerLawSpec, check_hypotheses
from radialgraph.domain import HDomain
from radialgraph.graph import graph_point
from radialgraph.oracle import ExactHyperboloid, radial_ode_solve
from radialgraph.solver import (SolverConfig, diagnostics, frame_coefficients, m_eps,
                                picard_solve, upper_initial_guess)


def record(num, title, ok, detail):
    ACCEPTANCE.append((num, title, bool(ok), detail))
    print(f"criterion {num} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def smooth_omega(m, amp, k, phase, r1=0.5, r2=2.0):
    """omega inside the band (r1^{m-1}, r2^{m-1}), log-centred."""
    lo, hi = (m - 1) * np.log(r1), (m - 1) * np.log(r2)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)

    def w(q):
        y = lz.to_ball(np.asarray(q, float))
        return np.exp(mid + amp * half * np.sin(k[0] * y[..., 0] + k[1] * y[..., 1] + phase))
    return w


@pytest.fixture(scope="module")
def ball07():
    return HDomain.ball(0.7)


@pytest.fixture(scope="module")
def crit3(ball07):
    """Criterion-3 problem solved from u = 0, with its wall time."""
    spec = PowerLawSpec(2, 1.0, r1=0.5, r2=2.0)
    t0 = time.perf_counter()
    u, rep = picard_solve(SolverConfig(ball07, spec, ball07.chart_radius / 64))
    return spec, u, rep, time.perf_counter() - t0


@pytest.fixture(scope="module")
def crit3_nontrivial(ball07):
    # omega = 1 makes u = 0 the exact solution; omega = 1.5 exercises the same path
    spec = PowerLawSpec(2, 1.5, r1=0.5, r2=2.0)
    u, rep = picard_solve(SolverConfig(ball07, spec, ball07.chart_radius / 64))
    return spec, u, rep


@pytest.fixture(scope="module")
def cert07(ball07):
    return certify(ball07, PowerLawSpec(2))


def ode_error(dom, spec, u):
    prof = radial_ode_solve(spec.extend(), dom.R)
    rho = lz.geodesic_distance(u.grid.node_points(), dom.center)
    return float(np.max(np.abs(u.unknowns - prof(rho)))), prof


# 1 -----------------------------------------------------------------------------------

def test_criterion_01_trivial_solution(ball07):
    t0 = time.perf_counter()
    u, rep = picard_solve(SolverConfig(ball07, ConstantSpec(1.0), ball07.chart_radius / 64,
                                       eps=0.1, init=0.05))
    dt = time.perf_counter() - t0
    sup = float(np.max(np.abs(u.unknowns)))
    ok = rep.converged and sup < 1e-10 and rep.residual < 1e-10 and dt < 10
    record(1, "trivial solution", ok,
           f"|u|={sup:.2e} residual={rep.residual:.2e} time={dt:.1f}s")


# 2 -----------------------------------------------------------------------------------

def test_criterion_02_hyperboloid_order():
    dom = HDomain.ball(0.8)
    ex = ExactHyperboloid((0.0, 0.0, 0.2), 1.0)
    spec = ConstantSpec(1.0)
    t0 = time.perf_counter()
    errs = []
    for N in (32, 64, 128):
        u, rep = picard_solve(SolverConfig(dom, spec, dom.chart_radius / N, g=ex, steps=1))
        assert rep.converged
        errs.append(float(np.max(np.abs(u.unknowns - ex(u.grid.node_y)))))
    dt = time.perf_counter() - t0
    orders = [float(np.log2(errs[i] / errs[i + 1])) for i in range(2)]
    ok = all(1.7 <= p <= 2.3 for p in orders) and dt < 120
    record(2, "hyperboloid refinement order", ok,
           f"errors={['%.2e' % e for e in errs]} orders={['%.3f' % p for p in orders]} "
           f"time={dt:.1f}s")


# 3 -----------------------------------------------------------------------------------

def test_criterion_03_pde_ode(ball07, crit3, crit3_nontrivial):
    spec, u, rep, dt = crit3
    t0 = time.perf_counter()
    err, prof = ode_error(ball07, spec, u)
    dt += time.perf_counter() - t0
    lo, hi = np.log(0.5), np.log(2.0)
    inside = (lo <= u.unknowns.min() and u.unknowns.max() <= hi
              and lo <= prof.u.min() and prof.u.max() <= hi)
    # the same comparison for omega = 1.5, where the solution is not identically zero
    spec2, u2, rep2 = crit3_nontrivial
    err2, prof2 = ode_error(ball07, spec2, u2)
    inside2 = (lo <= u2.unknowns.min() and u2.unknowns.max() <= hi
               and lo <= prof2.u.min() and prof2.u.max() <= hi)
    ok = (rep.converged and err <= 5e-3 and inside and dt < 60
          and rep2.converged and err2 <= 5e-3 and inside2)
    record(3, "PDE vs radial ODE", ok,
           f"omega=1: err={err:.2e} time={dt:.1f}s; omega=1.5: err={err2:.2e} "
           f"u in [{u2.unknowns.min():.4f}, {u2.unknowns.max():.4f}]")


# 4 -----------------------------------------------------------------------------------

def test_criterion_04_maximum_principle(ball07):
    rng = np.random.default_rng(4)
    h = ball07.chart_radius / 32
    worst = np.inf
    rows = []
    all_ok = True
    for _ in range(10):
        m = float(rng.uniform(1.0, 3.0))
        amp = float(rng.uniform(0.0, 0.9))
        k = rng.uniform(-3, 3, size=2)
        phase = float(rng.uniform(0, 2 * np.pi))
        spec = PowerLawSpec(m, smooth_omega(m, amp, k, phase))
        u, rep = picard_solve(SolverConfig(ball07, spec, h, steps=3))
        lo, hi = np.log(0.5) - 10 * h * h, np.log(2.0) + 10 * h * h
        margin = min(u.unknowns.min() - lo, hi - u.unknowns.max())
        worst = min(worst, margin)
        ok = rep.converged and margin >= 0
        all_ok &= ok
        rows.append(f"m={m:.2f}:{'ok' if ok else 'FAIL'}")
    record(4, "maximum-principle bounds", all_ok,
           f"10 specs, worst margin {worst:.3f}; " + " ".join(rows))


# 5 -----------------------------------------------------------------------------------

def test_criterion_05_ellipticity(ball07):
    rng = np.random.default_rng(5)
    rd = ball07.disk_radius
    c1, c2 = (1 - rd ** 2) ** 2 / 4, 0.25
    n = 10_000
    bad = 0
    worst_lo = worst_hi = np.inf
    for eps in (0.05, 0.1, 0.3):
        r = rd * np.sqrt(rng.uniform(0, 1, n))
        a = rng.uniform(0, 2 * np.pi, n)
        y = np.column_stack([r * np.cos(a), r * np.sin(a)])
        lam = lz.conformal_factor(y)
        # chart gradients of any size, including far past the light cone
        p = rng.normal(size=(n, 2)) * 10.0 ** rng.uniform(-3, 2, size=(n, 1))
        xi = rng.normal(size=(n, 2))
        A, _ = frame_coefficients(p / lam[:, None], eps)
        form = np.einsum("ni,nij,nj->n", xi, A, xi) / lam ** 2
        x2 = np.sum(xi * xi, axis=1)
        lo = form - 0.5 * eps * c1 * x2
        hi = c2 * x2 - form
        bad += int(np.sum(lo < 0) + np.sum(hi < 0))
        worst_lo = min(worst_lo, float(np.min(lo / x2)))
        worst_hi = min(worst_hi, float(np.min(hi / x2)))
    record(5, "uniform ellipticity", bad == 0,
           f"3 x 10^4 samples, violations={bad}, min lower gap={worst_lo:.2e}, "
           f"min upper gap={worst_hi:.2e}")


# 6 -----------------------------------------------------------------------------------

def test_criterion_06_certificate(cert07):
    c = cert07
    res_ok = all(c.residuals["plus_max"][t] <= 1e-9 and c.residuals["minus_min"][t] >= -1e-9
                 for t in ("0", "0.5", "1"))
    # closed-form barrier profile against adaptive quadrature on the certificate's parameters
    worst = 0.0
    for s in c.samples[::8]:
        s0 = c.sigma
        for alpha, beta in ((s["alpha_plus"], s["beta_plus"]),
                            (s["alpha_minus"], s["beta_minus"])):
            for ds in (1e-3, 0.1, 0.5, 1.2):
                ref = quad(lambda x: (1 + alpha * np.exp(beta * x)) ** -0.5, s0, s0 + ds,
                           epsabs=1e-14, epsrel=1e-13)[0]
                worst = max(worst, abs(barrier_increment(s0 + ds, s0, alpha, beta) - ref))
    ok = c.valid and c.theta > 0 and c.n_interior >= 1000 and res_ok and worst <= 1e-10
    record(6, "admissibility certificate", ok,
           f"theta={c.theta:.3e} sigma={c.sigma:.3f} "
           f"max Q(d+)={max(c.residuals['plus_max'].values()):.2e} "
           f"min Q(d-)={min(c.residuals['minus_min'].values()):.2e} quad gap={worst:.1e}")


# 7 -----------------------------------------------------------------------------------

def test_criterion_07_uniqueness(ball07, crit3, crit3_nontrivial):
    spec, u, rep, _ = crit3
    v, rep_v = picard_solve(SolverConfig(ball07, spec, ball07.chart_radius / 64,
                                         init=upper_initial_guess(ball07, spec)))
    gap = float(np.max(np.abs(u.unknowns - v.unknowns)))
    spec2, u2, _ = crit3_nontrivial
    v2, rep_v2 = picard_solve(SolverConfig(ball07, spec2, ball07.chart_radius / 64,
                                           init=upper_initial_guess(ball07, spec2)))
    gap2 = float(np.max(np.abs(u2.unknowns - v2.unknowns)))
    ok = rep_v.converged and rep_v2.converged and gap <= 1e-8 and gap2 <= 1e-8
    record(7, "two initialisations agree", ok,
           f"omega=1 gap={gap:.2e}; omega=1.5 gap={gap2:.2e}")


# 8 -----------------------------------------------------------------------------------

def test_criterion_08_diagnostics(ball07, crit3, crit3_nontrivial, cert07):
    theta = cert07.theta
    hyp = check_hypotheses(PowerLawSpec(2), ball07, theta=theta)
    notes = []
    ok = True
    for label, (spec, u, rep) in (("omega=1", crit3[:3]), ("omega=1.5", crit3_nontrivial)):
        d = diagnostics(u, spec, rep.epsilon, theta=theta)
        this = (d["sup_grad"] <= 1 - rep.epsilon and np.isfinite(d["sup_nu"])
                and d["boundary_grad_ok"])
        notes.append(f"{label}: sup|grad u|={d['sup_grad']:.3e} nu={d['sup_nu']:.6f} "
                     f"boundary {d['boundary_grad']:.3e} <= {d['boundary_grad_bound']:.6f}")
        if hyp.thm15:
            lhs = d["eq64_lhs"]
            this &= lhs is not None and lhs <= 1e-6
            notes.append(f"gradient inequality lhs={lhs}")
        ok &= this
    if not hyp.thm15:
        notes.append(f"gradient-inequality check not engaged: b) "
                     f"{'pass' if hyp.thm15_b.passed else 'fail'}, c) "
                     f"{'pass' if hyp.thm15_c.passed else 'fail'} at theta={theta:.2e}")
    record(8, "spacelike diagnostics", ok, "; ".join(notes))


# 9 -----------------------------------------------------------------------------------

def test_criterion_09_geometry():
    rng = np.random.default_rng(9)
    r = 0.95 * np.sqrt(rng.uniform(0, 1, 2000))
    a = rng.uniform(0, 2 * np.pi, 2000)
    y = np.column_stack([r * np.cos(a), r * np.sin(a)])
    p = lz.from_ball(y)
    chart = max(float(np.max(np.abs(lz.to_ball(p) - y))),
                float(np.max(np.abs(lz.from_ball(lz.to_ball(p)) - p) / np.maximum(1, p[:, 2:]))))
    # geodesic extension: distance equals arclength and the endpoint stays on H^2
    geo = 0.0
    for k in range(200):
        v = lz.tangent_projection(p[k], np.append(rng.normal(size=2), rng.normal()))
        v = v / np.sqrt(lz.inner(v, v))
        s = float(rng.uniform(0, 3))
        q = lz.geodesic_point(p[k], v, s)
        geo = max(geo, abs(lz.geodesic_distance(p[k], q) - s) / max(1, s),
                  abs(lz.inner(q, q) + 1) / max(1, q[2] ** 2))
    Hz = max(abs(graph_point(p[k], lz.FrameDerivatives(0.0, np.zeros(2), np.zeros((2, 2))))
                 .mean_curvature - 1) for k in range(200))
    ok = chart <= 1e-12 and geo <= 1e-10 and Hz <= 1e-12
    record(9, "geometry round trips", ok,
           f"chart {chart:.1e}, geodesic {geo:.1e}, H(0)-1 {Hz:.1e}")


# 10 ----------------------------------------------------------------------------------

def test_criterion_10_cutoff():
    notes = []
    ok = True
    for eps in (0.05, 0.1, 0.3, 0.5, 0.9):
        a = np.linspace(0, 1 - eps, 2001)
        b = np.linspace(1 - eps / 2, 2 / eps, 2001)
        c = np.linspace(2 / eps + 1, 2 / eps + 50, 2001)
        clauses = (np.array_equal(m_eps(a, eps), a)
                   and np.all(m_eps(b, eps) == 1 - eps / 2)
                   and np.all(m_eps(c, eps) == 0))
        sweep = m_eps(np.linspace(0, 2 / eps, 10_000), eps)
        mono = bool(np.all(np.diff(sweep) >= 0))
        ok &= clauses and mono
        notes.append(f"eps={eps}: {'ok' if clauses and mono else 'FAIL'}")
    record(10, "cutoff function", ok, " ".join(notes))
