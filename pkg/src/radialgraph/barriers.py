"""Boundary barriers and a sampled admissibility certificate.

For a boundary point q0 an exterior geodesic ball B_sigma(xi) touches the
domain at q0.  With d(q) = dist(q, xi) and gamma(s) = alpha e^{beta s},

    delta_+(q) = int_sigma^{d(q)} (1 + gamma(s))^{-1/2} ds,   delta_- = -delta_+.

The operator checked here is the comparison form

    Q^t(u) = sum_ij ((1 - v) delta_ij + u_i u_j) u_ij - n t (1 - v)
             + n t (1 - v)^{3/2} e^u H(e^u q),

for which delta_+ is a supersolution (Q^t <= 0) and delta_- a subsolution.
"""

import json
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from . import lorentz as lz

SIGMA_LADDER = (0.2, 0.1, 0.05)
RESIDUAL_SLACK = 1e-9


class BarrierError(ValueError):
    pass


def exterior_ball(domain, q0, sigma, n_check=2048):
    """Center xi of the exterior geodesic ball of radius sigma touching at q0."""
    q0 = lz.check_hpoint(np.asarray(q0, float))
    nu = domain.outward_normal(q0)
    xi = lz.geodesic_point(q0, nu, sigma)
    d = lz.geodesic_distance(xi, domain.boundary_points(n_check))
    if d.min() < sigma - 1e-9 or domain.levelset(lz.to_ball(xi)) <= 0:
        raise BarrierError(f"exterior ball of radius {sigma:g} meets the domain")
    return xi


def gamma_theta(alpha, beta, s):
    """1 - (1 + alpha e^{beta s})^{-1/2}, accurate for tiny alpha."""
    return -np.expm1(-0.5 * np.log1p(alpha * np.exp(beta * s)))


def primitive(s, alpha, beta):
    """F with F'(s) = (1 + alpha e^{beta s})^{-1/2}.

    F(s) = (ln alpha + beta s - 2 ln(1 + w)) / beta,  w = sqrt(1 + alpha e^{beta s}).
    """
    w = np.sqrt(1 + alpha * np.exp(beta * s))
    return (np.log(alpha) + beta * s - 2 * np.log1p(w)) / beta


def barrier_increment(s, s0, alpha, beta):
    """F(s) - F(s0) without cancellation when s is close to s0."""
    s = np.asarray(s, float)
    g0 = alpha * np.exp(beta * s0)
    w0 = np.sqrt(1 + g0)
    dg = g0 * np.expm1(beta * (s - s0))
    w = np.sqrt(1 + g0 + dg)
    return (s - s0) - (2 / beta) * np.log1p((w - w0) / (1 + w0))


@dataclass
class BarrierParams:
    q0: np.ndarray
    xi: np.ndarray
    sigma: float
    alpha: float
    beta: float
    sign: str
    theta_local: float

    @property
    def s(self):
        return +1.0 if self.sign == "plus" else -1.0


def select_parameters(domain, xi, Hbar, n, sign, sigma, samples):
    """(alpha, beta) following the supersolution / subsolution construction.

    ``samples`` are points of the closed domain used to bound
    Delta dist = (n-1) coth(dist) by D and dist by S.
    """
    if sign == "plus" and not Hbar > 0:
        raise BarrierError("Hbar must be positive")
    d = lz.geodesic_distance(xi, samples)
    d = np.concatenate([d, [sigma]])
    D = float(np.max((n - 1) / np.tanh(d)))
    S = float(d.max())
    if sign == "plus":
        beta = 2 * (D + 1)
        alpha = ((beta / 2 - D) * np.exp(-beta * S / 2) / (n * Hbar)) ** 2
        # the inequality must hold at every sample; shrink alpha if rounding bites
        lap = (n - 1) / np.tanh(d)
        lhs = (beta / 2 - lap) * alpha ** -0.5 * np.exp(-beta * d / 2)
        while np.any(lhs < n * Hbar):
            alpha *= 0.5
            lhs = (beta / 2 - lap) * alpha ** -0.5 * np.exp(-beta * d / 2)
    elif sign == "minus":
        beta = 2 * (D + 2 * n)
        alpha = float(np.exp(-beta * S))
    else:
        raise ValueError("sign must be 'plus' or 'minus'")
    theta = float(gamma_theta(alpha, beta, sigma))
    return alpha, beta, theta


def make_params(domain, q0, xi, sigma, Hbar, sign, samples):
    n = len(q0) - 1
    alpha, beta, theta = select_parameters(domain, xi, Hbar, n, sign, sigma, samples)
    return BarrierParams(np.asarray(q0, float), xi, float(sigma), float(alpha),
                         float(beta), sign, theta)


def eval_barrier(params, q, domain=None, tol=1e-9):
    """Value, frame gradient and gradient norm of delta_+/- at points q.

    The frame is the chart frame lambda^{-1} d/dy_i at q.
    """
    q = lz.check_hpoint(np.asarray(q, float))
    if domain is not None and np.any(domain.levelset(lz.to_ball(q)) > tol):
        raise BarrierError("evaluation point outside the closed domain")
    d = lz.geodesic_distance(q, params.xi)
    s0 = lz.geodesic_distance(params.q0, params.xi)
    val = params.s * barrier_increment(d, s0, params.alpha, params.beta)
    Fp = (1 + params.alpha * np.exp(params.beta * d)) ** -0.5
    nd = lz.distance_gradient(q, params.xi)
    frame = lz.chart_frame(lz.to_ball(q))
    gd = lz.inner(frame, nd[..., None, :])
    return val, params.s * Fp[..., None] * gd, Fp


def barrier_derivatives(params, q):
    """Frame value, gradient, Hessian of the barrier plus (1 - v) computed exactly."""
    q = np.asarray(q, float)
    n = q.shape[-1] - 1
    d = lz.geodesic_distance(q, params.xi)
    s0 = lz.geodesic_distance(params.q0, params.xi)
    a, b = params.alpha, params.beta
    gam = a * np.exp(b * d)
    Fp = (1 + gam) ** -0.5
    Fpp = -0.5 * b * gam * (1 + gam) ** -1.5
    val = barrier_increment(d, s0, a, b)
    frame = lz.chart_frame(lz.to_ball(q))
    nd = lz.distance_gradient(q, params.xi)
    gd = lz.inner(frame, nd[..., None, :])
    eye = np.eye(n)
    outer = gd[..., :, None] * gd[..., None, :]
    coth = 1 / np.tanh(d)
    hess = (Fpp[..., None, None] * outer
            + (Fp * coth)[..., None, None] * (eye - outer))
    grad = Fp[..., None] * gd
    one_minus_v = gam / (1 + gam)
    s = params.s
    return s * val, s * grad, s * hess, one_minus_v, dict(Fp=Fp, Fpp=Fpp, d=d, gamma=gam)


def comparison_operator(value, grad, hess, q, spec, t, one_minus_v=None):
    """Q^t at points q given frame derivatives (comparison form)."""
    n = grad.shape[-1]
    if one_minus_v is None:
        one_minus_v = 1 - np.sum(grad * grad, axis=-1)
    lead = (one_minus_v * np.trace(hess, axis1=-2, axis2=-1)
            + np.einsum("...i,...ij,...j->...", grad, hess, grad))
    eu = np.exp(value)
    H = spec.value(q, eu)
    return lead - n * t * one_minus_v + n * t * one_minus_v ** 1.5 * eu * H


def barrier_residual(params, q, spec, t):
    """(Q^t(delta), Q^t(delta) / (1 - v)) at interior points q."""
    val, grad, hess, omv, _ = barrier_derivatives(params, q)
    Q = comparison_operator(val, grad, hess, q, spec, t, omv)
    return Q, Q / omv


# -- certificate ----------------------------------------------------------------

@dataclass
class AdmissibilityCertificate:
    theta: float
    sigma: Optional[float]
    valid: bool
    degenerate: bool
    samples: list
    residuals: dict
    normalized: dict
    sign_checks: dict
    n_interior: int
    offending: Optional[dict] = None
    strict_valid: bool = False

    def to_dict(self):
        return {
            "theta": self.theta, "sigma": self.sigma, "valid": self.valid,
            "strict_valid": self.strict_valid, "degenerate": self.degenerate,
            "residuals": self.residuals, "normalized": self.normalized,
            "sign_checks": self.sign_checks, "n_interior": self.n_interior,
            "offending": self.offending, "samples": self.samples,
        }

    def to_json(self, path=None):
        s = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(s)
        return s


CERTIFICATE_SCHEMA = {
    "type": "object",
    "required": ["theta", "sigma", "samples"],
    "properties": {
        "theta": {"type": "number"},
        "sigma": {"type": ["number", "null"]},
        "samples": {"type": "array", "items": {
            "type": "object",
            "required": ["q0", "alpha_plus", "beta_plus", "alpha_minus", "beta_minus",
                         "residuals"],
            "properties": {"q0": {"type": "array", "items": {"type": "number"}},
                           "alpha_plus": {"type": "number"},
                           "beta_plus": {"type": "number"},
                           "alpha_minus": {"type": "number"},
                           "beta_minus": {"type": "number"},
                           "residuals": {"type": "object"}}}},
    },
}


def _is_unit_curvature(spec, q):
    # H = 1 along whole rays, not only on Omega itself
    rhos = (0.5 * spec.r1, spec.r1, 1.0, spec.r2, 2.0 * spec.r2)
    return all(np.max(np.abs(spec.value(q, r) - 1.0)) <= 1e-14 for r in rhos)


def certify(domain, spec, n_boundary=64, n_interior=1024, ts=(0.0, 0.5, 1.0), seed=0,
            ladder=SIGMA_LADDER, degenerate_theta=0.5, allow_degenerate=True):
    """Sampled admissibility certificate built from the barriers delta_+/-.

    Parameters
    ----------
    domain : HDomain
    spec : CurvatureSpec
        Positive curvature; the certificate uses its canonical extension.
    n_boundary, n_interior : int
        Number of base points q0 and of interior evaluation points.

    Returns
    -------
    AdmissibilityCertificate
        ``valid`` requires max Q^t(delta_+) <= 1e-9, min Q^t(delta_-) >= -1e-9
        for every t, delta_+ >= 0 >= delta_- on the sampled boundary and
        theta > 0.  ``strict_valid`` applies the same signs, without slack, to
        Q^t / (1 - |grad delta|^2).
    """
    if n_interior < 1000:
        raise ValueError("at least 1000 interior samples are required")
    Hx = spec.extend()
    qb = domain.boundary_points(n_boundary)
    qi = domain.interior_points(n_interior, seed=seed)
    closure = np.concatenate([domain.boundary_points(max(4 * n_boundary, 512)), qi])
    n = qb.shape[-1] - 1
    tkeys = [f"{t:g}" for t in ts]

    if allow_degenerate and _is_unit_curvature(Hx, closure):
        # zero barriers work for any theta when H = 1 on the domain
        res = {k: float(np.max(np.abs(comparison_operator(
            np.zeros(len(qi)), np.zeros((len(qi), n)), np.zeros((len(qi), n, n)),
            qi, Hx, t)))) for k, t in zip(tkeys, ts)}
        ok = all(v <= RESIDUAL_SLACK for v in res.values())
        table = {"plus_max": res, "minus_min": {k: -v for k, v in res.items()}}
        return AdmissibilityCertificate(
            theta=degenerate_theta, sigma=None, valid=ok, degenerate=True, samples=[],
            residuals=table, normalized=table, sign_checks={}, n_interior=len(qi),
            strict_valid=ok)

    Hbar = float(np.max(Hx.value(closure, 1.0)))
    if not Hbar > 0:
        raise BarrierError("curvature must be positive")
    R = domain.circumradius
    sigma = None
    for c in ladder:
        try:
            xis = [exterior_ball(domain, q0, c * R) for q0 in qb]
        except BarrierError:
            continue
        sigma = c * R
        break
    if sigma is None:
        return AdmissibilityCertificate(
            theta=0.0, sigma=None, valid=False, degenerate=False, samples=[],
            residuals={}, normalized={}, sign_checks={}, n_interior=len(qi),
            offending={"reason": "no sigma in the ladder passes the exterior ball test"})

    plus_max = {k: -np.inf for k in tkeys}
    minus_min = {k: np.inf for k in tkeys}
    nplus_max = {k: -np.inf for k in tkeys}
    nminus_min = {k: np.inf for k in tkeys}
    bd_plus_min = np.inf
    bd_minus_max = -np.inf
    theta = 1.0
    samples = []
    offending = None
    for idx, (q0, xi) in enumerate(zip(qb, xis)):
        pp = make_params(domain, q0, xi, sigma, Hbar, "plus", closure)
        pm = make_params(domain, q0, xi, sigma, Hbar, "minus", closure)
        theta = min(theta, pp.theta_local, pm.theta_local)
        row = {}
        for k, t in zip(tkeys, ts):
            Qp, Np = barrier_residual(pp, qi, Hx, t)
            Qm, Nm = barrier_residual(pm, qi, Hx, t)
            row[k] = {"plus_max": float(Qp.max()), "minus_min": float(Qm.min()),
                      "plus_max_normalized": float(Np.max()),
                      "minus_min_normalized": float(Nm.min())}
            plus_max[k] = max(plus_max[k], float(Qp.max()))
            minus_min[k] = min(minus_min[k], float(Qm.min()))
            nplus_max[k] = max(nplus_max[k], float(Np.max()))
            nminus_min[k] = min(nminus_min[k], float(Nm.min()))
            if offending is None and (Qp.max() > RESIDUAL_SLACK or Qm.min() < -RESIDUAL_SLACK):
                offending = {"q0_index": idx, "t": t,
                             "point": qi[int(np.argmax(Qp) if Qp.max() > RESIDUAL_SLACK
                                             else np.argmin(Qm))].tolist()}
        vb = eval_barrier(pp, closure)[0]
        bd_plus_min = min(bd_plus_min, float(vb.min()))
        bd_minus_max = max(bd_minus_max, float(-vb.min()))
        samples.append({"q0": q0.tolist(), "xi": xi.tolist(),
                        "alpha_plus": pp.alpha, "beta_plus": pp.beta,
                        "alpha_minus": pm.alpha, "beta_minus": pm.beta,
                        "theta_plus": pp.theta_local, "theta_minus": pm.theta_local,
                        "residuals": row})
    signs_ok = bd_plus_min >= -1e-12 and bd_minus_max <= 1e-12
    valid = (all(v <= RESIDUAL_SLACK for v in plus_max.values())
             and all(v >= -RESIDUAL_SLACK for v in minus_min.values())
             and theta > 0 and signs_ok)
    strict = (valid and all(v <= 0 for v in nplus_max.values())
              and all(v >= 0 for v in nminus_min.values()))
    if offending is None and not signs_ok:
        offending = {"reason": "barrier sign condition violated on the closure"}
    return AdmissibilityCertificate(
        theta=float(theta), sigma=float(sigma), valid=bool(valid), degenerate=False,
        samples=samples,
        residuals={"plus_max": plus_max, "minus_min": minus_min},
        normalized={"plus_max": nplus_max, "minus_min": nminus_min},
        sign_checks={"delta_plus_min": bd_plus_min, "delta_minus_max": bd_minus_max},
        n_interior=len(qi), offending=offending, strict_valid=bool(strict))
