"""Regularised prescribed-curvature equation on a chart grid.

The unknown u lives on a :class:`~radialgraph.grid.Grid`.  With frame
derivatives u_i, u_ij, v = |grad u|^2 and m = m_eps(|grad u|), the
regularised operator is

    Q(u) = sum_ij ((1 - m^2) delta_ij + m^2 u_i u_j / v) u_ij
           - s n t (1 - m^2) (sqrt(1 - m^2) e^u H(e^u q) - 1),

with s = +1 for the ``"geometric"`` convention (the one satisfied by
graphs whose mean curvature is H, e.g. translated hyperboloids) and
s = -1 for the ``"comparison"`` convention used by the barrier
certificate.  Picard iteration freezes the coefficients and the right-hand
side at the previous iterate and solves the resulting linear problem.
"""

import time
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import lorentz as lz
from .grid import Grid, ScalarField, OPS

CONVENTIONS = {"geometric": 1.0, "comparison": -1.0}


class SolverError(RuntimeError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


# -- cutoff ------------------------------------------------------------------

def _bridge_up(s):
    # p(0)=0, p'(0)=1, p''(0)=0, p(1)=1, p'(1)=p''(1)=0 in units of the bridge length
    return s + 4 * s ** 3 - 7 * s ** 4 + 3 * s ** 5


def _smoothstep(s):
    return s ** 3 * (10 - 15 * s + 6 * s * s)


def m_eps(r, eps):
    """Cutoff profile m_eps(r) = eta_eps(r) r.

    Equal to r on [0, 1-eps], constant 1-eps/2 on [1-eps/2, 2/eps], zero
    beyond 2/eps+1, with C^2 quintic bridges in between.
    """
    if not 0 < eps < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    r = np.asarray(r, dtype=float)
    a = 1.0 - eps
    L = 0.5 * eps
    top = 1.0 - 0.5 * eps
    b = 2.0 / eps
    out = np.where(r <= a, r, top)
    mid = (r > a) & (r < a + L)
    if np.any(mid):
        out = np.where(mid, a + L * _bridge_up(np.clip((r - a) / L, 0, 1)), out)
    down = (r > b) & (r < b + 1)
    if np.any(down):
        out = np.where(down, top * (1 - _smoothstep(np.clip(r - b, 0, 1))), out)
    out = np.where(r >= b + 1, 0.0, out)
    # the bridge polynomials can round one ulp outside [0, top]
    return np.clip(out, 0.0, top)


# -- operator ----------------------------------------------------------------

def frame_coefficients(grad, eps=None):
    """(A, m) with A = (1 - m^2) I + m^2 p_hat p_hat^T.

    ``eps=None`` gives the unregularised coefficients (m = |p|).
    """
    p2 = np.sum(grad * grad, axis=-1)
    p = np.sqrt(p2)
    m = p if eps is None else m_eps(p, eps)
    n = grad.shape[-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(p2 > 0, m * m / p2, 0.0)
    A = ((1 - m * m)[..., None, None] * np.eye(n)
         + ratio[..., None, None] * grad[..., :, None] * grad[..., None, :])
    return A, m


def _curvature_term(value, m, q, spec, t, n, sign):
    root = np.sqrt(1.0 - m * m)
    eu = np.exp(value)
    H = spec.value(q, eu)
    return sign * n * t * (1.0 - m * m) * (root * eu * H - 1.0)


class Problem:
    """Grid, extended curvature spec and convention bundled for reuse."""

    def __init__(self, grid, spec, eps=0.1, convention="geometric"):
        if convention not in CONVENTIONS:
            raise ValueError(f"unknown convention {convention!r}")
        self.grid = grid
        self.spec = spec
        self.eps = eps
        self.convention = convention
        self.sign = CONVENTIONS[convention]
        self.q = grid.node_points()
        self.lam = grid.lam
        self.a = lz.log_conformal_gradient(grid.node_y)
        self.n = 2
        ops = [grid.ops[k] for k in OPS]
        self._rows = np.concatenate([o.rows for o in ops])
        self._cols = np.concatenate([o.cols for o in ops])
        self._vals = np.concatenate([o.vals for o in ops])
        self._which = np.concatenate([np.full(len(o.rows), k) for k, o in enumerate(ops)])
        self._consts = np.stack([o.const for o in ops])

    def chart_coefficients(self, A):
        """Per-node weights of (d1, d2, d11, d22, d12) for sum A_ij u_ij."""
        a = self.a
        b = 2 * np.einsum("...ij,...j->...i", A, a) - np.trace(A, axis1=-2, axis2=-1)[..., None] * a
        il2 = self.lam ** -2
        return np.stack([-il2 * b[:, 0], -il2 * b[:, 1], il2 * A[:, 0, 0],
                         il2 * A[:, 1, 1], 2 * il2 * A[:, 0, 1]])

    def assemble(self, w, t, eps=None):
        """Frozen-coefficient linear system (M, rhs) at iterate w."""
        eps = self.eps if eps is None else eps
        b = w.bundle()
        A, m = frame_coefficients(b.grad, eps)
        coef = self.chart_coefficients(A)
        data = coef[self._which, self._rows] * self._vals
        N = self.grid.n_unknown
        M = sp.csr_matrix((data, (self._rows, self._cols)), shape=(N, N))
        const = np.sum(coef * self._consts, axis=0)
        rhs = _curvature_term(b.value, m, self.q, self.spec, t, self.n, self.sign)
        return M, rhs - const

    def residual_vector(self, u, t, eps=None, regularized=True):
        eps = self.eps if eps is None else eps
        b = u.bundle()
        A, m = frame_coefficients(b.grad, eps if regularized else None)
        lead = np.einsum("...ij,...ij->...", A, b.hess)
        return lead - _curvature_term(b.value, m, self.q, self.spec, t, self.n, self.sign)


def assemble_operator(w, eps, t, spec, convention="geometric"):
    """Sparse matrix and right-hand side of the frozen linear problem.

    ``spec`` must be defined for every height the iterate reaches; pass an
    extended spec.
    """
    return Problem(w.grid, spec, eps, convention).assemble(w, t)


def linear_solve(system):
    """Direct sparse LU solve with a residual check and one refinement step."""
    M, rhs = system
    try:
        lu = splu(sp.csc_matrix(M), permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        raise SolverError(f"factorisation failed: {exc}") from exc
    x = lu.solve(rhs)
    bound = 1e-11 * (1 + np.max(np.abs(rhs), initial=0.0))
    r = rhs - M @ x
    if np.max(np.abs(r), initial=0.0) > bound:
        x = x + lu.solve(r)
        r = rhs - M @ x
        if np.max(np.abs(r), initial=0.0) > bound:
            raise SolverError("linear solve residual above tolerance")
    return x


def nonlinear_residual(u, eps, t, spec, convention="geometric", regularized=True):
    """Sup norm over unknown nodes of the discrete operator at u."""
    r = Problem(u.grid, spec, eps, convention).residual_vector(u, t, regularized=regularized)
    return float(np.max(np.abs(r)))


# -- reports -----------------------------------------------------------------

@dataclass
class StepRecord:
    t: float
    iterations: int = 0
    residuals: list = field(default_factory=list)
    relaxation: list = field(default_factory=list)
    converged: bool = False


@dataclass
class SolveReport:
    converged: bool
    epsilon: float
    convention: str
    steps: list
    residual: float
    u_min: float
    u_max: float
    bounds: dict
    sup_grad: float
    sup_grad_node: list
    sup_grad_interior: bool
    sup_nu: float
    spacelike_verified: bool
    boundary_grad: float
    boundary_grad_bound: Optional[float]
    boundary_grad_ok: Optional[bool]
    eq64_lhs: Optional[float]
    unregularized_residual: Optional[float]
    regularization_gap: Optional[float]
    epsilon_retry: bool = False
    grid: dict = field(default_factory=dict)
    runtime: float = 0.0

    def to_dict(self, timing=False):
        """JSON-ready dict; wall-clock time is left out unless ``timing``."""
        d = asdict(self)
        if not timing:
            d.pop("runtime")
        d["steps"] = [asdict(s) if isinstance(s, StepRecord) else s for s in self.steps]
        if not np.isfinite(d["sup_nu"]):
            d["sup_nu"] = "inf"
        return d


REPORT_SCHEMA = {
    "type": "object",
    "required": ["converged", "epsilon", "convention", "steps", "residual", "u_min",
                 "u_max", "bounds", "sup_grad", "sup_nu", "spacelike_verified",
                 "boundary_grad", "eq64_lhs", "grid"],
    "properties": {
        "converged": {"type": "boolean"},
        "epsilon": {"type": "number"},
        "convention": {"enum": list(CONVENTIONS)},
        "steps": {"type": "array", "items": {
            "type": "object",
            "required": ["t", "iterations", "residuals", "relaxation", "converged"],
            "properties": {"t": {"type": "number"}, "iterations": {"type": "integer"},
                           "residuals": {"type": "array", "items": {"type": "number"}},
                           "relaxation": {"type": "array", "items": {"type": "number"}},
                           "converged": {"type": "boolean"}}}},
        "residual": {"type": "number"},
        "u_min": {"type": "number"},
        "u_max": {"type": "number"},
        "bounds": {"type": "object"},
        "sup_grad": {"type": "number"},
        "sup_nu": {"type": ["number", "string"]},
        "spacelike_verified": {"type": "boolean"},
        "boundary_grad": {"type": "number"},
        "eq64_lhs": {"type": ["number", "null"]},
        "grid": {"type": "object"},
        "runtime": {"type": "number"},
    },
}


def gradient_inequality_lhs(value, grad_norm, q, spec, eps, n=2):
    """Left side of the interior gradient inequality at a maximum of |grad u|.

    [-(n-1) - n w e^u d/dlam(lam H)|_{e^u}] |grad u| - n^{3/2} w e^{2u} |grad_T H(e^u q)|
    with w = sqrt(1 - m_eps(|grad u|)^2).
    """
    w = np.sqrt(1.0 - m_eps(grad_norm, eps) ** 2)
    eu = np.exp(value)
    rad = spec.radial_derivative(q, eu)
    tg = spec.tangential_gradient_norm(eu * q)
    return float((-(n - 1) - n * w * eu * rad) * grad_norm - n ** 1.5 * w * eu ** 2 * tg)


def diagnostics(u, spec, eps, theta=None, r1=None, r2=None):
    """Bounds, gradient and Lorentz-factor diagnostics of a grid function."""
    grid = u.grid
    b = u.bundle()
    gn = np.sqrt(b.grad_norm_sq)
    vals = u.values[np.isfinite(u.values)]
    r1 = spec.r1 if r1 is None else r1
    r2 = spec.r2 if r2 is None else r2
    slack = 10 * grid.h ** 2
    umin, umax = float(vals.min()), float(vals.max())
    k = int(np.argmax(gn))
    sup = float(gn[k])
    nu = float(1 / np.sqrt(1 - sup * sup)) if sup < 1 else float("inf")
    near = grid.near_boundary
    bgrad = float(gn[near].max()) if near.any() else 0.0
    interior = not bool(near[k])
    eq64 = None
    if interior:
        eq64 = gradient_inequality_lhs(b.value[k], sup, grid.node_points()[k], spec, eps)
    return {
        "u_min": umin, "u_max": umax,
        "bounds": {"log_r1": float(np.log(r1)), "log_r2": float(np.log(r2)),
                   "inside": bool(np.log(r1) <= umin and umax <= np.log(r2)),
                   "slack": slack,
                   "inside_with_slack": bool(np.log(r1) - slack <= umin
                                             and umax <= np.log(r2) + slack)},
        "sup_grad": sup, "sup_grad_node": grid.node_ij[k].tolist(),
        "sup_grad_interior": interior,
        "sup_nu": nu, "spacelike_verified": bool(sup <= 1 - eps),
        "boundary_grad": bgrad,
        "boundary_grad_bound": None if theta is None else 1 - theta,
        "boundary_grad_ok": None if theta is None else bool(bgrad <= 1 - theta),
        "eq64_lhs": eq64,
    }


# -- Picard continuation -----------------------------------------------------

@dataclass
class SolverConfig:
    domain: object
    spec: object
    h: float
    eps: float = 0.1
    g: object = None
    steps: int = 5
    relaxation: float = 1.0
    tol: float = 1e-10
    max_iter: int = 200
    convention: str = "geometric"
    init: object = 0.0
    theta: Optional[float] = None
    retry_half_eps: bool = True
    grid: object = None


def _initial_field(grid, init):
    if isinstance(init, ScalarField):
        if init.grid is not grid:
            raise ValueError("initial field lives on another grid")
        return ScalarField(grid, init.values.copy())
    if callable(init):
        return ScalarField.from_function(grid, init)
    return ScalarField.constant(grid, float(init))


def upper_initial_guess(domain, spec, slope=0.5):
    """min(log r2, slope * distance to the boundary) as a chart function."""
    def f(y):
        q = lz.from_ball(y)
        if domain.kind == "ball":
            d = domain.R - lz.geodesic_distance(q, domain.center)
        else:
            d = -domain.levelset(y) * lz.conformal_factor(y)
        return np.minimum(np.log(spec.r2), slope * np.maximum(d, 0.0))
    return f


def _iterate(problem, u, t, eps, cfg, record):
    omega0 = cfg.relaxation
    omega = omega0
    res = float(np.max(np.abs(problem.residual_vector(u, t, eps))))
    record.residuals.append(res)
    record.relaxation.append(omega)
    if res < cfg.tol:
        record.converged = True
        return u
    while record.iterations < cfg.max_iter:
        M, rhs = problem.assemble(u, t, eps)
        Tu = linear_solve((M, rhs))
        old = u.unknowns
        # residual changes below the rounding level of M u are not meaningful
        floor = 64 * np.finfo(float).eps * (
            abs(M).sum(axis=1).max() * np.max(np.abs(Tu)) + np.max(np.abs(rhs)))
        new = (1 - omega) * old + omega * Tu
        if not np.all(np.isfinite(new)):
            k = int(np.argmax(~np.isfinite(new)))
            raise SolverError("non-finite iterate", index=tuple(problem.grid.node_ij[k]))
        cand = ScalarField.from_unknowns(problem.grid, new)
        r_new = float(np.max(np.abs(problem.residual_vector(cand, t, eps))))
        record.iterations += 1
        if r_new > max(res, floor) and omega > 1 / 16:
            omega = max(omega / 2, 1 / 16)
            record.residuals.append(r_new)
            record.relaxation.append(omega)
            continue
        incr = float(np.max(np.abs(new - old)))
        u, res = cand, r_new
        record.residuals.append(res)
        record.relaxation.append(omega)
        omega = omega0
        if res < cfg.tol or incr < 1e-12:
            record.converged = res < cfg.tol or incr < 1e-12
            break
    return u


def picard_solve(cfg):
    """Frozen-coefficient Picard iteration with linear continuation in t.

    Returns
    -------
    u : ScalarField
    report : SolveReport
    """
    t0 = time.perf_counter()
    grid = cfg.grid if cfg.grid is not None else Grid(cfg.domain, cfg.h, cfg.g)
    spec = cfg.spec.extend() if not hasattr(cfg.spec, "base") else cfg.spec
    eps = cfg.eps
    problem = Problem(grid, spec, eps, cfg.convention)
    u = _initial_field(grid, cfg.init)
    steps = []
    for k in range(1, cfg.steps + 1):
        rec = StepRecord(t=k / cfg.steps)
        u = _iterate(problem, u, rec.t, eps, cfg, rec)
        steps.append(rec)
    retry = False
    diag = diagnostics(u, spec, eps, cfg.theta)
    if cfg.retry_half_eps and not diag["spacelike_verified"]:
        retry = True
        eps = eps / 2
        problem = Problem(grid, spec, eps, cfg.convention)
        rec = StepRecord(t=1.0)
        u = _iterate(problem, u, 1.0, eps, cfg, rec)
        steps.append(rec)
        diag = diagnostics(u, spec, eps, cfg.theta)
    res = float(np.max(np.abs(problem.residual_vector(u, 1.0, eps))))
    unreg = gap = None
    if diag["spacelike_verified"]:
        r_reg = problem.residual_vector(u, 1.0, eps)
        r_un = problem.residual_vector(u, 1.0, eps, regularized=False)
        unreg = float(np.max(np.abs(r_un)))
        gap = float(np.max(np.abs(r_reg - r_un)))
    converged = all(s.converged for s in steps)
    report = SolveReport(
        converged=bool(converged), epsilon=eps, convention=cfg.convention, steps=steps,
        residual=res, u_min=diag["u_min"], u_max=diag["u_max"], bounds=diag["bounds"],
        sup_grad=diag["sup_grad"], sup_grad_node=diag["sup_grad_node"],
        sup_grad_interior=diag["sup_grad_interior"], sup_nu=diag["sup_nu"],
        spacelike_verified=diag["spacelike_verified"], boundary_grad=diag["boundary_grad"],
        boundary_grad_bound=diag["boundary_grad_bound"],
        boundary_grad_ok=diag["boundary_grad_ok"], eq64_lhs=diag["eq64_lhs"],
        unregularized_residual=unreg, regularization_gap=gap, epsilon_retry=retry,
        grid=grid.describe(), runtime=time.perf_counter() - t0)
    return u, report
