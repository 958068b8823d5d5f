"""Independent reference solutions.

* Translated hyperboloids {<p - p0, p - p0> = -r^2} are radial graphs with
  constant mean curvature 1/r; their height function is known in closed form.
* Rotationally symmetric problems reduce to a two-point boundary value
  problem in the geodesic radius, solved here by shooting.
* Manufactured solutions: any smooth spacelike u* is a solution for the
  curvature H*(rho q) = e^{u*(q)} H_graph(q) / rho.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import lorentz as lz
from .curvature import CurvatureSpec
from .graph import graph_arrays
from .grid import ScalarField


class OracleError(ValueError):
    pass


# -- analytic chart functions -------------------------------------------------

class ChartFunction:
    """A function of chart points with exact first and second partials."""

    def __init__(self, f, df, d2f):
        self.f, self.df, self.d2f = f, df, d2f

    def __call__(self, y):
        return self.f(np.asarray(y, float))

    def frame(self, y):
        """(value, frame grad, frame Hessian) at chart points y."""
        y = np.asarray(y, float)
        grad, hess = lz.frame_components(y, self.df(y), self.d2f(y))
        return self.f(y), grad, hess

    def frame_derivatives(self, y):
        v, g, H = self.frame(y)
        return lz.FrameDerivatives(float(v), g, H)

    def mean_curvature(self, y):
        """Mean curvature of the graph of this function at chart points y."""
        y = np.asarray(y, float)
        v, g, H = self.frame(y)
        return graph_arrays(lz.from_ball(y), v, g, H)["mean_curvature"]


def quadratic_bump(c, Rc, center=(0.0, 0.0)):
    """u(y) = c (1 - |y - center|^2 / Rc^2)."""
    center = np.asarray(center, float)

    def f(y):
        d = y - center
        return c * (1 - np.sum(d * d, axis=-1) / Rc ** 2)

    def df(y):
        return -2 * c * (y - center) / Rc ** 2

    def d2f(y):
        shape = np.shape(y)[:-1]
        return np.broadcast_to(-2 * c / Rc ** 2 * np.eye(2), shape + (2, 2)).copy()

    return ChartFunction(f, df, d2f)


# -- translated hyperboloids --------------------------------------------------

def _chart_lift_derivatives(y):
    """q(y) = from_ball(y) with its first and second partials.

    Returns q (..., n+1), dq (..., n, n+1) and d2q (..., n, n, n+1).
    """
    y = np.asarray(y, float)
    n = y.shape[-1]
    lam = lz.conformal_factor(y)
    eye = np.eye(n)
    dl = lam[..., None] ** 2 * y                                   # d_k lambda
    d2l = (2 * lam[..., None, None] ** 3 * y[..., :, None] * y[..., None, :]
           + lam[..., None, None] ** 2 * eye)                      # d_kl lambda
    q = lz.from_ball(y)
    # d_k (lambda y_i) = d_k lambda y_i + lambda delta_ik
    dq_sp = dl[..., :, None] * y[..., None, :] + lam[..., None, None] * eye
    dq = np.concatenate([dq_sp, dl[..., :, None]], axis=-1)
    d2q_sp = (d2l[..., :, :, None] * y[..., None, None, :]
              + dl[..., :, None, None] * eye[None, :, :]
              + dl[..., None, :, None] * eye[:, None, :])
    d2q = np.concatenate([d2q_sp, d2l[..., None]], axis=-1)
    return q, dq, d2q


class ExactHyperboloid:
    """Graph of the hyperboloid <p - p0, p - p0> = -r^2 over H^n.

    e^u = -<q, p0> + sqrt(<q, p0>^2 + <p0, p0> + r^2).
    """

    def __init__(self, p0, r):
        p0 = np.asarray(p0, float)
        if r <= 0:
            raise OracleError("radius must be positive")
        if p0.any():
            if lz.inner(p0, p0) >= 0 or p0[-1] <= 0:
                raise OracleError("p0 must be zero or future timelike")
        self.p0 = p0
        self.r = float(r)
        self._P = float(lz.inner(p0, p0)) + self.r ** 2

    def _parts(self, q):
        s = lz.inner(q, self.p0)
        disc = s * s + self._P
        if np.any(disc < 0):
            raise OracleError("hyperboloid is not a radial graph here")
        W = np.sqrt(disc)
        E = -s + W
        if np.any(E <= 0):
            raise OracleError("no positive root of the quadric")
        return s, W, E

    def height(self, q):
        """u(q) for points of H^n."""
        return np.log(self._parts(np.asarray(q, float))[2])

    def __call__(self, y):
        return self.height(lz.from_ball(y))

    def quadric_residual(self, q):
        """<e^u q - p0, e^u q - p0> + r^2."""
        x = np.exp(self.height(q))[..., None] * q - self.p0
        return lz.inner(x, x) + self.r ** 2

    def chart_function(self):
        """The height as a :class:`ChartFunction` with analytic partials."""
        def derivs(y):
            q, dq, d2q = _chart_lift_derivatives(y)
            s, W, E = self._parts(q)
            ds = lz.inner(dq, self.p0[None, :])
            d2s = lz.inner(d2q, self.p0)
            dE = -ds + (s / W)[..., None] * ds
            outer = ds[..., :, None] * ds[..., None, :]
            d2E = (-d2s + (outer + s[..., None, None] * d2s) / W[..., None, None]
                   - (s * s / W ** 3)[..., None, None] * outer)
            du = dE / E[..., None]
            d2u = d2E / E[..., None, None] - du[..., :, None] * du[..., None, :]
            return du, d2u

        return ChartFunction(self, lambda y: derivs(y)[0], lambda y: derivs(y)[1])


def hyperboloid_field(p0, r, grid):
    """Exact hyperboloid heights on a grid whose boundary data is the same
    closed form.  Returns the :class:`ScalarField` and the oracle object."""
    ex = ExactHyperboloid(p0, r)
    vals = np.full(grid.shape, np.nan)
    mask = grid.unknown | grid.known
    vals[mask] = ex(grid.Y[mask])
    return ScalarField(grid, vals), ex


# -- manufactured curvature ----------------------------------------------------

class GraphInducedSpec(CurvatureSpec):
    """H*(rho q) = e^{u*(q)} H_graph(q) / rho for an analytic u*.

    By construction d/drho (rho H*) = 0 and H*(e^{u*} q) = H_graph(q).
    """

    kind = "graph_induced"

    def __init__(self, u_star, r1=0.5, r2=2.0):
        super().__init__(r1, r2)
        self.u_star = u_star

    def _check_range(self, rho):
        if np.any(np.asarray(rho) <= 0):
            raise ValueError("rho must be positive")

    def _graph_factor(self, q):
        y = q[..., :-1] / (1.0 + q[..., -1:])
        v, g, H = self.u_star.frame(y)
        if np.any(np.sum(g * g, axis=-1) >= 1):
            raise OracleError("manufactured solution is not spacelike")
        Hg = graph_arrays(q, v, g, H)["mean_curvature"]
        return np.exp(v) * Hg

    def _value(self, q, rho):
        return self._graph_factor(np.asarray(q, float)) / rho

    def _radial(self, q, lam):
        return np.zeros(np.broadcast_shapes(np.shape(lam), np.shape(q)[:-1]))

    def extend(self):
        return self


def manufactured(u_star, r1=0.5, r2=2.0):
    """Curvature spec for which ``u_star`` solves the Dirichlet problem with
    its own boundary values."""
    return GraphInducedSpec(u_star, r1, r2)


# -- radial ODE ------------------------------------------------------------------

@dataclass
class RadialProfile:
    rho: np.ndarray
    u: np.ndarray
    du: np.ndarray
    u0: float
    sol: object = None

    def __call__(self, rho):
        rho = np.asarray(rho, float)
        out = np.interp(rho, self.rho, self.u)
        if self.sol is not None:
            inner = rho >= self._rho0
            out = np.where(inner, self.sol.sol(np.maximum(rho, self._rho0))[0], out)
            small = ~inner
            if np.any(small):
                out = np.where(small, self.u0 + self._c * rho ** 2, out)
        return out

    def to_csv(self, path):
        np.savetxt(path, np.column_stack([self.rho, self.u, self.du]), delimiter=",",
                   header="rho,u,du", comments="", fmt="%.17g")


def radial_ode_solve(spec, R, n=2, boundary=0.0, center=None, direction=None,
                     rho0=1e-4, rtol=1e-12, atol=1e-13, npts=201):
    """Rotationally symmetric solution on the geodesic ball of radius R.

    Solves  phi' + (n-1) coth(rho) phi = n (e^u H(e^u q(rho)) - sqrt(1 + phi^2)),
    u' = phi / sqrt(1 + phi^2), u'(0) = 0, u(R) = boundary, by shooting on
    u(0).  q(rho) is the point at distance rho from ``center`` along
    ``direction``; H must not depend on the direction for the result to be a
    solution of the full problem.  ``spec`` should be an extended spec.
    """
    if center is None:
        center = np.zeros(n + 1)
        center[-1] = 1.0
    center = lz.check_hpoint(center)
    if direction is None:
        direction = np.zeros(n + 1)
        direction[0] = 1.0
        direction = lz.tangent_projection(center, direction)
        direction = direction / np.sqrt(lz.inner(direction, direction))

    def qpt(rho):
        return np.cosh(rho) * center + np.sinh(rho) * direction

    def Hh(u, rho):
        return float(spec.value(qpt(rho), np.exp(u)))

    def rhs(rho, z):
        u, phi = z
        w = np.sqrt(1 + phi * phi)
        return [phi / w, n * (np.exp(u) * Hh(u, rho) - w) - (n - 1) * phi / np.tanh(rho)]

    def blow(rho, z):
        return 1e6 - abs(z[1])
    blow.terminal = True

    def shoot(u0, dense=False):
        F0 = n * (np.exp(u0) * Hh(u0, 0.0) - 1.0)
        z0 = [u0 + F0 * rho0 ** 2 / (2 * n), F0 * rho0 / n]
        sol = solve_ivp(rhs, (rho0, R), z0, method="DOP853", rtol=rtol, atol=atol,
                        events=blow, dense_output=dense)
        if sol.status == 1:
            # |u'| -> 1 before reaching R
            return np.sign(sol.y[1, -1]) * 1e3, sol, F0
        return sol.y[0, -1] - boundary, sol, F0

    f = lambda u0: shoot(u0)[0]
    a = boundary
    fa = f(a)
    if fa == 0:
        lo = hi = a
    else:
        step = 0.05
        lo = hi = None
        for _ in range(60):
            b = a - np.sign(fa) * step
            fb = f(b)
            if np.sign(fb) != np.sign(fa):
                lo, hi = sorted((a, b))
                break
            a, fa = b, fb
            step *= 1.5
        if lo is None:
            raise OracleError("shooting bracket not found")
    u0 = lo if lo == hi else brentq(f, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=200)
    mis, sol, F0 = shoot(u0, dense=True)
    if sol.status == 1:
        raise OracleError("profile is not spacelike (|u'| -> 1)")
    if abs(mis) > 1e-10:
        raise OracleError(f"shooting mismatch {mis:.3g} above tolerance")
    rho = np.linspace(0.0, R, npts)
    u = np.empty(npts)
    phi = np.empty(npts)
    inner = rho >= rho0
    zz = sol.sol(rho[inner])
    u[inner], phi[inner] = zz
    u[~inner] = u0 + F0 * rho[~inner] ** 2 / (2 * n)
    phi[~inner] = F0 * rho[~inner] / n
    prof = RadialProfile(rho, u, phi / np.sqrt(1 + phi * phi), u0, sol)
    prof._rho0 = rho0
    prof._c = F0 / (2 * n)
    if np.any(np.abs(prof.du) >= 1):
        raise OracleError("profile is not spacelike")
    return prof
