"""Prescribed mean curvature functions on cones over domains of H^n.

A spec evaluates H(x) for cone points x = rho q with q in H^n and rho in
[r1, r2].  The vectorised kernels take (q, rho) directly; the ``eval``
wrapper accepts ambient points and recovers rho = sqrt(-<x, x>).
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import lorentz as lz

STRICT_MARGIN = 1e-12
RADIAL_FD_STEP = 1e-5
GRAD_FD_STEP = 1e-6


class CurvatureError(ValueError):
    """Invalid curvature data or evaluation outside the annulus."""


def cone_split(x):
    """Return (q, rho) with x = rho q; x must be future timelike."""
    x = np.asarray(x, dtype=float)
    m2 = -lz.inner(x, x)
    if np.any(m2 <= 0) or np.any(x[..., -1] <= 0):
        raise CurvatureError("cone point is not future timelike")
    rho = np.sqrt(m2)
    return x / rho[..., None], rho


def _ball(q):
    # unchecked stereographic projection, used on internally built points
    return q[..., :-1] / (1.0 + q[..., -1:])


def reflect(x):
    """r_hat(x) = (x_1, ..., x_n, -x_{n+1}) / ||x|| (euclidean norm)."""
    x = np.asarray(x, dtype=float)
    r = x.copy()
    r[..., -1] *= -1.0
    return r / np.linalg.norm(x, axis=-1, keepdims=True)


def tangential_component(g, x):
    """Remove from g its euclidean component along r_hat(x)."""
    rh = reflect(x)
    return g - np.sum(g * rh, axis=-1, keepdims=True) * rh


class CurvatureSpec:
    """Base class; subclasses implement ``_value`` (and optionally the
    analytic ``_radial`` and ``_grad0``)."""

    kind = "abstract"

    def __init__(self, r1, r2):
        r1 = float(r1)
        r2 = float(r2)
        if not (0 < r1 <= 1 <= r2) or r1 == r2:
            raise CurvatureError("need 0 < r1 <= 1 <= r2 with r1 != r2")
        self.r1 = r1
        self.r2 = r2

    # -- kernels on (q, rho) ------------------------------------------------
    def _value(self, q, rho):
        raise NotImplementedError

    def _radial(self, q, lam):
        # d/dlam (lam H(lam q)) by second-order central differences
        d = RADIAL_FD_STEP * lam
        lo = np.maximum(lam - d, self.r1)
        hi = np.minimum(lam + d, self.r2)
        f = lambda s: s * self._value(q, s)
        return (f(hi) - f(lo)) / (hi - lo)

    def _grad0(self, x):
        # euclidean gradient in R^{n+1} by central differences
        x = np.asarray(x, dtype=float)
        g = np.empty_like(x)
        step = GRAD_FD_STEP * np.linalg.norm(x, axis=-1)
        for k in range(x.shape[-1]):
            e = np.zeros(x.shape[-1])
            e[k] = 1.0
            xp = x + step[..., None] * e
            xm = x - step[..., None] * e
            qp, rp = cone_split(xp)
            qm, rm = cone_split(xm)
            g[..., k] = (self._value_any(qp, rp)
                         - self._value_any(qm, rm)) / (2 * step)
        return g

    def _value_any(self, q, rho):
        # value used inside difference stencils; may step slightly past r1, r2
        return self._value(q, rho)

    def _check_range(self, rho):
        rho = np.asarray(rho, dtype=float)
        tol = 1e-12
        if np.any(rho < self.r1 * (1 - tol)) or np.any(rho > self.r2 * (1 + tol)):
            raise CurvatureError("|x| outside [r1, r2]; use the extension")

    # -- public API ---------------------------------------------------------
    def value(self, q, rho):
        """H(rho q) for q in H^n and rho in [r1, r2]."""
        self._check_range(rho)
        return self._value(np.asarray(q, dtype=float), np.asarray(rho, dtype=float))

    def eval(self, x):
        """H(x) at a cone point x."""
        q, rho = cone_split(x)
        return self.value(q, rho)

    def radial_derivative(self, q, lam):
        """d/dlam (lam H(lam q)) at lam in [r1, r2]."""
        self._check_range(lam)
        return self._radial(np.asarray(q, dtype=float), np.asarray(lam, dtype=float))

    def grad0(self, x):
        """Euclidean gradient of H in R^{n+1}."""
        return self._grad0(np.asarray(x, dtype=float))

    def tangential_gradient_norm(self, x):
        """Euclidean norm of the component of grad0 H tangent to H^n at x/|x|."""
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(tangential_component(self.grad0(x), x), axis=-1)

    def extend(self):
        """Canonical C^1 extension to the whole cone."""
        return ExtendedSpec(self)

    def describe(self):
        return {"kind": self.kind, "r1": self.r1, "r2": self.r2}


class ConstantSpec(CurvatureSpec):
    """H = c."""

    kind = "constant"

    def __init__(self, c, r1=0.5, r2=2.0):
        super().__init__(r1, r2)
        if c <= 0:
            raise CurvatureError("sign-changing or nonpositive H is not supported")
        self.c = float(c)

    def _value(self, q, rho):
        return np.full(np.broadcast_shapes(np.shape(rho), np.shape(q)[:-1]), self.c)

    def _radial(self, q, lam):
        return np.full(np.broadcast_shapes(np.shape(lam), np.shape(q)[:-1]), self.c)

    def _grad0(self, x):
        return np.zeros_like(x)

    def describe(self):
        return dict(super().describe(), c=self.c)


OmegaLike = Union[float, Callable]


class PowerLawSpec(CurvatureSpec):
    """H(x) = omega(x/|x|) / |x|^m.

    Parameters
    ----------
    m : float
        Exponent, m >= 1.
    omega : float or callable
        Positive constant, or a function of points of H^n (last axis n+1).
    omega_grad : callable, optional
        Euclidean gradient of ``x -> omega(x/|x|)`` on the cone.  If absent
        and omega is not constant, grad0 falls back to central differences.
    """

    kind = "power_law"

    def __init__(self, m, omega=1.0, r1=0.5, r2=2.0, omega_grad=None):
        super().__init__(r1, r2)
        if m < 1:
            raise CurvatureError("power law needs m >= 1")
        self.m = float(m)
        self.omega = omega
        self.omega_grad = omega_grad
        self._const = not callable(omega)
        if self._const:
            if omega <= 0:
                raise CurvatureError("omega must be positive")
            self._check_band(np.array([float(omega)]))

    def _check_band(self, w):
        lo = self.r1 ** (self.m - 1)
        hi = self.r2 ** (self.m - 1)
        if np.any(w <= 0):
            raise CurvatureError("omega must be positive")
        if np.any(w <= lo) or np.any(w >= hi):
            raise CurvatureError(
                f"omega outside the band ({lo:.6g}, {hi:.6g})")

    def validate_on(self, q):
        """Check the omega band at sample points q of H^n."""
        self._check_band(np.atleast_1d(self.omega_at(q)))

    def omega_at(self, q):
        q = np.asarray(q, dtype=float)
        if self._const:
            return np.full(q.shape[:-1], float(self.omega))
        return np.asarray(self.omega(q), dtype=float)

    def _value(self, q, rho):
        return self.omega_at(q) * rho ** (-self.m)

    def _radial(self, q, lam):
        return (1.0 - self.m) * self.omega_at(q) * lam ** (-self.m)

    def _grad0(self, x):
        q, rho = cone_split(x)
        # grad |x| = (-x_1, ..., -x_n, x_{n+1}) / |x|
        d_rho = -x / rho[..., None]
        d_rho[..., -1] *= -1.0
        w = self.omega_at(q)
        g = (-self.m * w * rho ** (-self.m - 1))[..., None] * d_rho
        if self._const:
            return g
        if self.omega_grad is not None:
            gw = np.asarray(self.omega_grad(x), dtype=float)
        else:
            gw = np.empty_like(x)
            step = GRAD_FD_STEP * np.linalg.norm(x, axis=-1)
            for k in range(x.shape[-1]):
                e = np.zeros(x.shape[-1])
                e[k] = 1.0
                qp, _ = cone_split(x + step[..., None] * e)
                qm, _ = cone_split(x - step[..., None] * e)
                gw[..., k] = (self.omega_at(qp) - self.omega_at(qm)) / (2 * step)
        return g + (rho ** (-self.m))[..., None] * gw

    def describe(self):
        d = dict(super().describe(), m=self.m)
        d["omega"] = float(self.omega) if self._const else "function"
        return d


class TabulatedSpec(CurvatureSpec):
    """H given on a rectangular (y1, y2, rho) lattice, trilinear interpolation.

    Derivatives are finite differences of the interpolant, so they carry an
    additional O(lattice spacing) error.
    """

    kind = "tabulated"

    def __init__(self, y1, y2, rho, values, r1=None, r2=None):
        y1 = np.asarray(y1, float)
        y2 = np.asarray(y2, float)
        rho = np.asarray(rho, float)
        values = np.asarray(values, float)
        r1 = rho[0] if r1 is None else r1
        r2 = rho[-1] if r2 is None else r2
        super().__init__(r1, r2)
        if rho[0] > self.r1 or rho[-1] < self.r2:
            raise CurvatureError("table does not cover [r1, r2]")
        if np.any(values <= 0):
            raise CurvatureError("sign-changing or nonpositive H is not supported")
        self.axes = (y1, y2, rho)
        self.values = values
        self._interp = RegularGridInterpolator(self.axes, values, method="linear",
                                               bounds_error=True)

    @classmethod
    def from_csv(cls, path, r1=None, r2=None):
        """Read a ``y1,y2,rho,H`` table laid out on a rectangular lattice."""
        data = np.genfromtxt(path, delimiter=",", names=True)
        missing = {"y1", "y2", "rho", "H"} - set(data.dtype.names)
        if missing:
            raise CurvatureError(f"tabulated file lacks columns {sorted(missing)}")
        y1 = np.unique(data["y1"])
        y2 = np.unique(data["y2"])
        rho = np.unique(data["rho"])
        if len(data) != len(y1) * len(y2) * len(rho):
            raise CurvatureError("tabulated file is not a full rectangular lattice")
        vals = np.full((len(y1), len(y2), len(rho)), np.nan)
        i = np.searchsorted(y1, data["y1"])
        j = np.searchsorted(y2, data["y2"])
        k = np.searchsorted(rho, data["rho"])
        vals[i, j, k] = data["H"]
        if np.any(np.isnan(vals)):
            raise CurvatureError("tabulated file has duplicate lattice rows")
        return cls(y1, y2, rho, vals, r1=r1, r2=r2)

    def to_csv(self, path):
        y1, y2, rho = self.axes
        Y1, Y2, R = np.meshgrid(y1, y2, rho, indexing="ij")
        rows = np.column_stack([Y1.ravel(), Y2.ravel(), R.ravel(), self.values.ravel()])
        np.savetxt(path, rows, delimiter=",", header="y1,y2,rho,H", comments="",
                   fmt="%.17g")

    def _value(self, q, rho):
        y = _ball(q)
        pts = np.concatenate([y, np.broadcast_to(rho, y.shape[:-1])[..., None]], axis=-1)
        return self._interp(pts)

    def _radial(self, q, lam):
        lo_tab = self.axes[2][0]
        hi_tab = self.axes[2][-1]
        d = RADIAL_FD_STEP * lam
        lo = np.maximum(lam - d, lo_tab)
        hi = np.minimum(lam + d, hi_tab)
        f = lambda s: s * self._value(q, s)
        return (f(hi) - f(lo)) / (hi - lo)


class ExtendedSpec(CurvatureSpec):
    """Canonical extension of a spec to all rho > 0.

    Inside [r1, r2] it is the base spec.  Outside, rho H_hat(rho q) is the
    affine continuation of rho H(rho q) with slope h_k = d/drho (rho H)|_{r_k}.
    """

    kind = "extended"

    def __init__(self, base):
        self.base = base
        self.r1 = base.r1
        self.r2 = base.r2

    def _check_range(self, rho):
        if np.any(np.asarray(rho) <= 0):
            raise CurvatureError("rho must be positive")

    def _value(self, q, rho):
        b = self.base
        q = np.asarray(q, dtype=float)
        rho = np.asarray(rho, dtype=float)
        shape = np.broadcast_shapes(rho.shape, q.shape[:-1])
        rho = np.broadcast_to(rho, shape)
        qb = np.broadcast_to(q, shape + q.shape[-1:])
        out = np.empty(shape)
        mid = (rho >= b.r1) & (rho <= b.r2)
        lo = rho < b.r1
        hi = rho > b.r2
        if np.any(mid):
            out[mid] = b._value(qb[mid], rho[mid])
        for mask, rk in ((lo, b.r1), (hi, b.r2)):
            if np.any(mask):
                qq = qb[mask]
                rr = rho[mask]
                Hk = b._value(qq, np.full(rr.shape, rk))
                hk = b._radial(qq, np.full(rr.shape, rk))
                out[mask] = (rk / rr) * Hk + (1.0 - rk / rr) * hk
        return out

    def _radial(self, q, lam):
        b = self.base
        q = np.asarray(q, dtype=float)
        lam = np.asarray(lam, dtype=float)
        shape = np.broadcast_shapes(lam.shape, q.shape[:-1])
        lam = np.broadcast_to(lam, shape)
        qb = np.broadcast_to(q, shape + q.shape[-1:])
        lamc = np.clip(lam, b.r1, b.r2)
        return b._radial(qb, lamc)

    def _grad0(self, x):
        return CurvatureSpec._grad0(self, x)

    def describe(self):
        return dict(self.base.describe(), extended=True)


# -- hypothesis checkers ---------------------------------------------------

@dataclass
class Check:
    """Outcome of one strict inequality check."""

    passed: bool
    margin: float
    worst: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        d = {"pass": bool(self.passed), "margin": float(self.margin)}
        if self.worst is not None:
            d["worst"] = float(self.worst)
        d.update(self.extra)
        return d


@dataclass
class HypothesisReport:
    thm13_i: Check
    thm13_ii: Check
    thm15_b: Optional[Check]
    thm15_c: Optional[Check]
    n_boundary: int
    n_interior: int
    n_lambda: int
    theta: Optional[float] = None

    @property
    def thm13(self):
        return self.thm13_i.passed and self.thm13_ii.passed

    @property
    def thm15(self):
        if self.thm15_b is None or self.thm15_c is None:
            return False
        return self.thm13_i.passed and self.thm15_b.passed and self.thm15_c.passed

    def to_dict(self):
        return {
            "thm13_i": self.thm13_i.to_dict(),
            "thm13_ii": self.thm13_ii.to_dict(),
            "thm15_b": None if self.thm15_b is None else self.thm15_b.to_dict(),
            "thm15_c": None if self.thm15_c is None else self.thm15_c.to_dict(),
            "theta": self.theta,
            "samples": {"boundary": self.n_boundary, "interior": self.n_interior,
                        "lambda": self.n_lambda},
        }


def check_hypotheses(spec, domain, theta=None, n_samples=1024, n_lambda=33, seed=0):
    """Evaluate the existence hypotheses on sampled points of the closed domain.

    i)  r1 H(r1 q) - 1 > 0 and 1 - r2 H(r2 q) > 0;
    ii) d/dlam (lam H(lam q)) <= 0 on [r1, r2];
    b)  that derivative < -1 / (r1 sqrt(theta - theta^2/4));
    c)  tangential gradient < (1 - theta) / (n^{3/2} r2^2); the variant with
        denominator n^{3/2} r2 is reported as ``margin_r2`` but does not gate.

    Every inequality is treated as strict: a check passes only when its
    margin exceeds 1e-12.
    """
    if n_samples < 1000:
        raise ValueError("at least 1000 samples are required")
    qb = domain.boundary_points(n_samples)
    qi = domain.interior_points(n_samples, seed=seed)
    q = np.concatenate([qb, qi])
    n = q.shape[-1] - 1
    r1, r2 = spec.r1, spec.r2

    m1 = r1 * spec.value(q, r1) - 1.0
    m2 = 1.0 - r2 * spec.value(q, r2)
    margin_i = float(min(m1.min(), m2.min()))
    ci = Check(margin_i > STRICT_MARGIN, margin_i,
               extra={"margin_r1": float(m1.min()), "margin_r2": float(m2.min())})

    lam = np.linspace(r1, r2, n_lambda)
    rad = spec.radial_derivative(q[:, None, :], lam[None, :])
    worst = float(rad.max())
    cii = Check(-worst > STRICT_MARGIN, -worst, worst=worst)

    cb = cc = None
    if theta is not None:
        if not 0 < theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        bound = -1.0 / (r1 * np.sqrt(theta - theta ** 2 / 4))
        mb = float(bound - worst)
        cb = Check(mb > STRICT_MARGIN, mb, worst=worst, extra={"bound": float(bound)})

        x = lam[None, :, None] * q[:, None, :]
        tg = float(spec.tangential_gradient_norm(x).max())
        b_r2 = (1 - theta) / (n ** 1.5 * r2)
        b_r2sq = (1 - theta) / (n ** 1.5 * r2 ** 2)
        mc = b_r2sq - tg
        cc = Check(mc > STRICT_MARGIN, float(mc), worst=tg,
                   extra={"bound_r2sq": float(b_r2sq), "bound_r2": float(b_r2),
                          "margin_r2": float(b_r2 - tg),
                          "pass_r2": bool(b_r2 - tg > STRICT_MARGIN)})
    return HypothesisReport(ci, cii, cb, cc, len(qb), len(qi), n_lambda, theta)
