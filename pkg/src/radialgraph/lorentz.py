"""Lorentz-Minkowski linear algebra, the hyperboloid model and the Poincare chart.

Vectors of L^{n+1} are plain ndarrays whose last axis has length n+1; the
last component is the timelike one.  Chart points are ndarrays whose last
axis has length n.  Every function broadcasts over leading axes.
"""

from dataclasses import dataclass

import numpy as np

HPOINT_TOL = 1e-12
LIGHTLIKE_RTOL = 1e-14


class GeometryError(ValueError):
    """Raised when an input violates a geometric precondition."""


def _as_array(x):
    return np.asarray(x, dtype=float)


def inner(x, y):
    """Lorentz bilinear form <x, y> = x_1 y_1 + ... + x_n y_n - x_{n+1} y_{n+1}."""
    x = _as_array(x)
    y = _as_array(y)
    if x.shape[-1] != y.shape[-1]:
        raise GeometryError(
            f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")
    return (np.sum(x[..., :-1] * y[..., :-1], axis=-1)
            - x[..., -1] * y[..., -1])


def classify(v):
    """Causal character of a single vector: 'spacelike', 'timelike' or 'lightlike'.

    The zero vector counts as spacelike.  A nonzero vector is lightlike when
    |<v, v>| <= 1e-14 times its squared euclidean norm.
    """
    v = _as_array(v)
    e2 = float(np.dot(v, v))
    if e2 == 0.0:
        return "spacelike"
    q = float(inner(v, v))
    if abs(q) <= LIGHTLIKE_RTOL * e2:
        return "lightlike"
    return "spacelike" if q > 0 else "timelike"


def lorentz_modulus(v):
    """|v| = sqrt(|<v, v>|)."""
    return np.sqrt(np.abs(inner(v, v)))


def check_hpoint(p, tol=HPOINT_TOL):
    """Raise GeometryError unless every p lies on the upper sheet <p,p> = -1."""
    p = _as_array(p)
    # roundoff in <p,p> grows like the square of the timelike component
    scale = np.maximum(1.0, p[..., -1] ** 2)
    bad = (np.abs(inner(p, p) + 1.0) > tol * scale) | (p[..., -1] <= 0)
    if np.any(bad):
        raise GeometryError("point(s) not on the hyperboloid H^n")
    return p


def to_ball(p):
    """Hyperbolic stereographic projection H^n -> B^n."""
    p = check_hpoint(p)
    return p[..., :-1] / (1.0 + p[..., -1:])


def from_ball(y):
    """Inverse of :func:`to_ball`."""
    y = _as_array(y)
    r2 = np.sum(y * y, axis=-1, keepdims=True)
    if np.any(r2 >= 1.0):
        raise GeometryError("chart point outside the unit ball")
    lam = 2.0 / (1.0 - r2)
    return np.concatenate([lam * y, lam - 1.0], axis=-1)


def conformal_factor(y):
    """lambda(y) = 2 / (1 - |y|^2); the Poincare metric is lambda^2 |dy|^2."""
    y = _as_array(y)
    r2 = np.sum(y * y, axis=-1)
    if np.any(r2 >= 1.0):
        raise GeometryError("chart point outside the unit ball")
    return 2.0 / (1.0 - r2)


def log_conformal_gradient(y):
    """Chart gradient of log(lambda), i.e. lambda_i / lambda = lambda * y_i."""
    y = _as_array(y)
    return conformal_factor(y)[..., None] * y


def christoffels(y):
    """Christoffel symbols of the Poincare metric, indexed ``[..., k, i, j]``.

    Gamma^k_ij = a_i delta_jk + a_j delta_ik - a_k delta_ij with
    a = grad(log lambda).
    """
    a = log_conformal_gradient(y)
    n = a.shape[-1]
    eye = np.eye(n)
    return (np.einsum("...i,jk->...kij", a, eye)
            + np.einsum("...j,ik->...kij", a, eye)
            - np.einsum("...k,ij->...kij", a, eye))


def chart_frame(y):
    """Orthonormal tangent frame e_i = lambda^{-1} d(from_ball)/dy_i.

    Returns an array of shape (..., n, n+1) whose rows are the e_i, expressed
    in ambient coordinates at the point from_ball(y).
    """
    y = _as_array(y)
    n = y.shape[-1]
    lam = conformal_factor(y)[..., None, None]
    spatial = np.eye(n) + lam * y[..., :, None] * y[..., None, :]
    timelike = lam[..., 0] * y
    return np.concatenate([spatial, timelike[..., None]], axis=-1)


def lorentz_gram_schmidt(vectors):
    """Re-orthonormalise spacelike vectors (rows) for the Lorentz form."""
    out = []
    for v in _as_array(vectors):
        w = v.copy()
        for e in out:
            w = w - inner(w, e) * e
        norm2 = inner(w, w)
        if norm2 <= 0:
            raise GeometryError("frame vector is not spacelike")
        out.append(w / np.sqrt(norm2))
    return np.array(out)


def tangent_projection(p, v):
    """Lorentz-orthogonal projection of v onto T_p H^n: v + <v, p> p."""
    return v + inner(v, p)[..., None] * p


def geodesic_distance(p, q):
    """Hyperbolic distance arccosh(-<p, q>).

    Near the diagonal arccosh loses half the digits; there the chord form
    2 asinh(|p - q| / 2), with |p - q|^2 = <p - q, p - q>, is used instead.
    """
    c = -inner(p, q)
    dv = np.asarray(p, float) - np.asarray(q, float)
    chord = np.sqrt(np.maximum(inner(dv, dv), 0.0))
    return np.where(c > 2.0, np.arccosh(np.maximum(c, 1.0)), 2.0 * np.arcsinh(0.5 * chord))


def geodesic_point(p, v, s):
    """Point at signed arclength s along the geodesic from p with unit tangent v."""
    p = _as_array(p)
    v = _as_array(v)
    if np.any(np.abs(inner(p, v)) > 1e-10) or np.any(
            np.abs(inner(v, v) - 1.0) > 1e-10):
        raise GeometryError("v is not a unit tangent vector at p")
    s = np.asarray(s, dtype=float)[..., None]
    return np.cosh(s) * p + np.sinh(s) * v


def distance_gradient(q, xi):
    """Unit tangent at q pointing away from xi (gradient of dist(., xi)).

    Undefined at q = xi; there a zero vector is returned.
    """
    q = _as_array(q)
    xi = _as_array(xi)
    t = -tangent_projection(q, xi)
    norm = np.sqrt(np.maximum(inner(t, t), 0.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(norm[..., None] > 0, t / norm[..., None], 0.0)
    return out


@dataclass(frozen=True)
class FrameDerivatives:
    """Value, gradient and Hessian of a function in the frame lambda^{-1} d/dy_i."""

    value: float
    grad: np.ndarray
    hess: np.ndarray

    @property
    def grad_norm_sq(self):
        return float(np.dot(self.grad, self.grad))

    @property
    def laplacian(self):
        return float(np.trace(self.hess))


def frame_components(y, du, d2u):
    """Convert chart partial derivatives to orthonormal-frame components.

    Parameters
    ----------
    y : array_like, shape (..., n)
        Chart points.
    du : array_like, shape (..., n)
        Euclidean partials of the chart function.
    d2u : array_like, shape (..., n, n)
        Euclidean second partials.

    Returns
    -------
    grad, hess : ndarray
        ``grad_i = du_i / lambda`` and
        ``hess_ij = (d2u_ij - Gamma^k_ij du_k) / lambda^2``.
    """
    y = _as_array(y)
    du = _as_array(du)
    d2u = _as_array(d2u)
    lam = conformal_factor(y)
    gam = christoffels(y)
    grad = du / lam[..., None]
    hess = (d2u - np.einsum("...kij,...k->...ij", gam, du)) / lam[..., None, None] ** 2
    hess = 0.5 * (hess + np.swapaxes(hess, -1, -2))
    return grad, hess


def frame_derivatives(y, value, du, d2u):
    """:class:`FrameDerivatives` at a single chart point."""
    grad, hess = frame_components(y, du, d2u)
    return FrameDerivatives(float(value), grad, hess)
