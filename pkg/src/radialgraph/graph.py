"""Radial graphs Sigma(u) = {e^u q} over domains of H^n.

Tensor quantities are computed in the orthonormal frame obtained by pushing
the chart frame lambda^{-1} d/dy_i forward to the hyperboloid.  All kernels
broadcast over leading axes so that a whole grid is processed in one call.
"""

from dataclasses import dataclass

import numpy as np

from . import lorentz as lz


class SpacelikeError(ValueError):
    """Raised when |grad u| >= 1 at a point where a spacelike graph is needed."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class GraphPointData:
    """Ambient and intrinsic data of Sigma(u) above one point q."""

    position: np.ndarray
    tangent_basis: np.ndarray
    metric: np.ndarray
    inverse_metric: np.ndarray
    gauss: np.ndarray
    second_form: np.ndarray
    mean_curvature: float


def tangent_frame(q, orthonormalize=True):
    """Orthonormal tangent frame at q in H^n, rows in ambient coordinates."""
    q = lz.check_hpoint(q)
    e = lz.chart_frame(lz.to_ball(q))
    if orthonormalize:
        e = lz.lorentz_gram_schmidt(e)
    return e


def graph_arrays(q, value, grad, hess, frame=None):
    """Broadcast kernel behind :func:`graph_point`.

    Parameters
    ----------
    q : ndarray, shape (..., n+1)
        Points of H^n.
    value, grad, hess : ndarray
        u, frame gradient (..., n) and frame Hessian (..., n, n).
    frame : ndarray, optional
        Tangent frames (..., n, n+1); the chart frame is used if omitted.

    Returns
    -------
    dict
        position, tangent_basis, metric, inverse_metric, gauss,
        second_form and mean_curvature arrays.
    """
    q = np.asarray(q, dtype=float)
    value = np.asarray(value, dtype=float)
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    n = grad.shape[-1]
    if frame is None:
        frame = lz.chart_frame(lz.to_ball(q))
    v = np.sum(grad * grad, axis=-1)
    if np.any(v >= 1.0):
        bad = np.argwhere(np.atleast_1d(v >= 1.0))
        raise SpacelikeError("graph not spacelike (|grad u| >= 1)",
                             index=tuple(bad[0]) if bad.size else None)
    eu = np.exp(value)
    root = np.sqrt(1.0 - v)
    eye = np.eye(n)
    uu = grad[..., :, None] * grad[..., None, :]

    position = eu[..., None] * q
    E = eu[..., None, None] * (frame + grad[..., :, None] * q[..., None, :])
    metric = (eu ** 2)[..., None, None] * (eye - uu)
    inverse_metric = (eu ** -2)[..., None, None] * (
        eye + uu / (1.0 - v)[..., None, None])
    gauss = (q + np.einsum("...i,...ia->...a", grad, frame)) / root[..., None]
    second_form = (eu / root)[..., None, None] * (-eye + uu - hess)
    H = -np.einsum("...ij,...ij->...", inverse_metric, second_form) / n
    return dict(position=position, tangent_basis=E, metric=metric,
                inverse_metric=inverse_metric, gauss=gauss,
                second_form=second_form, mean_curvature=H)


def graph_point(q, frame_data):
    """Embedding, fundamental forms, Gauss map and H of Sigma(u) above q.

    Parameters
    ----------
    q : array_like, shape (n+1,)
        Point of H^n.
    frame_data : FrameDerivatives
        u and its covariant derivatives at q in the chart frame.
    """
    q = lz.check_hpoint(q)
    frame = tangent_frame(q)
    d = graph_arrays(q, frame_data.value, frame_data.grad, frame_data.hess,
                     frame=frame)
    return GraphPointData(d["position"], d["tangent_basis"], d["metric"],
                          d["inverse_metric"], d["gauss"], d["second_form"],
                          float(d["mean_curvature"]))


def mean_curvature(data):
    """H = -(1/n) sum_ij g^ij sigma_ij."""
    n = data.metric.shape[-1]
    return float(-np.einsum("ij,ij->", data.inverse_metric, data.second_form) / n)


def mean_curvature_closed(value, grad, hess):
    """H from the scalar identity of the graph equation.

    n H e^u (1 - v)^{3/2} = n (1 - v) + sum_ij ((1 - v) delta_ij + u_i u_j) u_ij,
    with v = |grad u|^2.  Used as a second, independent evaluation route.
    """
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    n = grad.shape[-1]
    v = np.sum(grad * grad, axis=-1)
    lead = quasilinear_part(grad, hess)
    return (n * (1.0 - v) + lead) / (n * np.exp(value) * (1.0 - v) ** 1.5)


def quasilinear_part(grad, hess):
    """sum_ij ((1 - |grad u|^2) delta_ij + u_i u_j) u_ij."""
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    v = np.sum(grad * grad, axis=-1)
    tr = np.trace(hess, axis1=-2, axis2=-1)
    return (1.0 - v) * tr + np.einsum("...i,...ij,...j->...", grad, hess, grad)


def curvature_field(field):
    """Mean curvature of Sigma(u) at the interior nodes of a grid function.

    Parameters
    ----------
    field : ScalarField
        Grid function; derivatives come from its finite-difference bundle.

    Returns
    -------
    ScalarField
        H at interior nodes, NaN elsewhere.

    Raises
    ------
    SpacelikeError
        If |grad u| >= 1 at some interior node; ``index`` holds its (i, j).
    """
    from .grid import ScalarField

    grid = field.grid
    bundle = field.bundle()
    v = np.sum(bundle.grad ** 2, axis=-1)
    if np.any(v >= 1.0):
        k = int(np.argmax(v))
        raise SpacelikeError("graph not spacelike at node "
                             f"{grid.node_ij[k].tolist()}",
                             index=tuple(grid.node_ij[k]))
    q = lz.from_ball(grid.node_y)
    d = graph_arrays(q, field.unknowns, bundle.grad, bundle.hess)
    out = np.full(grid.shape, np.nan)
    out[grid.node_ij[:, 0], grid.node_ij[:, 1]] = d["mean_curvature"]
    return ScalarField(grid, out)
