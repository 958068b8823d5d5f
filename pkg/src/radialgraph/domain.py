"""Bounded domains of H^n (n = 2) described through the Poincare chart."""

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import lorentz as lz

NORTH_POLE = np.array([0.0, 0.0, 1.0])


class DomainError(ValueError):
    pass


class HDomain:
    """Star-shaped domain Omega of H^2 about ``center``.

    Use :meth:`ball` or :meth:`star` to construct.  The chart region
    Lambda = F(Omega) is described by a level-set function that is negative
    inside, zero on the boundary and positive outside.
    """

    def __init__(self, kind, center, R=None, rho_b=None):
        self.kind = kind
        self.center = lz.check_hpoint(np.asarray(center, dtype=float))
        self.yc = lz.to_ball(self.center)
        self.n = len(self.center) - 1
        if self.n != 2:
            raise DomainError("domains are implemented for n = 2 only")
        self.R = R
        self._rho_b = rho_b
        if kind == "ball":
            if R is None or R <= 0:
                raise DomainError("geodesic ball needs R > 0")
            self.disk_center, self.disk_radius = _ball_disk(self.yc, R)
            if np.linalg.norm(self.disk_center) + self.disk_radius >= 1:
                raise DomainError("ball leaves the chart")
        elif kind == "star":
            if np.any(rho_b(np.linspace(0, 2 * np.pi, 721)) <= 0):
                raise DomainError("boundary radius must be positive")
        else:
            raise DomainError(f"unknown domain kind {kind!r}")

    @classmethod
    def ball(cls, R, center=NORTH_POLE):
        """Geodesic ball of radius R."""
        return cls("ball", center, R=float(R))

    @classmethod
    def star(cls, phi, radius, center=NORTH_POLE):
        """Star-shaped chart region |y - yc| < rho_b(angle).

        ``phi``, ``radius`` tabulate rho_b over one period; a periodic cubic
        spline interpolates them (C^2).
        """
        phi = np.asarray(phi, float)
        radius = np.asarray(radius, float)
        if np.any(radius <= 0):
            raise DomainError("boundary radius must be positive")
        if phi[0] != 0.0:
            raise DomainError("table must start at angle 0")
        if not np.isclose(phi[-1], 2 * np.pi):
            phi = np.append(phi, 2 * np.pi)
            radius = np.append(radius, radius[0])
        else:
            radius = radius.copy()
            radius[-1] = radius[0]
        spline = CubicSpline(phi, radius, bc_type="periodic")
        rho_b = lambda a: spline(np.mod(a, 2 * np.pi))
        dom = cls("star", center, rho_b=rho_b)
        dom._spline = spline
        a = np.linspace(0, 2 * np.pi, 721)
        yb = dom.yc + rho_b(a)[:, None] * np.column_stack([np.cos(a), np.sin(a)])
        if np.any(np.linalg.norm(yb, axis=1) >= 1):
            raise DomainError("boundary leaves the chart")
        return dom

    # -- chart description ---------------------------------------------------
    def rho_b(self, angle):
        """Chart radius of the boundary in direction ``angle`` about yc."""
        angle = np.asarray(angle, float)
        if self.kind == "star":
            return self._rho_b(angle)
        # ray from yc meets the disk boundary
        d = np.stack([np.cos(angle), np.sin(angle)], axis=-1)
        w = self.yc - self.disk_center
        b = d @ w
        c = w @ w - self.disk_radius ** 2
        return -b + np.sqrt(b * b - c)

    def levelset(self, y):
        """Negative inside Lambda, zero on its boundary, positive outside."""
        y = np.asarray(y, float)
        if self.kind == "ball":
            return np.linalg.norm(y - self.disk_center, axis=-1) - self.disk_radius
        d = y - self.yc
        return np.hypot(d[..., 0], d[..., 1]) - self.rho_b(np.arctan2(d[..., 1], d[..., 0]))

    def bbox(self):
        if self.kind == "ball":
            c, r = self.disk_center, self.disk_radius
            return c - r, c + r
        yb = self.boundary_chart(2048)
        return yb.min(axis=0), yb.max(axis=0)

    @property
    def chart_radius(self):
        """Largest chart distance from yc to the boundary."""
        if self.kind == "ball" and np.allclose(self.yc, 0):
            return self.disk_radius
        return float(self.rho_b(np.linspace(0, 2 * np.pi, 2048, endpoint=False)).max())

    @property
    def circumradius(self):
        """Largest geodesic distance from the center to the boundary."""
        if self.kind == "ball":
            return self.R
        return float(lz.geodesic_distance(self.center, self.boundary_points(2048)).max())

    def segment_cut(self, y0, axis, step):
        """Fraction s in (0, 1] where the segment y0 -> y0 + step e_axis leaves Lambda."""
        e = np.zeros(2)
        e[axis] = step
        if self.kind == "ball":
            w = y0 - self.disk_center
            a = step * step
            b = 2 * w[axis] * step
            c = w @ w - self.disk_radius ** 2
            disc = max(b * b - 4 * a * c, 0.0)
            s = (-b + np.sqrt(disc)) / (2 * a)
            return float(min(max(s, 0.0), 1.0))
        f = lambda s: float(self.levelset(y0 + s * e))
        if f(1.0) <= 0:
            return 1.0
        return brentq(f, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)

    # -- samples -------------------------------------------------------------
    def boundary_chart(self, count):
        a = np.linspace(0, 2 * np.pi, count, endpoint=False)
        if self.kind == "ball":
            return self.disk_center + self.disk_radius * np.column_stack([np.cos(a), np.sin(a)])
        return self.yc + self.rho_b(a)[:, None] * np.column_stack([np.cos(a), np.sin(a)])

    def boundary_points(self, count):
        """``count`` boundary points of Omega on H^2 (equally spaced chart angles)."""
        return lz.from_ball(self.boundary_chart(count))

    def interior_chart(self, count, seed=0):
        rng = np.random.default_rng(seed)
        lo, hi = self.bbox()
        out = []
        have = 0
        while have < count:
            y = rng.uniform(lo, hi, size=(2 * count, 2))
            y = y[self.levelset(y) < 0]
            out.append(y)
            have += len(y)
        return np.concatenate(out)[:count]

    def interior_points(self, count, seed=0):
        """Seeded uniform chart samples of Omega lifted to H^2."""
        return lz.from_ball(self.interior_chart(count, seed=seed))

    def outward_normal(self, q):
        """Outward unit normal to the boundary at q (ambient coordinates)."""
        q = lz.check_hpoint(np.asarray(q, float))
        y = lz.to_ball(q)
        if self.kind == "ball":
            # gradient of dist(., center) points outward everywhere
            return lz.distance_gradient(q, self.center)
        h = 1e-6
        g = np.stack([(self.levelset(y + h * e) - self.levelset(y - h * e)) / (2 * h)
                      for e in np.eye(2)], axis=-1)
        frame = lz.chart_frame(y)
        v = np.einsum("...i,...ia->...a", g, frame)
        return v / np.sqrt(lz.inner(v, v))[..., None]

    def describe(self):
        d = {"kind": self.kind, "center": self.center.tolist()}
        if self.kind == "ball":
            d["R"] = self.R
        return d


def _ball_disk(yc, R):
    """Euclidean disk (center, radius) of the geodesic ball B_R(F^{-1}(yc))."""
    a = float(np.linalg.norm(yc))
    if a == 0:
        return np.zeros(2), float(np.tanh(R / 2))
    u = yc / a
    d0 = 2 * np.arctanh(a)
    t1 = np.tanh((d0 + R) / 2)
    t2 = np.tanh((d0 - R) / 2)
    return 0.5 * (t1 + t2) * u, 0.5 * (t1 - t2)
