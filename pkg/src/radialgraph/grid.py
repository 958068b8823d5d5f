"""Uniform chart lattices over Lambda = F(Omega) with curved Dirichlet boundary.

Nodes are classified as exterior, unknown (interior) or known (lying on the
boundary, or merged into it because a cut distance fell below
``merge_tol * h``).  Derivatives at unknown nodes are linear in the nodal
values: ``D @ u + c`` where ``c`` collects boundary data.  The operators are
built once per grid.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import lorentz as lz

EXTERIOR, INTERIOR, NEAR_BOUNDARY, KNOWN = 0, 1, 2, 3
OPS = ("d1", "d2", "d11", "d22", "d12")


class GridError(ValueError):
    pass


class _Op:
    """Sparse linear operator stored as COO triplets plus a constant vector."""

    def __init__(self, n):
        self.n = n
        self.rows, self.cols, self.vals = [], [], []
        self.const = np.zeros(n)

    def add(self, rows, cols, vals):
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        vals = np.broadcast_to(np.asarray(vals, float), rows.shape)
        self.rows.append(rows)
        self.cols.append(cols)
        self.vals.append(vals.copy())

    def add_known(self, rows, vals):
        np.add.at(self.const, rows, vals)

    def freeze(self):
        self.rows = np.concatenate(self.rows) if self.rows else np.zeros(0, int)
        self.cols = np.concatenate(self.cols) if self.cols else np.zeros(0, int)
        self.vals = np.concatenate(self.vals) if self.vals else np.zeros(0)
        self.matrix = sp.csr_matrix((self.vals, (self.rows, self.cols)),
                                    shape=(self.n, self.n))

    def apply(self, u):
        return self.matrix @ u + self.const


class Grid:
    """Chart lattice over a domain with Dirichlet data.

    Parameters
    ----------
    domain : HDomain
    h : float
        Lattice spacing in chart units.
    g : callable, optional
        Boundary data as a function of chart points (..., 2); zero if omitted.
        It is evaluated only on the boundary and at known nodes.
    merge_tol : float
        Relative cut distance below which an interior node joins the boundary.
    """

    def __init__(self, domain, h, g=None, merge_tol=1e-3):
        if h <= 0:
            raise GridError("h must be positive")
        self.domain = domain
        self.h = float(h)
        self.g = g if g is not None else (lambda y: np.zeros(np.shape(y)[:-1]))
        self.merge_tol = merge_tol
        lo, hi = domain.bbox()
        yc = domain.yc
        ilo = np.floor((lo - yc) / h).astype(int) - 1
        ihi = np.ceil((hi - yc) / h).astype(int) + 1
        self.axes = [yc[k] + h * np.arange(ilo[k], ihi[k] + 1) for k in range(2)]
        self.shape = (len(self.axes[0]), len(self.axes[1]))
        Y1, Y2 = np.meshgrid(*self.axes, indexing="ij")
        self.Y = np.stack([Y1, Y2], axis=-1)
        self._classify()
        self._build_ops()

    # -- classification ------------------------------------------------------
    def _classify(self):
        h = self.h
        phi = self.domain.levelset(self.Y)
        on_bdry = np.abs(phi) <= 1e-14
        inside = (phi < 0) & ~on_bdry
        n1, n2 = self.shape
        if inside[0, :].any() or inside[-1, :].any() or inside[:, 0].any() or inside[:, -1].any():
            raise GridError("lattice does not enclose the domain")
        dirs = ((1, 0), (-1, 0), (0, 1), (0, -1))
        cut = np.ones(self.shape + (4,))
        merged = np.zeros(self.shape, bool)
        for d, (di, dj) in enumerate(dirs):
            nb = np.zeros(self.shape, bool)
            nb[max(-di, 0):n1 - max(di, 0), max(-dj, 0):n2 - max(dj, 0)] = \
                inside[max(di, 0):n1 + min(di, 0), max(dj, 0):n2 + min(dj, 0)]
            axis = 0 if di else 1
            step = h * (di + dj)
            for i, j in np.argwhere(inside & ~nb):
                s = self.domain.segment_cut(self.Y[i, j], axis, step)
                cut[i, j, d] = s
                if s < self.merge_tol:
                    merged[i, j] = True
        known = on_bdry | merged
        unknown = inside & ~merged
        self.levelset_values = phi
        self.known = known
        self.unknown = unknown
        self.cut = cut
        idx = -np.ones(self.shape, int)
        ij = np.argwhere(unknown)
        idx[ij[:, 0], ij[:, 1]] = np.arange(len(ij))
        self.index = idx
        self.node_ij = ij
        self.node_y = self.Y[ij[:, 0], ij[:, 1]]
        self.n_unknown = len(ij)
        if self.n_unknown == 0:
            raise GridError("grid has no interior nodes")
        cls = np.full(self.shape, EXTERIOR)
        cls[known] = KNOWN
        cls[unknown] = INTERIOR
        self.node_class = cls

    # -- derivative operators ------------------------------------------------
    def _arm(self, d):
        """Arm lengths, neighbour indices and known values in direction d."""
        h = self.h
        di, dj = ((1, 0), (-1, 0), (0, 1), (0, -1))[d]
        ij = self.node_ij
        ni, nj = ij[:, 0] + di, ij[:, 1] + dj
        nb_idx = self.index[ni, nj]
        nb_known = self.known[ni, nj]
        s = self.cut[ij[:, 0], ij[:, 1], d]
        length = np.where(nb_idx >= 0, h, np.where(nb_known, h, s * h))
        pts = self.node_y.copy()
        pts[:, 0 if di else 1] += (di + dj) * length
        val = np.zeros(len(ij))
        needs = nb_idx < 0
        if needs.any():
            val[needs] = self.g(pts[needs])
        return length, nb_idx, val

    def _build_ops(self):
        N = self.n_unknown
        h = self.h
        rows = np.arange(N)
        ops = {k: _Op(N) for k in OPS}
        arms = [self._arm(d) for d in range(4)]
        self.arms = np.stack([a[0] for a in arms], axis=1)
        near = np.any((np.stack([a[1] for a in arms], axis=1) < 0), axis=1)

        for axis, (p, m) in enumerate(((0, 1), (2, 3))):
            hp, ip, vp = arms[p]
            hm, im, vm = arms[m]
            first = ops["d1" if axis == 0 else "d2"]
            second = ops["d11" if axis == 0 else "d22"]
            cp = hm / (hp * (hp + hm))
            cm = -hp / (hm * (hp + hm))
            c0 = (hp - hm) / (hp * hm)
            sp_ = 2.0 / (hp * (hp + hm))
            sm_ = 2.0 / (hm * (hp + hm))
            s0 = -2.0 / (hp * hm)
            for op, a, b, c in ((first, cp, cm, c0), (second, sp_, sm_, s0)):
                op.add(rows, rows, c)
                for coef, nb, val in ((a, ip, vp), (b, im, vm)):
                    k = nb >= 0
                    op.add(rows[k], nb[k], coef[k])
                    op.add_known(rows[~k], coef[~k] * val[~k])

        self._build_cross(ops["d12"])
        for op in ops.values():
            op.freeze()
        self.ops = ops

        cls = self.node_class
        cls[self.node_ij[near, 0], self.node_ij[near, 1]] = NEAR_BOUNDARY
        self.near_boundary = near
        # nodes whose 3x3 neighbourhood is entirely unknown
        ii, jj = self.node_ij[:, 0], self.node_ij[:, 1]
        reg = np.ones(N, bool)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                reg &= self.unknown[ii + di, jj + dj]
        self.regular = reg

    def _lookup(self, i, j):
        """(index, known value, usable) for lattice nodes (i, j)."""
        i = np.asarray(i)
        j = np.asarray(j)
        n1, n2 = self.shape
        ok = (i >= 0) & (i < n1) & (j >= 0) & (j < n2)
        ic = np.clip(i, 0, n1 - 1)
        jc = np.clip(j, 0, n2 - 1)
        idx = np.where(ok, self.index[ic, jc], -1)
        kn = ok & self.known[ic, jc]
        val = np.zeros(i.shape)
        if kn.any():
            val[kn] = self.g(self.Y[ic[kn], jc[kn]])
        return idx, val, (idx >= 0) | kn

    def _build_cross(self, op):
        """Mixed derivative: 4-corner formula, else opposite-quadrant pair
        (second order), else one quadrant (first order), else dropped."""
        h = self.h
        N = self.n_unknown
        ii, jj = self.node_ij[:, 0], self.node_ij[:, 1]
        rows = np.arange(N)
        # full arms along the axes are needed for quadrant formulas
        full = np.isclose(self.arms, h, rtol=0, atol=1e-14 * h)
        look = {}
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di or dj:
                    look[(di, dj)] = self._lookup(ii + di, jj + dj)
        corners = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
        use4 = np.all([look[c][2] for c in corners], axis=0)
        dir_of = {(1, 0): 0, (-1, 0): 1, (0, 1): 2, (0, -1): 3}

        def quad_ok(sx, sy):
            return (look[(sx, sy)][2] & look[(sx, 0)][2] & look[(0, sy)][2]
                    & full[:, dir_of[(sx, 0)]] & full[:, dir_of[(0, sy)]])

        qok = {c: quad_ok(*c) for c in corners}
        pair_a = qok[(1, 1)] & qok[(-1, -1)]
        pair_b = qok[(1, -1)] & qok[(-1, 1)]
        mode = np.full(N, -1)
        mode[use4] = 4
        mode[(mode < 0) & pair_a] = 2
        mode[(mode < 0) & pair_b] = 3
        for k, c in enumerate(corners):
            mode[(mode < 0) & qok[c]] = 10 + k
        self.cross_mode = mode
        self.cross_dropped = int(np.sum(mode < 0))

        def put(sel, key, coef):
            idx, val, _ = look[key] if key != (0, 0) else (rows, np.zeros(N), None)
            k = sel & (idx >= 0)
            op.add(rows[k], idx[k], np.full(k.sum(), coef))
            kk = sel & (idx < 0)
            op.add_known(rows[kk], coef * val[kk])

        sel = mode == 4
        for (sx, sy) in corners:
            put(sel, (sx, sy), sx * sy / (4 * h * h))

        def quadrant(sel, sx, sy, w):
            c = sx * sy * w / (h * h)
            put(sel, (sx, sy), c)
            put(sel, (sx, 0), -c)
            put(sel, (0, sy), -c)
            op.add(rows[sel], rows[sel], np.full(sel.sum(), c))

        for m, pair in ((2, ((1, 1), (-1, -1))), (3, ((1, -1), (-1, 1)))):
            sel = mode == m
            for c in pair:
                quadrant(sel, *c, 0.5)
        for k, c in enumerate(corners):
            quadrant(mode == 10 + k, *c, 1.0)

    # -- helpers -------------------------------------------------------------
    @property
    def lam(self):
        return lz.conformal_factor(self.node_y)

    def node_points(self):
        """Unknown nodes lifted to H^2."""
        return lz.from_ball(self.node_y)

    def known_values(self):
        out = np.zeros(self.shape)
        if self.known.any():
            out[self.known] = self.g(self.Y[self.known])
        return out

    def describe(self):
        return {"h": self.h, "shape": list(self.shape), "unknowns": self.n_unknown,
                "near_boundary": int(self.near_boundary.sum()),
                "known_nodes": int(self.known.sum()),
                "cross_dropped": self.cross_dropped}


@dataclass
class Bundle:
    """Chart and frame derivatives at every unknown node."""

    y: np.ndarray
    value: np.ndarray
    du: np.ndarray
    d2u: np.ndarray
    grad: np.ndarray
    hess: np.ndarray

    @property
    def grad_norm_sq(self):
        return np.sum(self.grad ** 2, axis=-1)


class ScalarField:
    """Grid function: values at unknown and known nodes, NaN elsewhere."""

    def __init__(self, grid, values):
        values = np.asarray(values, float)
        if values.shape != grid.shape:
            raise GridError("values do not match the grid shape")
        self.grid = grid
        self.values = values

    @classmethod
    def from_unknowns(cls, grid, u):
        vals = np.full(grid.shape, np.nan)
        vals[grid.known] = grid.known_values()[grid.known]
        vals[grid.node_ij[:, 0], grid.node_ij[:, 1]] = u
        return cls(grid, vals)

    @classmethod
    def from_function(cls, grid, f):
        """Sample f (a function of chart points) at the unknown nodes."""
        return cls.from_unknowns(grid, np.asarray(f(grid.node_y), float)
                                 * np.ones(grid.n_unknown))

    @classmethod
    def constant(cls, grid, c):
        return cls.from_unknowns(grid, np.full(grid.n_unknown, float(c)))

    @property
    def unknowns(self):
        ij = self.grid.node_ij
        return self.values[ij[:, 0], ij[:, 1]]

    def bundle(self):
        g = self.grid
        u = self.unknowns
        d1 = g.ops["d1"].apply(u)
        d2 = g.ops["d2"].apply(u)
        d11 = g.ops["d11"].apply(u)
        d22 = g.ops["d22"].apply(u)
        d12 = g.ops["d12"].apply(u)
        du = np.stack([d1, d2], axis=-1)
        d2u = np.stack([np.stack([d11, d12], -1), np.stack([d12, d22], -1)], -2)
        grad, hess = lz.frame_components(g.node_y, du, d2u)
        return Bundle(g.node_y, u, du, d2u, grad, hess)


def covariant_bundle(field, node):
    """:class:`FrameDerivatives` of a grid function at lattice node (i, j)."""
    grid = field.grid
    i, j = node
    if not (0 <= i < grid.shape[0] and 0 <= j < grid.shape[1]):
        raise GridError(f"node {node} outside the lattice")
    k = grid.index[i, j]
    if k < 0:
        raise GridError(f"node {node} is not an interior node")
    b = field.bundle()
    return lz.FrameDerivatives(float(b.value[k]), b.grad[k], b.hess[k])
