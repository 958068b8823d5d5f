"""Run configuration files and output writers."""

import json
import os

import numpy as np

from . import lorentz as lz
from .curvature import ConstantSpec, PowerLawSpec, TabulatedSpec
from .domain import HDomain
from .oracle import ExactHyperboloid
from .grid import ScalarField


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


KEYS = {
    "domain.kind": "ball",
    "domain.R": None,
    "domain.rho_b": None,
    "curvature.kind": "constant",
    "curvature.c": "1.0",
    "curvature.m": "2",
    "curvature.omega": "1.0",
    "curvature.r1": "0.5",
    "curvature.r2": "2.0",
    "curvature.file": None,
    "grid.h": "Rc/64",
    "solver.epsilon": "0.1",
    "solver.tol": "1e-10",
    "solver.max_iter": "200",
    "solver.convention": "geometric",
    "continuation.steps": "5",
    "relaxation": "1.0",
    "boundary.g": "0",
    "certificate.boundary_samples": "64",
    "certificate.interior_samples": "1024",
    "study.levels": "32,64,128",
    "seed": "0",
}


def parse_config(text):
    """Parse ``key = value`` lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", "expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        if k not in KEYS:
            raise ConfigError(k, "unknown key")
        out[k] = v
    return out


def load_config(path):
    with open(path) as fh:
        cfg = parse_config(fh.read())
    cfg["_dir"] = os.path.dirname(os.path.abspath(path))
    return cfg


def _get(cfg, key, conv=float):
    raw = cfg.get(key, KEYS[key])
    if raw is None:
        raise ConfigError(key, "required")
    try:
        return conv(raw)
    except (TypeError, ValueError):
        raise ConfigError(key, f"cannot parse {raw!r}") from None


def _path(cfg, p):
    return p if os.path.isabs(p) else os.path.join(cfg.get("_dir", "."), p)


def build_domain(cfg):
    kind = cfg.get("domain.kind", "ball")
    if kind == "ball":
        R = _get(cfg, "domain.R")
        if R <= 0:
            raise ConfigError("domain.R", "must be positive")
        try:
            return HDomain.ball(R)
        except ValueError as exc:
            raise ConfigError("domain.R", str(exc)) from None
    if kind == "star":
        raw = cfg.get("domain.rho_b")
        if raw is None:
            raise ConfigError("domain.rho_b", "required for star domains")
        if os.path.exists(_path(cfg, raw)):
            tab = np.genfromtxt(_path(cfg, raw), delimiter=",", names=True)
            phi, rad = tab["phi"], tab["rho"]
        else:
            try:
                rad = np.array([float(x) for x in raw.split(",")])
            except ValueError:
                raise ConfigError("domain.rho_b", "expected a file or comma list") from None
            phi = np.linspace(0, 2 * np.pi, len(rad), endpoint=False)
        try:
            return HDomain.star(phi, rad)
        except ValueError as exc:
            raise ConfigError("domain.rho_b", str(exc)) from None
    raise ConfigError("domain.kind", f"unknown kind {kind!r}")


def build_spec(cfg):
    kind = cfg.get("curvature.kind", "constant")
    r1 = _get(cfg, "curvature.r1")
    r2 = _get(cfg, "curvature.r2")
    if not (0 < r1 <= 1 <= r2) or r1 == r2:
        raise ConfigError("curvature.r1", "need 0 < r1 <= 1 <= r2 and r1 != r2")
    try:
        if kind == "constant":
            return ConstantSpec(_get(cfg, "curvature.c"), r1, r2)
        if kind == "power_law":
            return PowerLawSpec(_get(cfg, "curvature.m"), _get(cfg, "curvature.omega"),
                                r1, r2)
        if kind == "tabulated":
            f = cfg.get("curvature.file")
            if f is None:
                raise ConfigError("curvature.file", "required for tabulated curvature")
            return TabulatedSpec.from_csv(_path(cfg, f), r1, r2)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("curvature.kind", str(exc)) from None
    raise ConfigError("curvature.kind", f"unknown kind {kind!r}")


def parse_h(cfg, domain):
    raw = cfg.get("grid.h", KEYS["grid.h"]).replace(" ", "")
    try:
        if raw.startswith("Rc/"):
            h = domain.chart_radius / float(raw[3:])
        else:
            h = float(raw)
    except ValueError:
        raise ConfigError("grid.h", f"cannot parse {raw!r}") from None
    if not h > 0:
        raise ConfigError("grid.h", "must be positive")
    return h


def build_boundary(cfg):
    """Boundary data: a constant, or ``hyperboloid:p1,p2,p3,r``."""
    raw = cfg.get("boundary.g", "0").strip()
    if raw.startswith("hyperboloid:"):
        try:
            vals = [float(x) for x in raw.split(":", 1)[1].split(",")]
            return ExactHyperboloid(vals[:3], vals[3])
        except (ValueError, IndexError):
            raise ConfigError("boundary.g", "expected hyperboloid:p1,p2,p3,r") from None
    try:
        c = float(raw)
    except ValueError:
        raise ConfigError("boundary.g", f"cannot parse {raw!r}") from None
    return None if c == 0 else (lambda y, c=c: np.full(np.shape(y)[:-1], c))


def solver_settings(cfg):
    eps = _get(cfg, "solver.epsilon")
    if not 0 < eps < 1:
        raise ConfigError("solver.epsilon", "must lie in (0, 1)")
    tol = _get(cfg, "solver.tol")
    if not tol > 0:
        raise ConfigError("solver.tol", "must be positive")
    it = _get(cfg, "solver.max_iter", int)
    steps = _get(cfg, "continuation.steps", int)
    if it < 1 or steps < 1:
        raise ConfigError("solver.max_iter", "iteration counts must be positive")
    relax = _get(cfg, "relaxation")
    if not 0 < relax <= 1:
        raise ConfigError("relaxation", "must lie in (0, 1]")
    conv = cfg.get("solver.convention", "geometric")
    if conv not in ("geometric", "comparison"):
        raise ConfigError("solver.convention", f"unknown convention {conv!r}")
    return dict(eps=eps, tol=tol, max_iter=it, steps=steps, relaxation=relax,
                convention=conv)


# -- writers -----------------------------------------------------------------

def write_field_csv(path, field, column="u"):
    g = field.grid
    mask = np.isfinite(field.values)
    ij = np.argwhere(mask)
    y = g.Y[ij[:, 0], ij[:, 1]]
    rows = np.column_stack([ij, y, field.values[mask]])
    with open(path, "w") as fh:
        fh.write(f"i,j,y1,y2,{column}\n")
        for r in rows:
            fh.write(f"{int(r[0])},{int(r[1])},{r[2]:.17g},{r[3]:.17g},{r[4]:.17g}\n")


def read_field_csv(path, grid):
    data = np.genfromtxt(path, delimiter=",", names=True)
    if data.dtype.names is None or "u" not in data.dtype.names:
        raise ConfigError("input", "expected columns i,j,y1,y2,u")
    vals = np.full(grid.shape, np.nan)
    i = data["i"].astype(int)
    j = data["j"].astype(int)
    if i.max() >= grid.shape[0] or j.max() >= grid.shape[1]:
        raise ConfigError("input", "field does not match the configured grid")
    vals[i, j] = data["u"]
    need = grid.unknown | grid.known
    if np.any(np.isnan(vals[need])):
        raise ConfigError("input", "field lacks values at some grid nodes")
    return ScalarField(grid, vals)


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_obj(path, field):
    """Triangulated surface e^u q in ambient coordinates."""
    g = field.grid
    mask = np.isfinite(field.values)
    vid = -np.ones(g.shape, int)
    ij = np.argwhere(mask)
    vid[ij[:, 0], ij[:, 1]] = np.arange(1, len(ij) + 1)
    q = lz.from_ball(g.Y[ij[:, 0], ij[:, 1]])
    pos = np.exp(field.values[mask])[:, None] * q
    with open(path, "w") as fh:
        for p in pos:
            fh.write(f"v {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        a = vid[:-1, :-1]
        b = vid[1:, :-1]
        c = vid[1:, 1:]
        d = vid[:-1, 1:]
        ok = (a > 0) & (b > 0) & (c > 0) & (d > 0)
        for w, x, y, z in zip(a[ok], b[ok], c[ok], d[ok]):
            fh.write(f"f {w} {x} {y}\nf {w} {y} {z}\n")
