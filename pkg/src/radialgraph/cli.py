"""Command line interface.

Exit codes: 0 success, 2 invalid input, 3 solver did not converge.
"""

import argparse
import os
import sys

import numpy as np

from . import io
from .barriers import certify
from .curvature import ConstantSpec, check_hypotheses
from .graph import curvature_field
from .grid import Grid
from .oracle import ExactHyperboloid, OracleError, radial_ode_solve
from .solver import SolverConfig, SolverError, picard_solve

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 2, 3
DEFAULT_STUDY_G = "hyperboloid:0,0,0.2,1.0"


def _parser():
    p = argparse.ArgumentParser(prog="radialgraph",
                                description="Prescribed mean curvature radial graphs "
                                            "over domains of hyperbolic space.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True, help="key = value run file")
        s.add_argument("--out", default="out", help="output directory")
        s.add_argument("--seed", type=int, default=None,
                       help="sampling seed (overrides the config key 'seed')")
        return s

    s = add("solve", "solve the Dirichlet problem")
    s.add_argument("--mesh", action="store_true", help="also write surface.obj")
    s.add_argument("--theta", type=float, help="admissibility margin theta")
    s = add("check-hypotheses", "check the curvature hypotheses")
    s.add_argument("--theta", type=float, help="theta for the theta-dependent bound")
    add("certify", "sampled admissibility certificate")
    s = add("curvature", "mean curvature of a stored solution")
    s.add_argument("--input", help="u.csv written by 'solve' (default: OUT/u.csv)")
    add("oracle-ode", "rotationally symmetric reference profile")
    add("convergence-study", "grid refinement study against a hyperboloid")
    return p


def _seed(args, cfg):
    return args.seed if args.seed is not None else io._get(cfg, "seed", int)


def _out(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _setup(cfg):
    domain = io.build_domain(cfg)
    spec = io.build_spec(cfg)
    h = io.parse_h(cfg, domain)
    return domain, spec, h


def _chart_boundary(g):
    return g.__call__ if isinstance(g, ExactHyperboloid) else g


def cmd_solve(args, cfg):
    domain, spec, h = _setup(cfg)
    st = io.solver_settings(cfg)
    g = _chart_boundary(io.build_boundary(cfg))
    eps = st["eps"]
    if args.theta is not None:
        if not args.theta > 0:
            raise io.ConfigError("--theta", "must be positive")
        eps = min(eps, args.theta / 2)
    sc = SolverConfig(domain, spec, h, eps=eps, g=g, steps=st["steps"],
                      relaxation=st["relaxation"], tol=st["tol"],
                      max_iter=st["max_iter"], convention=st["convention"],
                      theta=args.theta)
    u, rep = picard_solve(sc)
    io.write_field_csv(_out(args, "u.csv"), u)
    io.write_json(_out(args, "report.json"), rep.to_dict())
    if args.mesh:
        io.write_obj(_out(args, "surface.obj"), u)
    print(f"converged={rep.converged} residual={rep.residual:.3e} "
          f"u in [{rep.u_min:.6g}, {rep.u_max:.6g}]")
    if not rep.converged:
        print(f"error: no convergence, see {_out(args, 'report.json')}", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_check(args, cfg):
    domain, spec, _ = _setup(cfg)
    rep = check_hypotheses(spec, domain, theta=args.theta, seed=_seed(args, cfg))
    d = rep.to_dict()
    io.write_json(_out(args, "hypotheses.json"), d)
    for name in ("thm13_i", "thm13_ii", "thm15_b", "thm15_c"):
        c = d[name]
        if c is None:
            print(f"{name}: not evaluated")
        else:
            print(f"{name}: {'pass' if c['pass'] else 'fail'} (margin {c['margin']:.3e})")
    return EXIT_OK


def cmd_certify(args, cfg):
    domain, spec, _ = _setup(cfg)
    nb = io._get(cfg, "certificate.boundary_samples", int)
    ni = io._get(cfg, "certificate.interior_samples", int)
    if ni < 1000 or nb < 1:
        raise io.ConfigError("certificate.interior_samples", "need >= 1000 interior samples")
    cert = certify(domain, spec, n_boundary=nb, n_interior=ni, seed=_seed(args, cfg))
    io.write_json(_out(args, "certificate.json"), cert.to_dict())
    print(f"valid={cert.valid} strict_valid={cert.strict_valid} theta={cert.theta:.6g}")
    return EXIT_OK


def cmd_curvature(args, cfg):
    domain, _, h = _setup(cfg)
    g = _chart_boundary(io.build_boundary(cfg))
    grid = Grid(domain, h, g)
    u = io.read_field_csv(args.input or os.path.join(args.out, "u.csv"), grid)
    io.write_field_csv(_out(args, "curvature.csv"), curvature_field(u), column="H")
    return EXIT_OK


def cmd_ode(args, cfg):
    if cfg.get("domain.kind", "ball") != "ball":
        raise io.ConfigError("domain.kind", "the radial oracle needs a geodesic ball")
    domain, spec, _ = _setup(cfg)
    raw = cfg.get("boundary.g", "0")
    try:
        b = float(raw)
    except ValueError:
        raise io.ConfigError("boundary.g", "the radial oracle needs constant data") from None
    prof = radial_ode_solve(spec.extend(), domain.R, boundary=b)
    prof.to_csv(_out(args, "profile.csv"))
    print(f"u(0)={prof.u0:.12g}")
    return EXIT_OK


def cmd_study(args, cfg):
    domain = io.build_domain(cfg)
    g = io.build_boundary({**cfg, "boundary.g": cfg.get("boundary.g", DEFAULT_STUDY_G)})
    if not isinstance(g, ExactHyperboloid):
        raise io.ConfigError("boundary.g", "the study needs hyperboloid:p1,p2,p3,r data")
    st = io.solver_settings(cfg)
    r1 = io._get(cfg, "curvature.r1")
    r2 = io._get(cfg, "curvature.r2")
    try:
        levels = [int(s) for s in cfg.get("study.levels", io.KEYS["study.levels"]).split(",")]
    except ValueError:
        raise io.ConfigError("study.levels", "expected a comma list of integers") from None
    spec = ConstantSpec(1.0 / g.r, r1, r2)
    rows = []
    status = EXIT_OK
    for N in levels:
        h = domain.chart_radius / N
        grid = Grid(domain, h, g)
        sc = SolverConfig(domain, spec, h, eps=st["eps"], steps=1, tol=st["tol"],
                          max_iter=st["max_iter"], relaxation=st["relaxation"],
                          convention=st["convention"], grid=grid)
        u, rep = picard_solve(sc)
        if not rep.converged:
            status = EXIT_NONCONVERGED
        err = float(np.max(np.abs(u.unknowns - g(grid.node_y))))
        order = np.log2(rows[-1][1] / err) / np.log2(h_prev / h) if rows else np.nan
        rows.append((h, err, order))
        h_prev = h
        print(f"h={h:.6g} error={err:.3e} order={order:.3f}")
    with open(_out(args, "convergence.csv"), "w") as fh:
        fh.write("h,error,order\n")
        for h, e, o in rows:
            fh.write(f"{h:.17g},{e:.17g},{'' if np.isnan(o) else format(o, '.17g')}\n")
    return status


COMMANDS = {"solve": cmd_solve, "check-hypotheses": cmd_check, "certify": cmd_certify,
            "curvature": cmd_curvature, "oracle-ode": cmd_ode,
            "convergence-study": cmd_study}


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = io.load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except (io.ConfigError, OracleError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


run = main


if __name__ == "__main__":
    sys.exit(main())
