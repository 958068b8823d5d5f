"""Grid refinement against a closed-form hyperboloid.

The hyperboloid <x - p0, x - p0> = -1 with p0 = (0, 0, 0.2) has constant
mean curvature 1, so it solves the Dirichlet problem for H = 1 with its own
boundary heights.  The sup error should fall by about 4 per halving of h.

Run:  python demos/hyperboloid_convergence.py
"""

import numpy as np

from radialgraph.curvature import ConstantSpec
from radialgraph.domain import HDomain
from radialgraph.oracle import ExactHyperboloid
from radialgraph.solver import SolverConfig, picard_solve

dom = HDomain.ball(0.8)
exact = ExactHyperboloid((0.0, 0.0, 0.2), 1.0)
prev = None
print(f"{'N':>5} {'h':>10} {'sup error':>12} {'order':>7}")
for N in (16, 32, 64, 128):
    h = dom.chart_radius / N
    u, rep = picard_solve(SolverConfig(dom, ConstantSpec(1.0), h, g=exact, steps=1))
    err = np.max(np.abs(u.unknowns - exact(u.grid.node_y)))
    order = "" if prev is None else f"{np.log2(prev / err):.3f}"
    print(f"{N:5d} {h:10.5f} {err:12.3e} {order:>7}")
    prev = err
