"""Spacelike radial graphs of prescribed mean curvature in Lorentz-Minkowski space."""

from .lorentz import (inner, classify, to_ball, from_ball, conformal_factor,
                      christoffels, geodesic_distance, geodesic_point,
                      FrameDerivatives, GeometryError)
from .graph import graph_point, mean_curvature, curvature_field, GraphPointData
from .curvature import (ConstantSpec, PowerLawSpec, TabulatedSpec, ExtendedSpec,
                        check_hypotheses, HypothesisReport)
from .domain import HDomain
from .grid import Grid, ScalarField, covariant_bundle
from .solver import (m_eps, assemble_operator, linear_solve, picard_solve,
                     nonlinear_residual, diagnostics, SolverConfig, SolveReport)

__version__ = "0.1.0"
