"""Local invariant manifolds of state-dependent delay equations.

Computes center-stable, center-unstable, and center manifolds of
x'(t) = g(x(t - r(x(t)))) at the zero equilibrium on a Chebyshev
collocation grid, and cross-checks the center manifold obtained by
intersecting the center-stable and center-unstable graphs against a
directly computed one.
"""

from .segments import (GridSpec, Segment, differentiate, from_flat,
                       from_function, make_grid, norm_C, norm_C1, seg_eval,
                       zero_segment)
from .models import DelayModel, d_e_f_zero, df_eval, f_eval, taylor_f
from .semiflow import flow_map, integrate, project_to_xf, xf_defect
from .spectral import (SpectralDecomposition, build_chart, decompose,
                       polish_root)
from .graphs import GraphMap, solve_graph
from .intersection import (ImplicitSystem, G_eval, G_jacobian_23,
                           build_system, build_wc, dwc, lift, solve_g,
                           wc_alternative)
from .verify import DefectReport, run_suite
from .config import RunConfig, load_config

__all__ = [
    "GridSpec", "Segment", "make_grid", "seg_eval", "differentiate",
    "norm_C", "norm_C1", "from_flat", "from_function", "zero_segment",
    "DelayModel", "f_eval", "df_eval", "d_e_f_zero", "taylor_f",
    "integrate", "flow_map", "project_to_xf", "xf_defect",
    "SpectralDecomposition", "decompose", "build_chart", "polish_root",
    "GraphMap", "solve_graph",
    "ImplicitSystem", "build_system", "build_wc", "solve_g", "lift",
    "G_eval", "G_jacobian_23", "dwc", "wc_alternative",
    "DefectReport", "run_suite", "RunConfig", "load_config",
]
