"""Numerical laboratory for the sharp Sobolev-quotient functional with Neumann data."""

from .alpha0 import Alpha0Estimate, analytic_lower_bound, estimate_alpha0, solve_nehari_cubic
from .domain import (
    DiscreteDomain,
    Field,
    build_box_grid,
    build_radial_ball_grid,
    gradient_sq_integral,
    integrate,
    lp_norm,
)
from .functionals import (
    FunctionalReport,
    Params,
    beta,
    delta,
    delta_prime,
    el_residual,
    f_g_profile,
    gamma,
    h1_norm_sq,
    nehari_t,
    phi_alpha,
    psi_alpha,
    psi_gradient,
)
from .instanton import InstantonSpec, compute_S, instanton_value, sample_instanton
from .minimize import MinimizeConfig, MinimizeResult, concentration_diagnostics, minimize_psi

__version__ = "0.1.0"
