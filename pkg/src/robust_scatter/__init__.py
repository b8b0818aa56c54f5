"""Robust and structured scatter-matrix estimation for elliptical distributions.

The main entry points are :func:`fit_fixed_point` (unconstrained
M-estimates), :func:`fit_chordal_mm` and :func:`fit_graphical_mm`
(concentration constrained to a sparsity pattern) and the MGGD tools in
:mod:`robust_scatter.models`.
"""

from . import errors
from .errors import *  # noqa: F401,F403
from .estimators import (
    FitConfig,
    FitReport,
    fit_chordal_joint_mean,
    fit_chordal_mm,
    fit_direct_cholesky,
    fit_fixed_point,
    fit_graphical_mm,
    fit_l1_cholesky,
    gaussian_graphical_mle,
    sample_second_moment,
    solve_weighted_chordal_ggm,
    solve_weighted_ggm_general,
)
from .graphs import (
    SparsityPattern,
    banded_pattern,
    find_perfect_elimination_order,
    grid_pattern,
    is_chordal,
    is_g_sparse,
)
from .models import (
    covariance_scale,
    huber_rho,
    mggd_log_density,
    mggd_rho,
    mggd_sample,
    neg_log_likelihood,
    tyler_rho,
)
from .spd import geodesic_point, log_det, normalized_sq_frobenius_error

__version__ = "0.1.0"

__all__ = errors.__all__ + [
    "FitConfig",
    "FitReport",
    "fit_chordal_joint_mean",
    "fit_chordal_mm",
    "fit_direct_cholesky",
    "fit_fixed_point",
    "fit_graphical_mm",
    "fit_l1_cholesky",
    "gaussian_graphical_mle",
    "sample_second_moment",
    "solve_weighted_chordal_ggm",
    "solve_weighted_ggm_general",
    "SparsityPattern",
    "banded_pattern",
    "find_perfect_elimination_order",
    "grid_pattern",
    "is_chordal",
    "is_g_sparse",
    "covariance_scale",
    "huber_rho",
    "mggd_log_density",
    "mggd_rho",
    "mggd_sample",
    "neg_log_likelihood",
    "tyler_rho",
    "geodesic_point",
    "log_det",
    "normalized_sq_frobenius_error",
]
