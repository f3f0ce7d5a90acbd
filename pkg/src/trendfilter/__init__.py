"""Trend filtering: piecewise polynomial fits with an L1 penalty on
derivative changes.

The core solver is an ADMM iteration whose inner steps are a banded
Cholesky solve and an exact fused lasso subproblem, giving O(n) work per
iteration at any trend order; it handles arbitrary (uneven) input
spacings. Around it: a lambda path driver with warm starts, variants
with extra penalties (sparsity, outliers, monotonicity, mixed orders),
off-grid prediction, a reference dual solver for convergence checks,
and a CLI (``trendfilter --help``).
"""

from .admm import (
    FitResult,
    PathResult,
    SolverOptions,
    TFProblem,
    criterion,
    default_rho,
    kkt_residual,
    solve_path,
    solve_specialized,
    solve_standard,
)
from .banded import (
    BandedCholeskyFactor,
    BandedMatrix,
    NotPositiveDefinite,
    band_cholesky,
    band_matvec,
    band_solve,
    band_transpose_matvec,
    gram_plus_ridge,
)
from .baselines import auto_step, solve_dual_pg
from .diffops import (
    check_design,
    diff_op,
    diff_op_general,
    lambda_max,
    scaled_diff_op,
)
from .estimator import TrendFilter
from .extensions import (
    ExtensionFit,
    solve_isotonic_tf,
    solve_mixed_tf,
    solve_nearly_isotonic_tf,
    solve_outlier_tf,
    solve_sparse_tf,
)
from .predict import FFCoefficients, evaluate_fit, tf_coefficients
from .proxops import (
    fused_lasso_dp,
    isotonic_regression,
    nearly_isotonic_dp,
    soft_threshold,
)
from .signals import SignalSpec, make_design, make_signal, simulate

__version__ = "0.1.0"

__all__ = [
    "BandedCholeskyFactor",
    "BandedMatrix",
    "ExtensionFit",
    "FFCoefficients",
    "FitResult",
    "NotPositiveDefinite",
    "PathResult",
    "SignalSpec",
    "SolverOptions",
    "TFProblem",
    "TrendFilter",
    "auto_step",
    "band_cholesky",
    "band_matvec",
    "band_solve",
    "band_transpose_matvec",
    "check_design",
    "criterion",
    "default_rho",
    "diff_op",
    "diff_op_general",
    "evaluate_fit",
    "fused_lasso_dp",
    "gram_plus_ridge",
    "isotonic_regression",
    "kkt_residual",
    "lambda_max",
    "make_design",
    "make_signal",
    "nearly_isotonic_dp",
    "scaled_diff_op",
    "simulate",
    "soft_threshold",
    "solve_dual_pg",
    "solve_isotonic_tf",
    "solve_mixed_tf",
    "solve_nearly_isotonic_tf",
    "solve_outlier_tf",
    "solve_path",
    "solve_sparse_tf",
    "solve_specialized",
    "solve_standard",
    "tf_coefficients",
    "__version__",
]
