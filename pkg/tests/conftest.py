import numpy as np
import pytest

import trendfilter as tf


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    """Touch every jit-compiled path once so timed tests see steady state."""
    rng = np.random.default_rng(0)
    y = rng.standard_normal(30)
    x = np.sort(rng.uniform(0.0, 1.0, 30))
    tf.fused_lasso_dp(y, 0.5)
    tf.nearly_isotonic_dp(y, 0.5)
    tf.isotonic_regression(y)
    for k in (0, 1, 2):
        p = tf.TFProblem(y, x, k)
        fit = tf.solve_specialized(p, 0.05, tf.SolverOptions(max_iter=50, record_trace=True))
        tf.solve_standard(p, 0.05, tf.SolverOptions(max_iter=50))
        tf.solve_dual_pg(p, 0.05, iters=50)
        tf.kkt_residual(p, fit.beta, 0.05)
        tf.lambda_max(y, x, k)
        coef = tf.tf_coefficients(fit.beta, x, k)
        tf.evaluate_fit(coef, x)
    tf.solve_sparse_tf(y, x, 1, 0.05, 0.01, tf.SolverOptions(max_iter=50))
    tf.solve_isotonic_tf(y, x, 1, 0.05, tf.SolverOptions(max_iter=50))
    tf.solve_nearly_isotonic_tf(y, x, 1, 0.05, 0.01, tf.SolverOptions(max_iter=50))
    tf.solve_outlier_tf(y, x, 1, 0.05, 0.5, tf.SolverOptions(max_iter=50))
    tf.solve_mixed_tf(y, x, [0, 2], [0.05, 0.01], tf.SolverOptions(max_iter=50))
