"""Estimator wrapper around the solvers, following the fit/predict API."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .admm import SolverOptions, TFProblem, solve_specialized, solve_standard
from .predict import evaluate_fit, tf_coefficients


def _as_column(X, name):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"{name} must have a single feature column")
        X = X[:, 0]
    elif X.ndim != 1:
        raise ValueError(f"{name} must be 1d or a single-column 2d array")
    return X


class TrendFilter(RegressorMixin, BaseEstimator):
    """Piecewise polynomial trend fit with an L1 penalty on derivative
    changes.

    Fits beta minimizing 0.5*||y-beta||^2 + lam*||D^(k+1)beta||_1 on the
    sorted inputs and predicts at new points by evaluating the implied
    piecewise polynomial. k=0 gives a piecewise constant fit, k=1
    piecewise linear, and so on.

    Parameters
    ----------
    k : int, default 2
        Trend order.
    lam : float, default 1.0
        Penalty weight; larger values give fewer derivative changes.
    rho : float or None, default None
        Fixed ADMM penalty; None uses the scaled-lambda default.
    max_iter : int, default 5000
    tol : float, default 1e-6
    method : {"specialized", "standard"}, default "specialized"

    Attributes
    ----------
    x_ : sorted training inputs
    beta_ : fitted values aligned with x_
    result_ : full solver output
    """

    def __init__(self, k=2, lam=1.0, rho=None, max_iter=5000, tol=1e-6,
                 method="specialized"):
        self.k = k
        self.lam = lam
        self.rho = rho
        self.max_iter = max_iter
        self.tol = tol
        self.method = method

    def fit(self, X, y):
        x = _as_column(X, "X")
        y = np.asarray(y, dtype=np.float64)
        if y.shape != x.shape:
            raise ValueError("X and y must have matching lengths")
        if self.method not in ("specialized", "standard"):
            raise ValueError("method must be 'specialized' or 'standard'")
        order = np.argsort(x, kind="stable")
        problem = TFProblem(y[order], x[order], self.k)
        opts = SolverOptions(rho=self.rho, max_iter=self.max_iter,
                             tol=self.tol)
        solver = solve_specialized if self.method == "specialized" else solve_standard
        self.result_ = solver(problem, self.lam, opts)
        self.x_ = problem.x
        self.beta_ = self.result_.beta
        self.coefficients_ = tf_coefficients(self.beta_, self.x_, self.k)
        return self

    def predict(self, X):
        if not hasattr(self, "coefficients_"):
            raise ValueError("this TrendFilter instance is not fitted yet")
        return evaluate_fit(self.coefficients_, _as_column(X, "X"))
