"""Variant solvers: extra penalties and constraints on top of the base fit.

All five variants keep the specialized splitting for the trend penalty
(alpha = Dk beta, fused-lasso DP update) and add a second block:

  sparse            gamma = beta, soft threshold         (+ lam2*||beta||_1)
  isotonic          gamma = beta, isotonic projection    (beta nondecreasing)
  nearly isotonic   gamma = beta, one-sided DP           (+ lam2*sum (drops)+)
  outliers          gamma = z,   soft threshold          (+ lam2*||z||_1, loss on y-beta-z)
  mixed trends      r parallel alpha blocks, one per order

Each extra block contributes a diagonal term to the beta system, so the
bandwidth never grows and iterations stay O(n) (O(nr) for mixed). The
outlier variant's joint (beta, z) update is reduced by a Schur complement
to the same banded solve.

Per-block rho follows the base policy applied blockwise: identity blocks
get rho = lam of their own penalty, falling back to the trend block's rho
when that lam is zero so the iteration stays well posed. An explicit rho
in the options overrides every block.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .admm import SolverOptions, default_rho, _row_matvec, _row_rmatvec
from .banded import BandedMatrix, band_cholesky, gram_plus_ridge, _cho_solve_inplace
from .diffops import check_design, _rows_to_banded, _scaled_diff_rows
from .proxops import (
    isotonic_regression, nearly_isotonic_dp, soft_threshold,
    _dp_clip_centered, _pava,
)


@dataclass
class ExtensionFit:
    """Terminal state of a variant solve.

    beta is the fitted trend. z is the outlier vector (outlier variant
    only, None otherwise). alpha/u are the trend block's auxiliary and
    scaled dual variables (lists of arrays for the mixed variant);
    gamma/v belong to the second block when one exists. Traces as in
    FitResult.
    """

    beta: np.ndarray
    z: np.ndarray | None
    alpha: object
    gamma: np.ndarray | None
    u: object
    v: np.ndarray | None
    iterations: int
    converged: bool
    criterion_trace: np.ndarray = field(default_factory=lambda: np.empty(0))
    residual_trace: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))


def _init_flag(opts):
    # Variant solvers have no warm-start path: their block variables do not
    # line up with a FitResult from the base solver.
    if opts.init == "data":
        return True
    if opts.init == "zeros":
        return False
    raise ValueError("variant solvers accept init='data' or init='zeros' only")


def _check_inputs(y, x, k):
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError("y must be a 1d array")
    if not np.isfinite(y).all():
        raise ValueError("y must be finite")
    if k < 0:
        raise ValueError("k must be >= 0")
    if y.size <= k + 1:
        raise ValueError("need more than k+1 observations")
    if x is None:
        x = np.arange(1.0, y.size + 1)
    else:
        x = check_design(x, y.size)
    return y, x, int(k)


def _block_rhos(opts, x, k, lam1, lam2):
    """Per-block rho: the base policy for the trend block, rho2 = lam2 for
    the identity block, each falling back to the other when its own lam
    is zero. An explicit opts.rho overrides both blocks."""
    if opts.rho is not None:
        return opts.rho, opts.rho
    rho1 = default_rho(lam1, x, k) if lam1 > 0 else None
    rho2 = lam2 if lam2 > 0 else None
    if rho1 is None:
        rho1 = rho2
    if rho2 is None:
        rho2 = rho1
    return rho1, rho2


def _trend_system(y, x, k, rho1, ridge):
    rows = np.ascontiguousarray(_scaled_diff_rows(k, x))
    S = gram_plus_ridge(_rows_to_banded(rows, y.size), rho1, ridge)
    return rows, band_cholesky(S)


def solve_sparse_tf(y, x, k, lambda1, lambda2, opts=None):
    """Trend filtering with an extra lasso penalty on the levels.

    minimize 0.5*||y-beta||^2 + lambda1*||D^(k+1)beta||_1 + lambda2*||beta||_1

    Returns an ExtensionFit; gamma is the soft-thresholded copy of beta
    (exactly sparse). lambda1=0 drops the trend term and the remaining
    elementwise problem is solved exactly by one soft threshold.
    """
    opts = opts if opts is not None else SolverOptions()
    data_init = _init_flag(opts)
    y, x, k = _check_inputs(y, x, k)
    if lambda1 < 0 or lambda2 < 0:
        raise ValueError("penalties must be >= 0")
    if lambda1 == 0 and lambda2 == 0:
        return _exact_ext(y, k)
    if lambda1 == 0:
        return _exact_prox_ext(y, x, k, soft_threshold(y, lambda2))
    rho1, rho2 = _block_rhos(opts, x, k, lambda1, lambda2)
    rows, factor = _trend_system(y, x, k, rho1, 1.0 + rho2)
    out = _two_block_loop(
        rows, factor.bands, y, lambda1, rho1, lambda2, rho2,
        opts.max_iter, opts.tol, 0, data_init, opts.record_trace,
    )
    return _package_ext(out, opts.record_trace, z_from_gamma=False)


def solve_isotonic_tf(y, x, k, lam, opts=None):
    """Trend filtering constrained to a nondecreasing fit.

    minimize 0.5*||y-beta||^2 + lam*||D^(k+1)beta||_1  s.t. beta nondecreasing

    The gamma block is an exact isotonic projection each iteration, and the
    returned beta is the final projection of the consensus iterate, so the
    output is exactly monotone. lam=0 reduces to plain isotonic regression,
    solved exactly in one projection.
    """
    opts = opts if opts is not None else SolverOptions()
    data_init = _init_flag(opts)
    y, x, k = _check_inputs(y, x, k)
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if lam == 0:
        beta = isotonic_regression(y)
        return ExtensionFit(beta, None, beta.copy(), beta.copy(),
                            np.zeros(y.size), np.zeros(y.size), 0, True)
    rho1, rho2 = _block_rhos(opts, x, k, lam, 0.0)
    rows, factor = _trend_system(y, x, k, rho1, 1.0 + rho2)
    out = _two_block_loop(
        rows, factor.bands, y, lam, rho1, 0.0, rho2,
        opts.max_iter, opts.tol, 1, data_init, opts.record_trace,
    )
    fit = _package_ext(out, opts.record_trace, z_from_gamma=False)
    fit.beta = isotonic_regression(fit.beta)
    return fit


def solve_nearly_isotonic_tf(y, x, k, lambda1, lambda2, opts=None):
    """Trend filtering with a penalty on downward movements.

    minimize 0.5*||y-beta||^2 + lambda1*||D^(k+1)beta||_1
             + lambda2*sum max(beta[i]-beta[i+1], 0)

    lambda2 -> inf recovers the isotonic-constrained fit. lambda1=0 is a
    plain nearly-isotonic regression, solved exactly by one DP pass.
    """
    opts = opts if opts is not None else SolverOptions()
    data_init = _init_flag(opts)
    y, x, k = _check_inputs(y, x, k)
    if lambda1 < 0 or lambda2 < 0:
        raise ValueError("penalties must be >= 0")
    if lambda1 == 0 and lambda2 == 0:
        return _exact_ext(y, k)
    if lambda1 == 0:
        return _exact_prox_ext(y, x, k, nearly_isotonic_dp(y, lambda2))
    rho1, rho2 = _block_rhos(opts, x, k, lambda1, lambda2)
    rows, factor = _trend_system(y, x, k, rho1, 1.0 + rho2)
    out = _two_block_loop(
        rows, factor.bands, y, lambda1, rho1, lambda2, rho2,
        opts.max_iter, opts.tol, 2, data_init, opts.record_trace,
    )
    return _package_ext(out, opts.record_trace, z_from_gamma=False)


def solve_outlier_tf(y, x, k, lambda1, lambda2, opts=None):
    """Trend filtering with a sparse additive outlier component.

    minimize over (beta, z):
        0.5*||y-beta-z||^2 + lambda1*||D^(k+1)beta||_1 + lambda2*||z||_1

    The reported z is the soft-thresholded block variable, so it is exactly
    sparse; its nonzero entries mark detected outliers.
    """
    opts = opts if opts is not None else SolverOptions()
    data_init = _init_flag(opts)
    y, x, k = _check_inputs(y, x, k)
    if lambda1 < 0 or lambda2 < 0:
        raise ValueError("penalties must be >= 0")
    if lambda1 == 0 and lambda2 == 0:
        fit = _exact_ext(y, k)
        fit.z = np.zeros(y.size)
        return fit
    rho1, rho2 = _block_rhos(opts, x, k, lambda1, lambda2)
    # Eliminating z from the joint (beta, z) quadratic leaves a banded
    # system with ridge rho2/(1+rho2) in place of the sparse variant's 1+rho2.
    rows, factor = _trend_system(y, x, k, rho1, rho2 / (1.0 + rho2))
    out = _outlier_loop(
        rows, factor.bands, y, lambda1, rho1, lambda2, rho2,
        opts.max_iter, opts.tol, data_init, opts.record_trace,
    )
    return _package_ext(out, opts.record_trace, z_from_gamma=True)


def solve_mixed_tf(y, x, orders, lambdas, opts=None):
    """Trend filtering with several difference orders penalized at once.

    minimize 0.5*||y-beta||^2 + sum_l lambda_l*||D^(k_l+1)beta||_1

    One fused-lasso block per order; the beta system has bandwidth
    max(orders) and an iteration costs O(n*r). Blocks with a zero penalty
    add nothing to the objective, so they are dropped from the iteration
    and reported at their consensus fixed point (alpha = D beta, u = 0).
    """
    opts = opts if opts is not None else SolverOptions()
    data_init = _init_flag(opts)
    orders = [int(k) for k in np.atleast_1d(orders)]
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=np.float64))
    if len(orders) < 1 or len(orders) != lambdas.size:
        raise ValueError("need one lambda per order")
    if (lambdas < 0).any():
        raise ValueError("penalties must be >= 0")
    y, x, _ = _check_inputs(y, x, max(orders))
    n = y.size
    if lambdas.max() == 0:
        return _exact_ext_mixed(y, orders)
    r = len(orders)
    active = [l for l in range(r) if lambdas[l] > 0]
    kmax = max(orders[l] for l in active)
    ra = len(active)
    rows_pad = np.zeros((ra, n, kmax + 1))
    rhos = np.empty(ra)
    S_bands = np.zeros((2 * kmax + 1, n))
    for j, l in enumerate(active):
        kl = orders[l]
        rows_l = _scaled_diff_rows(kl, x)
        rows_pad[j, : rows_l.shape[0], : kl + 1] = rows_l
        if opts.rho is not None:
            rhos[j] = opts.rho
        else:
            rhos[j] = default_rho(float(lambdas[l]), x, kl)
        G = gram_plus_ridge(_rows_to_banded(rows_l, n), rhos[j], 0.0)
        S_bands[kmax - kl : kmax + kl + 1, :] += G.bands
    S_bands[kmax, :] += 1.0
    factor = band_cholesky(BandedMatrix(n, n, kmax, kmax, S_bands))
    widths = np.array([orders[l] + 1 for l in active], dtype=np.int64)
    out = _mixed_loop(
        rows_pad, widths, factor.bands, y, lambdas[np.array(active)], rhos,
        opts.max_iter, opts.tol, data_init, opts.record_trace,
    )
    beta, alpha_pad, u_pad, iters, converged, crit, resid = out
    alphas = [None] * r
    us = [None] * r
    for j, l in enumerate(active):
        alphas[l] = alpha_pad[j, : n - orders[l]].copy()
        us[l] = u_pad[j, : n - orders[l]].copy()
    for l in range(r):
        if alphas[l] is None:
            rows_l = np.ascontiguousarray(_scaled_diff_rows(orders[l], x))
            alphas[l] = _row_matvec(rows_l, beta)
            us[l] = np.zeros(n - orders[l])
    if opts.record_trace:
        return ExtensionFit(beta, None, alphas, None, us, None, iters,
                            bool(converged), crit[:iters].copy(), resid[:iters].copy())
    return ExtensionFit(beta, None, alphas, None, us, None, iters, bool(converged))


def _exact_ext(y, k):
    m = y.size - k
    return ExtensionFit(y.copy(), None, np.zeros(m), y.copy(),
                        np.zeros(m), np.zeros(y.size), 0, True)


def _exact_prox_ext(y, x, k, beta):
    # Exact one-shot solution when the trend penalty is absent: beta comes
    # from the second block's prox applied to y, alpha sits at its
    # consensus fixed point.
    rows = np.ascontiguousarray(_scaled_diff_rows(k, x))
    alpha = _row_matvec(rows, beta)
    return ExtensionFit(beta, None, alpha, beta.copy(),
                        np.zeros(alpha.size), np.zeros(y.size), 0, True)


def _exact_ext_mixed(y, orders):
    alphas = [np.zeros(y.size - kl) for kl in orders]
    us = [np.zeros(y.size - kl) for kl in orders]
    return ExtensionFit(y.copy(), None, alphas, None, us, None, 0, True)


def _package_ext(out, record, z_from_gamma):
    beta, alpha, u, gamma, v, iters, converged, crit, resid = out
    z = gamma.copy() if z_from_gamma else None
    fit = ExtensionFit(beta, z, alpha, gamma, u, v, iters, bool(converged))
    if record:
        fit.criterion_trace = crit[:iters].copy()
        fit.residual_trace = resid[:iters].copy()
    return fit


@njit(cache=True)
def _two_block_loop(op_rows, cb, y, lam1, rho1, lam2, rho2, max_iter, tol,
                    gmode, data_init, record):
    # gamma block: gmode 0 soft threshold, 1 isotonic projection,
    # 2 one-sided (nearly isotonic) DP
    n = y.size
    m = op_rows.shape[0]
    sqrt_m = np.sqrt(m)
    sqrt_n = np.sqrt(n)
    ynorm = 0.0
    for j in range(n):
        ynorm += y[j] * y[j]
    ynorm = np.sqrt(ynorm)
    th1 = lam1 / rho1
    th2 = lam2 / rho2
    tr = max_iter if record else 0
    crit = np.empty(tr)
    resid = np.empty((tr, 2))
    iters = 0
    converged = False
    if data_init:
        alpha = _row_matvec(op_rows, y)
        gamma = y.copy()
    else:
        alpha = np.zeros(m)
        gamma = np.zeros(n)
    u = np.zeros(m)
    v = np.zeros(n)
    beta = y.copy()
    tmp = np.empty(m)
    gin = np.empty(n)
    gnew = np.empty(n)
    for it in range(max_iter):
        for i in range(m):
            tmp[i] = alpha[i] + u[i]
        rhs = _row_rmatvec(op_rows, tmp, n)
        for j in range(n):
            rhs[j] = y[j] + rho1 * rhs[j] + rho2 * (gamma[j] + v[j])
        _cho_solve_inplace(cb, rhs)
        beta = rhs
        w = _row_matvec(op_rows, beta)
        for i in range(m):
            tmp[i] = w[i] - u[i]
        alpha_new = _dp_clip_centered(tmp, th1, th1)
        for j in range(n):
            gin[j] = beta[j] - v[j]
        if gmode == 0:
            for j in range(n):
                z = gin[j]
                if z > th2:
                    gnew[j] = z - th2
                elif z < -th2:
                    gnew[j] = z + th2
                else:
                    gnew[j] = 0.0
        elif gmode == 1:
            _pava(gin, gnew)
        else:
            gnew = _dp_clip_centered(gin, th2, 0.0)
        prim1 = 0.0
        an2 = 0.0
        for i in range(m):
            d = alpha_new[i] - w[i]
            u[i] += d
            prim1 += d * d
            an2 += alpha_new[i] * alpha_new[i]
        prim1 = np.sqrt(prim1) / (sqrt_m * (1.0 + np.sqrt(an2)))
        prim2 = 0.0
        gn2 = 0.0
        dual2 = 0.0
        for j in range(n):
            d = gnew[j] - beta[j]
            v[j] += d
            prim2 += d * d
            gn2 += gnew[j] * gnew[j]
            dg = gnew[j] - gamma[j]
            dual2 += dg * dg
        prim2 = np.sqrt(prim2) / (sqrt_n * (1.0 + np.sqrt(gn2)))
        for i in range(m):
            tmp[i] = alpha_new[i] - alpha[i]
        dv = _row_rmatvec(op_rows, tmp, n)
        dn2 = 0.0
        for j in range(n):
            dn2 += dv[j] * dv[j]
        dual1 = rho1 * np.sqrt(dn2) / (1.0 + ynorm)
        dual2 = rho2 * np.sqrt(dual2) / (1.0 + ynorm)
        alpha = alpha_new
        for j in range(n):
            gamma[j] = gnew[j]
        iters = it + 1
        if record:
            loss = 0.0
            for j in range(n):
                d = y[j] - beta[j]
                loss += d * d
            pen1 = 0.0
            for i in range(m - 1):
                pen1 += abs(w[i + 1] - w[i])
            pen2 = 0.0
            if gmode == 0:
                for j in range(n):
                    pen2 += abs(beta[j])
            elif gmode == 2:
                for j in range(n - 1):
                    d = beta[j] - beta[j + 1]
                    if d > 0.0:
                        pen2 += d
            crit[it] = 0.5 * loss + lam1 * pen1 + lam2 * pen2
            p = prim1 if prim1 > prim2 else prim2
            d2 = dual1 if dual1 > dual2 else dual2
            resid[it, 0] = p
            resid[it, 1] = d2
        if prim1 <= tol and prim2 <= tol and dual1 <= tol and dual2 <= tol:
            converged = True
            break
    return beta, alpha, u, gamma, v, iters, converged, crit, resid


@njit(cache=True)
def _outlier_loop(op_rows, cb, y, lam1, rho1, lam2, rho2, max_iter, tol,
                  data_init, record):
    n = y.size
    m = op_rows.shape[0]
    sqrt_m = np.sqrt(m)
    sqrt_n = np.sqrt(n)
    ynorm = 0.0
    for j in range(n):
        ynorm += y[j] * y[j]
    ynorm = np.sqrt(ynorm)
    th1 = lam1 / rho1
    th2 = lam2 / rho2
    c2 = 1.0 + rho2
    tr = max_iter if record else 0
    crit = np.empty(tr)
    resid = np.empty((tr, 2))
    iters = 0
    converged = False
    if data_init:
        alpha = _row_matvec(op_rows, y)
    else:
        alpha = np.zeros(m)
    u = np.zeros(m)
    gamma = np.zeros(n)
    v = np.zeros(n)
    beta = y.copy()
    z = np.zeros(n)
    tmp = np.empty(m)
    b2 = np.empty(n)
    gnew = np.empty(n)
    for it in range(max_iter):
        for i in range(m):
            tmp[i] = alpha[i] + u[i]
        rhs = _row_rmatvec(op_rows, tmp, n)
        for j in range(n):
            b2[j] = y[j] + rho2 * (gamma[j] + v[j])
            rhs[j] = y[j] + rho1 * rhs[j] - b2[j] / c2
        _cho_solve_inplace(cb, rhs)
        beta = rhs
        for j in range(n):
            z[j] = (b2[j] - beta[j]) / c2
        w = _row_matvec(op_rows, beta)
        for i in range(m):
            tmp[i] = w[i] - u[i]
        alpha_new = _dp_clip_centered(tmp, th1, th1)
        for j in range(n):
            g = z[j] - v[j]
            if g > th2:
                gnew[j] = g - th2
            elif g < -th2:
                gnew[j] = g + th2
            else:
                gnew[j] = 0.0
        prim1 = 0.0
        an2 = 0.0
        for i in range(m):
            d = alpha_new[i] - w[i]
            u[i] += d
            prim1 += d * d
            an2 += alpha_new[i] * alpha_new[i]
        prim1 = np.sqrt(prim1) / (sqrt_m * (1.0 + np.sqrt(an2)))
        prim2 = 0.0
        gn2 = 0.0
        dual2 = 0.0
        for j in range(n):
            d = gnew[j] - z[j]
            v[j] += d
            prim2 += d * d
            gn2 += gnew[j] * gnew[j]
            dg = gnew[j] - gamma[j]
            dual2 += dg * dg
        prim2 = np.sqrt(prim2) / (sqrt_n * (1.0 + np.sqrt(gn2)))
        for i in range(m):
            tmp[i] = alpha_new[i] - alpha[i]
        dvv = _row_rmatvec(op_rows, tmp, n)
        dn2 = 0.0
        for j in range(n):
            dn2 += dvv[j] * dvv[j]
        dual1 = rho1 * np.sqrt(dn2) / (1.0 + ynorm)
        dual2 = rho2 * np.sqrt(dual2) / (1.0 + ynorm)
        alpha = alpha_new
        for j in range(n):
            gamma[j] = gnew[j]
        iters = it + 1
        if record:
            loss = 0.0
            pen2 = 0.0
            for j in range(n):
                d = y[j] - beta[j] - z[j]
                loss += d * d
                pen2 += abs(z[j])
            pen1 = 0.0
            for i in range(m - 1):
                pen1 += abs(w[i + 1] - w[i])
            crit[it] = 0.5 * loss + lam1 * pen1 + lam2 * pen2
            p = prim1 if prim1 > prim2 else prim2
            d2 = dual1 if dual1 > dual2 else dual2
            resid[it, 0] = p
            resid[it, 1] = d2
        if prim1 <= tol and prim2 <= tol and dual1 <= tol and dual2 <= tol:
            converged = True
            break
    return beta, alpha, u, gamma, v, iters, converged, crit, resid


@njit(cache=True)
def _mixed_loop(rows_pad, widths, cb, y, lambdas, rhos, max_iter, tol,
                data_init, record):
    r, n, wmax = rows_pad.shape
    ynorm = 0.0
    for j in range(n):
        ynorm += y[j] * y[j]
    ynorm = np.sqrt(ynorm)
    tr = max_iter if record else 0
    crit = np.empty(tr)
    resid = np.empty((tr, 2))
    iters = 0
    converged = False
    alpha = np.zeros((r, n))
    u = np.zeros((r, n))
    if data_init:
        for l in range(r):
            m_l = n - (widths[l] - 1)
            rows_l = rows_pad[l, :m_l, : widths[l]]
            a = _row_matvec(rows_l, y)
            for i in range(m_l):
                alpha[l, i] = a[i]
    beta = y.copy()
    for it in range(max_iter):
        rhs = np.empty(n)
        for j in range(n):
            rhs[j] = y[j]
        for l in range(r):
            m_l = n - (widths[l] - 1)
            rows_l = rows_pad[l, :m_l, : widths[l]]
            tmp = np.empty(m_l)
            for i in range(m_l):
                tmp[i] = alpha[l, i] + u[l, i]
            contrib = _row_rmatvec(rows_l, tmp, n)
            for j in range(n):
                rhs[j] += rhos[l] * contrib[j]
        _cho_solve_inplace(cb, rhs)
        beta = rhs
        prim = 0.0
        dual = 0.0
        pen_tr = 0.0
        for l in range(r):
            m_l = n - (widths[l] - 1)
            rows_l = rows_pad[l, :m_l, : widths[l]]
            w = _row_matvec(rows_l, beta)
            tmp = np.empty(m_l)
            for i in range(m_l):
                tmp[i] = w[i] - u[l, i]
            a_new = _dp_clip_centered(tmp, lambdas[l] / rhos[l], lambdas[l] / rhos[l])
            p2 = 0.0
            an2 = 0.0
            d2 = 0.0
            for i in range(m_l):
                d = a_new[i] - w[i]
                u[l, i] += d
                p2 += d * d
                an2 += a_new[i] * a_new[i]
                tmp[i] = a_new[i] - alpha[l, i]
                alpha[l, i] = a_new[i]
            dv = _row_rmatvec(rows_l, tmp, n)
            dn2 = 0.0
            for j in range(n):
                dn2 += dv[j] * dv[j]
            p = np.sqrt(p2) / (np.sqrt(m_l) * (1.0 + np.sqrt(an2)))
            d = rhos[l] * np.sqrt(dn2) / (1.0 + ynorm)
            if p > prim:
                prim = p
            if d > dual:
                dual = d
            if record:
                for i in range(m_l - 1):
                    pen_tr += lambdas[l] * abs(w[i + 1] - w[i])
        iters = it + 1
        if record:
            loss = 0.0
            for j in range(n):
                dd = y[j] - beta[j]
                loss += dd * dd
            crit[it] = 0.5 * loss + pen_tr
            resid[it, 0] = prim
            resid[it, 1] = dual
        if prim <= tol and dual <= tol:
            converged = True
            break
    return beta, alpha, u, iters, converged, crit, resid
