"""Off-grid evaluation of a fitted trend.

A degree-k fit beta on points x extends to the continuous domain as

    f(q) = sum_j phi_j * prod_{l<j} (q - x_l)
         + sum_j theta_j * prod_{l=1..k} (q - x_{j+l}) * [q beyond knot j]

a polynomial part (Newton form anchored at the leading points) plus one
truncated term per knot. phi holds the divided differences of beta at
x_1..x_{k+1}; theta is the scaled (k+1)-st difference of beta divided by
k!, so theta_j is nonzero exactly where the fit changes its k-th
derivative. Evaluation costs O(r + k) per query after sorting, with r
the number of nonzero theta entries.

Both coefficient vectors are extracted by cascaded differencing (apply
the first difference, rescale, repeat) rather than by precomputed
operator rows: the two are algebraically identical, but the cascade
rounds at the size of the intermediate differences, which for a smooth
fit are far below the data scale. Evaluation inverts the cascade, so
summing every stored theta entry reproduces beta at the train points
near machine precision no matter how noisy the entries are. That is why
evaluation never drops sub-tolerance entries on its own: an omitted
theta_j is multiplied by a product of up to k gaps that can reach the
k-th power of the span, which turns a harmless-looking coefficient into
a visible shift far from its knot. Thresholding is reporting (the
support field); callers who want the O(r) sparse evaluation zero out
the entries they deem noise and accept that error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .diffops import check_design


@dataclass(frozen=True)
class FFCoefficients:
    """Coefficients of a fitted trend in the truncated-power form above.

    phi has length k+1 (polynomial part), theta length n-k-1 (one entry
    per interior knot site). support holds the indices j with |theta_j|
    above the knot tolerance: the sites the fit treats as real knots.
    Evaluation sums over every nonzero theta entry, not just the
    support (see the module docstring for why).
    """

    k: int
    train_x: np.ndarray
    phi: np.ndarray
    theta: np.ndarray
    support: np.ndarray

    def __post_init__(self):
        n = self.train_x.size
        if self.phi.size != self.k + 1:
            raise ValueError("phi must have length k+1")
        if self.theta.size != n - self.k - 1:
            raise ValueError("theta must have length n-k-1")


def _apply_diff(v, x, order):
    # D^(x,order) v as a cascade: difference, rescale, repeat.
    out = np.diff(v)
    for m in range(1, order):
        out = np.diff(out * (m / (x[m:] - x[:-m])))
    return out


def tf_coefficients(beta, x, k):
    """Extract the evaluation coefficients of a fitted trend.

    Parameters
    ----------
    beta : array, length n
        Fitted values at the design points.
    x : array, length n
        Strictly increasing design points the fit was computed on.
    k : int >= 0
        Trend order of the fit.

    Returns
    -------
    FFCoefficients

    Notes
    -----
    phi_1 = beta_1 and phi_j for j >= 2 is the order-(j-1) divided
    difference of beta at x_1..x_j, computed from the leading corner
    only. An entry theta_j counts as a knot when it exceeds
    1e-10 * k! * max|beta| * (largest rescaling factor of the
    difference cascade); the tolerance scales with how much the
    extraction can amplify noise in beta.
    """
    beta = np.asarray(beta, dtype=np.float64)
    if beta.ndim != 1 or not np.isfinite(beta).all():
        raise ValueError("beta must be a finite 1d array")
    k = int(k)
    if k < 0:
        raise ValueError("k must be >= 0")
    n = beta.size
    if n <= k + 1:
        raise ValueError("need more than k+1 values")
    x = check_design(x, n)
    phi = np.zeros(k + 1)
    phi[0] = beta[0]
    for j in range(1, k + 1):
        lead = _apply_diff(beta[: j + 1], x[: j + 1], j)
        phi[j] = lead[0] / ((x[j] - x[0]) * math.factorial(j - 1))
    theta = _apply_diff(beta, x, k + 1) / math.factorial(k)
    msf = 1.0
    for m in range(1, k + 1):
        msf = max(msf, float((m / (x[m:] - x[:-m])).max()))
    knot_tol = 1e-10 * math.factorial(k) * float(np.abs(beta).max()) * msf
    support = np.flatnonzero(np.abs(theta) > knot_tol)
    return FFCoefficients(k, x.copy(), phi, theta, support)


def evaluate_fit(coef, x_new):
    """Evaluate the fitted function at arbitrary points.

    Parameters
    ----------
    coef : FFCoefficients
    x_new : array
        Query points in any order; extrapolation beyond the training
        range is permitted (the polynomial part extends globally).

    Returns
    -------
    array of f(x_new), same length and order as x_new.

    Notes
    -----
    Cost is O(r + k) per point after sorting, with r the number of
    nonzero entries of coef.theta; exact zeros are skipped.
    """
    q = np.asarray(x_new, dtype=np.float64)
    if q.ndim != 1:
        raise ValueError("x_new must be a 1d array")
    if not np.isfinite(q).all():
        raise ValueError("x_new must be finite")
    if q.size == 0:
        return np.empty(0)
    order = np.argsort(q, kind="stable")
    knots = np.flatnonzero(coef.theta)
    vals = _eval_ff(
        np.ascontiguousarray(q[order]),
        coef.train_x,
        coef.phi,
        np.ascontiguousarray(coef.theta[knots]),
        np.ascontiguousarray(knots.astype(np.int64)),
        coef.k,
    )
    out = np.empty_like(vals)
    out[order] = vals
    return out


@njit(cache=True)
def _eval_ff(qs, xs, phi, th_vals, th_pos, k):
    # qs sorted ascending; knot j switches on at xs[j+k] (at xs[j+1] when
    # k=0, where the turn-on must be inclusive for the step to land on
    # its own knot; for k >= 1 the product vanishes there anyway).
    mq = qs.size
    out = np.empty(mq)
    r = th_pos.size
    ptr = 0
    for s in range(mq):
        q = qs[s]
        while ptr < r:
            j = th_pos[ptr]
            thr = xs[j + k] if k >= 1 else xs[j + 1]
            if thr <= q:
                ptr += 1
            else:
                break
        val = phi[0]
        p = 1.0
        for l in range(1, k + 1):
            p *= q - xs[l - 1]
            val += phi[l] * p
        for t in range(ptr):
            j = th_pos[t]
            term = th_vals[t]
            for l in range(1, k + 1):
                term *= q - xs[j + l]
            val += term
        out[s] = val
    return out
