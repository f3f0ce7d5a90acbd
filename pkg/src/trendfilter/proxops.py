"""Exact linear-time proximal solvers used inside the ADMM updates.

The workhorse is a dynamic program over the derivative of the forward
objective, which is piecewise linear with one knot added per sample. The
derivative is stored as a sorted knot list with slope/intercept increments
and two moving end pointers, so each forward step clips away knots that were
appended earlier and the total work is O(n) amortized.

The same kernel solves both the fused lasso (clip the derivative to
[-t, t]) and nearly-isotonic regression (clip to [-t, 0]): the clip bounds
are the two one-sided penalty rates on downward and upward jumps.
"""

from __future__ import annotations

import numpy as np
from numba import njit


def soft_threshold(v, t):
    """Coordinate-wise soft thresholding sign(v)*max(|v|-t, 0).

    Parameters
    ----------
    v : array
    t : float >= 0

    Returns
    -------
    array of the same shape.
    """
    if t < 0:
        raise ValueError("threshold must be >= 0")
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def fused_lasso_dp(z, t):
    """Exact minimizer of 0.5*||z - a||^2 + t * sum|a[i+1] - a[i]|.

    Parameters
    ----------
    z : array, length >= 1
    t : float >= 0

    Returns
    -------
    array, the unique minimizer, computed in O(n).
    """
    if t < 0:
        raise ValueError("penalty must be >= 0")
    z = np.asarray(z, dtype=np.float64)
    if z.size == 0:
        raise ValueError("need at least one sample")
    if t == 0 or z.size == 1:
        return z.copy()
    return _dp_clip_centered(z, t, t)


def nearly_isotonic_dp(z, t):
    """Exact minimizer of 0.5*||z - a||^2 + t * sum max(a[i] - a[i+1], 0).

    Penalizes only downward jumps; t -> inf recovers isotonic regression.

    Parameters
    ----------
    z : array, length >= 1
    t : float >= 0

    Returns
    -------
    array, the unique minimizer, computed in O(n).
    """
    if t < 0:
        raise ValueError("penalty must be >= 0")
    z = np.asarray(z, dtype=np.float64)
    if z.size == 0:
        raise ValueError("need at least one sample")
    if t == 0 or z.size == 1:
        return z.copy()
    return _dp_clip_centered(z, t, 0.0)


def isotonic_regression(z):
    """Euclidean projection of z onto the nondecreasing cone.

    Pool-adjacent-violators with a block stack; O(n), exactly monotone
    output.

    Parameters
    ----------
    z : array, length >= 1

    Returns
    -------
    array, nondecreasing.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.size == 0:
        raise ValueError("need at least one sample")
    out = np.empty_like(z)
    _pava(z, out)
    return out


@njit(cache=True)
def _pava(z, out):
    n = z.size
    vals = np.empty(n)
    wts = np.empty(n)
    ends = np.empty(n, dtype=np.int64)
    m = 0
    for i in range(n):
        vals[m] = z[i]
        wts[m] = 1.0
        ends[m] = i
        m += 1
        while m > 1 and vals[m - 2] > vals[m - 1]:
            tot = wts[m - 2] + wts[m - 1]
            vals[m - 2] = (wts[m - 2] * vals[m - 2] + wts[m - 1] * vals[m - 1]) / tot
            wts[m - 2] = tot
            ends[m - 2] = ends[m - 1]
            m -= 1
    j = 0
    for s in range(m):
        while j <= ends[s]:
            out[j] = vals[s]
            j += 1


@njit(cache=True)
def _dp_clip_centered(z, pdown, pup):
    # Shift to zero mean so knot coordinates stay near the origin; both
    # penalties depend on differences only, so the shift commutes.
    n = z.size
    mu = 0.0
    for i in range(n):
        mu += z[i]
    mu /= n
    zc = np.empty(n)
    for i in range(n):
        zc[i] = z[i] - mu
    out = _dp_clip(zc, pdown, pup)
    for i in range(n):
        out[i] += mu
    return out


@njit(cache=True)
def _dp_clip(y, pdown, pup):
    # Forward pass: maintain the derivative of the partial objective as a
    # knot list x[l..r] with slope/intercept deltas (a, b). (afirst, bfirst)
    # is the line left of x[l]; the line right of x[r] is -(alast*w+blast).
    # Each step clips the derivative to [-pdown, pup] and records the two
    # clip locations as back-pointers (tm, tp).
    n = y.size
    beta = np.empty(n)
    if n == 1:
        beta[0] = y[0]
        return beta
    x = np.empty(2 * n)
    a = np.empty(2 * n)
    b = np.empty(2 * n)
    tm = np.empty(n - 1)
    tp = np.empty(n - 1)

    tm[0] = y[0] - pdown
    tp[0] = y[0] + pup
    l = n - 1
    r = n
    x[l] = tm[0]
    x[r] = tp[0]
    a[l] = 1.0
    b[l] = -y[0] + pdown
    a[r] = -1.0
    b[r] = y[0] + pup
    afirst = 1.0
    bfirst = -pdown - y[1]
    alast = -1.0
    blast = -pup + y[1]

    for k in range(1, n - 1):
        alo = afirst
        blo = bfirst
        lo = l
        while lo <= r:
            if alo * x[lo] + blo > -pdown:
                break
            alo += a[lo]
            blo += b[lo]
            lo += 1

        ahi = alast
        bhi = blast
        hi = r
        while hi >= lo:
            if -ahi * x[hi] - bhi < pup:
                break
            ahi += a[hi]
            bhi += b[hi]
            hi -= 1

        tm[k] = (-pdown - blo) / alo
        l = lo - 1
        x[l] = tm[k]
        tp[k] = (pup + bhi) / (-ahi)
        r = hi + 1
        x[r] = tp[k]
        a[l] = alo
        b[l] = blo + pdown
        a[r] = ahi
        b[r] = bhi + pup
        afirst = 1.0
        bfirst = -pdown - y[k + 1]
        alast = -1.0
        blast = -pup + y[k + 1]

    # Last coefficient minimizes the full objective: walk to where the
    # derivative crosses zero.
    alo = afirst
    blo = bfirst
    lo = l
    while lo <= r:
        if alo * x[lo] + blo > 0.0:
            break
        alo += a[lo]
        blo += b[lo]
        lo += 1
    beta[n - 1] = -blo / alo

    # Backward pass: clip each coefficient at its recorded knots. Equality
    # keeps the neighbor's value, so exact fusions come out exactly equal.
    for k in range(n - 2, -1, -1):
        if beta[k + 1] > tp[k]:
            beta[k] = tp[k]
        elif beta[k + 1] < tm[k]:
            beta[k] = tm[k]
        else:
            beta[k] = beta[k + 1]
    return beta
