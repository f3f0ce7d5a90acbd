"""Discrete difference operators and the critical penalty level.

The order-(k+1) difference operator maps a vector of function values on
design points x to (scaled) (k+1)-th divided differences. It is built by the
recursion

    D1 @ diag(k / (x[k:] - x[:-k])) @ Dk

where D1 is the plain first-difference matrix of conforming shape. For unit
spacing every scale factor is exactly 1.0, so the general constructor
reproduces the unit-spacing operator bit for bit; there is a single code
path.

Operators are kept row-local internally: row i of an order-m operator has
m+1 contiguous entries starting at column i. ``rows[i, t]`` holds the entry
in column i+t.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .banded import BandedMatrix


def check_design(x, n=None):
    """Validate design points: 1d, finite, strictly increasing.

    Returns the points as a float64 array. When ``n`` is given, the length
    must match.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("design points must be a 1d array")
    if n is not None and x.size != n:
        raise ValueError(f"expected {n} design points, got {x.size}")
    if not np.isfinite(x).all():
        raise ValueError("design points must be finite")
    if x.size > 1 and (np.diff(x) <= 0).any():
        raise ValueError("design points must be strictly increasing (no duplicates)")
    return x


def _diff_rows(order, x):
    """Row-local band of the order-``order`` difference operator on x."""
    n = x.size
    if order < 1:
        raise ValueError("order must be >= 1")
    if n <= order:
        raise ValueError(f"need more than {order} points for an order-{order} operator")
    rows = np.zeros((n - 1, 2))
    rows[:, 0] = -1.0
    rows[:, 1] = 1.0
    for m in range(1, order):
        # scale to divided differences, then take one more first difference
        s = m / (x[m:] - x[:-m])
        scaled = rows * s[:, None]
        nxt = np.zeros((n - m - 1, m + 2))
        nxt[:, :-1] -= scaled[:-1]
        nxt[:, 1:] += scaled[1:]
        rows = nxt
    return rows


def _scaled_diff_rows(order, x):
    """Row-local band of diag(order/(x[order:]-x[:-order])) @ D^(order).

    For order 0 this is the identity. For unit-spaced x the scaling is
    exactly 1.0 and the result equals the plain operator.
    """
    if order == 0:
        return np.ones((x.size, 1))
    rows = _diff_rows(order, x)
    s = order / (x[order:] - x[:-order])
    return rows * s[:, None]


def _rows_to_banded(rows, n):
    m, w = rows.shape
    bands = np.zeros((w, n))
    for t in range(w):
        bands[w - 1 - t, t:t + m] = rows[:, t]
    return BandedMatrix(m, n, 0, w - 1, bands)


def diff_op(order, n):
    """The order-``order`` difference operator for unit-spaced inputs.

    Parameters
    ----------
    order : int >= 1
    n : int > order
        Number of input points.

    Returns
    -------
    BandedMatrix, shape (n - order, n), bandwidth order + 1.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if n <= order:
        raise ValueError(f"need n > order, got n={n}, order={order}")
    x = np.arange(1.0, n + 1)
    return _rows_to_banded(_diff_rows(order, x), n)


def diff_op_general(order, x):
    """The order-``order`` difference operator adjusted for uneven spacing.

    Equals ``diff_op(order, n)`` exactly (bit for bit) when x is 1..n.

    Parameters
    ----------
    order : int >= 1
    x : array of strictly increasing design points, length > order.

    Returns
    -------
    BandedMatrix, shape (len(x) - order, len(x)).
    """
    x = check_design(x)
    return _rows_to_banded(_diff_rows(order, x), x.size)


def scaled_diff_op(order, x):
    """diag(order/(x[order:]-x[:-order])) @ diff_op_general(order, x).

    This is the operator that appears inside the specialized ADMM splitting;
    order 0 returns the identity. For unit-spaced x it coincides with
    diff_op_general.
    """
    x = check_design(x)
    if order < 0:
        raise ValueError("order must be >= 0")
    if x.size <= order:
        raise ValueError(f"need more than {order} points")
    return _rows_to_banded(_scaled_diff_rows(order, x), x.size)


def lambda_max(y, x=None, k=0):
    """Smallest penalty level at which the fit is a degree-k polynomial.

    Computed as the max-norm of the least-squares solution of
    D^(k+1)' u = y, which coincides with (D D')^{-1} D y since D has full
    row rank. Solved by a banded orthogonal factorization in O(n k^2);
    forming D D' explicitly squares its condition number and loses the
    answer entirely for k >= 2 at realistic sizes.

    Parameters
    ----------
    y : array, length n > k+1
    x : design points (default 1..n)
    k : polynomial order >= 0

    Returns
    -------
    float >= 0
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError("y must be a 1d array")
    n = y.size
    if x is None:
        x = np.arange(1.0, n + 1)
    else:
        x = check_design(x, n)
    if k < 0:
        raise ValueError("k must be >= 0")
    if n <= k + 1:
        raise ValueError("need n > k+1")
    rows = _diff_rows(k + 1, x)
    u = _band_lsq(np.ascontiguousarray(rows), y)
    return float(np.abs(u).max())


@njit(cache=True)
def _band_lsq(drows, b):
    # Least squares min_u ||A u - b||_2 with A = D', where D is row-local:
    # A[i, j] = drows[j, i - j] for 0 <= i - j <= p. Row-by-row Givens QR;
    # R is banded with p superdiagonals, so the whole thing is O(n p^2).
    m, width = drows.shape
    p = width - 1
    n = m + p
    Rb = np.zeros((m, width))
    z = np.zeros(m)
    w = np.empty(width)
    for i in range(n):
        lo = i - p
        if lo < 0:
            lo = 0
        hi = i
        if hi > m - 1:
            hi = m - 1
        if hi < lo:
            continue
        for t in range(width):
            j = i - p + t
            if 0 <= j < m:
                w[t] = drows[j, i - j]
            else:
                w[t] = 0.0
        bi = b[i]
        for t in range(width):
            j = i - p + t
            if j < 0 or j > m - 1:
                continue
            a = w[t]
            if a == 0.0:
                continue
            r = Rb[j, 0]
            h = np.hypot(r, a)
            c = r / h
            s = a / h
            for q in range(i - j + 1):
                rv = Rb[j, q]
                wv = w[t + q]
                Rb[j, q] = c * rv + s * wv
                w[t + q] = c * wv - s * rv
            w[t] = 0.0
            zv = z[j]
            z[j] = c * zv + s * bi
            bi = c * bi - s * zv
    u = np.empty(m)
    for j in range(m - 1, -1, -1):
        acc = z[j]
        qmax = p
        if j + qmax > m - 1:
            qmax = m - 1 - j
        for q in range(1, qmax + 1):
            acc -= Rb[j, q] * u[j + q]
        u[j] = acc / Rb[j, 0]
    return u
