"""Banded matrix storage and solves.

All operators in this package (difference operators, ADMM system matrices)
are banded with tiny bandwidths, so everything is stored by diagonals and
every product or solve costs O(n * bandwidth). The storage convention is the
LAPACK ``ab`` layout used by :func:`scipy.linalg.solve_banded`:

    bands[upper_bw + i - j, j] = A[i, j]

i.e. each row of ``bands`` holds one diagonal, padded with zeros where the
diagonal runs off the matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.linalg import cholesky_banded
from scipy.linalg import LinAlgError


class NotPositiveDefinite(Exception):
    """Raised when a matrix handed to band_cholesky is not SPD.

    Typically signals a rank-deficient system (a gram matrix built with
    ridge 0 from a rank-deficient operator) or corrupted input.
    """


@dataclass(frozen=True)
class BandedMatrix:
    """A general m x n banded matrix stored by diagonals.

    Parameters
    ----------
    rows, cols : int
        Matrix shape.
    lower_bw, upper_bw : int
        Number of sub- and super-diagonals.
    bands : ndarray, shape (lower_bw + upper_bw + 1, cols)
        Diagonal-major storage; ``bands[upper_bw + i - j, j] = A[i, j]``.
        Entries outside the matrix must be zero (the constructors below
        guarantee this, and several operations rely on it).
    """

    rows: int
    cols: int
    lower_bw: int
    upper_bw: int
    bands: np.ndarray

    def __post_init__(self):
        if self.lower_bw >= self.rows or self.upper_bw >= self.cols:
            raise ValueError("bandwidths must be smaller than the matrix shape")
        expect = (self.lower_bw + self.upper_bw + 1, self.cols)
        if self.bands.shape != expect:
            raise ValueError(f"bands array must have shape {expect}, got {self.bands.shape}")

    @classmethod
    def from_dense(cls, A, lower_bw, upper_bw):
        """Extract the band of a dense array (entries outside it must be 0)."""
        A = np.asarray(A, dtype=np.float64)
        m, n = A.shape
        bands = np.zeros((lower_bw + upper_bw + 1, n))
        for d in range(-lower_bw, upper_bw + 1):
            j0 = max(d, 0)
            j1 = min(n, m + d)
            if j1 > j0:
                bands[upper_bw - d, j0:j1] = np.diagonal(A, d)
        return cls(m, n, lower_bw, upper_bw, bands)

    def toarray(self):
        """Densify. For tests and small problems only."""
        A = np.zeros((self.rows, self.cols))
        u = self.upper_bw
        for d in range(-self.lower_bw, u + 1):
            j0 = max(d, 0)
            j1 = min(self.cols, self.rows + d)
            if j1 > j0:
                idx = np.arange(j0, j1)
                A[idx - d, idx] = self.bands[u - d, j0:j1]
        return A

    @property
    def T(self):
        """Transpose, materialized in the same storage."""
        m, n = self.rows, self.cols
        l, u = self.lower_bw, self.upper_bw
        bands = np.zeros((l + u + 1, m))
        # diagonal d of A (j - i = d) becomes diagonal -d of A.T
        for d in range(-l, u + 1):
            j0 = max(d, 0)
            j1 = min(n, m + d)
            if j1 > j0:
                # A[i, i+d] for i in [j0-d, j1-d) maps to T[i+d, i]
                bands[l + d, j0 - d:j1 - d] = self.bands[u - d, j0:j1]
        return BandedMatrix(n, m, u, l, bands)

    def matvec(self, v):
        return band_matvec(self, v)

    def rmatvec(self, v):
        return band_transpose_matvec(self, v)


@dataclass(frozen=True)
class BandedCholeskyFactor:
    """Lower Cholesky factor L of an SPD banded S = L L^T.

    ``bands`` is the LAPACK lower form, shape (bandwidth + 1, n) with
    ``bands[d, j] = L[j + d, j]``; the diagonal ``bands[0]`` is strictly
    positive.
    """

    n: int
    bandwidth: int
    bands: np.ndarray


def band_matvec(A, v):
    """Compute A @ v for a BandedMatrix in O(rows * bandwidth).

    Parameters
    ----------
    A : BandedMatrix
    v : ndarray, shape (A.cols,)

    Returns
    -------
    ndarray, shape (A.rows,)
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (A.cols,):
        raise ValueError(f"expected vector of length {A.cols}, got shape {v.shape}")
    out = np.zeros(A.rows)
    u = A.upper_bw
    for d in range(-A.lower_bw, u + 1):
        i0 = max(0, -d)
        i1 = min(A.rows, A.cols - d)
        if i1 > i0:
            out[i0:i1] += A.bands[u - d, i0 + d:i1 + d] * v[i0 + d:i1 + d]
    return out


def band_transpose_matvec(A, v):
    """Compute A.T @ v for a BandedMatrix in O(rows * bandwidth).

    Parameters
    ----------
    A : BandedMatrix
    v : ndarray, shape (A.rows,)

    Returns
    -------
    ndarray, shape (A.cols,)
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (A.rows,):
        raise ValueError(f"expected vector of length {A.rows}, got shape {v.shape}")
    out = np.zeros(A.cols)
    u = A.upper_bw
    for d in range(-A.lower_bw, u + 1):
        j0 = max(0, d)
        j1 = min(A.cols, A.rows + d)
        if j1 > j0:
            out[j0:j1] += A.bands[u - d, j0:j1] * v[j0 - d:j1 - d]
    return out


def gram_plus_ridge(A, rho, ridge):
    """Form the symmetric banded matrix rho * A.T A + diag(ridge).

    Parameters
    ----------
    A : BandedMatrix
    rho : float or ndarray
        Uniform weight, or one nonnegative weight per row of A.
    ridge : float or ndarray
        Added to the diagonal; scalar or one value per column of A.

    Returns
    -------
    BandedMatrix
        Symmetric, with lower_bw = upper_bw = min(A.lower_bw + A.upper_bw,
        A.cols - 1).
    """
    n = A.cols
    u = A.upper_bw
    p = A.lower_bw + u
    q = min(p, n - 1)  # the gram of an n-column matrix has bandwidth < n
    B = A.bands
    if np.ndim(rho) == 0:
        WB = float(rho) * B
    else:
        rho = np.asarray(rho, dtype=np.float64)
        if rho.shape != (A.rows,):
            raise ValueError("per-row weights must have one entry per row")
        WB = np.zeros_like(B)
        for t in range(p + 1):
            # band row t, column j holds A[i, j] with i = j + t - u
            j0 = max(0, u - t)
            j1 = min(n, A.rows + u - t)
            if j1 > j0:
                WB[t, j0:j1] = B[t, j0:j1] * rho[j0 + t - u:j1 + t - u]
    out = np.zeros((2 * q + 1, n))
    for g in range(q + 1):
        acc = np.zeros(n - g)
        for t in range(g, p + 1):
            acc += WB[t, :n - g] * B[t - g, g:]
        out[q - g, g:] = acc
        out[q + g, :n - g] = acc
    out[q, :] += ridge
    return BandedMatrix(n, n, q, q, out)


def band_cholesky(S):
    """Cholesky-factor a symmetric positive definite BandedMatrix.

    Parameters
    ----------
    S : BandedMatrix
        Symmetric (lower_bw == upper_bw and symmetric band content).

    Returns
    -------
    BandedCholeskyFactor

    Raises
    ------
    NotPositiveDefinite
        If factorization fails or any squared pivot falls at or below
        1e-12 times its own column's diagonal entry. Scaling the check
        per column keeps it meaningful when the diagonal spans many
        orders of magnitude (high-order operators on very uneven
        designs), where a threshold relative to the global maximum
        would reject well-posed systems.
    """
    if S.rows != S.cols or S.lower_bw != S.upper_bw:
        raise ValueError("band_cholesky expects a symmetric banded matrix")
    bw = S.lower_bw
    ab_lower = np.ascontiguousarray(S.bands[bw:, :])
    try:
        cb = cholesky_banded(ab_lower, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    if (cb[0] ** 2 <= 1e-12 * S.bands[bw]).any():
        raise NotPositiveDefinite("pivot at or below 1e-12 of its diagonal entry")
    return BandedCholeskyFactor(S.rows, bw, np.ascontiguousarray(cb))


def band_solve(F, b):
    """Solve S x = b given the factor F of S, in O(n * bandwidth).

    Parameters
    ----------
    F : BandedCholeskyFactor
    b : ndarray, shape (F.n,)

    Returns
    -------
    ndarray, shape (F.n,)
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (F.n,):
        raise ValueError(f"expected vector of length {F.n}, got shape {b.shape}")
    x = b.copy()
    _cho_solve_inplace(F.bands, x)
    return x


@njit(cache=True)
def _cho_solve_inplace(cb, b):
    # forward then back substitution with the lower banded factor,
    # cb[d, j] = L[j + d, j]
    q, n = cb.shape
    bw = q - 1
    for j in range(n):
        s = b[j]
        lo = j - bw
        if lo < 0:
            lo = 0
        for i in range(lo, j):
            s -= cb[j - i, i] * b[i]
        b[j] = s / cb[0, j]
    for j in range(n - 1, -1, -1):
        s = b[j]
        hi = j + bw
        if hi > n - 1:
            hi = n - 1
        for i in range(j + 1, hi + 1):
            s -= cb[i - j, j] * b[i]
        b[j] = s / cb[0, j]
