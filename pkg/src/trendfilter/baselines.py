"""Projected-gradient solver for the box-constrained dual.

The dual of trend filtering is

    minimize 0.5*||y - D' u||^2  subject to  ||u||_inf <= lam

with D = D^(x,k+1), and the primal fit is recovered as beta = y - D' u.
Projected gradient on this problem is slow but dependable, which makes it
the convergence oracle for the ADMM solvers at small n: it is built from
nothing but banded products and a box projection, shares no iteration
machinery with the ADMM path, and its accelerated variant reaches high
accuracy given enough iterations.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .admm import FitResult, _row_matvec, _row_rmatvec
from .diffops import _diff_rows


def auto_step(k, n):
    """Step size 1/L for the dual gradient, L an upper bound on ||D D'||_2.

    Runs 50 power-method sweeps on the banded product for the unit-spacing
    operator D^(k+1), then pads by 4%. The Rayleigh estimate converges from
    below, and with the clustered top spectrum of these operators 50 sweeps
    leave it up to ~1.5% short of the true norm; the pad absorbs that with
    margin, so the returned step stays strictly inside 1/||D D'||_2.
    For k=0 the spectral norm is below 4, so the result is close to 0.25.
    """
    if n <= k + 1:
        raise ValueError("need n > k+1")
    rows = np.ascontiguousarray(_diff_rows(k + 1, np.arange(1.0, n + 1)))
    return _step_for_rows(rows, n)


def _step_for_rows(rows, n):
    v = np.sin(np.arange(1.0, rows.shape[0] + 1))
    lmax = _power_norm(rows, v, n, 50)
    return 1.0 / (1.04 * lmax)


@njit(cache=True)
def _power_norm(rows, v, n, sweeps):
    # Rayleigh-quotient estimate of the top eigenvalue of D D'
    m = v.size
    nv = 0.0
    for i in range(m):
        nv += v[i] * v[i]
    nv = np.sqrt(nv)
    for i in range(m):
        v[i] /= nv
    lam = 0.0
    for _ in range(sweeps):
        w = _row_matvec(rows, _row_rmatvec(rows, v, n))
        lam = 0.0
        nw = 0.0
        for i in range(m):
            lam += v[i] * w[i]
            nw += w[i] * w[i]
        nw = np.sqrt(nw)
        if nw == 0.0:
            return 0.0
        for i in range(m):
            v[i] = w[i] / nw
    return lam


def solve_dual_pg(problem, lam, accelerated=True, iters=10000, step="auto"):
    """Solve trend filtering through its dual by (accelerated) projected
    gradient.

    Parameters
    ----------
    problem : TFProblem
    lam : float > 0
    accelerated : bool
        Momentum with restart on dual-objective increase.
    iters : int >= 1
        Fixed iteration count; there is no tolerance-based stop.
    step : "auto" or float
        "auto" uses a power-method bound on the gradient's Lipschitz
        constant for this problem's operator.

    Returns
    -------
    FitResult with beta = y - D' u, alpha = D^(k+1) beta, u the dual
    variable, and the primal criterion recorded per iteration.

    Raises
    ------
    RuntimeError if the dual objective goes non-finite. The box projection
    keeps the iterates bounded for any finite step and lam, so this is a
    guard against pathological inputs (e.g. an infinite penalty), not a
    condition a large step can trigger.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    y, x, k, n = problem.y, problem.x, problem.k, problem.n
    rows = np.ascontiguousarray(_diff_rows(k + 1, x))
    if step == "auto":
        eta = _step_for_rows(rows, n)
    else:
        eta = float(step)
        if eta <= 0:
            raise ValueError("step must be positive")
    u, crit, bad_at = _dual_pg_loop(rows, y, lam, eta, iters, accelerated)
    if bad_at >= 0:
        raise RuntimeError(f"dual gradient diverged at iteration {bad_at}; reduce the step")
    beta = y - _row_rmatvec(rows, u, n)
    alpha = _row_matvec(rows, beta)
    return FitResult(beta, alpha, u, iters, False, crit, np.empty((0, 2)))


@njit(cache=True)
def _dual_pg_loop(rows, y, lam, eta, iters, accelerated):
    m = rows.shape[0]
    n = y.size
    u = np.zeros(m)
    v = np.zeros(m)
    tk = 1.0
    crit = np.empty(iters)
    prev_obj = np.inf
    bad_at = -1
    dy = _row_matvec(rows, y)
    for it in range(iters):
        r = _row_rmatvec(rows, v, n)
        for j in range(n):
            r[j] -= y[j]
        g = _row_matvec(rows, r)
        un = np.empty(m)
        for i in range(m):
            z = v[i] - eta * g[i]
            if z > lam:
                un[i] = lam
            elif z < -lam:
                un[i] = -lam
            else:
                un[i] = z
        # dual objective at the new point, also the divergence sentinel
        res = _row_rmatvec(rows, un, n)
        obj = 0.0
        for j in range(n):
            d = y[j] - res[j]
            obj += d * d
        obj *= 0.5
        if not np.isfinite(obj):
            bad_at = it
            break
        # primal criterion of beta = y - D'u for the trace; D beta = Dy - D res
        pen = 0.0
        w = _row_matvec(rows, res)
        for i in range(m):
            pen += abs(dy[i] - w[i])
        loss = 0.0
        for j in range(n):
            loss += res[j] * res[j]
        crit[it] = 0.5 * loss + lam * pen
        if accelerated:
            if obj > prev_obj:
                # restart momentum at the last good point
                tk = 1.0
                for i in range(m):
                    v[i] = un[i]
            else:
                tn = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
                coef = (tk - 1.0) / tn
                for i in range(m):
                    v[i] = un[i] + coef * (un[i] - u[i])
                tk = tn
        else:
            for i in range(m):
                v[i] = un[i]
        for i in range(m):
            u[i] = un[i]
        prev_obj = obj
    return u, crit, bad_at
