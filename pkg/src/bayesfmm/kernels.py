"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The MCMC loop spends nearly all of its time in two places: evaluating
basis systems at warped time points, and evaluating the marginalized
Gaussian log-likelihood of one observation. Both are implemented twice,
as loop kernels compiled with ``numba.njit`` and as vectorized numpy
functions. The active backend is chosen at import time: set
``BAYESFMM_DISABLE_NUMBA=1`` to force the numpy fallback (the two paths
agree to floating-point roundoff; see ``tests/test_kernels.py`` and
``benchmarks/bench_kernels.py``).
"""

from __future__ import annotations

import math
import os

import numpy as np

_LOG_2PI = math.log(2.0 * math.pi)

NUMBA_DISABLED = os.environ.get("BAYESFMM_DISABLE_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
    "on",
}

if not NUMBA_DISABLED:
    try:
        from numba import njit as _njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _njit = None
else:
    _njit = None

USE_NUMBA = _njit is not None


def backend() -> str:
    """Name of the active kernel backend ("numba" or "numpy")."""
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------


def _np_modified_fourier(times: np.ndarray, count: int) -> np.ndarray:
    """Raw modified Fourier generators evaluated at ``times``, (len, count)."""
    t = np.asarray(times, dtype=np.float64)
    out = np.empty((t.shape[0], count))
    sqrt3 = math.sqrt(3.0)
    sqrt2 = math.sqrt(2.0)
    for k in range(count):
        if k == 0:
            out[:, k] = sqrt3 * t
        elif k == 1:
            out[:, k] = sqrt3 * (1.0 - t)
        else:
            j = k // 2
            arg = 2.0 * math.pi * j * t
            out[:, k] = sqrt2 * (np.cos(arg) if k % 2 == 0 else np.sin(arg))
    return out


def _np_bspline(times: np.ndarray, knotvec: np.ndarray, count: int) -> np.ndarray:
    """All clamped B-splines of degree ``len(knotvec)-count-1`` at ``times``."""
    t = np.asarray(times, dtype=np.float64)
    degree = knotvec.shape[0] - count - 1
    nt = t.shape[0]
    # span index i with knotvec[i] <= t < knotvec[i+1], clamped to valid range
    span = np.searchsorted(knotvec, t, side="right") - 1
    span = np.clip(span, degree, count - 1)
    # Cox-de Boor triangle, vectorized over evaluation points
    funs = np.zeros((nt, degree + 1))
    funs[:, 0] = 1.0
    left = np.zeros((nt, degree + 1))
    right = np.zeros((nt, degree + 1))
    for j in range(1, degree + 1):
        left[:, j] = t - knotvec[span + 1 - j]
        right[:, j] = knotvec[span + j] - t
        saved = np.zeros(nt)
        for r in range(j):
            denom = right[:, r + 1] + left[:, j - r]
            temp = funs[:, r] / denom
            funs[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        funs[:, j] = saved
    out = np.zeros((nt, count))
    cols = span[:, None] - degree + np.arange(degree + 1)[None, :]
    np.put_along_axis(out, cols, funs, axis=1)
    return out


def _np_piecewise_slopes(knots: np.ndarray, values: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Right-continuous segment slopes at ``times`` (left slope at t=1)."""
    t = np.asarray(times, dtype=np.float64)
    idx = np.searchsorted(knots, t, side="right") - 1
    idx = np.clip(idx, 0, knots.shape[0] - 2)
    return (values[idx + 1] - values[idx]) / (knots[idx + 1] - knots[idx])


def _np_loglik_resid(
    resid: np.ndarray,
    gdot: np.ndarray,
    sigma2: float,
    sigmac2: float,
    phit: np.ndarray,
) -> float:
    """Log density of MVN(0, sigma2*diag(gdot) + sigmac2*phit@phit.T) at resid.

    Uses the Woodbury identity so the cost is O(T * Br**2) rather than
    O(T**3). ``sigmac2 == 0`` short-circuits to the diagonal case.
    """
    T = resid.shape[0]
    d = sigma2 * gdot
    if np.any(d <= 0.0):
        return math.nan
    u = resid / d
    quad = float(resid @ u)
    logdet = float(np.sum(np.log(d)))
    if sigmac2 > 0.0:
        br = phit.shape[1]
        m = np.eye(br) + sigmac2 * (phit.T @ (phit / d[:, None]))
        try:
            lo = np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            return math.nan
        s = phit.T @ u
        z = np.linalg.solve(lo, s)
        quad -= sigmac2 * float(z @ z)
        logdet += 2.0 * float(np.sum(np.log(np.diag(lo))))
    return -0.5 * (T * _LOG_2PI + logdet + quad)


def _np_loglik_vector(
    f_all: np.ndarray,
    phi_all: np.ndarray,
    phit_all: np.ndarray,
    gdot_all: np.ndarray,
    a: np.ndarray,
    sigma2: float,
    sigmac2: float,
) -> np.ndarray:
    out = np.empty(f_all.shape[0])
    for i in range(f_all.shape[0]):
        resid = f_all[i] - phi_all[i] @ a
        out[i] = _np_loglik_resid(resid, gdot_all[i], sigma2, sigmac2, phit_all[i])
    return out


# ---------------------------------------------------------------------------
# numba implementations (same math, explicit loops)
# ---------------------------------------------------------------------------

if USE_NUMBA:

    @_njit(cache=True)
    def _nb_modified_fourier(times, count):
        nt = times.shape[0]
        out = np.empty((nt, count))
        sqrt3 = math.sqrt(3.0)
        sqrt2 = math.sqrt(2.0)
        for i in range(nt):
            t = times[i]
            for k in range(count):
                if k == 0:
                    out[i, k] = sqrt3 * t
                elif k == 1:
                    out[i, k] = sqrt3 * (1.0 - t)
                else:
                    j = k // 2
                    arg = 2.0 * math.pi * j * t
                    if k % 2 == 0:
                        out[i, k] = sqrt2 * math.cos(arg)
                    else:
                        out[i, k] = sqrt2 * math.sin(arg)
        return out

    @_njit(cache=True)
    def _nb_bspline(times, knotvec, count):
        nt = times.shape[0]
        degree = knotvec.shape[0] - count - 1
        out = np.zeros((nt, count))
        funs = np.empty(degree + 1)
        left = np.empty(degree + 1)
        right = np.empty(degree + 1)
        for i in range(nt):
            t = times[i]
            span = np.searchsorted(knotvec, t, side="right") - 1
            if span < degree:
                span = degree
            if span > count - 1:
                span = count - 1
            funs[0] = 1.0
            for j in range(1, degree + 1):
                left[j] = t - knotvec[span + 1 - j]
                right[j] = knotvec[span + j] - t
                saved = 0.0
                for r in range(j):
                    temp = funs[r] / (right[r + 1] + left[j - r])
                    funs[r] = saved + right[r + 1] * temp
                    saved = left[j - r] * temp
                funs[j] = saved
            for r in range(degree + 1):
                out[i, span - degree + r] = funs[r]
        return out

    @_njit(cache=True)
    def _nb_piecewise_slopes(knots, values, times):
        nt = times.shape[0]
        out = np.empty(nt)
        last = knots.shape[0] - 2
        for i in range(nt):
            idx = np.searchsorted(knots, times[i], side="right") - 1
            if idx < 0:
                idx = 0
            if idx > last:
                idx = last
            out[i] = (values[idx + 1] - values[idx]) / (knots[idx + 1] - knots[idx])
        return out

    @_njit(cache=True)
    def _nb_loglik_resid(resid, gdot, sigma2, sigmac2, phit):
        T = resid.shape[0]
        quad = 0.0
        logdet = 0.0
        u = np.empty(T)
        for j in range(T):
            d = sigma2 * gdot[j]
            if d <= 0.0:
                return math.nan
            u[j] = resid[j] / d
            quad += resid[j] * u[j]
            logdet += math.log(d)
        if sigmac2 > 0.0:
            br = phit.shape[1]
            m = np.empty((br, br))
            for p in range(br):
                for q in range(p + 1):
                    s = 0.0
                    for j in range(T):
                        s += phit[j, p] * phit[j, q] / (sigma2 * gdot[j])
                    val = sigmac2 * s
                    if p == q:
                        val += 1.0
                    m[p, q] = val
                    m[q, p] = val
            # in-place lower Cholesky of the small capacitance matrix
            for p in range(br):
                for q in range(p + 1):
                    s = m[p, q]
                    for k in range(q):
                        s -= m[p, k] * m[q, k]
                    if p == q:
                        if s <= 0.0:
                            return math.nan
                        m[p, p] = math.sqrt(s)
                    else:
                        m[p, q] = s / m[q, q]
            s_vec = np.zeros(br)
            for p in range(br):
                acc = 0.0
                for j in range(T):
                    acc += phit[j, p] * u[j]
                s_vec[p] = acc
            # forward solve L z = s
            for p in range(br):
                acc = s_vec[p]
                for k in range(p):
                    acc -= m[p, k] * s_vec[k]
                s_vec[p] = acc / m[p, p]
            for p in range(br):
                quad -= sigmac2 * s_vec[p] * s_vec[p]
                logdet += 2.0 * math.log(m[p, p])
        return -0.5 * (T * _LOG_2PI + logdet + quad)

    @_njit(cache=True)
    def _nb_loglik_vector(f_all, phi_all, phit_all, gdot_all, a, sigma2, sigmac2):
        n = f_all.shape[0]
        T = f_all.shape[1]
        out = np.empty(n)
        resid = np.empty(T)
        for i in range(n):
            for j in range(T):
                acc = f_all[i, j]
                for k in range(a.shape[0]):
                    acc -= phi_all[i, j, k] * a[k]
                resid[j] = acc
            out[i] = _nb_loglik_resid(resid, gdot_all[i], sigma2, sigmac2, phit_all[i])
        return out


if USE_NUMBA:
    modified_fourier = _nb_modified_fourier
    bspline = _nb_bspline
    piecewise_slopes = _nb_piecewise_slopes
    loglik_resid = _nb_loglik_resid
    loglik_vector = _nb_loglik_vector
else:
    modified_fourier = _np_modified_fourier
    bspline = _np_bspline
    piecewise_slopes = _np_piecewise_slopes
    loglik_resid = _np_loglik_resid
    loglik_vector = _np_loglik_vector
