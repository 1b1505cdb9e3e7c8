"""Compiled inner loop for long double-precision relaxed IPT runs."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

CONVERGED, MAX_ITERATIONS, DIVERGED = 0, 1, 2


@njit(cache=True)
def _h1_times(indptr, indices, data, psi, out):
    n = indptr.shape[0] - 1
    for i in range(n):
        acc = 0.0
        for j in range(indptr[i], indptr[i + 1]):
            acc += data[j] * psi[indices[j]]
        out[i] = acc


@njit(cache=True)
def relaxed_ipt(indptr, indices, data, h0, lam, target, alpha, tol, max_iter, stride,
                divergence_norm, psi):
    """Relaxed EN-type IPT in place on ``psi``.

    Returns ``(k, status, ks, energies, residuals)`` with one record every
    ``stride`` iterations plus the final one.
    """
    n = h0.shape[0]
    e0 = h0[target]
    denom = np.empty(n)
    for i in range(n):
        denom[i] = e0 - h0[i]
    denom[target] = 1.0
    w = np.empty(n)
    nrec = max_iter // stride + 2
    ks = np.zeros(nrec, dtype=np.int64)
    es = np.zeros(nrec)
    rs = np.zeros(nrec)
    r = 0
    _h1_times(indptr, indices, data, psi, w)
    status = MAX_ITERATIONS
    k = 0
    e = 0.0
    res = 0.0
    for k in range(1, max_iter + 1):
        c = w[target]
        big = 0.0
        finite = True
        for i in range(n):
            qi = lam * (w[i] - c * psi[i]) / denom[i]
            if i == target:
                qi = 1.0
            x = alpha * qi + (1.0 - alpha) * psi[i]
            psi[i] = x
            if not math.isfinite(x):
                finite = False
            elif abs(x) > big:
                big = abs(x)
        psi[target] = 1.0
        if not finite or big > divergence_norm:
            status = DIVERGED
            e = np.nan
            res = np.inf
            ks[r] = k
            es[r] = e
            rs[r] = res
            r += 1
            break
        _h1_times(indptr, indices, data, psi, w)
        e = h0[target] + lam * w[target]
        acc = 0.0
        for i in range(n):
            d = h0[i] * psi[i] + lam * w[i] - e * psi[i]
            acc += d * d
        res = math.sqrt(acc)
        if k % stride == 0:
            ks[r] = k
            es[r] = e
            rs[r] = res
            r += 1
        if res < tol:
            status = CONVERGED
            break
    if r == 0 or ks[r - 1] != k:
        ks[r] = k
        es[r] = e
        rs[r] = res
        r += 1
    return k, status, ks[:r], es[:r], rs[:r]
