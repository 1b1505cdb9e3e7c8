"""One-dimensional oscillators ``p^2 + x^2 + V(x)`` in the harmonic-oscillator basis.

Basis convention: ``p^2 + x^2`` has eigenvalues ``2n + 1`` and the position
operator is tridiagonal with ``X[n, n+1] = sqrt((n + 1) / 2)``. Polynomial
potentials are assembled from powers of an enlarged ``X`` (size ``N + deg``)
and then truncated, so the top rows of the ``N x N`` block are exact.
"""

from __future__ import annotations

import mpmath
import numpy as np
import scipy.sparse as sps

from .. import precision as prec
from ..operator import SparseSymmetricOperator


def position_matrix(size: int) -> sps.csr_matrix:
    off = np.sqrt(np.arange(1, size) / 2.0)
    return sps.diags([off, off], [-1, 1], shape=(size, size), format="csr")


def _position_entries_mp(size: int) -> dict:
    with prec.workdps():
        return {(n, n + 1): mpmath.sqrt(mpmath.mpf(n + 1) / 2) for n in range(size - 1)}


def _mp_matmul(a: dict, b: dict) -> dict:
    by_row: dict = {}
    for (i, j), v in b.items():
        by_row.setdefault(i, []).append((j, v))
    out: dict = {}
    for (i, k), v in a.items():
        for j, w in by_row.get(k, ()):
            out[(i, j)] = out.get((i, j), 0) + v * w
    return out


def polynomial_potential(coeffs: dict[int, float], N: int, precision: str = prec.DOUBLE) -> SparseSymmetricOperator:
    """``diag(2n+1) + sum_k coeffs[k] X^k`` truncated to ``N x N``."""
    deg = max((k for k, c in coeffs.items() if c != 0), default=0)
    size = N + deg
    if prec.check_precision(precision) == prec.EXTENDED:
        return _polynomial_potential_mp(coeffs, N, size)
    X = position_matrix(size)
    total = sps.csr_matrix((size, size))
    power = sps.identity(size, format="csr")
    for k in range(1, deg + 1):
        power = (power @ X).tocsr()
        c = coeffs.get(k, 0)
        if c != 0:
            total = total + c * power
    total = total.tocsr()[:N, :N]
    total = (total + total.T) * 0.5
    total = total + sps.diags(2.0 * np.arange(N) + 1.0)
    total = total.tocsr()
    total.eliminate_zeros()
    return SparseSymmetricOperator(total, bandwidth=deg)


def _polynomial_potential_mp(coeffs, N, size):
    with prec.workdps():
        upper = _position_entries_mp(size)
        X = dict(upper)
        X.update({(j, i): v for (i, j), v in upper.items()})
        deg = max((k for k, c in coeffs.items() if c != 0), default=0)
        total: dict = {}
        power = {(i, i): mpmath.mpf(1) for i in range(size)}
        for k in range(1, deg + 1):
            power = _mp_matmul(power, X)
            c = coeffs.get(k, 0)
            if c != 0:
                c = c if isinstance(c, mpmath.mpf) else mpmath.mpf(c)
                for key, v in power.items():
                    total[key] = total.get(key, 0) + c * v
        out = {}
        for (i, j), v in total.items():
            if i < N and j < N and v != 0:
                out[(i, j)] = v
        for (i, j) in list(out):
            if i < j:
                s = (out[(i, j)] + out[(j, i)]) / 2
                out[(i, j)] = out[(j, i)] = s
        for n in range(N):
            out[(n, n)] = out.get((n, n), mpmath.mpf(0)) + (2 * n + 1)
    return SparseSymmetricOperator.from_entries(out, N, bandwidth=deg)


def harmonic_diagonal(N: int, precision: str = prec.DOUBLE) -> np.ndarray:
    """Eigenvalues ``2n + 1`` of ``p^2 + x^2`` (the unperturbed part of the natural split)."""
    return prec.as_precision(2.0 * np.arange(N) + 1.0, precision)


def build_anharmonic(s: int, g, N: int, precision: str = prec.DOUBLE) -> SparseSymmetricOperator:
    """``p^2 + x^2 + g x^(2s)``, bandwidth ``2s``."""
    if s not in (2, 3, 4):
        raise ValueError(f"s must be 2, 3 or 4, got {s}")
    if N < 2 * s + 2:
        raise ValueError(f"basis size N={N} too small for s={s}; need N >= {2 * s + 2}")
    if g < 0:
        raise ValueError("g must be >= 0")
    return polynomial_potential({2 * s: g}, N, precision)


def herbst_simon_coefficients(g, precision: str = prec.DOUBLE) -> dict[int, object]:
    if precision == prec.EXTENDED:
        with prec.workdps():
            g = g if isinstance(g, mpmath.mpf) else mpmath.mpf(g)
            return {1: 2 * g, 3: -2 * g, 4: g * g}
    g = float(g)
    return {1: 2 * g, 3: -2 * g, 4: g * g}


def build_herbst_simon(g, N: int, precision: str = prec.DOUBLE) -> SparseSymmetricOperator:
    """``p^2 + x^2 + 2 g x - 2 g x^3 + g^2 x^4``, bandwidth 4.

    ``g`` may be an ``mpmath.mpf`` (e.g. ``sqrt(0.3)`` at working precision)
    for extended-precision builds.
    """
    if N < 8:
        raise ValueError(f"basis size N={N} too small; need N >= 8")
    if g < 0:
        raise ValueError("g must be >= 0")
    return polynomial_potential(herbst_simon_coefficients(g, precision), N, precision)
