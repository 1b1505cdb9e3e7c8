"""Working-precision helpers.

Double mode uses float64 numpy arrays. Extended mode uses numpy object
arrays holding ``mpmath.mpf`` scalars at ``EXTENDED_DPS`` decimal digits,
so the same array expressions serve both modes.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np

DOUBLE = "double"
EXTENDED = "extended"
PRECISIONS = (DOUBLE, EXTENDED)

EXTENDED_DPS = 40


def check_precision(precision: str) -> str:
    if precision not in PRECISIONS:
        raise ValueError(f"unknown precision {precision!r}; expected one of {PRECISIONS}")
    return precision


def is_extended(x) -> bool:
    return isinstance(x, np.ndarray) and x.dtype == object


def workdps():
    """Context manager setting mpmath to the extended working precision."""
    return mpmath.workdps(EXTENDED_DPS)


def to_extended(x) -> np.ndarray:
    arr = np.asarray(x)
    out = np.empty(arr.shape, dtype=object)
    flat_in = arr.ravel()
    flat_out = out.ravel()
    with workdps():
        for i, v in enumerate(flat_in):
            flat_out[i] = v if isinstance(v, mpmath.mpf) else mpmath.mpf(
                int(v) if isinstance(v, (int, np.integer)) else float(v))
    return out


def to_double(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.dtype == object:
        return np.array([float(v) for v in arr.ravel()]).reshape(arr.shape)
    return arr.astype(float)


def as_precision(x, precision: str) -> np.ndarray:
    if check_precision(precision) == EXTENDED:
        return x if is_extended(x) else to_extended(x)
    return to_double(x)


def zeros(n: int, precision: str = DOUBLE) -> np.ndarray:
    if check_precision(precision) == EXTENDED:
        out = np.empty(n, dtype=object)
        out[:] = mpmath.mpf(0)
        return out
    return np.zeros(n)


def basis_vector(n: int, index: int, precision: str = DOUBLE) -> np.ndarray:
    v = zeros(n, precision)
    v[index] = mpmath.mpf(1) if precision == EXTENDED else 1.0
    return v


def one_like(x):
    return mpmath.mpf(1) if is_extended(x) else 1.0


def norm(v) -> float:
    """Euclidean norm; returns an mpf for extended vectors."""
    if is_extended(v):
        with workdps():
            return mpmath.sqrt(mpmath.fsum(x * x for x in v))
    return float(np.linalg.norm(v))


def all_finite(v) -> bool:
    if is_extended(v):
        return all(mpmath.isfinite(x) for x in v)
    return bool(np.all(np.isfinite(v)))


def max_abs(v) -> float:
    if is_extended(v):
        return float(max((abs(x) for x in v), default=0))
    return float(np.max(np.abs(v))) if v.size else 0.0


def scalar_is_finite(x) -> bool:
    if isinstance(x, mpmath.mpf):
        return bool(mpmath.isfinite(x))
    return math.isfinite(x)
