"""Anderson mixing of fixed-point images and Aitken extrapolation."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

GRAM_DAMPING = 1e-12
AITKEN_TINY = 1e-300


class AndersonWindow:
    """Sliding window of the ``memory + 1`` most recent (x, G(x), G(x) - x) triples.

    The newest entry is at position 0, matching the m = 0 term of the mixing
    sum; the oldest entry is evicted first.
    """

    def __init__(self, memory: int):
        if memory < 0:
            raise ValueError("memory must be >= 0")
        self.memory = int(memory)
        self._entries: deque = deque(maxlen=self.memory + 1)

    def push(self, x: np.ndarray, gx: np.ndarray):
        x = np.asarray(x, dtype=float)
        gx = np.asarray(gx, dtype=float)
        self._entries.appendleft((x, gx, gx - x))

    def clear(self):
        self._entries.clear()

    def __len__(self):
        return len(self._entries)

    @property
    def iterates(self) -> list[np.ndarray]:
        return [e[0] for e in self._entries]

    @property
    def images(self) -> list[np.ndarray]:
        return [e[1] for e in self._entries]

    @property
    def residuals(self) -> list[np.ndarray]:
        return [e[2] for e in self._entries]


@dataclass
class AndersonStep:
    x_next: np.ndarray
    beta: np.ndarray
    fallback: bool = False

    @property
    def negative_weights(self) -> bool:
        return bool(np.any(self.beta < 0))


def anderson_coefficients(residuals: list[np.ndarray], damping: float = GRAM_DAMPING):
    """Weights minimizing ``||sum_m beta_m r_m||`` subject to ``sum(beta) = 1``.

    Solved through the unconstrained problem on residual differences
    ``r_m - r_0``, with the normal equations damped by ``damping`` times the
    largest Gram diagonal. Returns ``(beta, fallback)``; ``fallback`` is True
    when the system could not be solved and the plain step ``beta = e_0``
    was used instead.
    """
    m = len(residuals)
    if m == 0:
        raise ValueError("empty Anderson window")
    beta = np.zeros(m)
    beta[0] = 1.0
    if m == 1:
        return beta, False
    r0 = residuals[0]
    D = np.column_stack([r - r0 for r in residuals[1:]])
    G = D.T @ D
    scale = float(np.max(np.diag(G))) if G.size else 0.0
    if not np.isfinite(scale) or scale == 0.0:
        return beta, True
    G[np.diag_indices_from(G)] += damping * scale
    try:
        gamma = np.linalg.solve(G, -(D.T @ r0))
    except np.linalg.LinAlgError:
        log.debug("Anderson Gram matrix singular; taking plain step")
        return beta, True
    if not np.all(np.isfinite(gamma)):
        log.debug("Anderson coefficients not finite; taking plain step")
        return beta, True
    beta[1:] = gamma
    beta[0] = 1.0 - gamma.sum()
    return beta, False


def anderson_step(window: AndersonWindow, target: int | None = None) -> AndersonStep:
    """Mix the window's map images: ``x_next = sum_m beta_m G(x_m)``.

    If ``target`` is given the normalization component is re-pinned to 1
    after mixing (it already equals 1 up to rounding since the weights sum
    to one).
    """
    if len(window) == 0:
        raise ValueError("empty Anderson window")
    beta, fallback = anderson_coefficients(window.residuals)
    images = window.images
    x_next = beta[0] * images[0]
    for b, g in zip(beta[1:], images[1:]):
        x_next = x_next + b * g
    if target is not None:
        x_next[target] = 1.0
    return AndersonStep(x_next, beta, fallback)


@dataclass
class AitkenResult:
    values: np.ndarray
    degenerate: np.ndarray  # True where the denominator vanished and s[n+1] was passed through

    def __iter__(self):
        return iter((self.values, self.degenerate))


def aitken(s) -> AitkenResult:
    """Aitken delta-squared transform of a scalar sequence.

    ``s'[n] = (s[n] s[n+2] - s[n+1]**2) / (s[n] + s[n+2] - 2 s[n+1])``,
    giving ``len(s) - 2`` values.
    """
    s = np.asarray(s, dtype=float)
    if s.ndim != 1 or len(s) < 3:
        raise ValueError("Aitken extrapolation needs a sequence of length >= 3")
    a, b, c = s[:-2], s[1:-1], s[2:]
    d1, d2 = b - a, c - b
    den = d2 - d1
    bad = np.abs(den) < AITKEN_TINY
    # same value as the ratio form, without cancelling O(s**2) products
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = c - d2 * d2 / np.where(bad, 1.0, den)
    out = np.where(bad, b, out)
    return AitkenResult(out, bad)
