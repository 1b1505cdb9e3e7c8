"""IPT for symmetric pencils ``A psi = E S psi``.

The generalized map splits both matrices into diagonal and off-diagonal
parts. With a reference energy ``c`` and ``E = (A psi)[t] / (S psi)[t]`` it
updates every non-target component by

    psi'[n] = ((A_off psi)[n] - E (S_off psi)[n] - (E - c) S[n,n] psi[n])
              / (c S[n,n] - A[n,n])

Any fixed point solves the pencil equation whatever ``c`` is. The default
``c = E0 = A[t,t] / S[t,t]`` makes the update for ``S = I`` the
Epstein-Nesbet IPT map operation for operation. ``c = 0`` gives the
Jacobi-type form ``psi'[n] = (E (S psi)[n] - (A_off psi)[n]) / A[n,n]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import precision as prec
from .core import (DEGENERACY_RTOL, DegenerateDiagonal, IterationState, SolverConfig, Status,
                   fixed_point_iterate)
from .operator import SparseSymmetricOperator
from .trace import ConvergenceTrace


class SymmetricPencil:
    """Pair of symmetric operators ``(A, S)`` of equal dimension."""

    def __init__(self, A: SparseSymmetricOperator, S: SparseSymmetricOperator):
        if A.dim != S.dim:
            raise ValueError(f"pencil dimensions differ: {A.dim} vs {S.dim}")
        if A.precision != S.precision:
            raise ValueError("A and S must share a precision")
        self.A, self.S = A, S
        self.a_diag = A.diagonal()
        self.s_diag = S.diagonal()
        if np.any(np.asarray([v == 0 for v in self.s_diag])):
            raise ValueError("S has a zero diagonal entry")
        self.a_off = A.offdiagonal()
        self.s_off = S.offdiagonal()

    @property
    def dim(self) -> int:
        return self.A.dim

    @property
    def precision(self) -> str:
        return self.A.precision

    def as_precision(self, precision: str) -> "SymmetricPencil":
        if precision == self.precision:
            return self
        return SymmetricPencil(self.A.as_precision(precision), self.S.as_precision(precision))

    def scaled(self, c) -> "SymmetricPencil":
        return SymmetricPencil(self.A.scaled(c), self.S.scaled(c))


@dataclass
class _Products:
    a_off: np.ndarray
    s_off: np.ndarray


class GeneralizedProblem:
    """Generalized IPT map for ``fixed_point_iterate``."""

    def __init__(self, pencil: SymmetricPencil, target: int = 0, degeneracy_rtol: float = DEGENERACY_RTOL,
                 reference=None):
        if not 0 <= target < pencil.dim:
            raise IndexError(f"target {target} out of range for dim {pencil.dim}")
        self.pencil = pencil
        self.target = target
        self.dim = pencil.dim
        self.precision = pencil.precision
        a_tt, s_tt = pencil.a_diag[target], pencil.s_diag[target]
        self.e0 = a_tt / s_tt
        self.reference = reference
        if reference is None:
            c = self.e0
        else:
            c = prec.to_extended(reference) if self.precision == prec.EXTENDED else float(reference)
        self.c = c
        d = c * pencil.s_diag - pencil.a_diag
        d[target] = prec.one_like(d)
        scale = np.maximum(np.abs(prec.to_double(c * pencil.s_diag)),
                           np.abs(prec.to_double(pencil.a_diag)))
        small = np.abs(prec.to_double(d)) < degeneracy_rtol * np.maximum(scale, 1e-300)
        small[target] = False
        if small.any():
            n = int(np.flatnonzero(small)[0])
            raise DegenerateDiagonal(target, n, abs(float(d[n])))
        self._denom = d

    def _products(self, psi) -> _Products:
        return _Products(self.pencil.a_off @ psi, self.pencil.s_off @ psi)

    def _energy_shift(self, pr: _Products):
        """``(E, E - c)``."""
        t = self.target
        a_tt, s_tt = self.pencil.a_diag[t], self.pencil.s_diag[t]
        a, s = pr.a_off[t], pr.s_off[t]
        if self.reference is None:
            # E - E0 written so that S = I gives exactly (A_off psi)[t]
            shift = (a * s_tt - a_tt * s) / (s_tt * (s_tt + s))
            return self.e0 + shift, shift
        e = (a_tt + a) / (s_tt + s)
        return e, e - self.c

    def _map(self, psi, pr: _Products, e, shift):
        num = (pr.a_off - e * pr.s_off) - (shift * self.pencil.s_diag) * psi
        out = num / self._denom
        out[self.target] = prec.one_like(out)
        return out

    def _residual(self, psi, pr: _Products, e):
        apsi = self.pencil.a_diag * psi + pr.a_off
        spsi = self.pencil.s_diag * psi + pr.s_off
        return prec.norm(apsi - e * spsi)

    def evaluate(self, psi):
        pr = self._products(psi)
        e, shift = self._energy_shift(pr)
        return self._map(psi, pr, e, shift), e, self._residual(psi, pr, e)

    def step(self, psi):
        pr = self._products(psi)
        e, shift = self._energy_shift(pr)
        return self._map(psi, pr, e, shift), e


def q_ipt_generalized(pencil: SymmetricPencil, target: int, psi: np.ndarray, reference=None):
    """One application of the generalized IPT map; returns ``(psi_next, E(psi))``."""
    psi = np.asarray(psi)
    return GeneralizedProblem(pencil, target, reference=reference).step(psi)


def pencil_energy(pencil: SymmetricPencil, target: int, psi: np.ndarray):
    """``(A psi)[t] / (S psi)[t]``."""
    return GeneralizedProblem(pencil, target).step(psi)[1]


def generalized_residual(pencil: SymmetricPencil, psi: np.ndarray, energy) -> float:
    """``|| A psi - E S psi ||``."""
    return prec.norm(pencil.A @ psi - energy * (pencil.S @ psi))


def relax_iterate_generalized(pencil: SymmetricPencil, cfg: SolverConfig, target: int = 0,
                              trace: Optional[ConvergenceTrace] = None,
                              psi_init: Optional[np.ndarray] = None,
                              reference=None) -> tuple[IterationState, Status]:
    """Relaxed / Anderson-accelerated IPT on a pencil; same contract as ``relax_iterate``.

    ``reference`` is the energy ``c`` of the map (default ``A[t,t] / S[t,t]``).
    """
    if cfg.mode != "ipt":
        raise ValueError("pencil solver supports IPT mode only")
    if cfg.engine != "numpy" or cfg.restrict_component:
        raise ValueError("pencil solver supports the numpy engine without restriction only")
    problem = GeneralizedProblem(pencil.as_precision(cfg.precision), target, reference=reference)
    return fixed_point_iterate(problem, cfg, trace, psi_init)
