"""Reference answers from dense linear algebra, independent of the IPT code path.

Full spectra come from LAPACK (``scipy.linalg.eigh``). ``ground_state``
additionally certifies and refines the lowest eigenpair of strongly graded
matrices (anharmonic oscillators at large coupling have ``||H|| ~ 1e14``
while the ground energy is O(1), so a dense solver's absolute error
``eps ||H||`` swamps it). The certificate is a Cholesky factorization of
``H - sigma I``: success proves every eigenvalue exceeds ``sigma``, and
inverse iteration from there converges to the lowest one.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.sparse.csgraph import connected_components

from .core import Partitioning
from .operator import SparseSymmetricOperator

log = logging.getLogger(__name__)

DENSE_CAP = 5000
TAYLOR_STEP = 1e-3
BANDED_LIMIT = 64


class OracleError(RuntimeError):
    pass


@dataclass
class DenseSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    def reconstruction_error(self, H) -> float:
        """``||H - V diag(w) V^T||_2``."""
        Hd = H.to_dense() if isinstance(H, SparseSymmetricOperator) else np.asarray(H)
        V, w = self.eigenvectors, self.eigenvalues
        return float(np.linalg.norm(Hd - (V * w) @ V.T, 2))

    def orthonormality_error(self) -> float:
        V = self.eigenvectors
        return float(np.linalg.norm(V.T @ V - np.eye(V.shape[1]), 2))


def _dense(H, cap: int) -> np.ndarray:
    if H.dim > cap:
        raise OracleError(f"dimension {H.dim} exceeds the dense cap {cap}")
    return H.to_double().to_dense()


def dense_eig(H: SparseSymmetricOperator, cap: int = DENSE_CAP) -> DenseSpectrum:
    """Full spectrum, ascending, with orthonormal eigenvectors."""
    w, V = sla.eigh(_dense(H, cap))
    return DenseSpectrum(w, V)


def dense_eig_generalized(pencil, cap: int = DENSE_CAP) -> DenseSpectrum:
    """``A v = E S v`` through the Cholesky factor of ``S``.

    Eigenvectors are S-orthonormal. Raises ``OracleError`` if ``S`` is not
    positive definite.
    """
    A = _dense(pencil.A, cap)
    S = _dense(pencil.S, cap)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise OracleError("S is not positive definite") from exc
    Li = sla.solve_triangular(L, np.eye(len(S)), lower=True)
    C = Li @ A @ Li.T
    w, Y = sla.eigh((C + C.T) / 2)
    V = sla.solve_triangular(L.T, Y, lower=False)
    return DenseSpectrum(w, V)


class _ShiftedSolver:
    """Cholesky solves with ``H - sigma I``; raises LinAlgError if not positive definite."""

    def __init__(self, H: SparseSymmetricOperator, sigma: float):
        n = H.dim
        bw = H.bandwidth()
        if bw <= BANDED_LIMIT and n > 4 * bw:
            ab = np.zeros((bw + 1, n))
            for d in range(bw + 1):
                ab[d, : n - d] = _band(H, d)
            ab[0] -= sigma
            self._cb = sla.cholesky_banded(ab, lower=True)
            self.solve = lambda b: sla.cho_solve_banded((self._cb, True), b)
        else:
            Hd = H.to_dense() - sigma * np.eye(n)
            self._cf = sla.cho_factor(Hd, lower=True)
            self.solve = lambda b: sla.cho_solve(self._cf, b)


def _band(H: SparseSymmetricOperator, d: int) -> np.ndarray:
    # d-th sub-diagonal of H
    out = np.zeros(H.dim - d)
    r = H.rows()
    sel = (r - H.indices) == d
    out[H.indices[sel]] = np.asarray(H.data, float)[sel]
    return out


def _refine(H: SparseSymmetricOperator, theta: float, v: np.ndarray, tol: float, max_steps: int):
    """Certified shifted inverse iteration starting near ``theta``."""
    hnorm = float(np.max(np.abs(H.diagonal()))) + 1.0
    margin = max(1e-3 * abs(theta), 1e-3)
    sigma = theta - margin
    solver = None
    for _ in range(200):
        try:
            solver = _ShiftedSolver(H, sigma)
            break
        except np.linalg.LinAlgError:
            margin *= 2.0
            sigma = theta - margin
            if margin > 4 * hnorm:
                break
    if solver is None:
        raise OracleError("could not certify a lower bound for the spectrum")
    x = v / np.linalg.norm(v)
    rq = theta
    for _ in range(max_steps):
        y = solver.solve(x)
        x = y / np.linalg.norm(y)
        new = float(x @ (H @ x))
        done = abs(new - rq) <= tol * max(1.0, abs(new))
        rq = new
        if done:
            break
        # tighten the shift while keeping the certificate
        cand = rq - max(1e-6 * abs(rq), 1e-6)
        if cand > sigma:
            try:
                solver = _ShiftedSolver(H, cand)
                sigma = cand
            except np.linalg.LinAlgError:
                pass
    return rq, x


def ground_state(H: SparseSymmetricOperator, cap: int = DENSE_CAP, refine: bool = True,
                 tol: float = 1e-15, max_steps: int = 200) -> tuple[float, np.ndarray]:
    """Lowest eigenpair ``(E, v)`` with ``||v|| = 1``.

    ``H`` is split into the connected components of its sparsity graph (an
    exact block decomposition); each block is diagonalized densely and the
    lowest candidate is refined with certified inverse iteration.
    """
    H = H.to_double()
    ncomp, labels = connected_components(H.to_scipy(), directed=False)
    best = None
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        sub = H.submatrix(idx) if ncomp > 1 else H
        if len(idx) == 1:
            cand = (float(sub.diagonal()[0]), np.ones(1), idx, sub)
        else:
            w, V = sla.eigh(_dense(sub, cap), subset_by_index=[0, 0])
            cand = (float(w[0]), V[:, 0], idx, sub)
        if refine and len(idx) > 1:
            e, v = _refine(sub, cand[0], cand[1], tol, max_steps)
            cand = (e, v, idx, sub)
        if best is None or cand[0] < best[0]:
            best = cand
    e, v, idx, _ = best
    full = np.zeros(H.dim)
    full[idx] = v
    # deterministic sign: largest-magnitude component positive
    if full[np.argmax(np.abs(full))] < 0:
        full = -full
    return e, full


def ground_energy(H: SparseSymmetricOperator, **kw) -> float:
    return ground_state(H, **kw)[0]


def _eigvec_at(p: Partitioning, lam: float) -> np.ndarray:
    h0 = np.asarray(p.h0_diag, float)
    M = np.diag(h0) + lam * p.h1.to_double().to_dense()
    _, V = sla.eigh(M)
    j = int(np.argmax(np.abs(V[p.target])))
    v = V[:, j]
    return v / v[p.target]


def taylor_probe(p: Partitioning, k: int, step: float = TAYLOR_STEP) -> list[np.ndarray]:
    """Taylor coefficients ``psi_1 .. psi_k`` of the eigenvector in ``lam`` at 0.

    Uses the dense eigenvector continuing ``e_target`` (normalized to target
    component 1), sampled on a symmetric stencil of ``2m + 1`` points with
    spacing ``step``, fitted by the interpolating polynomial, and refined
    once by Richardson extrapolation against spacing ``step / 2``.
    """
    if p.dim > 50:
        raise ValueError("taylor_probe is limited to dim <= 50")
    if not 1 <= k <= 4:
        raise ValueError("order k must be in 1..4")
    h0 = np.asarray(p.h0_diag, float)
    gaps = np.abs(np.delete(h0, p.target) - h0[p.target])
    if gaps.size and gaps.min() < 1e-12 * max(1.0, abs(h0[p.target])):
        raise ValueError("degenerate unperturbed spectrum at the target")
    m = k // 2 + 1
    nodes = np.arange(-m, m + 1)

    def fit(h):
        samples = np.array([_eigvec_at(p, float(j * h)) for j in nodes])
        coef = np.linalg.solve(np.vander(nodes * 1.0, increasing=True), samples)
        return [coef[j] / h ** j for j in range(1, k + 1)]

    c1, c2 = fit(step), fit(step / 2)
    out = []
    for j in range(1, k + 1):
        order = 2 * m + 1 - j if j % 2 else 2 * m + 2 - j
        f = 2.0 ** order
        out.append((f * c2[j - 1] - c1[j - 1]) / (f - 1))
    return out
