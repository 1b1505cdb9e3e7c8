"""Random-field spin-1/2 Heisenberg chain in the computational (S^z) basis.

``H = sum_i S_i . S_{i+1} + sum_i h_i S_i^z`` with ``h_i`` uniform on
``[-h, h]``. Bit ``i`` of a basis index is spin ``i`` (1 = up). Fields are
drawn from ``numpy.random.Generator(PCG64(seed))``, which is reproducible
across platforms for a given numpy major version.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np
import scipy.sparse as sps

from ..operator import SparseSymmetricOperator


def random_fields(L: int, h: float, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.uniform(-h, h, size=L)


def sector_states(L: int, n_up: int) -> np.ndarray:
    """Basis indices with ``n_up`` up spins, ascending."""
    return np.array(sorted(sum(1 << i for i in c) for c in combinations(range(L), n_up)), dtype=np.int64)


def _bonds(L: int, periodic: bool) -> list[tuple[int, int]]:
    bonds = [(i, i + 1) for i in range(L - 1)]
    if periodic:
        bonds.append((L - 1, 0))
    return bonds


def build_heisenberg(L: int, h: float, seed: int = 0, periodic: bool = True,
                     sz_sector: bool = False) -> tuple[SparseSymmetricOperator, np.ndarray]:
    """Hamiltonian and the realized fields.

    With ``sz_sector=True`` (even ``L`` only) the matrix is restricted to the
    total ``S^z = 0`` states, in ascending order of their bit patterns.
    """
    if periodic and L < 3:
        raise ValueError("periodic chains need L >= 3 (L = 2 would double the bond)")
    if L < 2:
        raise ValueError("need L >= 2")
    if h < 0:
        raise ValueError("h must be >= 0")
    fields = random_fields(L, h, seed)
    if sz_sector:
        if L % 2:
            raise ValueError("the S^z = 0 sector needs even L")
        states = sector_states(L, L // 2)
    else:
        states = np.arange(1 << L, dtype=np.int64)
    dim = len(states)
    lookup = {int(s): i for i, s in enumerate(states)}
    spins = ((states[:, None] >> np.arange(L)) & 1).astype(float) - 0.5  # S^z_i per state

    diag = np.zeros(dim)
    rows, cols = [], []
    for i, j in _bonds(L, periodic):
        diag += spins[:, i] * spins[:, j]
        flip = spins[:, i] != spins[:, j]
        src = np.flatnonzero(flip)
        dst_states = states[src] ^ ((1 << i) | (1 << j))
        rows.append(src)
        cols.append(np.array([lookup[int(s)] for s in dst_states], dtype=np.int64))
    diag += spins @ fields
    r = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    c = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    off = sps.coo_matrix((np.full(len(r), 0.5), (r, c)), shape=(dim, dim)).tocsr()
    H = (off + sps.diags(diag)).tocsr()
    H.sort_indices()
    return SparseSymmetricOperator(H), fields


def lowest_diagonal_target(H: SparseSymmetricOperator) -> int:
    """Index of the smallest diagonal entry (first one on ties)."""
    return int(np.argmin(H.diagonal()))


def ipr(psi) -> float:
    """Inverse participation ratio ``sum |psi|^4 / (sum |psi|^2)^2``."""
    psi = np.asarray(psi, dtype=float)
    n2 = float(np.dot(psi, psi))
    if n2 == 0.0:
        raise ValueError("IPR of the zero vector is undefined")
    return float(np.sum(psi ** 4) / n2 ** 2)
