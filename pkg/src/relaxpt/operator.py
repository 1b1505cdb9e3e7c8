"""Sparse real symmetric operators in CSR storage.

Both triangles are stored explicitly, so a row of the matrix is a row of the
CSR arrays and the matrix-vector product is a plain sequential row sweep.
In double precision the product is delegated to ``scipy.sparse`` (sequential
per-row reduction, hence deterministic). Extended-precision operators hold
``mpmath.mpf`` entries in an object array and use a Python row loop.
"""

from __future__ import annotations

from typing import Optional

import mpmath
import numpy as np
import scipy.sparse as sps

from . import precision as prec


class SymmetryError(ValueError):
    pass


def _csr_from_entries(entries: dict, dim: int):
    keys = sorted(entries)
    counts = np.zeros(dim + 1, dtype=np.int64)
    for r, _ in keys:
        counts[r + 1] += 1
    indptr = np.cumsum(counts)
    indices = np.array([c for _, c in keys], dtype=np.int64)
    data = np.empty(len(keys), dtype=object)
    for i, k in enumerate(keys):
        data[i] = entries[k]
    return indptr, indices, data


class SparseSymmetricOperator:
    """Real symmetric matrix with O(1) access to its diagonal.

    Parameters
    ----------
    matrix : scipy sparse matrix or array-like
        Full symmetric matrix (both triangles), float64.
    check : bool
        Verify exact symmetry of the stored entries.
    bandwidth : int, optional
        Structural bandwidth hint, informational only.
    """

    def __init__(self, matrix, *, check: bool = True, bandwidth: Optional[int] = None):
        if isinstance(matrix, SparseSymmetricOperator):
            indptr, indices, data = matrix.indptr, matrix.indices, matrix.data
            dim = matrix.dim
        else:
            csr = sps.csr_matrix(matrix if sps.issparse(matrix) else np.asarray(matrix, dtype=float))
            if csr.shape[0] != csr.shape[1]:
                raise ValueError(f"expected a square matrix, got shape {csr.shape}")
            csr = csr.astype(float)
            csr.sum_duplicates()
            csr.sort_indices()
            indptr, indices, data = csr.indptr, csr.indices, csr.data
            dim = csr.shape[0]
        self._init_arrays(indptr, indices, data, dim)
        self.bandwidth_hint = bandwidth
        if check:
            self._check_symmetry()

    def _init_arrays(self, indptr, indices, data, dim):
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.data = np.asarray(data) if np.asarray(data).dtype == object else np.asarray(data, dtype=float)
        self._dim = int(dim)
        self._extended = self.data.dtype == object
        self._csr = None if self._extended else sps.csr_matrix(
            (self.data, self.indices, self.indptr), shape=(dim, dim))
        self._diag = self._extract_diagonal()

    # construction helpers -------------------------------------------------

    @classmethod
    def from_triplets(cls, rows, cols, vals, dim: int, **kw) -> "SparseSymmetricOperator":
        """Build from COO triplets; duplicate positions are summed."""
        vals = np.asarray(vals)
        if vals.dtype == object:
            acc: dict = {}
            for r, c, v in zip(rows, cols, vals):
                key = (int(r), int(c))
                acc[key] = acc[key] + v if key in acc else v
            return cls.from_entries(acc, dim, **kw)
        m = sps.coo_matrix((vals.astype(float), (np.asarray(rows), np.asarray(cols))), shape=(dim, dim))
        return cls(m.tocsr(), **kw)

    @classmethod
    def from_entries(cls, entries: dict, dim: int, *, check: bool = True, bandwidth=None):
        """Build from a ``{(row, col): value}`` mapping holding both triangles."""
        self = cls.__new__(cls)
        indptr, indices, data = _csr_from_entries(entries, dim)
        if not any(isinstance(v, mpmath.mpf) for v in data):
            data = data.astype(float)
        self._init_arrays(indptr, indices, data, dim)
        self.bandwidth_hint = bandwidth
        if check:
            self._check_symmetry()
        return self

    # basic properties -----------------------------------------------------

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def shape(self) -> tuple[int, int]:
        return (self._dim, self._dim)

    @property
    def nnz(self) -> int:
        return len(self.data)

    @property
    def is_extended(self) -> bool:
        return self._extended

    @property
    def precision(self) -> str:
        return prec.EXTENDED if self._extended else prec.DOUBLE

    def to_scipy(self) -> sps.csr_matrix:
        if self._extended:
            return self.to_double().to_scipy()
        return self._csr.copy()

    def diagonal(self) -> np.ndarray:
        """Full diagonal (a copy), length ``dim``."""
        return self._diag.copy()

    def rows(self) -> np.ndarray:
        return np.repeat(np.arange(self._dim), np.diff(self.indptr))

    def bandwidth(self) -> int:
        nz = np.array([v != 0 for v in self.data], dtype=bool)
        if not nz.any():
            return 0
        return int(np.max(np.abs(self.rows()[nz] - self.indices[nz])))

    def row_nnz(self) -> np.ndarray:
        return np.diff(self.indptr)

    def entries(self) -> dict:
        return {(int(r), int(c)): v for r, c, v in zip(self.rows(), self.indices, self.data)}

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """(column indices, values) of row ``i``."""
        a, b = self.indptr[i], self.indptr[i + 1]
        return self.indices[a:b].copy(), self.data[a:b].copy()

    # arithmetic -----------------------------------------------------------

    def matvec(self, v: np.ndarray) -> np.ndarray:
        if len(v) != self._dim:
            raise ValueError(f"vector length {len(v)} does not match dim {self._dim}")
        if self._extended or prec.is_extended(v):
            return self._matvec_object(v)
        return self._csr @ v

    def __matmul__(self, v):
        return self.matvec(v)

    def _matvec_object(self, v):
        data = self.data if self._extended else prec.to_extended(self.data)
        indptr, indices = self.indptr, self.indices
        out = np.empty(self._dim, dtype=object)
        with prec.workdps():
            zero = mpmath.mpf(0)
            for i in range(self._dim):
                acc = zero
                for j in range(indptr[i], indptr[i + 1]):
                    acc += data[j] * v[indices[j]]
                out[i] = acc
        return out

    def to_dense(self) -> np.ndarray:
        if self._extended:
            out = prec.zeros(self._dim * self._dim, prec.EXTENDED).reshape(self._dim, self._dim)
            for (r, c), v in self.entries().items():
                out[r, c] = v
            return out
        return self._csr.toarray()

    def to_double(self) -> "SparseSymmetricOperator":
        if not self._extended:
            return self
        return SparseSymmetricOperator(
            sps.csr_matrix((prec.to_double(self.data), self.indices, self.indptr), shape=self.shape),
            check=False, bandwidth=self.bandwidth_hint)

    def to_extended(self) -> "SparseSymmetricOperator":
        if self._extended:
            return self
        out = SparseSymmetricOperator.__new__(SparseSymmetricOperator)
        out._init_arrays(self.indptr, self.indices, prec.to_extended(self.data), self._dim)
        out.bandwidth_hint = self.bandwidth_hint
        return out

    def as_precision(self, precision: str) -> "SparseSymmetricOperator":
        return self.to_extended() if prec.check_precision(precision) == prec.EXTENDED else self.to_double()

    def offdiagonal(self) -> "SparseSymmetricOperator":
        """Copy with the diagonal entries removed from storage."""
        ents = {k: v for k, v in self.entries().items() if k[0] != k[1]}
        if not self._extended:
            return SparseSymmetricOperator(self._csr - sps.diags(self._diag), check=False)._pruned_diagonal()
        return SparseSymmetricOperator.from_entries(ents, self._dim, check=False)

    def _pruned_diagonal(self):
        coo = self._csr.tocoo()
        keep = coo.row != coo.col
        m = sps.coo_matrix((coo.data[keep], (coo.row[keep], coo.col[keep])), shape=self.shape).tocsr()
        m.sort_indices()
        return SparseSymmetricOperator(m, check=False)

    def scaled(self, c) -> "SparseSymmetricOperator":
        out = SparseSymmetricOperator.__new__(SparseSymmetricOperator)
        out._init_arrays(self.indptr, self.indices, self.data * c, self._dim)
        out.bandwidth_hint = self.bandwidth_hint
        return out

    def add_diagonal(self, d) -> "SparseSymmetricOperator":
        """Return ``self + diag(d)``."""
        d = np.asarray(d)
        if self._extended or d.dtype == object:
            ents = self.to_extended().entries()
            dd = prec.as_precision(d, prec.EXTENDED)
            for i in range(self._dim):
                ents[(i, i)] = ents.get((i, i), mpmath.mpf(0)) + dd[i]
            return SparseSymmetricOperator.from_entries(ents, self._dim, check=False)
        m = (self._csr + sps.diags(d.astype(float))).tocsr()
        m.sort_indices()
        return SparseSymmetricOperator(m, check=False)

    def submatrix(self, idx) -> "SparseSymmetricOperator":
        idx = np.asarray(idx)
        if self._extended:
            pos = {int(j): k for k, j in enumerate(idx)}
            sub = {(pos[r], pos[c]): v for (r, c), v in self.entries().items() if r in pos and c in pos}
            return SparseSymmetricOperator.from_entries(sub, len(idx), check=False)
        return SparseSymmetricOperator(self._csr[idx][:, idx], check=False)

    # internals ------------------------------------------------------------

    def _extract_diagonal(self) -> np.ndarray:
        if not self._extended:
            return self._csr.diagonal()
        out = prec.zeros(self._dim, prec.EXTENDED)
        rows = self.rows()
        for r, c, v in zip(rows, self.indices, self.data):
            if r == c:
                out[r] = v
        return out

    def _check_symmetry(self):
        if self._extended:
            ents = self.entries()
            for (r, c), v in ents.items():
                if ents.get((c, r), 0) != v:
                    raise SymmetryError(f"entry ({r},{c}) differs from ({c},{r})")
            return
        diff = (self._csr - self._csr.T).tocoo()
        if diff.nnz and np.any(diff.data != 0):
            raise SymmetryError("matrix is not exactly symmetric")

    def __repr__(self):
        return f"SparseSymmetricOperator(dim={self._dim}, nnz={self.nnz}, precision={self.precision})"
