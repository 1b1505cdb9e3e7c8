"""Matrix Market I/O for operators and pencils (symmetric coordinate format)."""

from __future__ import annotations

import scipy.io
import scipy.sparse as sps

from .operator import SparseSymmetricOperator
from .pencil import SymmetricPencil

PRECISION = 17


def write_operator(path, H: SparseSymmetricOperator, comment: str = "") -> None:
    """Write ``H`` (double precision) as a symmetric coordinate file with 17 significant digits."""
    M = H.to_double().to_scipy().tocoo()
    scipy.io.mmwrite(str(path), M, comment=comment, field="real", precision=PRECISION, symmetry="symmetric")


def read_operator(path) -> SparseSymmetricOperator:
    M = scipy.io.mmread(str(path))
    if not sps.issparse(M):
        M = sps.csr_matrix(M)
    return SparseSymmetricOperator(M.tocsr())


def write_pencil(path_a, path_s, pencil: SymmetricPencil, comment: str = "") -> None:
    write_operator(path_a, pencil.A, comment)
    write_operator(path_s, pencil.S, comment)


def read_pencil(path_a, path_s) -> SymmetricPencil:
    return SymmetricPencil(read_operator(path_a), read_operator(path_s))
