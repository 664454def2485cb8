"""Triplet-form sparse operators shared by the lattice and spectra modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = ["SparseOperator"]


@dataclass(eq=False)
class SparseOperator:
    """Complex sparse matrix stored as canonical (row-major sorted, deduplicated) triplets."""

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    hermitian: bool = False

    @classmethod
    def from_triplets(cls, dim, rows, cols, vals, hermitian=False, tol=0.0):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=complex)
        if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= dim or cols.max() >= dim):
            raise IndexError("triplet index outside the basis")
        M = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
        M.sum_duplicates()
        out = cls.from_scipy(M, tol=tol)
        if hermitian:
            res = out.hermiticity_residual()
            if res > 1e-12:
                raise ValueError(f"operator flagged Hermitian but residual is {res:.3e}")
            out.hermitian = True
        return out

    @classmethod
    def from_scipy(cls, M, hermitian=False, tol=0.0):
        C = sp.coo_matrix(M)
        keep = np.abs(C.data) > tol
        r, c, v = C.row[keep], C.col[keep], C.data[keep].astype(complex)
        order = np.lexsort((c, r))
        return cls(C.shape[0], r[order].astype(np.int64), c[order].astype(np.int64), v[order], hermitian)

    @classmethod
    def diagonal(cls, values, hermitian=None):
        values = np.asarray(values, dtype=complex)
        idx = np.arange(values.size)
        if hermitian is None:
            hermitian = bool(np.all(values.imag == 0))
        return cls.from_triplets(values.size, idx, idx, values, hermitian=hermitian)

    @classmethod
    def identity(cls, dim):
        return cls.diagonal(np.ones(dim))

    @property
    def nnz(self) -> int:
        return int(self.vals.size)

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=(self.dim, self.dim))

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def dagger(self) -> "SparseOperator":
        return SparseOperator.from_scipy(self.to_scipy().conj().T, hermitian=self.hermitian)

    def hermiticity_residual(self) -> float:
        D = self.to_scipy() - self.to_scipy().conj().T
        return float(np.abs(D.data).max()) if D.nnz else 0.0

    def __add__(self, other):
        return SparseOperator.from_scipy(self.to_scipy() + other.to_scipy())

    def __sub__(self, other):
        return SparseOperator.from_scipy(self.to_scipy() - other.to_scipy())

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            return SparseOperator.from_scipy(self.to_scipy() @ other.to_scipy())
        return self.to_scipy() @ other

    def scale(self, c) -> "SparseOperator":
        return SparseOperator(self.dim, self.rows.copy(), self.cols.copy(), self.vals * c,
                              self.hermitian and np.isreal(c))

    def max_abs(self) -> float:
        return float(np.abs(self.vals).max()) if self.nnz else 0.0

    # Matrix Market -----------------------------------------------------------
    def write_mtx(self, path: str, comment: str = ""):
        """Coordinate complex general format, 1-based, values at 17 significant digits."""
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("%%MatrixMarket matrix coordinate complex general\n")
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
            fh.write(f"{self.dim} {self.dim} {self.nnz}\n")
            for r, c, v in zip(self.rows, self.cols, self.vals):
                fh.write(f"{r + 1} {c + 1} {v.real:.17g} {v.imag:.17g}\n")

    @classmethod
    def read_mtx(cls, path: str, hermitian: bool = False) -> "SparseOperator":
        from scipy.io import mmread

        M = mmread(path)
        if M.shape[0] != M.shape[1]:
            raise ValueError(f"{path}: matrix is not square")
        out = cls.from_scipy(M)
        if hermitian:
            res = out.hermiticity_residual()
            if res > 1e-12:
                raise ValueError(f"{path}: Hermiticity residual {res:.3e}")
            out.hermitian = True
        return out
