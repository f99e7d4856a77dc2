"""
Compressed sparse row storage and the kernels built on it.

Every matrix in the package (fine operator, Galerkin coarse operator,
triangular factors) is a :class:`SparseMatrix`.  Instances are immutable:
the backing arrays are flagged read-only after validation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, OracleCapError

__all__ = [
    "SparseMatrix",
    "Permutation",
    "spmv",
    "transpose",
    "permute_symmetric",
    "to_dense",
    "drop_zeros",
    "add_diagonal",
    "DENSE_ORACLE_CAP",
]

DENSE_ORACLE_CAP = 4_000_000


def _readonly(a, dtype):
    if isinstance(a, np.ndarray) and a.dtype == dtype and not a.flags.writeable \
            and a.flags.c_contiguous and a.ndim == 1:
        return a
    a = np.array(a, dtype=dtype).ravel()
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Square or rectangular CSR matrix with sorted, unique column indices per row.

    Parameters
    ----------
    nrows, ncols : int
        Shape.
    row_offsets : array of int, length ``nrows + 1``
    col_indices : array of int, length ``nnz``
    values : array of float64, length ``nnz``

    Explicitly stored zeros are allowed; use :func:`drop_zeros` to remove them.
    """

    nrows: int
    ncols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray
    _rows: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nrows, ncols = int(self.nrows), int(self.ncols)
        if nrows < 0 or ncols < 0:
            raise ContractError("negative matrix dimension")
        ptr = _readonly(self.row_offsets, np.int64)
        ind = _readonly(self.col_indices, np.int64)
        val = _readonly(self.values, np.float64)
        if ptr.shape != (nrows + 1,):
            raise ContractError("row_offsets must have length nrows + 1")
        if ptr[0] != 0 or ptr[-1] != ind.size or ind.size != val.size:
            raise ContractError("row_offsets inconsistent with stored entries")
        counts = np.diff(ptr)
        if np.any(counts < 0):
            raise ContractError("row_offsets must be nondecreasing")
        if ind.size:
            if ind.min() < 0 or ind.max() >= ncols:
                raise ContractError("column index out of range")
            rows = np.repeat(np.arange(nrows, dtype=np.int64), counts)
            same_row = rows[1:] == rows[:-1]
            if np.any(ind[1:][same_row] <= ind[:-1][same_row]):
                raise ContractError("column indices must be strictly increasing within a row")
        else:
            rows = np.zeros(0, dtype=np.int64)
        rows.flags.writeable = False
        object.__setattr__(self, "nrows", nrows)
        object.__setattr__(self, "ncols", ncols)
        object.__setattr__(self, "row_offsets", ptr)
        object.__setattr__(self, "col_indices", ind)
        object.__setattr__(self, "values", val)
        object.__setattr__(self, "_rows", rows)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_triplets(cls, nrows, ncols, rows, cols, vals):
        """Assemble from coordinate triplets; duplicates are summed.

        The result does not depend on the order of the input triplets.
        """
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=np.float64).ravel()
        if not (rows.size == cols.size == vals.size):
            raise ContractError("triplet arrays differ in length")
        if rows.size and (rows.min() < 0 or rows.max() >= nrows):
            raise ContractError("row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= ncols):
            raise ContractError("column index out of range")
        # sorting by value too makes the duplicate sums order-independent
        order = np.lexsort((vals, cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            start = np.ones(rows.size, dtype=bool)
            start[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            heads = np.flatnonzero(start)
            vals = np.add.reduceat(vals, heads)
            rows, cols = rows[heads], cols[heads]
        ptr = np.zeros(nrows + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=nrows), out=ptr[1:])
        return cls(nrows, ncols, ptr, cols, vals)

    @classmethod
    def from_dense(cls, a):
        """Store the nonzero entries of a 2-D array."""
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        r, c = np.nonzero(a)
        return cls.from_triplets(a.shape[0], a.shape[1], r, c, a[r, c])

    @classmethod
    def identity(cls, n):
        idx = np.arange(n, dtype=np.int64)
        return cls(n, n, np.arange(n + 1, dtype=np.int64), idx, np.ones(n))

    @classmethod
    def zeros(cls, nrows, ncols):
        return cls(nrows, ncols, np.zeros(nrows + 1, dtype=np.int64), [], [])

    # -- inspection -------------------------------------------------------

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def nnz(self):
        return int(self.values.size)

    @property
    def row_indices(self):
        """Row index of every stored entry (the COO expansion of ``row_offsets``)."""
        return self._rows

    def row(self, i):
        lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
        return self.col_indices[lo:hi], self.values[lo:hi]

    def diagonal(self):
        d = np.zeros(min(self.nrows, self.ncols))
        on = self._rows == self.col_indices
        d[self._rows[on]] = self.values[on]
        return d

    def has_diagonal_entries(self):
        """True when every diagonal position is stored (value may be zero)."""
        on = self._rows == self.col_indices
        return np.count_nonzero(on) == min(self.nrows, self.ncols)

    def equals(self, other):
        """Exact structural and bitwise value equality."""
        return (
            self.shape == other.shape
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
            and np.array_equal(self.values, other.values)
        )

    def is_symmetric(self, rtol=0.0):
        """Structural and numerical symmetry, entrywise within ``rtol * max|a|``."""
        if self.nrows != self.ncols:
            return False
        t = transpose(self)
        if not (np.array_equal(self.row_offsets, t.row_offsets)
                and np.array_equal(self.col_indices, t.col_indices)):
            return False
        if rtol == 0.0:
            return bool(np.array_equal(self.values, t.values))
        scale = np.abs(self.values).max(initial=0.0)
        return bool(np.all(np.abs(self.values - t.values) <= rtol * scale))

    def __matmul__(self, x):
        return spmv(self, x)

    def __repr__(self):
        return f"SparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz})"


@dataclass(frozen=True, eq=False)
class Permutation:
    """Relabeling of ``n`` unknowns: ``forward[old] = new``, ``inverse[new] = old``."""

    forward: np.ndarray
    inverse: np.ndarray

    def __post_init__(self):
        fwd = _readonly(self.forward, np.int64)
        inv = _readonly(self.inverse, np.int64)
        n = fwd.size
        if inv.size != n:
            raise ContractError("forward and inverse differ in length")
        if n and (fwd.min() < 0 or fwd.max() >= n or inv.min() < 0 or inv.max() >= n):
            raise ContractError("permutation entry out of range")
        if not np.array_equal(inv[fwd], np.arange(n)):
            raise ContractError("forward and inverse are not mutually inverse bijections")
        object.__setattr__(self, "forward", fwd)
        object.__setattr__(self, "inverse", inv)

    @classmethod
    def from_forward(cls, forward):
        forward = np.asarray(forward, dtype=np.int64)
        inverse = np.empty_like(forward)
        inverse[forward] = np.arange(forward.size)
        return cls(forward, inverse)

    @classmethod
    def from_order(cls, order):
        """Build from an elimination order: ``order[k]`` is the old index placed at ``k``."""
        order = np.asarray(order, dtype=np.int64)
        forward = np.empty_like(order)
        forward[order] = np.arange(order.size)
        return cls(forward, order)

    @classmethod
    def identity(cls, n):
        idx = np.arange(n, dtype=np.int64)
        return cls(idx, idx.copy())

    @property
    def size(self):
        return int(self.forward.size)

    def is_identity(self):
        return bool(np.array_equal(self.forward, np.arange(self.size)))


def spmv(A, x):
    """Return ``A @ x``.

    Row sums are accumulated per row in storage order, so the result is
    bitwise reproducible.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != A.ncols:
        raise ContractError(f"spmv: matrix has {A.ncols} columns, vector has length {x.size}")
    return np.bincount(A.row_indices, weights=A.values * x[A.col_indices], minlength=A.nrows)


def transpose(A):
    order = np.argsort(A.col_indices, kind="stable")
    ptr = np.zeros(A.ncols + 1, dtype=np.int64)
    np.cumsum(np.bincount(A.col_indices, minlength=A.ncols), out=ptr[1:])
    return SparseMatrix(A.ncols, A.nrows, ptr, A.row_indices[order], A.values[order])


def permute_symmetric(A, p):
    """Return B with ``B[p(i), p(j)] = A[i, j]`` (i.e. ``Pi A Pi^T``)."""
    if A.nrows != A.ncols:
        raise ContractError("permute_symmetric needs a square matrix")
    if p.size != A.nrows:
        raise ContractError("permutation size does not match matrix")
    f = p.forward
    return SparseMatrix.from_triplets(A.nrows, A.ncols, f[A.row_indices], f[A.col_indices], A.values)


def to_dense(A, cap=DENSE_ORACLE_CAP):
    if A.nrows * A.ncols > cap:
        raise OracleCapError(f"dense mirror of {A.nrows}x{A.ncols} exceeds cap of {cap} entries")
    d = np.zeros((A.nrows, A.ncols))
    d[A.row_indices, A.col_indices] = A.values
    return d


def drop_zeros(A):
    """Remove explicitly stored zero entries."""
    keep = A.values != 0.0
    if keep.all():
        return A
    ptr = np.zeros(A.nrows + 1, dtype=np.int64)
    np.cumsum(np.bincount(A.row_indices[keep], minlength=A.nrows), out=ptr[1:])
    return SparseMatrix(A.nrows, A.ncols, ptr, A.col_indices[keep], A.values[keep])


def add_diagonal(A, shift):
    """Return ``A + shift * I`` (square A)."""
    if A.nrows != A.ncols:
        raise ContractError("add_diagonal needs a square matrix")
    n = A.nrows
    idx = np.arange(n)
    return SparseMatrix.from_triplets(
        n, n,
        np.concatenate([A.row_indices, idx]),
        np.concatenate([A.col_indices, idx]),
        np.concatenate([A.values, np.full(n, float(shift))]),
    )
