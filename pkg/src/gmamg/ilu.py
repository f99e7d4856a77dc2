"""
Incomplete LU factorizations and their quality estimates.

``ilu0`` keeps the sparsity pattern of the matrix (the smoother),
``ilut`` drops small entries row by row (the inexact coarse solve), and
``exact_lu`` is ``ilut`` with a zero threshold.  None of them pivot; a
threshold factorization that meets a tiny pivot is retried with a growing
diagonal shift.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ContractError, FactorizationFailure, OracleCapError, PivotBreakdown
from .sparse import DENSE_ORACLE_CAP, Permutation, SparseMatrix, permute_symmetric

log = logging.getLogger(__name__)

__all__ = [
    "IncompleteFactorization",
    "FactorQualityReport",
    "ilu0",
    "ilut",
    "exact_lu",
    "solve_factored",
    "factor_quality",
    "sparse_product",
]

SHIFT_SCALE = 1e-8
MAX_SHIFT_ATTEMPTS = 10
SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class IncompleteFactorization:
    """``L U ~ Pi A Pi^T`` with unit lower ``L`` (diagonal implicit) and upper ``U``.

    ``U`` stores its diagonal as the first entry of every row.
    """

    L: SparseMatrix
    U: SparseMatrix
    perm: Permutation
    kind: str
    tol: float = 0.0
    shift: float = 0.0
    shift_attempts: int = 0

    @property
    def n(self):
        return self.U.nrows

    @property
    def nnz(self):
        return self.L.nnz + self.U.nnz

    def pivots(self):
        return self.U.values[self.U.row_offsets[:-1]]


def _permuted(A, perm):
    if A.nrows != A.ncols:
        raise ContractError("factorization needs a square matrix")
    if perm is None:
        return A, Permutation.identity(A.nrows)
    if perm.size != A.nrows:
        raise ContractError("permutation size does not match matrix")
    return (A if perm.is_identity() else permute_symmetric(A, perm)), perm


def ilu0(A, perm=None):
    """Zero fill-in incomplete LU of ``Pi A Pi^T``."""
    B, perm = _permuted(A, perm)
    n = B.nrows
    lu, diag_pos, bad = _kernels.ilu0_factor(n, B.row_offsets, B.col_indices, B.values)
    if bad >= 0:
        piv = lu[diag_pos[bad]] if diag_pos[bad] >= 0 else 0.0
        raise PivotBreakdown(int(perm.inverse[bad]), float(piv), stage="ilu0")
    rows, cols = B.row_indices, B.col_indices
    low = cols < rows
    counts_l = np.bincount(rows[low], minlength=n)
    counts_u = np.bincount(rows[~low], minlength=n)
    L = SparseMatrix(n, n, np.concatenate([[0], np.cumsum(counts_l)]), cols[low], lu[low])
    U = SparseMatrix(n, n, np.concatenate([[0], np.cumsum(counts_u)]), cols[~low], lu[~low])
    return IncompleteFactorization(L, U, perm, "ilu0")


def ilut(A, tol, perm=None):
    """Threshold incomplete LU.

    Entries of row ``i`` below ``tol * ||a_i||_2`` are discarded; ``tol = 0``
    gives the complete factorization.  On a tiny pivot the whole matrix is
    refactored with a diagonal shift of ``1e-8 * max|a_ij|``, doubled per
    attempt, up to ten attempts.
    """
    if tol < 0:
        raise ContractError("drop tolerance must be nonnegative")
    B, perm = _permuted(A, perm)
    n = B.nrows
    kind = "exact" if tol == 0 else "ilut"
    amax = float(np.abs(B.values).max(initial=0.0)) or 1.0
    shift = 0.0
    for attempt in range(MAX_SHIFT_ATTEMPTS + 1):
        if attempt:
            shift = SHIFT_SCALE * amax * 2 ** (attempt - 1)
            log.warning("ilut: pivot breakdown at row %d, retrying with diagonal shift %.3e",
                        int(perm.inverse[bad]), shift)
        out = _kernels.ilut_factor(n, B.row_offsets, B.col_indices, B.values, float(tol), shift)
        l_ptr, l_ind, l_val, u_ptr, u_ind, u_val, bad = out
        if bad < 0:
            L = SparseMatrix(n, n, l_ptr, l_ind, l_val)
            U = SparseMatrix(n, n, u_ptr, u_ind, u_val)
            return IncompleteFactorization(L, U, perm, kind, float(tol), shift, attempt)
    raise FactorizationFailure(
        f"pivot breakdown persists after {MAX_SHIFT_ATTEMPTS} diagonal shifts", stage="ilut")


def exact_lu(A, perm=None):
    return ilut(A, 0.0, perm)


def solve_factored(f, z):
    """Return ``t`` with ``L U (Pi t) = Pi z``."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (f.n,):
        raise ContractError(f"right-hand side must have length {f.n}")
    zp = z[f.perm.inverse]
    y = _kernels.lower_unit_solve(f.n, f.L.row_offsets, f.L.col_indices, f.L.values, zp)
    t = _kernels.upper_solve(f.n, f.U.row_offsets, f.U.col_indices, f.U.values, y)
    return t[f.perm.forward]


def sparse_product(A, B):
    if A.ncols != B.nrows:
        raise ContractError("inner dimensions differ")
    ptr, ind, val = _kernels.spgemm(A.nrows, B.ncols, A.row_offsets, A.col_indices, A.values,
                                    B.row_offsets, B.col_indices, B.values)
    return SparseMatrix(A.nrows, B.ncols, ptr, ind, val)


def _unit_lower(L):
    n = L.nrows
    idx = np.arange(n)
    return SparseMatrix.from_triplets(n, n, np.concatenate([L.row_indices, idx]),
                                      np.concatenate([L.col_indices, idx]),
                                      np.concatenate([L.values, np.ones(n)]))


def _product(f):
    return sparse_product(_unit_lower(f.L), f.U)


@dataclass(frozen=True)
class FactorQualityReport:
    """Cheap conditioning indicators for a factorization.

    ``diag_ratio_bound`` is ``max a_ii / min a_ii``, a lower bound on the
    condition number of an SPD matrix.  ``spd_estimate`` is
    ``||L_c(N, :)||^2 / l_c11^2`` for the Cholesky-scaled factor
    ``L_c = L diag(U)^(1/2)`` (symmetric input only).  ``unsym_estimate`` is
    the spread ``max |u_ii| / min |u_ii|`` of the pivots.  ``relative_error``
    is ``||LU - L~U~||_F / ||LU||_F`` against the complete factorization.
    """

    diag_ratio_bound: float | None
    spd_estimate: float | None
    unsym_estimate: float
    relative_error: float | None = None
    shift: float = 0.0


def factor_quality(A, f, compute_error=False, cap=DENSE_ORACLE_CAP):
    if A.nrows != f.n:
        raise ContractError("factorization and matrix sizes differ")
    d = A.diagonal()
    diag_ratio = float(d.max() / d.min()) if d.size and d.min() > 0 else None

    piv = f.pivots()
    apiv = np.abs(piv)
    unsym = float(apiv.max() / apiv.min()) if apiv.size else 1.0

    spd = None
    if f.n and np.all(piv > 0) and A.is_symmetric(rtol=SYMMETRY_RTOL):
        last_cols, last_vals = f.L.row(f.n - 1)
        spd = float((np.sum(last_vals**2 * piv[last_cols]) + piv[-1]) / piv[0])

    rel = None
    if compute_error:
        if A.nrows * A.ncols > cap:
            raise OracleCapError(f"relative error needs n^2 = {A.nrows * A.ncols} <= {cap}")
        P_ref = _product(exact_lu(A, f.perm))
        P_f = _product(f)
        diff = SparseMatrix.from_triplets(
            f.n, f.n,
            np.concatenate([P_ref.row_indices, P_f.row_indices]),
            np.concatenate([P_ref.col_indices, P_f.col_indices]),
            np.concatenate([P_ref.values, -P_f.values]),
        )
        den = np.linalg.norm(P_ref.values)
        rel = float(np.linalg.norm(diff.values) / den) if den > 0 else 0.0
    return FactorQualityReport(diag_ratio, spd, unsym, rel, f.shift)
