import numpy as np
import pytest

from gmamg import Permutation, SparseMatrix, exact_lu, factor_quality, ilu0, ilut, make_problem, solve_factored, to_dense
from gmamg.aggregation import aggregate_by_matching, galerkin_coarse
from gmamg.errors import FactorizationFailure, OracleCapError, PivotBreakdown
from gmamg.ilu import sparse_product
from gmamg.ordering import nested_dissection
from gmamg.problems import grid_target_nc

from conftest import laplacian_2d, random_spd, tridiag


def lu_dense(f):
    L = to_dense(f.L) + np.eye(f.n)
    U = to_dense(f.U)
    return L, U


def test_ilu0_diagonal():
    f = ilu0(SparseMatrix.from_dense(np.diag([2.0, 3.0, 4.0])))
    assert f.L.nnz == 0
    assert np.array_equal(to_dense(f.U), np.diag([2.0, 3.0, 4.0]))


def test_ilu0_tridiag_is_exact():
    f = ilu0(tridiag(3))
    L, U = lu_dense(f)
    assert np.allclose(np.diag(U), [2, 1.5, 4 / 3], rtol=1e-15)
    assert np.allclose(np.diag(L, -1), [-0.5, -2 / 3], rtol=1e-15)
    T = tridiag(30)
    assert np.abs(to_dense(sparse_product(SparseMatrix.from_dense(lu_dense(ilu0(T))[0]), ilu0(T).U))
                  - to_dense(T)).max() <= 1e-13


def test_ilu0_residual_outside_pattern():
    A = laplacian_2d(3)
    L, U = lu_dense(ilu0(A))
    R = to_dense(A) - L @ U
    pattern = to_dense(A) != 0
    assert np.abs(R[pattern]).max() <= 1e-14
    assert np.abs(R[~pattern]).max() > 0


def test_ilu0_pattern_subset():
    A = make_problem("dcc1-2d", 8).matrix
    f = ilu0(A)
    mask = to_dense(A) != 0
    L, U = lu_dense(f)
    assert not (L - np.eye(A.nrows))[~mask].any()
    assert not U[~mask].any()


def test_ilu0_breakdown_names_row():
    A = SparseMatrix.from_dense([[1.0, 1.0, 0], [1.0, 1.0, 1.0], [0, 1.0, 2.0]])
    with pytest.raises(PivotBreakdown) as exc:
        ilu0(A)
    assert exc.value.row == 1
    missing = SparseMatrix.from_dense([[1.0, 1.0], [1.0, 0.0]])
    with pytest.raises(PivotBreakdown):
        ilu0(missing)


def test_ilu0_permuted_breakdown_reports_original_row():
    A = SparseMatrix.from_dense([[2.0, 0, 0], [0, 1.0, 1.0], [0, 1.0, 1.0]])
    with pytest.raises(PivotBreakdown) as exc:
        ilu0(A, Permutation.from_forward([2, 1, 0]))
    assert exc.value.row == 1


def test_ilut_exact_on_small(rng):
    for _ in range(5):
        a = random_spd(rng, 12) * (rng.random((12, 12)) < 0.5)
        a = a + a.T + 30 * np.eye(12)
        A = SparseMatrix.from_dense(a)
        L, U = lu_dense(ilut(A, 0.0))
        assert np.linalg.norm(L @ U - a) <= 1e-12 * np.linalg.norm(a)


def test_ilut_drop_everything():
    f = ilut(tridiag(3), 10.0)
    assert f.L.nnz == 0
    assert np.array_equal(to_dense(f.U), np.diag([2.0, 2, 2]))


def test_ilut_storage_monotone():
    A = make_problem("dc1-2d", 20).matrix
    sizes = [ilut(A, t).nnz for t in (0, 1e-6, 1e-4, 1e-2)]
    assert sizes == sorted(sizes, reverse=True)


def test_ilut_shift_fallback():
    A = SparseMatrix.from_dense([[1.0, 1.0], [1.0, 1.0]])
    f = ilut(A, 0.0)
    assert f.shift > 0 and f.shift_attempts >= 1
    assert np.all(np.isfinite(f.pivots())) and np.all(f.pivots() != 0)


def test_ilut_failure_after_shifts():
    # a non-finite pivot survives every shift
    A = SparseMatrix(2, 2, [0, 1, 2], [0, 1], [np.nan, 1.0])
    with pytest.raises(FactorizationFailure):
        ilut(A, 0.0)


def test_solve_factored_examples():
    I3 = SparseMatrix.identity(3)
    z = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(solve_factored(ilu0(I3), z), z)
    t = solve_factored(exact_lu(tridiag(3)), np.array([1.0, 0.0, 1.0]))
    assert np.allclose(t, 1.0, rtol=1e-15)
    D = SparseMatrix.from_dense(np.diag([2.0, 4.0, 8.0]))
    rev = Permutation.from_forward([2, 1, 0])
    assert np.array_equal(solve_factored(ilu0(D, rev), z), solve_factored(ilu0(D), z))


def test_solve_factored_with_nd(rng):
    A = make_problem("dc1-2d", 12).matrix
    p = nested_dissection(A, 8)
    f = exact_lu(A, p)
    x = rng.standard_normal(A.nrows)
    assert np.allclose(solve_factored(f, A @ x), x, rtol=0, atol=1e-9 * np.abs(x).max())
    # residual in the permuted frame
    g = ilu0(A, p)
    zhat = rng.standard_normal(A.nrows)
    t = solve_factored(g, zhat[p.forward])
    L, U = lu_dense(g)
    assert np.linalg.norm(L @ U @ t[p.inverse] - zhat) <= 1e-12 * np.linalg.norm(zhat)


def test_quality_examples():
    D = SparseMatrix.from_dense(np.diag([1.0, 10.0]))
    q = factor_quality(D, exact_lu(D), compute_error=True)
    assert q.diag_ratio_bound == 10.0 and np.linalg.cond(to_dense(D)) == pytest.approx(10.0)
    I = SparseMatrix.identity(4)
    q = factor_quality(I, ilu0(I), compute_error=True)
    assert q.diag_ratio_bound == 1 and q.spd_estimate == 1 and q.unsym_estimate == 1
    assert q.relative_error == 0


def test_quality_spd_estimate_formula():
    A = tridiag(5)
    f = exact_lu(A)
    C = np.linalg.cholesky(to_dense(A))
    assert factor_quality(A, f).spd_estimate == pytest.approx(np.sum(C[-1] ** 2) / C[0, 0] ** 2)
    U = make_problem("dcc1-2d", 6).matrix
    q = factor_quality(U, ilu0(U))
    assert q.spd_estimate is None and q.unsym_estimate >= 1


def test_quality_relative_error_and_cap():
    A = make_problem("dc1-2d", 16).matrix
    assert factor_quality(A, exact_lu(A), compute_error=True).relative_error == 0.0
    q = factor_quality(A, ilut(A, 1e-2), compute_error=True)
    assert 0 < q.relative_error < 1
    with pytest.raises(OracleCapError):
        factor_quality(A, ilu0(A), compute_error=True, cap=100)


def test_condition_lower_bound(rng):
    fixtures = [tridiag(10), laplacian_2d(5), make_problem("dc1-2d", 6).matrix,
                SparseMatrix.from_dense(random_spd(rng, 16))]
    for A in fixtures:
        a = to_dense(A)
        q = factor_quality(A, ilu0(A))
        assert np.linalg.cond(a) >= q.diag_ratio_bound * (1 - 1e-12)


def test_condest_exceeds_bound_dc1_3d():
    A = make_problem("dc1-3d", 20).matrix
    q = factor_quality(A, ilu0(A))
    assert 7.5e3 / 3 <= q.diag_ratio_bound <= 7.5e3 * 3
    # extreme eigenvalues by inverse and direct power iteration (A is 8000 x 8000)
    f = exact_lu(A)
    v = np.random.default_rng(0).standard_normal(A.nrows)
    for _ in range(50):  # inverse iteration toward the smallest eigenvalue
        v = solve_factored(f, v)
        v /= np.linalg.norm(v)
    lam_min = v @ (A @ v)
    w = np.random.default_rng(1).standard_normal(A.nrows)
    for _ in range(200):
        w = A @ w
        w /= np.linalg.norm(w)
    lam_max = w @ (A @ w)
    assert lam_max / lam_min > q.diag_ratio_bound


def test_coarse_relative_error_scale():
    A = make_problem("dc1-2d", 48).matrix
    Ac = galerkin_coarse(A, aggregate_by_matching(A, grid_target_nc(A.nrows, 2, 3)))
    q = factor_quality(Ac, ilut(Ac, 1e-4), compute_error=True)
    assert q.relative_error <= 1e-3
