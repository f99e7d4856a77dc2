import numpy as np
import pytest

from gmamg import (
    AggregateMap,
    SparseMatrix,
    TwoGridConfig,
    TwoGridPreconditioner,
    apply_b_inverse,
    apply_m_inverse,
    build,
    exact_lu,
    galerkin_coarse,
    ilu0,
    make_problem,
    solve_factored,
    to_dense,
)
from gmamg.errors import ContractError, FactorizationFailure, PivotBreakdown
from gmamg.twogrid import config_for_method

from conftest import random_spd, tridiag


def dense_p(m):
    P = np.zeros((m.n_fine, m.n_aggregates))
    P[np.arange(m.n_fine), m.part] = 1.0
    return P


def assemble(A, part, smoother=None, exact=True):
    m = AggregateMap.from_part(part)
    Ac = galerkin_coarse(A, m)
    return TwoGridPreconditioner(A, smoother or ilu0(A), m, exact_lu(Ac), Ac)


def dense_operator(f):
    n = f.n
    return np.column_stack([solve_factored(f, e) for e in np.eye(n)])


def dense_b_inverse(p):
    a = to_dense(p.A)
    P = dense_p(p.aggregates)
    Si = dense_operator(p.smoother)
    Mi = P @ dense_operator(p.coarse_factor) @ P.T
    return Si + Mi - Mi @ a @ Si, Si, Mi


def test_config_validation():
    with pytest.raises(ContractError):
        TwoGridConfig(cf=1.0)
    with pytest.raises(ContractError):
        TwoGridConfig(nc=0)
    with pytest.raises(ContractError):
        TwoGridConfig(aggregation="metis")
    assert TwoGridConfig(coarse_tol=0).coarse_exact
    cfg = config_for_method("EGMG-ND", cf=3)
    assert cfg.coarse_exact and cfg.smoother_ordering.value == "nested_dissection"
    assert not config_for_method("gmg-no", cf=3).coarse_exact
    with pytest.raises(ContractError):
        config_for_method("amg", cf=3)


def test_identity_partition_coarse_is_exact(rng):
    A = SparseMatrix.from_dense(random_spd(rng, 10))
    p = build(A, TwoGridConfig(nc=10, coarse_tol=None))
    x = rng.standard_normal(10)
    assert np.allclose(apply_m_inverse(p, A @ x), x, atol=1e-10)
    h = rng.standard_normal(10)
    assert np.allclose(apply_m_inverse(p, h), np.linalg.solve(to_dense(A), h), atol=1e-10)


def test_build_dc1_64_coarse_size():
    A = make_problem("dc1-2d", 64).matrix
    p = build(A, TwoGridConfig(cf=3, coarse_tol=1e-4), dim=2)
    t = (64 / 3) ** 2
    assert np.ceil(0.5 * t) <= p.aggregates.n_aggregates <= 2 * t
    r = p.report
    assert r.n_coarse == p.aggregates.n_aggregates and r.nnz_smoother == A.nnz
    assert r.nnz_coarse_factor > 0 and r.seconds >= 0


def test_cf_needs_dim():
    with pytest.raises(ContractError):
        build(tridiag(10), TwoGridConfig(cf=2))
    p = build(tridiag(10), TwoGridConfig(cf=2), dim=1)
    assert p.aggregates.n_aggregates == 5


def test_counterexample_partition():
    A = tridiag(4)
    p = assemble(A, [0, 1, 0, 1])
    assert np.array_equal(to_dense(p.coarse_matrix), [[4, -3], [-3, 4]])
    x = np.array([1.0, 0, -1, 0])
    assert np.array_equal(apply_m_inverse(p, x), np.zeros(4))
    P = dense_p(p.aggregates)
    assert x @ P @ to_dense(p.coarse_matrix) @ P.T @ x == 0


def test_exact_smoother_telescopes(rng):
    A = make_problem("dcc1-2d", 6).matrix
    p = assemble(A, np.arange(36) // 4, smoother=exact_lu(A))
    z = rng.standard_normal(36)
    assert np.allclose(apply_b_inverse(p, z), np.linalg.solve(to_dense(A), z), atol=1e-10)


def test_b_inverse_zero_and_linear(rng):
    A = make_problem("dc1-2d", 8).matrix
    p = build(A, TwoGridConfig(cf=2), dim=2)
    assert np.array_equal(apply_b_inverse(p, np.zeros(64)), np.zeros(64))
    u, v = rng.standard_normal(64), rng.standard_normal(64)
    lhs = apply_b_inverse(p, 2.5 * u - 0.5 * v)
    rhs = 2.5 * apply_b_inverse(p, u) - 0.5 * apply_b_inverse(p, v)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)


def test_dense_two_grid_formula_random_spd(rng):
    A = SparseMatrix.from_dense(random_spd(rng, 16))
    p = build(A, TwoGridConfig(nc=16, coarse_tol=None))
    Bi, _, _ = dense_b_inverse(p)
    z = rng.standard_normal(16)
    assert np.linalg.norm(apply_b_inverse(p, z) - Bi @ z) <= 1e-11 * np.linalg.norm(Bi @ z)


def test_error_propagation_factorizes():
    A = make_problem("dc1-2d", 5).matrix
    p = build(A, TwoGridConfig(nc=6, coarse_tol=None))
    a = to_dense(A)
    Bi, Si, Mi = dense_b_inverse(p)
    I = np.eye(25)
    lhs = I - Bi @ a
    rhs = (I - Mi @ a) @ (I - Si @ a)
    assert np.abs(lhs - rhs).max() <= 1e-11 * max(1.0, np.abs(rhs).max())
    # filtering: (I - M^-1 A) P = 0
    assert np.abs((I - Mi @ a) @ dense_p(p.aggregates)).max() <= 1e-10


def test_apply_is_deterministic(rng):
    A = make_problem("dc1-2d", 16).matrix
    z = rng.standard_normal(256)
    a = apply_b_inverse(build(A, TwoGridConfig(cf=3), dim=2), z)
    b = apply_b_inverse(build(A, TwoGridConfig(cf=3), dim=2), z)
    assert np.array_equal(a, b)


def test_strength_config():
    A = make_problem("dc1-2d", 16).matrix
    p = build(A, TwoGridConfig(aggregation="strength", beta=0.25, cf=None))
    assert 1 < p.aggregates.n_aggregates < 256


def test_stage_labels():
    bad = SparseMatrix.from_dense([[1.0, 1.0, 0], [1.0, 1.0, 1.0], [0, 1.0, 2.0]])
    with pytest.raises(PivotBreakdown) as exc:
        build(bad, TwoGridConfig(nc=3, coarse_tol=None))
    assert exc.value.stage == "smoother"
    nan = SparseMatrix(2, 2, [0, 1, 2], [0, 1], [np.nan, 1.0])
    with pytest.raises(FactorizationFailure) as exc:
        build(nan, TwoGridConfig(nc=2, coarse_tol=None))
    assert exc.value.stage == "coarse"


def test_preconditioner_shape_checks():
    A = tridiag(4)
    with pytest.raises(ContractError):
        TwoGridPreconditioner(A, ilu0(A), AggregateMap.identity(3), exact_lu(tridiag(3)))
    p = assemble(A, [0, 0, 1, 1])
    with pytest.raises(ContractError):
        apply_b_inverse(p, np.ones(3))
