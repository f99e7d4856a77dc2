import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmamg import (
    AggregateMap,
    SparseMatrix,
    aggregate_by_matching,
    aggregate_by_strength,
    galerkin_coarse,
    is_m_matrix_candidate,
    make_problem,
    match_heavy_edge,
    prolongate,
    restrict,
    to_dense,
)
from gmamg.aggregation import WeightedGraph, contract, matrix_graph, strong_sets
from gmamg.errors import ContractError

from conftest import laplacian_2d, random_sparse, tridiag


def dense_p(m):
    P = np.zeros((m.n_fine, m.n_aggregates))
    P[np.arange(m.n_fine), m.part] = 1.0
    return P


def test_aggregate_map_validation():
    with pytest.raises(ContractError):
        AggregateMap([0, 2], 3)  # aggregate 1 empty
    with pytest.raises(ContractError):
        AggregateMap([0, 3], 2)
    m = AggregateMap.from_part([5, 2, 5, 9])
    assert np.array_equal(m.part, [0, 1, 0, 2]) and m.n_aggregates == 3
    assert np.array_equal(m.sizes, [2, 1, 1])
    assert m.sizes.sum() == m.n_fine


def test_matching_examples():
    empty = WeightedGraph.from_edges(3, [], [], [])
    assert np.array_equal(match_heavy_edge(empty), [0, 1, 2])
    path = WeightedGraph.from_edges(4, [0, 1, 2], [1, 2, 3], [1.0, 1.0, 1.0])
    assert np.array_equal(match_heavy_edge(path), [1, 0, 3, 2])
    tri = WeightedGraph.from_edges(3, [0, 0, 1], [1, 2, 2], [5.0, 1.0, 1.0])
    assert np.array_equal(match_heavy_edge(tri), [1, 0, 2])


def test_matching_is_involution(rng):
    for _ in range(10):
        a = random_sparse(rng, 30, density=0.15)
        partner = match_heavy_edge(matrix_graph(SparseMatrix.from_dense(a)))
        assert np.array_equal(partner[partner], np.arange(30))


def test_matrix_graph_weights():
    A = SparseMatrix.from_dense([[4.0, -1.0, 0.0], [-3.0, 4.0, 2.0], [0.0, 0.0, 1.0]])
    g = matrix_graph(A)
    w = to_dense(SparseMatrix(3, 3, g.offsets, g.neighbors, g.weights))
    assert np.array_equal(w, [[0, 4, 0], [4, 0, 2], [0, 2, 0]])


def test_contract_sums_parallel_edges():
    g = WeightedGraph.from_edges(4, [0, 1, 2, 0], [1, 2, 3, 3], [1.0, 2.0, 3.0, 4.0])
    cg, node_map = contract(g, np.array([1, 0, 3, 2]))
    assert np.array_equal(node_map, [0, 0, 1, 1])
    assert cg.n_nodes == 2 and np.array_equal(cg.weights, [6.0, 6.0])


def test_aggregate_by_matching_examples():
    T = tridiag(8)
    assert np.array_equal(aggregate_by_matching(T, 8).part, np.arange(8))
    assert aggregate_by_matching(T, 1).n_aggregates == 1
    m = aggregate_by_matching(T, 4)
    assert np.array_equal(m.part, [0, 0, 1, 1, 2, 2, 3, 3])


def test_matching_hits_target_on_grid():
    A = make_problem("dc1-2d", 64).matrix
    for target in (455, 300, 17):
        assert aggregate_by_matching(A, target).n_aggregates == target


def test_matching_stagnates_without_edges():
    m = aggregate_by_matching(SparseMatrix.identity(5), 2)
    assert m.n_aggregates == 5


def test_matching_target_validation():
    with pytest.raises(ContractError):
        aggregate_by_matching(tridiag(4), 0)
    with pytest.raises(ContractError):
        aggregate_by_matching(tridiag(4), 5)


def test_strength_examples():
    m = aggregate_by_strength(SparseMatrix.identity(4), 0.5)
    assert m.n_aggregates == 4
    m = aggregate_by_strength(tridiag(4), 0.5)
    assert np.array_equal(m.part, [0, 0, 1, 1])
    L = laplacian_2d(3)
    ptr, col = strong_sets(L, 0.25)
    assert list(col[ptr[4]:ptr[5]]) == [1, 3, 5, 7]


def test_strength_covers_everything(rng):
    A = make_problem("dcc1-2d", 12).matrix
    m = aggregate_by_strength(A, 0.25)
    assert m.n_fine == A.nrows and m.sizes.min() >= 1


def test_transfer_examples():
    m = AggregateMap([0, 1, 0, 1], 2)
    assert np.array_equal(prolongate(m, [2.0, 3.0]), [2, 3, 2, 3])
    assert np.array_equal(prolongate(m, np.ones(2)), np.ones(4))
    assert np.array_equal(restrict(m, [1.0, 0, -1, 0]), [0, 0])
    assert np.array_equal(restrict(m, np.ones(4)), [2, 2])
    ident = AggregateMap.identity(3)
    assert np.array_equal(prolongate(ident, [1.0, 2, 3]), [1, 2, 3])
    assert np.array_equal(restrict(ident, [1.0, 2, 3]), [1, 2, 3])
    with pytest.raises(ContractError):
        restrict(m, np.ones(3))


def test_galerkin_examples():
    T = tridiag(4)
    assert galerkin_coarse(T, AggregateMap.identity(4)).equals(T)
    one = galerkin_coarse(T, AggregateMap(np.zeros(4, dtype=int), 1))
    assert to_dense(one)[0, 0] == to_dense(T).sum()
    Ac = galerkin_coarse(T, AggregateMap([0, 1, 0, 1], 2))
    assert np.array_equal(to_dense(Ac), [[4, -3], [-3, 4]])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 20), st.integers(1, 20), st.integers(0, 2**31 - 1))
def test_restrict_prolongate_sizes(n, nc, seed):
    rng = np.random.default_rng(seed)
    nc = min(nc, n)
    part = np.concatenate([np.arange(nc), rng.integers(0, nc, n - nc)])
    m = AggregateMap(rng.permutation(part), nc)
    # integer-valued, so the aggregate sums are exact in floating point
    x = rng.integers(-1000, 1000, nc).astype(float)
    assert np.array_equal(restrict(m, prolongate(m, x)), m.sizes * x)


def test_coarse_spd_and_m_matrix_preserved():
    for case, n in (("dc1-2d", 12), ("dc1-3d", 6)):
        A = make_problem(case, n).matrix
        for m in (aggregate_by_matching(A, max(1, A.nrows // 9)), aggregate_by_strength(A)):
            Ac = galerkin_coarse(A, m)
            assert is_m_matrix_candidate(Ac)[0]
            assert np.linalg.eigvalsh(to_dense(Ac)).min() > 0


def test_filtering_with_exact_coarse_inverse(rng):
    A = make_problem("dc1-2d", 8).matrix
    m = aggregate_by_matching(A, 7)
    P = dense_p(m)
    a = to_dense(A)
    Mi = P @ np.linalg.inv(P.T @ a @ P) @ P.T
    for _ in range(5):
        xc = rng.standard_normal(m.n_aggregates)
        assert np.linalg.norm(Mi @ a @ P @ xc - P @ xc) <= 1e-10 * np.linalg.norm(P @ xc)
