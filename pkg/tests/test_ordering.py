import numpy as np
import pytest

from gmamg import OrderingKind, SparseMatrix, make_ordering, make_problem, nested_dissection, permute_symmetric, to_dense
from gmamg.graph import connected_components, symmetrized_pattern

from conftest import laplacian_2d, tridiag


def is_bijection(p):
    n = p.size
    return np.array_equal(np.sort(p.forward), np.arange(n)) and np.array_equal(p.forward[p.inverse], np.arange(n))


def test_small_is_identity():
    assert nested_dissection(tridiag(5), 32).is_identity()
    assert make_ordering(SparseMatrix.identity(1), OrderingKind.NESTED_DISSECTION).is_identity()
    assert make_ordering(laplacian_2d(8), "natural").is_identity()


def test_path_middle_last():
    p = nested_dissection(tridiag(7), 2)
    assert p.inverse[-1] == 3
    assert is_bijection(p)


def test_grid_3x3_separator_last():
    L = laplacian_2d(3)
    p = nested_dissection(L, 2)
    sep = p.inverse[-3:]
    rest = np.setdiff1d(np.arange(9), sep)
    keep = np.isin(L.row_indices, rest) & np.isin(L.col_indices, rest)
    sub = SparseMatrix.from_triplets(9, 9, L.row_indices[keep], L.col_indices[keep], L.values[keep])
    ptr, adj = symmetrized_pattern(sub)
    comps = connected_components(ptr, adj, 9, allowed=np.isin(np.arange(9), rest))
    assert len(comps) == 2


def test_top_level_blocks_decoupled():
    m = 12
    L = laplacian_2d(m)
    leaf = 16
    p = nested_dissection(L, leaf)
    B = to_dense(permute_symmetric(L, p))
    n = m * m
    # largest leading block [0, s) that splits into two uncoupled pieces [0, c), [c, s)
    sep_start = None
    for s in range(n - 1, 0, -1):
        blk = B[:s, :s]
        for c in range(1, s):
            if not blk[:c, c:s].any():
                sep_start = (c, s)
                break
        if sep_start:
            break
    assert sep_start is not None
    c, s = sep_start
    assert c >= n // 4 and s - c >= n // 4


def test_deterministic_and_valid():
    A = make_problem("dcc1-2d", 20).matrix
    p1 = nested_dissection(A, 8)
    p2 = nested_dissection(A, 8)
    assert np.array_equal(p1.forward, p2.forward)
    assert is_bijection(p1)


def test_disconnected_components():
    a = np.zeros((80, 80))
    a[:40, :40] = to_dense(tridiag(40))
    a[40:, 40:] = to_dense(tridiag(40))
    p = nested_dissection(SparseMatrix.from_dense(a), 8)
    assert is_bijection(p)
    # components are ordered one after the other
    assert set(p.inverse[:40]) == set(range(40))


def test_leaf_size_validation():
    with pytest.raises(ValueError):
        nested_dissection(tridiag(4), 0)
