import numpy as np
import pytest

from gmamg import SparseMatrix


def tridiag(n, lo=-1.0, d=2.0, up=-1.0):
    a = d * np.eye(n) + lo * np.eye(n, k=-1) + up * np.eye(n, k=1)
    return SparseMatrix.from_dense(a)


def laplacian_2d(m):
    """5-point Laplacian (Dirichlet) on an m x m grid, unscaled."""
    t = 2 * np.eye(m) - np.eye(m, k=1) - np.eye(m, k=-1)
    return SparseMatrix.from_dense(np.kron(np.eye(m), t) + np.kron(t, np.eye(m)))


def random_sparse(rng, n, m=None, density=0.3, low=-1.0, high=1.0):
    m = n if m is None else m
    a = rng.uniform(low, high, (n, m)) * (rng.random((n, m)) < density)
    return a


def random_spd(rng, n):
    q = rng.standard_normal((n, n))
    return q @ q.T + n * np.eye(n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
