"""
Aggregation coarsening and the piecewise-constant transfer operators.

An :class:`AggregateMap` is the ``part`` array sending each fine unknown to
its aggregate.  It stands in for the boolean interpolation matrix ``P``
(``P[i, j] = 1`` iff ``part[i] == j``), which is never formed.

Two ways of building aggregates are provided:

* :func:`aggregate_by_matching` contracts the matrix graph by repeated greedy
  heavy-edge matching until the requested number of aggregates is reached;
* :func:`aggregate_by_strength` groups each node with its strongly
  negatively coupled neighbors, lowest unmarked-neighbor count first.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .sparse import SparseMatrix, transpose

__all__ = [
    "AggregateMap",
    "WeightedGraph",
    "matrix_graph",
    "match_heavy_edge",
    "contract",
    "aggregate_by_matching",
    "aggregate_by_strength",
    "strong_sets",
    "prolongate",
    "restrict",
    "galerkin_coarse",
]


@dataclass(frozen=True, eq=False)
class AggregateMap:
    """Fine node -> aggregate index, with every aggregate nonempty."""

    part: np.ndarray
    n_aggregates: int

    def __post_init__(self):
        part = np.array(self.part, dtype=np.int64).ravel()
        nc = int(self.n_aggregates)
        if part.size and (part.min() < 0 or part.max() >= nc):
            raise ContractError("aggregate index out of range")
        if np.bincount(part, minlength=nc).min(initial=1) == 0:
            raise ContractError("every aggregate must contain at least one node")
        part.flags.writeable = False
        object.__setattr__(self, "part", part)
        object.__setattr__(self, "n_aggregates", nc)

    @classmethod
    def from_part(cls, part):
        """Wrap a labelling, renumbering labels densely in order of first use."""
        part = np.asarray(part, dtype=np.int64)
        _, first, inv = np.unique(part, return_index=True, return_inverse=True)
        rank = np.empty(first.size, dtype=np.int64)
        rank[np.argsort(first, kind="stable")] = np.arange(first.size)
        return cls(rank[inv], first.size)

    @classmethod
    def identity(cls, n):
        return cls(np.arange(n), n)

    @property
    def n_fine(self):
        return int(self.part.size)

    @property
    def sizes(self):
        return np.bincount(self.part, minlength=self.n_aggregates)

    def members(self, j):
        return np.flatnonzero(self.part == j)


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected graph in CSR form; no self-loops, symmetric weights."""

    offsets: np.ndarray
    neighbors: np.ndarray
    weights: np.ndarray

    @property
    def n_nodes(self):
        return int(self.offsets.size - 1)

    @classmethod
    def from_edges(cls, n, u, v, w):
        """Build from undirected edges (each listed once or twice); parallel edges add up."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        w = np.asarray(w, dtype=np.float64)
        keep = u != v
        u, v, w = u[keep], v[keep], w[keep]
        G = SparseMatrix.from_triplets(n, n, np.concatenate([u, v]), np.concatenate([v, u]),
                                       np.concatenate([w, w]))
        return cls(G.row_offsets, G.col_indices, G.values)


def matrix_graph(A):
    """Adjacency graph of ``A`` weighted by ``|a_ij| + |a_ji|``."""
    if A.nrows != A.ncols:
        raise ContractError("matrix graph needs a square matrix")
    # each stored a_ij contributes |a_ij| to the undirected edge {i, j};
    # from_edges mirrors it, so the edge ends up with |a_ij| + |a_ji|
    off = A.row_indices != A.col_indices
    return WeightedGraph.from_edges(A.nrows, A.row_indices[off], A.col_indices[off], np.abs(A.values[off]))


def match_heavy_edge(g):
    """Greedy heavy-edge matching.

    Nodes are visited in ascending order; an unmatched node is paired with its
    heaviest unmatched neighbor (ties go to the smaller index).  Returns
    ``partner`` with ``partner[v] == v`` for unmatched nodes.
    """
    n = g.n_nodes
    ptr, nbr, wgt = g.offsets.tolist(), g.neighbors.tolist(), g.weights.tolist()
    matched = [-1] * n  # -1 means free
    for v in range(n):
        if matched[v] >= 0:
            continue
        best, best_w = -1, -np.inf
        for k in range(ptr[v], ptr[v + 1]):
            u = nbr[k]
            # neighbors are sorted, so strict '>' keeps the smaller index on ties
            if matched[u] < 0 and u != v and wgt[k] > best_w:
                best, best_w = u, wgt[k]
        if best < 0:
            matched[v] = v
        else:
            matched[v] = best
            matched[best] = v
    return np.array(matched, dtype=np.int64)


def contract(g, partner):
    """Collapse matched pairs; returns ``(coarse_graph, node_map)``.

    Coarse node ids follow the smaller member of each pair in ascending order.
    Parallel edges are summed and self-loops dropped.
    """
    n = g.n_nodes
    rep = np.minimum(np.arange(n), partner)
    is_rep = rep == np.arange(n)
    cid = np.cumsum(is_rep) - 1
    node_map = cid[rep]
    nc = int(is_rep.sum())
    src = np.repeat(np.arange(n), np.diff(g.offsets))
    cu, cv = node_map[src], node_map[g.neighbors]
    # every undirected edge appears twice in CSR; keep one orientation
    once = src < g.neighbors
    coarse = WeightedGraph.from_edges(nc, cu[once], cv[once], g.weights[once])
    return coarse, node_map


def _trim_pairs(g, partner, keep):
    """Keep only the ``keep`` heaviest pairs (ties: smaller first member)."""
    v = np.arange(g.n_nodes)
    first = np.flatnonzero(partner > v)
    if first.size <= keep:
        return partner
    src = np.repeat(v, np.diff(g.offsets))
    w = np.zeros(g.n_nodes)
    hit = g.neighbors == partner[src]
    w[src[hit]] = g.weights[hit]
    order = first[np.argsort(-w[first], kind="stable")][:keep]
    out = v.copy()
    out[order] = partner[order]
    out[partner[order]] = order
    return out


def aggregate_by_matching(A, target_nc):
    """Aggregates from repeated heavy-edge matching and pairwise contraction.

    Passes continue until at most ``target_nc`` groups remain or a pass
    matches nothing (e.g. the remaining graph has no edges).  A pass that
    would overshoot contracts only its heaviest pairs, so the count lands on
    ``target_nc`` whenever enough pairs exist.
    """
    N = A.nrows
    if A.nrows != A.ncols:
        raise ContractError("aggregation needs a square matrix")
    if not 1 <= target_nc <= max(N, 1):
        raise ContractError(f"target_nc must lie in [1, {N}], got {target_nc}")
    part = np.arange(N, dtype=np.int64)
    g = matrix_graph(A)
    while g.n_nodes > target_nc:
        partner = match_heavy_edge(g)
        if np.all(partner == np.arange(g.n_nodes)):
            break
        partner = _trim_pairs(g, partner, g.n_nodes - target_nc)
        g, node_map = contract(g, partner)
        part = node_map[part]
    return AggregateMap(part, g.n_nodes)


def strong_sets(A, beta):
    """Strong negative couplings: ``j in S_i`` iff ``a_ij < -beta * max_{k != i} |a_ik|``.

    Returned as a CSR pattern ``(offsets, columns)``.
    """
    rows, cols, vals = A.row_indices, A.col_indices, A.values
    off = rows != cols
    rowmax = np.zeros(A.nrows)
    np.maximum.at(rowmax, rows[off], np.abs(vals[off]))
    strong = off & (vals < -beta * rowmax[rows])
    S = SparseMatrix.from_triplets(A.nrows, A.ncols, rows[strong], cols[strong], np.ones(strong.sum()))
    return S.row_offsets, S.col_indices


def aggregate_by_strength(A, beta=0.25):
    """Aggregation driven by strength of connection.

    The unmarked node with the fewest unmarked strong neighbors (ties: lowest
    index) seeds an aggregate together with those neighbors.
    """
    if A.nrows != A.ncols:
        raise ContractError("aggregation needs a square matrix")
    if not 0.0 < beta <= 1.0:
        raise ContractError("beta must lie in (0, 1]")
    n = A.nrows
    sptr, scol = strong_sets(A, beta)
    # who has j among its strong neighbors: needed to update counts when j is marked
    ST = transpose(SparseMatrix(n, n, sptr, scol, np.ones(scol.size)))
    tptr, tcol = ST.row_offsets.tolist(), ST.col_indices.tolist()
    sptr, scol = sptr.tolist(), scol.tolist()

    count = [sptr[i + 1] - sptr[i] for i in range(n)]
    heap = [(count[i], i) for i in range(n)]
    heapq.heapify(heap)
    part = [-1] * n
    nagg = 0
    while heap:
        c, i = heapq.heappop(heap)
        if part[i] >= 0 or c != count[i]:
            continue
        group = [i] + [j for j in scol[sptr[i]:sptr[i + 1]] if part[j] < 0]
        for j in group:
            part[j] = nagg
        for j in group:
            for k in tcol[tptr[j]:tptr[j + 1]]:
                if part[k] < 0:
                    count[k] -= 1
                    heapq.heappush(heap, (count[k], k))
        nagg += 1
    return AggregateMap(np.array(part, dtype=np.int64), nagg)


def prolongate(m, x_c):
    """``P x_c``: copy each coarse value to the members of its aggregate."""
    x_c = np.asarray(x_c, dtype=np.float64)
    if x_c.shape != (m.n_aggregates,):
        raise ContractError(f"coarse vector must have length {m.n_aggregates}")
    return x_c[m.part]


def restrict(m, y):
    """``P^T y``: sum fine values over each aggregate."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (m.n_fine,):
        raise ContractError(f"fine vector must have length {m.n_fine}")
    return np.bincount(m.part, weights=y, minlength=m.n_aggregates)


def galerkin_coarse(A, m):
    """``A_c = P^T A P``, i.e. ``(A_c)_ij`` is the sum of ``a_kl`` over ``k in G_i``, ``l in G_j``."""
    if A.nrows != A.ncols or A.nrows != m.n_fine:
        raise ContractError("matrix and aggregate map sizes differ")
    p = m.part
    nc = m.n_aggregates
    return SparseMatrix.from_triplets(nc, nc, p[A.row_indices], p[A.col_indices], A.values)
