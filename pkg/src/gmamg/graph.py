"""Adjacency-graph helpers shared by the aggregation and ordering code."""
from __future__ import annotations

from collections import deque

import numpy as np

from .sparse import SparseMatrix, transpose


def symmetrized_pattern(A):
    """Adjacency of ``A + A^T`` without self-loops, as ``(offsets, neighbors)``.

    Neighbor lists are sorted ascending.
    """
    if A.nrows != A.ncols:
        raise ValueError("adjacency graph needs a square matrix")
    At = transpose(A)
    rows = np.concatenate([A.row_indices, At.row_indices])
    cols = np.concatenate([A.col_indices, At.col_indices])
    off = rows != cols
    G = SparseMatrix.from_triplets(A.nrows, A.nrows, rows[off], cols[off], np.ones(np.count_nonzero(off)))
    return G.row_offsets, G.col_indices


def connected_components(ptr, adj, n, allowed=None):
    """Connected components as sorted vertex lists, ordered by smallest member."""
    label = np.full(n, -1, dtype=np.int64)
    comps = []
    for s in range(n):
        if label[s] >= 0 or (allowed is not None and not allowed[s]):
            continue
        label[s] = len(comps)
        members = [s]
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for w in adj[ptr[v]:ptr[v + 1]]:
                if label[w] < 0 and (allowed is None or allowed[w]):
                    label[w] = len(comps)
                    members.append(int(w))
                    queue.append(w)
        comps.append(sorted(members))
    return comps
