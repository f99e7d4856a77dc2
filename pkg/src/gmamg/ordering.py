"""Unknown orderings for the smoother: natural and nested dissection."""
from __future__ import annotations

import enum

from .errors import ContractError
from .graph import symmetrized_pattern
from .sparse import Permutation

DEFAULT_LEAF_SIZE = 32


class OrderingKind(str, enum.Enum):
    NATURAL = "natural"
    NESTED_DISSECTION = "nested_dissection"


def _levels(adj, root, inside):
    seen = {root}
    levels = [[root]]
    while True:
        nxt = []
        for v in levels[-1]:
            for w in adj[v]:
                if w in inside and w not in seen:
                    seen.add(w)
                    nxt.append(w)
        if not nxt:
            return levels
        levels.append(nxt)


def _components(adj, nodes):
    """Connected components of the subgraph induced by ``nodes`` (sorted input)."""
    inside = set(nodes)
    seen = set()
    comps = []
    for s in nodes:
        if s in seen:
            continue
        seen.add(s)
        comp = [s]
        stack = [s]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w in inside and w not in seen:
                    seen.add(w)
                    comp.append(w)
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def _pseudo_peripheral(adj, start, inside):
    """George-Liu search for a vertex of (nearly) maximal eccentricity."""
    root = start
    levels = _levels(adj, root, inside)
    while True:
        last = levels[-1]
        cand = min((sum(1 for w in adj[v] if w in inside), v) for v in last)[1]
        cand_levels = _levels(adj, cand, inside)
        if len(cand_levels) <= len(levels):
            return root, levels
        root, levels = cand, cand_levels


def _dissect(adj, nodes, leaf_size, out):
    """Append a nested-dissection order of the connected, sorted vertex list ``nodes``."""
    if len(nodes) <= leaf_size:
        out.extend(nodes)
        return
    _, levels = _pseudo_peripheral(adj, nodes[0], set(nodes))
    bfs_order = [v for level in levels for v in level]
    half = len(bfs_order) // 2
    first = set(bfs_order[:half])
    second = bfs_order[half:]
    sep = sorted(v for v in second if any(w in first for w in adj[v]))
    sep_set = set(sep)
    rest = sorted(v for v in second if v not in sep_set)
    for part in (sorted(first), rest):
        for comp in _components(adj, part):
            _dissect(adj, comp, leaf_size, out)
    out.extend(sep)


def nested_dissection(A, leaf_size=DEFAULT_LEAF_SIZE):
    """Nested dissection by recursive BFS bisection of the symmetrized graph.

    At each level the BFS order from a pseudo-peripheral vertex is cut into
    two halves of equal vertex count; second-half vertices adjacent to the
    first half form the separator, numbered after both halves.  Components
    of at most ``leaf_size`` vertices keep their natural order, and
    disconnected components are ordered one after another.
    """
    if A.nrows != A.ncols:
        raise ContractError("ordering needs a square matrix")
    if leaf_size < 1:
        raise ContractError("leaf_size must be at least 1")
    n = A.nrows
    if n <= leaf_size:
        return Permutation.identity(n)
    ptr, nbr = symmetrized_pattern(A)
    ptr, nbr = ptr.tolist(), nbr.tolist()
    adj = [nbr[ptr[v]:ptr[v + 1]] for v in range(n)]
    order = []
    for comp in _components(adj, list(range(n))):
        _dissect(adj, comp, leaf_size, order)
    return Permutation.from_order(order)


def make_ordering(A, kind):
    kind = OrderingKind(kind)
    if A.nrows != A.ncols:
        raise ContractError("ordering needs a square matrix")
    if kind is OrderingKind.NATURAL:
        return Permutation.identity(A.nrows)
    return nested_dissection(A)
