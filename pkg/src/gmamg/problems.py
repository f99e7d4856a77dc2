"""
Cell-centered finite-volume test problems for the steady convection-diffusion
equation on the unit square or cube with a discontinuous, isotropic
diffusion coefficient.

Dirichlet conditions hold on the two faces normal to the second coordinate,
homogeneous Neumann conditions on the rest.  Diffusive fluxes use the
harmonic mean of the two cell coefficients, convection is first-order
upwind.  The right-hand side is manufactured from the all-ones solution.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import connected_components, symmetrized_pattern
from .sparse import SparseMatrix, spmv

CASES = ("dc1-2d", "dc1-3d", "dcc1-2d", "dcc2-3d")

# relative slack for the dominance comparisons (assembly rounding)
_DOMINANCE_RTOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid with ``n`` cells per direction on ``[0, 1]^dim``.

    ``kappa`` selects the coefficient profile: ``"constant"`` uses
    ``kappa_value`` everywhere, ``"dc1"`` is the checkerboard of isolated
    high-permeability blocks scaled by ``jump_amplitude``.
    """

    dim: int
    n: int
    kappa: str = "dc1"
    kappa_value: float = 1.0
    jump_amplitude: float = 1e3
    velocity: tuple = ()

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if self.n < 2:
            raise ValueError("need at least 2 cells per direction")
        if self.jump_amplitude <= 0:
            raise ValueError("jump_amplitude must be positive")
        if self.kappa not in ("constant", "dc1"):
            raise ValueError(f"unknown kappa profile {self.kappa!r}")
        vel = tuple(float(v) for v in self.velocity) or (0.0,) * self.dim
        if len(vel) != self.dim:
            raise ValueError("velocity must have one component per dimension")
        object.__setattr__(self, "velocity", vel)

    @property
    def h(self):
        return 1.0 / self.n

    @property
    def size(self):
        return self.n ** self.dim


@dataclass(frozen=True)
class ProblemInstance:
    matrix: SparseMatrix
    rhs: np.ndarray
    spec: GridSpec
    h: float
    name: str = ""


def case_spec(case, n, jump=1e3):
    """GridSpec for one of the named test families in :data:`CASES`."""
    if case == "dc1-2d":
        return GridSpec(2, n, "dc1", jump_amplitude=jump)
    if case == "dc1-3d":
        return GridSpec(3, n, "dc1", jump_amplitude=jump)
    if case == "dcc1-2d":
        return GridSpec(2, n, "dc1", jump_amplitude=jump, velocity=(1000.0, 1000.0))
    if case == "dcc2-3d":
        return GridSpec(3, n, "dc1", jump_amplitude=jump, velocity=(1000.0, 1000.0, 1000.0))
    raise ValueError(f"unknown case {case!r}; expected one of {', '.join(CASES)}")


def kappa_at(spec, x):
    """Diffusion coefficient at point ``x``.

    For the ``dc1`` profile the coefficient is
    ``amplitude * (floor(10 x_2) + 1)`` where ``floor(10 x_i)`` is even for
    every coordinate, and 1 elsewhere.
    """
    x = np.asarray(x, dtype=np.float64)
    if spec.kappa == "constant":
        return spec.kappa_value * np.ones(x.shape[:-1]) if x.ndim > 1 else spec.kappa_value
    band = np.floor(10.0 * x)
    inside = np.all(np.mod(band, 2) == 0, axis=-1)
    value = np.where(inside, spec.jump_amplitude * (band[..., 1] + 1.0), 1.0)
    return float(value) if value.ndim == 0 else value


def cell_centers(spec):
    """Cell centers in lexicographic order (first coordinate fastest)."""
    c = (np.arange(spec.n) + 0.5) * spec.h
    grids = np.meshgrid(*([c] * spec.dim), indexing="ij")
    # array axis k carries coordinate dim-1-k, so x_1 varies fastest
    return np.stack([grids[spec.dim - 1 - d].ravel() for d in range(spec.dim)], axis=-1)


def discretize(spec, name=""):
    n, dim, h = spec.n, spec.dim, spec.h
    N = spec.size
    kap = kappa_at(spec, cell_centers(spec))
    idx = np.arange(N).reshape((n,) * dim)  # axis k of idx <-> coordinate dim-1-k
    rows, cols, vals = [], [], []
    diag = np.zeros(N)

    for d in range(dim):
        axis = dim - 1 - d
        lo = np.take(idx, np.arange(n - 1), axis=axis).ravel()
        hi = np.take(idx, np.arange(1, n), axis=axis).ravel()
        kl, kr = kap[lo], kap[hi]
        c = 2.0 * kl * kr / (kl + kr) / h**2
        rows += [lo, hi]
        cols += [hi, lo]
        vals += [-c, -c]
        np.add.at(diag, lo, c)
        np.add.at(diag, hi, c)

        if d == 1:
            # Dirichlet faces, half a cell from the boundary cell centers
            for edge in (0, n - 1):
                b = np.take(idx, edge, axis=axis).ravel()
                np.add.at(diag, b, 2.0 * kap[b] / h**2)

        a = spec.velocity[d]
        if a != 0.0:
            diag += abs(a) / h
            down, up = (hi, lo) if a > 0 else (lo, hi)
            rows.append(down)
            cols.append(up)
            vals.append(np.full(down.size, -abs(a) / h))

    rows.append(np.arange(N))
    cols.append(np.arange(N))
    vals.append(diag)
    A = SparseMatrix.from_triplets(N, N, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))
    rhs = spmv(A, np.ones(N))
    return ProblemInstance(A, rhs, spec, h, name)


def make_problem(case, n, jump=1e3):
    return discretize(case_spec(case, n, jump), name=f"{case}-n{n}")


def diag_ratio(A):
    """``max a_ii / min a_ii``; ``None`` unless the diagonal is strictly positive."""
    d = A.diagonal()
    if d.size == 0 or d.min() <= 0:
        return None
    return float(d.max() / d.min())


@dataclass(frozen=True)
class MMatrixReport:
    ok: bool
    clause: str | None = None
    row: int | None = None
    detail: str = ""


def is_m_matrix_candidate(A):
    """Sufficient M-matrix test: sign pattern plus irreducible diagonal dominance.

    Returns ``(ok, report)``; ``report.clause`` names the first failed
    condition among ``"square"``, ``"diagonal"``, ``"sign"``,
    ``"dominance"``, ``"strict"`` and ``"irreducible"``.
    """
    if A.nrows != A.ncols:
        rep = MMatrixReport(False, "square", None, "matrix is not square")
        return False, rep
    n = A.nrows
    d = A.diagonal()
    bad = np.flatnonzero(d <= 0)
    if bad.size:
        return False, MMatrixReport(False, "diagonal", int(bad[0]), "diagonal entry not positive")
    off = A.row_indices != A.col_indices
    pos = off & (A.values > 0)
    if pos.any():
        k = np.flatnonzero(pos)[0]
        return False, MMatrixReport(False, "sign", int(A.row_indices[k]),
                                    f"positive off-diagonal at column {int(A.col_indices[k])}")
    offsum = np.bincount(A.row_indices[off], weights=np.abs(A.values[off]), minlength=n)
    slack = _DOMINANCE_RTOL * d
    weak = np.flatnonzero(d < offsum - slack)
    if weak.size:
        return False, MMatrixReport(False, "dominance", int(weak[0]), "row not diagonally dominant")
    if not np.any(d > offsum + slack):
        return False, MMatrixReport(False, "strict", None, "no strictly dominant row")
    ptr, adj = symmetrized_pattern(A)
    if n and len(connected_components(ptr, adj, n)) > 1:
        return False, MMatrixReport(False, "irreducible", None, "adjacency graph is disconnected")
    return True, MMatrixReport(True)


def grid_target_nc(n_fine, dim, cf):
    """Coarse size for a grid problem: ``round(N / cf**dim)``, at least 1."""
    if cf <= 1:
        raise ValueError("coarsening factor must exceed 1")
    return max(1, int(round(n_fine / cf**dim)))


__all__ = [
    "CASES", "GridSpec", "ProblemInstance", "MMatrixReport", "case_spec", "kappa_at",
    "cell_centers", "discretize", "make_problem", "diag_ratio", "is_m_matrix_candidate",
    "grid_target_nc",
]
