"""Two-grid aggregation AMG preconditioning for sparse linear systems."""
from .aggregation import (
    AggregateMap,
    aggregate_by_matching,
    aggregate_by_strength,
    galerkin_coarse,
    match_heavy_edge,
    prolongate,
    restrict,
)
from .ilu import IncompleteFactorization, exact_lu, factor_quality, ilu0, ilut, solve_factored
from .krylov import SolveReport, SolverConfig, SolveStatus, gmres
from .mmio import read_matrix_market, write_matrix_market
from .ordering import OrderingKind, make_ordering, nested_dissection
from .problems import GridSpec, discretize, is_m_matrix_candidate, kappa_at, make_problem
from .sparse import Permutation, SparseMatrix, permute_symmetric, spmv, to_dense, transpose
from .twogrid import TwoGridConfig, TwoGridPreconditioner, apply_b_inverse, apply_m_inverse, build

__version__ = "0.1.0"
