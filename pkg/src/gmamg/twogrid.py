"""
Two-grid preconditioner without post-smoothing.

The preconditioner is only ever applied through its inverse,

    B^{-1} = S^{-1} + M^{-1} - M^{-1} A S^{-1},    M^{-1} = P A_c^{-1} P^T,

where ``S = L0 U0`` is the ILU(0) smoother and ``A_c^{-1}`` is replaced by
an exact or threshold LU of the Galerkin operator ``A_c = P^T A P``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .aggregation import (
    AggregateMap,
    aggregate_by_matching,
    aggregate_by_strength,
    galerkin_coarse,
    prolongate,
    restrict,
)
from .errors import ContractError, FactorizationFailure, PivotBreakdown
from .ilu import IncompleteFactorization, exact_lu, ilu0, ilut, solve_factored
from .ordering import OrderingKind, make_ordering
from .problems import grid_target_nc
from .sparse import SparseMatrix, spmv

__all__ = ["TwoGridConfig", "TwoGridPreconditioner", "SetupReport", "build",
           "apply_m_inverse", "apply_b_inverse", "METHODS", "config_for_method"]

DEFAULT_COARSE_TOL = 1e-4


@dataclass(frozen=True)
class TwoGridConfig:
    """Setup choices.

    aggregation : ``"matching"`` or ``"strength"`` (then ``beta`` applies)
    cf, nc : per-direction coarsening factor (grid problems, needs ``dim``)
        or an explicit number of aggregates; exactly one is used, ``nc`` wins
    smoother_ordering : natural or nested dissection
    coarse_tol : ILUT drop tolerance; ``0`` or ``None`` means exact coarse LU
    """

    aggregation: str = "matching"
    beta: float = 0.25
    cf: float | None = 3.0
    nc: int | None = None
    smoother_ordering: OrderingKind = OrderingKind.NATURAL
    coarse_tol: float | None = DEFAULT_COARSE_TOL

    def __post_init__(self):
        if self.aggregation not in ("matching", "strength"):
            raise ContractError(f"unknown aggregation {self.aggregation!r}")
        if self.nc is None and self.cf is not None and self.cf <= 1:
            raise ContractError("cf must exceed 1")
        if self.nc is not None and self.nc < 1:
            raise ContractError("nc must be at least 1")
        object.__setattr__(self, "smoother_ordering", OrderingKind(self.smoother_ordering))

    @property
    def coarse_exact(self):
        return not self.coarse_tol


# method label -> (ordering, exact coarse solve)
METHODS = {
    "gmg-no": (OrderingKind.NATURAL, False),
    "gmg-nd": (OrderingKind.NESTED_DISSECTION, False),
    "egmg-no": (OrderingKind.NATURAL, True),
    "egmg-nd": (OrderingKind.NESTED_DISSECTION, True),
}


def config_for_method(method, cf=None, nc=None, coarse_tol=DEFAULT_COARSE_TOL,
                      aggregation="matching", beta=0.25):
    """Config for a method label such as ``"gmg-no"``: NO = natural, ND = nested dissection."""
    try:
        ordering, exact = METHODS[method.lower()]
    except KeyError:
        raise ContractError(f"unknown method {method!r}") from None
    return TwoGridConfig(aggregation=aggregation, beta=beta, cf=cf, nc=nc,
                         smoother_ordering=ordering, coarse_tol=None if exact else coarse_tol)


@dataclass(frozen=True)
class SetupReport:
    n_fine: int
    n_coarse: int
    nnz_smoother: int
    nnz_coarse_factor: int
    nnz_coarse_matrix: int
    coarse_shift: float
    seconds: float
    timings: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class TwoGridPreconditioner:
    A: SparseMatrix
    smoother: IncompleteFactorization
    aggregates: AggregateMap
    coarse_factor: IncompleteFactorization
    coarse_matrix: SparseMatrix | None = None
    report: SetupReport | None = None

    def __post_init__(self):
        N = self.A.nrows
        if self.smoother.n != N or self.aggregates.n_fine != N:
            raise ContractError("smoother / aggregates do not match the fine matrix")
        if self.coarse_factor.n != self.aggregates.n_aggregates:
            raise ContractError("coarse factorization size differs from the number of aggregates")

    @property
    def n(self):
        return self.A.nrows

    def __call__(self, z):
        return apply_b_inverse(self, z)


def _target_nc(A, cfg, dim):
    N = A.nrows
    if cfg.nc is not None:
        if not 1 <= cfg.nc <= N:
            raise ContractError(f"nc must lie in [1, {N}]")
        return int(cfg.nc)
    if cfg.cf is None:
        raise ContractError("either cf or nc is required")
    if dim is None:
        raise ContractError("cf needs the grid dimension; pass dim or use an explicit nc")
    return min(N, grid_target_nc(N, dim, cfg.cf))


def build(A, cfg, dim=None):
    """Setup phase: aggregates, Galerkin operator, coarse factorization, smoother."""
    if A.nrows != A.ncols:
        raise ContractError("preconditioner needs a square matrix")
    t0 = time.perf_counter()
    timings = {}
    if cfg.aggregation == "matching":
        agg = aggregate_by_matching(A, _target_nc(A, cfg, dim))
    else:
        agg = aggregate_by_strength(A, cfg.beta)
    t1 = time.perf_counter()
    timings["aggregation"] = t1 - t0

    Ac = galerkin_coarse(A, agg)
    try:
        coarse = exact_lu(Ac) if cfg.coarse_exact else ilut(Ac, cfg.coarse_tol)
    except (PivotBreakdown, FactorizationFailure) as exc:
        raise FactorizationFailure(str(exc), stage="coarse") from exc
    t2 = time.perf_counter()
    timings["coarse"] = t2 - t1

    perm = make_ordering(A, cfg.smoother_ordering)
    try:
        S = ilu0(A, perm)
    except PivotBreakdown as exc:
        raise PivotBreakdown(exc.row, exc.pivot, stage="smoother") from exc
    t3 = time.perf_counter()
    timings["smoother"] = t3 - t2

    rep = SetupReport(A.nrows, agg.n_aggregates, S.nnz, coarse.nnz, Ac.nnz, coarse.shift, t3 - t0, timings)
    return TwoGridPreconditioner(A, S, agg, coarse, Ac, rep)


def apply_m_inverse(p, h):
    """``P A~_c^{-1} P^T h``: restrict, coarse solve, prolongate."""
    return prolongate(p.aggregates, solve_factored(p.coarse_factor, restrict(p.aggregates, h)))


def apply_b_inverse(p, z):
    """``t + f - q`` with ``t = S^{-1} z``, ``f = M^{-1} z``, ``q = M^{-1} A t``."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (p.n,):
        raise ContractError(f"vector must have length {p.n}")
    t = solve_factored(p.smoother, z)
    f = apply_m_inverse(p, z)
    q = apply_m_inverse(p, spmv(p.A, t))
    return t + f - q
