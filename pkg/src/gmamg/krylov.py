"""Left-preconditioned restarted GMRES with Givens rotations."""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ContractError
from .sparse import SparseMatrix, spmv

__all__ = ["SolverConfig", "SolveStatus", "SolveReport", "gmres"]


@dataclass(frozen=True)
class SolverConfig:
    restart_m: int = 30
    max_total_iters: int = 600
    rel_tol: float = 1e-7
    check_orthogonality: bool = False

    def __post_init__(self):
        if self.restart_m < 1:
            raise ContractError("restart_m must be at least 1")
        if not self.rel_tol > 0:
            raise ContractError("rel_tol must be positive")
        if self.max_total_iters < 0:
            raise ContractError("max_total_iters must be nonnegative")


class SolveStatus(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    BREAKDOWN = "breakdown"


@dataclass
class SolveReport:
    """Outcome of one solve.

    ``residual_history[k]`` is the true relative residual ``||b - A x_k|| / ||b||``
    after ``k`` preconditioned iterations (entry 0 is the initial guess).
    """

    status: SolveStatus
    iterations: int
    residual_history: list = field(default_factory=list)
    setup_seconds: float = 0.0
    solve_seconds: float = 0.0
    restarts: int = 0
    orthogonality_loss: float | None = None

    @property
    def final_relres(self):
        return self.residual_history[-1]

    @property
    def converged(self):
        return self.status is SolveStatus.CONVERGED


def _as_operator(A):
    if isinstance(A, SparseMatrix):
        return lambda x: spmv(A, x), A.nrows
    if callable(A):
        return A, None
    return (lambda x: A @ x), A.shape[0]


def gmres(A, b, precond=None, x0=None, cfg=None, setup_seconds=0.0):
    """Solve ``A x = b`` with GMRES(m) applied to ``B^{-1} A x = B^{-1} b``.

    Parameters
    ----------
    A : SparseMatrix or callable
    b : array
    precond : callable ``z -> B^{-1} z`` or None for no preconditioning
    x0 : initial guess (zeros by default)
    cfg : SolverConfig

    Returns
    -------
    x, SolveReport
        ``x`` is the iterate with the smallest true residual seen.

    A cycle stops early when the Givens residual estimate falls below
    ``rel_tol * ||b|| * ||B^{-1} r0|| / ||r0||`` (``r0`` the residual at the
    start of the cycle; on the first cycle this is ``rel_tol * ||B^{-1} b||``)
    or the true relative residual falls below ``rel_tol``.  Convergence is
    declared only on the true residual.
    """
    cfg = cfg or SolverConfig()
    matvec, n = _as_operator(A)
    b = np.asarray(b, dtype=np.float64)
    n = b.size if n is None else n
    if b.shape != (n,):
        raise ContractError(f"right-hand side must have length {n}")
    M = precond if precond is not None else (lambda z: z)
    t_start = time.perf_counter()

    def finish(status, x, its, hist, restarts, ortho):
        return x, SolveReport(SolveStatus(status), its, hist, setup_seconds,
                              time.perf_counter() - t_start, restarts, ortho)

    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return finish("converged", np.zeros(n), 0, [0.0], 0, None)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    if x.shape != (n,):
        raise ContractError(f"initial guess must have length {n}")

    def relres(y):
        return float(np.linalg.norm(b - matvec(y)) / bnorm)

    hist = [relres(x)]
    best_x, best_res = x.copy(), hist[0]
    if hist[0] < cfg.rel_tol:
        return finish("converged", x, 0, hist, 0, None)

    m = cfg.restart_m
    its = 0
    restarts = 0
    ortho = 0.0 if cfg.check_orthogonality else None
    V = np.zeros((m + 1, n))
    H = np.zeros((m + 1, m))
    cs = np.zeros(m)
    sn = np.zeros(m)
    g = np.zeros(m + 1)

    while its < cfg.max_total_iters:
        r_true = b - matvec(x)
        r = M(r_true)
        beta = np.linalg.norm(r)
        if not np.isfinite(beta):
            return finish("breakdown", best_x, its, hist, restarts, ortho)
        if beta == 0.0:
            # preconditioned residual vanishes but the true one does not
            return finish("breakdown", best_x, its, hist, restarts, ortho)
        # target for |s_(i+1)|: rel_tol * ||B^-1 b|| on the first cycle, then
        # rescaled by the observed ||B^-1 r|| / ||r|| so restarts keep making progress
        inner_tol = cfg.rel_tol * bnorm * beta / np.linalg.norm(r_true)
        V[0] = r / beta
        H[:] = 0.0
        g[:] = 0.0
        g[0] = beta
        cycle_start = hist[-1]
        lucky = False
        k = 0
        xk = x
        for i in range(m):
            w = M(matvec(V[i]))
            its += 1
            wnorm0 = np.linalg.norm(w)
            for j in range(i + 1):
                H[j, i] = w @ V[j]
                w = w - H[j, i] * V[j]
            hnext = np.linalg.norm(w)
            H[i + 1, i] = hnext
            if not (np.isfinite(H[: i + 2, i]).all() and np.isfinite(wnorm0)):
                return finish("breakdown", best_x, its, hist, restarts, ortho)
            lucky = hnext <= np.finfo(float).eps * wnorm0
            for j in range(i):
                hj, hj1 = H[j, i], H[j + 1, i]
                H[j, i] = cs[j] * hj + sn[j] * hj1
                H[j + 1, i] = -sn[j] * hj + cs[j] * hj1
            denom = np.hypot(H[i, i], H[i + 1, i])
            if denom == 0.0:
                return finish("breakdown", best_x, its, hist, restarts, ortho)
            cs[i], sn[i] = H[i, i] / denom, H[i + 1, i] / denom
            H[i, i], H[i + 1, i] = denom, 0.0
            g[i + 1] = -sn[i] * g[i]
            g[i] = cs[i] * g[i]

            k = i + 1
            y = solve_triangular(H[:k, :k], g[:k], lower=False, check_finite=False)
            xk = x + V[:k].T @ y
            res = relres(xk)
            if not np.isfinite(res):
                return finish("breakdown", best_x, its, hist, restarts, ortho)
            hist.append(res)
            if res < best_res:
                best_x, best_res = xk, res
            if lucky or abs(g[k]) <= inner_tol or res < cfg.rel_tol or its >= cfg.max_total_iters:
                break
            V[i + 1] = w / hnext

        if ortho is not None:
            G = V[:k] @ V[:k].T
            ortho = max(ortho, float(np.abs(G - np.eye(k)).max()))
        x = xk
        if hist[-1] < cfg.rel_tol:
            return finish("converged", x, its, hist, restarts, ortho)
        if lucky and hist[-1] >= cycle_start:
            # exact invariant subspace reached without any progress
            return finish("breakdown", best_x, its, hist, restarts, ortho)
        restarts += 1

    return finish("max_iters", best_x, its, hist, restarts, ortho)
