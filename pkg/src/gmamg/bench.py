"""
Benchmark harness: run one (problem, method, target) cell or a whole sweep.

A sweep config is an INI file::

    [sweep]
    methods = gmg-no, gmg-nd, egmg-no
    cf = 2.5, 3, 4          ; per-direction coarsening factors
    nc =                    ; optional explicit coarse sizes
    coarse_tol = 1e-4
    restart = 30
    maxit = 600
    tol = 1e-7
    workers = 1

    [problem small]
    case = dc1-2d
    n = 32
    jump = 1e3

    [problem external]
    matrix = data/A.mtx     ; relative to the config file
    rhs = data/b.mtx        ; optional, default b = A * ones
    dim = 2                 ; optional, needed for cf targets

Every problem is run with every method at every target (cf values first,
then nc values).  Cell failures are recorded in the status column and never
stop the sweep.
"""
from __future__ import annotations

import configparser
import csv
import io
import logging
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError, FactorizationFailure, PivotBreakdown
from .krylov import SolverConfig, gmres
from .mmio import read_matrix_market_full, read_vector
from .problems import diag_ratio, make_problem
from .sparse import SparseMatrix, spmv
from .twogrid import DEFAULT_COARSE_TOL, METHODS, build, config_for_method

log = logging.getLogger(__name__)

CSV_COLUMNS = ("problem", "method", "cf", "nc", "its", "setup_s", "solve_s",
               "relres", "status", "nnz_smoother", "nnz_coarse")
METHOD_LABELS = tuple(METHODS) + ("none",)

# table markers for cells without an iteration count
MARKERS = {
    "max_iters": "NC",
    "breakdown": "BD",
    "setup_failed": "NA",
    "memory_error": "ME",
    "error": "NA",
}

_GRID_COMMENT = re.compile(r"grid\s+case=(\S+)\s+dim=(\d+)\s+n=(\d+)")


@dataclass(frozen=True)
class Problem:
    """A loaded linear system; ``dim`` is known for grid problems only."""

    name: str
    matrix: SparseMatrix
    rhs: np.ndarray
    dim: int | None = None


@dataclass(frozen=True)
class RunRecord:
    problem: str
    method: str
    cf: float | None
    nc: int | None
    its: int
    setup_seconds: float
    solve_seconds: float
    relres: float
    status: str
    nnz_smoother: int = 0
    nnz_coarse: int = 0
    diag_ratio: float | None = None
    coarse_shift: float = 0.0
    message: str = ""

    @property
    def total_seconds(self):
        return self.setup_seconds + self.solve_seconds

    def csv_row(self):
        def opt(v, fmt):
            return "" if v is None else format(v, fmt)
        return [self.problem, self.method, opt(self.cf, "g"), opt(self.nc, "d"), str(self.its),
                f"{self.setup_seconds:.6f}", f"{self.solve_seconds:.6f}", f"{self.relres:.6e}",
                self.status, str(self.nnz_smoother), str(self.nnz_coarse)]


@dataclass(frozen=True)
class SweepConfig:
    methods: tuple = ("gmg-no",)
    cf: tuple = ()
    nc: tuple = ()
    coarse_tol: float = DEFAULT_COARSE_TOL
    aggregation: str = "matching"
    beta: float = 0.25
    solver: SolverConfig = field(default_factory=SolverConfig)
    workers: int = 1
    problems: tuple = ()  # of (name, dict of options)
    base_dir: Path = Path(".")

    @property
    def targets(self):
        return [(cf, None) for cf in self.cf] + [(None, nc) for nc in self.nc]


# -- problems -------------------------------------------------------------

def grid_comment(case, dim, n):
    return f"grid case={case} dim={dim} n={n}"


def load_problem(matrix_path, rhs_path=None, dim=None, name=None):
    """Read a system from Matrix Market files; ``b = A * ones`` without a rhs file.

    The grid dimension is taken from ``dim`` or, failing that, from a
    ``grid ... dim=D`` comment written by ``generate``.
    """
    matrix_path = Path(matrix_path)
    with open(matrix_path, "rb") as fh:
        header, A = read_matrix_market_full(fh)
    if dim is None:
        for c in header.comments:
            m = _GRID_COMMENT.search(c)
            if m:
                dim = int(m.group(2))
                break
    if rhs_path is not None:
        with open(rhs_path, "rb") as fh:
            b = read_vector(fh)
        if b.size != A.nrows:
            raise ContractError(f"rhs has length {b.size}, matrix has {A.nrows} rows")
    else:
        b = spmv(A, np.ones(A.ncols))
    return Problem(name or matrix_path.stem, A, b, dim)


def generated_problem(case, n, jump=1e3, name=None):
    p = make_problem(case, n, jump)
    return Problem(name or p.name, p.matrix, p.rhs, p.spec.dim)


# -- single cell ----------------------------------------------------------

def run_cell(problem, method, cf=None, nc=None, coarse_tol=DEFAULT_COARSE_TOL,
             aggregation="matching", beta=0.25, solver=None):
    """Setup plus solve for one cell.  Never raises on numerical failure."""
    solver = solver or SolverConfig()
    method = method.lower()
    A, b = problem.matrix, problem.rhs
    base = dict(problem=problem.name, method=method, cf=cf, nc=nc)
    try:
        dr = diag_ratio(A)
    except (ValueError, ZeroDivisionError):
        dr = None
    t0 = time.perf_counter()
    try:
        if method == "none":
            precond, rep = None, None
        else:
            cfg = config_for_method(method, cf=cf, nc=nc, coarse_tol=coarse_tol,
                                    aggregation=aggregation, beta=beta)
            precond = build(A, cfg, dim=problem.dim)
            rep = precond.report
    except (FactorizationFailure, PivotBreakdown) as exc:
        return RunRecord(**base, its=0, setup_seconds=time.perf_counter() - t0, solve_seconds=0.0,
                         relres=float("nan"), status="setup_failed", diag_ratio=dr, message=str(exc))
    except MemoryError as exc:
        return RunRecord(**base, its=0, setup_seconds=time.perf_counter() - t0, solve_seconds=0.0,
                         relres=float("nan"), status="memory_error", diag_ratio=dr, message=str(exc))
    except ContractError as exc:
        return RunRecord(**base, its=0, setup_seconds=0.0, solve_seconds=0.0,
                         relres=float("nan"), status="error", diag_ratio=dr, message=str(exc))
    setup = time.perf_counter() - t0
    try:
        _, sol = gmres(A, b, precond, cfg=solver, setup_seconds=setup)
    except MemoryError as exc:
        return RunRecord(**base, its=0, setup_seconds=setup, solve_seconds=0.0,
                         relres=float("nan"), status="memory_error", diag_ratio=dr, message=str(exc))
    if rep is not None:
        base["nc"] = rep.n_coarse
    return RunRecord(
        **base, its=sol.iterations, setup_seconds=setup, solve_seconds=sol.solve_seconds,
        relres=sol.final_relres, status=sol.status.value,
        nnz_smoother=rep.nnz_smoother if rep else 0,
        nnz_coarse=rep.nnz_coarse_factor if rep else 0,
        diag_ratio=dr, coarse_shift=rep.coarse_shift if rep else 0.0,
    )


# -- sweep ----------------------------------------------------------------

def _floats(text):
    return tuple(float(t) for t in re.split(r"[,\s]+", text.strip()) if t)


def _ints(text):
    return tuple(int(t) for t in re.split(r"[,\s]+", text.strip()) if t)


def parse_sweep_config(text, base_dir="."):
    """Parse the INI sweep description; raises ContractError on bad input."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ContractError(f"bad sweep config: {exc}") from None
    s = cp["sweep"] if cp.has_section("sweep") else {}
    try:
        methods = tuple(m.strip().lower() for m in s.get("methods", "gmg-no").split(",") if m.strip())
        for m in methods:
            if m not in METHOD_LABELS:
                raise ContractError(f"unknown method {m!r}")
        solver = SolverConfig(restart_m=int(s.get("restart", 30)),
                              max_total_iters=int(s.get("maxit", 600)),
                              rel_tol=float(s.get("tol", 1e-7)))
        problems = []
        for sec in cp.sections():
            if not sec.startswith("problem"):
                if sec != "sweep":
                    raise ContractError(f"unknown section [{sec}]")
                continue
            name = sec[len("problem"):].strip()
            if not name:
                raise ContractError("problem sections need a name: [problem NAME]")
            opts = dict(cp[sec])
            if ("case" in opts) == ("matrix" in opts):
                raise ContractError(f"[{sec}] needs exactly one of 'case' or 'matrix'")
            problems.append((name, opts))
        cfg = SweepConfig(
            methods=methods,
            cf=_floats(s.get("cf", "")),
            nc=_ints(s.get("nc", "")),
            coarse_tol=float(s.get("coarse_tol", DEFAULT_COARSE_TOL)),
            aggregation=s.get("aggregation", "matching").strip(),
            beta=float(s.get("beta", 0.25)),
            solver=solver,
            workers=int(s.get("workers", 1)),
            problems=tuple(problems),
            base_dir=Path(base_dir),
        )
    except ValueError as exc:
        raise ContractError(f"bad sweep config: {exc}") from None
    if problems and not cfg.targets and any(m != "none" for m in methods):
        raise ContractError("sweep needs at least one cf or nc value")
    return cfg


def _materialize(cfg, name, opts):
    if "case" in opts:
        return generated_problem(opts["case"], int(opts["n"]), float(opts.get("jump", 1e3)), name)
    rhs = opts.get("rhs")
    return load_problem(cfg.base_dir / opts["matrix"],
                        cfg.base_dir / rhs if rhs else None,
                        int(opts["dim"]) if "dim" in opts else None, name)


def sweep(cfg):
    """Run every cell of the config; rows come back in config order."""
    targets = cfg.targets or [(None, None)]
    cells = []
    for name, opts in cfg.problems:
        try:
            prob = _materialize(cfg, name, opts)
            err = None
        except (OSError, ValueError, KeyError) as exc:
            prob, err = None, f"{type(exc).__name__}: {exc}"
        for method in cfg.methods:
            for cf, nc in targets:
                cells.append((name, prob, err, method, cf, nc))

    def work(cell):
        name, prob, err, method, cf, nc = cell
        if prob is None:
            return RunRecord(name, method, cf, nc, 0, 0.0, 0.0, float("nan"), "error", message=err)
        rec = run_cell(prob, method, cf, nc, cfg.coarse_tol, cfg.aggregation, cfg.beta, cfg.solver)
        log.info("%s %s cf=%s nc=%s: %s its=%d", name, method, cf, rec.nc, rec.status, rec.its)
        return rec

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            return list(pool.map(work, cells))
    return [work(c) for c in cells]


# -- output ---------------------------------------------------------------

def write_csv(records, stream, header=True):
    w = csv.writer(stream, lineterminator="\n")
    if header:
        w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(r.csv_row())


def csv_text(records):
    out = io.StringIO()
    write_csv(records, out)
    return out.getvalue()


def _cell(r):
    if r is None:
        return "", ""
    if r.status == "converged":
        return str(r.its), f"{r.total_seconds:.2f}"
    mark = MARKERS.get(r.status, "NA")
    return mark, ("NA" if mark != "ME" else "ME")


def markdown_table(records):
    """Rows per (problem, target), an ``its | time`` column pair per method."""
    if not records:
        return "| problem | target |\n|---|---|\n"
    methods = list(dict.fromkeys(r.method for r in records))
    rows = {}
    for r in records:
        target = f"cf={r.cf:g}" if r.cf is not None else (f"nc={r.nc}" if r.nc is not None else "-")
        rows.setdefault((r.problem, target), {})[r.method] = r
    head = ["problem", "target"]
    for m in methods:
        head += [f"{m.upper()} its", f"{m.upper()} time"]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for (prob, target), by_method in rows.items():
        cells = [prob, target]
        for m in methods:
            cells += _cell(by_method.get(m))
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def format_record(r):
    """One aligned header line and one value line for the terminal."""
    cols = ["problem", "method", "cf", "nc", "its", "setup_s", "solve_s", "relres", "status"]
    vals = r.csv_row()[:9]
    vals[5], vals[6], vals[7] = f"{r.setup_seconds:.3f}", f"{r.solve_seconds:.3f}", f"{r.relres:.2e}"
    widths = [max(len(c), len(v)) for c, v in zip(cols, vals)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    return fmt.format(*cols) + "\n" + fmt.format(*vals)
