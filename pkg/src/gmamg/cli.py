"""Command line: ``gmamg generate | solve | sweep``.

Exit codes: 0 converged (or sweep finished), 2 usage / file / parse error,
3 iteration limit reached, 4 breakdown (including setup failures).
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import bench
from .errors import ContractError, MatrixMarketError
from .krylov import SolverConfig
from .mmio import write_matrix_market, write_vector
from .problems import CASES, diag_ratio, make_problem
from .twogrid import DEFAULT_COARSE_TOL

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MAX_ITERS = 3
EXIT_BREAKDOWN = 4

_STATUS_EXIT = {
    "converged": EXIT_OK,
    "max_iters": EXIT_MAX_ITERS,
    "breakdown": EXIT_BREAKDOWN,
    "setup_failed": EXIT_BREAKDOWN,
    "memory_error": EXIT_BREAKDOWN,
    "error": EXIT_USAGE,
}


def _positive(kind):
    def parse(text):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return parse


def _parser():
    ap = argparse.ArgumentParser(prog="gmamg", description="Two-grid AMG preconditioned GMRES.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log setup and sweep progress")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a test problem as Matrix Market files")
    g.add_argument("--case", required=True, choices=CASES)
    g.add_argument("--n", required=True, type=_positive(int), help="cells per direction")
    g.add_argument("--jump", type=_positive(float), default=1e3, help="coefficient jump amplitude")
    g.add_argument("--out-dir", type=Path, default=Path("."))
    g.add_argument("--name", help="file stem (default CASE-nN)")

    s = sub.add_parser("solve", help="build a preconditioner and run GMRES")
    s.add_argument("--matrix", required=True, type=Path)
    rhs = s.add_mutually_exclusive_group()
    rhs.add_argument("--rhs", type=Path, help="n x 1 Matrix Market vector")
    rhs.add_argument("--rhs-ones", action="store_true", help="b = A * ones (the default)")
    s.add_argument("--method", default="gmg-no", choices=bench.METHOD_LABELS)
    tgt = s.add_mutually_exclusive_group()
    tgt.add_argument("--cf", type=_positive(float), help="per-direction coarsening factor")
    tgt.add_argument("--nc", type=_positive(int), help="number of aggregates")
    s.add_argument("--dim", type=int, choices=(1, 2, 3), help="grid dimension for --cf")
    s.add_argument("--coarse-tol", type=float, default=DEFAULT_COARSE_TOL)
    s.add_argument("--beta", type=_positive(float), default=0.25)
    s.add_argument("--aggregation", choices=("matching", "strength"), default="matching")
    s.add_argument("--restart", type=_positive(int), default=30)
    s.add_argument("--maxit", type=int, default=600)
    s.add_argument("--tol", type=_positive(float), default=1e-7)
    s.add_argument("--csv", type=Path, help="append the run to this CSV file")
    s.add_argument("--seed", type=int, help="reserved; runs are deterministic")

    w = sub.add_parser("sweep", help="run a problems x methods x cf grid from a config file")
    w.add_argument("config", type=Path)
    w.add_argument("--csv", type=Path, help="CSV output (default: stdout only shows markdown)")
    w.add_argument("--markdown", type=Path, help="write the markdown table here as well")
    w.add_argument("--workers", type=_positive(int), help="override the config's worker count")
    return ap


def cmd_generate(args):
    p = make_problem(args.case, args.n, args.jump)
    stem = args.name or p.name
    args.out_dir.mkdir(parents=True, exist_ok=True)
    mpath = args.out_dir / f"{stem}.mtx"
    bpath = args.out_dir / f"{stem}_rhs.mtx"
    A = p.matrix
    symmetric = A.is_symmetric()
    comment = bench.grid_comment(args.case, p.spec.dim, args.n)
    with open(mpath, "w") as fh:
        write_matrix_market(A, symmetric, fh, comments=(comment, f"jump={args.jump:g}"))
    with open(bpath, "w") as fh:
        write_vector(p.rhs, fh, comments=("rhs = A * ones",))
    print(f"matrix     {mpath}")
    print(f"rhs        {bpath}")
    print(f"size       {A.nrows} x {A.ncols}")
    print(f"nnz        {A.nnz}")
    print(f"symmetric  {'yes' if symmetric else 'no'}")
    print(f"diag ratio {diag_ratio(A):.4g}")
    return EXIT_OK


def cmd_solve(args):
    if args.method != "none" and args.cf is None and args.nc is None:
        args.cf = 3.0
    if args.maxit < 0:
        print("error: --maxit must be nonnegative", file=sys.stderr)
        return EXIT_USAGE
    try:
        prob = bench.load_problem(args.matrix, None if args.rhs_ones else args.rhs, args.dim)
    except (OSError, MatrixMarketError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    solver = SolverConfig(restart_m=args.restart, max_total_iters=args.maxit, rel_tol=args.tol)
    rec = bench.run_cell(prob, args.method, args.cf, args.nc, args.coarse_tol,
                         args.aggregation, args.beta, solver)
    print(bench.format_record(rec))
    if rec.message:
        print(f"note: {rec.message}", file=sys.stderr)
    if args.csv is not None:
        fresh = not args.csv.exists() or args.csv.stat().st_size == 0
        with open(args.csv, "a", newline="") as fh:
            bench.write_csv([rec], fh, header=fresh)
    return _STATUS_EXIT.get(rec.status, EXIT_BREAKDOWN)


def cmd_sweep(args):
    try:
        text = args.config.read_text()
        cfg = bench.parse_sweep_config(text, base_dir=args.config.parent)
    except (OSError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.workers:
        cfg = replace(cfg, workers=args.workers)
    records = bench.sweep(cfg)
    for r in records:
        if r.message:
            print(f"{r.problem} {r.method}: {r.status}: {r.message}", file=sys.stderr)
    table = bench.markdown_table(records)
    if args.csv is not None:
        with open(args.csv, "w", newline="") as fh:
            bench.write_csv(records, fh)
    if args.markdown is not None:
        args.markdown.write_text(table)
    sys.stdout.write(table)
    return EXIT_OK


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"generate": cmd_generate, "solve": cmd_solve, "sweep": cmd_sweep}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
