"""Command-line front end.

Subcommands: ``solve``, ``path``, ``experiment``, ``ball``, ``perturb-check``
and ``norm``. Every output is a headed CSV with 17 significant digits.
Relative output paths are resolved against ``$TRACELASSO_OUTPUT_DIR``
(default: the current directory).

Exit status: 0 on success, 1 when some experiment cells failed, 2 on bad
input or solver failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .baselines import elastic_net_solve, lasso_solve, ridge_solve
from .datagen import (CovarianceSpec, sample_design, sample_ground_truth,
                      sample_response)
from .exceptions import ConvergenceError, DomainError, InvalidInputError
from .experiments import METHODS, ExperimentConfig, run_experiment, write_results_csv
from .linalg import svd
from .norms import FIGURE_GRAMS, PenaltyMatrix, normalize_columns, omega, unit_ball_slice, write_ball_csv
from .perturbation import expansion_residual_report, write_residual_csv
from .solver import (Problem, SolverConfig, SolveResult, irls_solve, objective, reg_path,
                     zero_certificate)

__all__ = ["main", "build_parser", "read_csv_matrix", "OUTPUT_DIR_ENV"]

OUTPUT_DIR_ENV = "TRACELASSO_OUTPUT_DIR"
DEFAULT_T_GRID = tuple(2.0 ** -np.arange(1, 9))

logger = logging.getLogger("tracelasso")


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _out_path(value: str | None, default_name: str) -> Path:
    path = Path(value) if value else Path(default_name)
    if not path.is_absolute():
        path = Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def read_csv_matrix(path) -> np.ndarray:
    """Read a headed numeric CSV into a 2-d float array.

    Raises
    ------
    InvalidInputError
        If the file is empty, ragged or holds a non-numeric or non-finite cell.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc.strerror}") from exc
    rows = [r for r in rows if r]
    if len(rows) < 2:
        raise InvalidInputError(f"{path}: expected a header and at least one data row")
    width = len(rows[0])
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise InvalidInputError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
        try:
            data.append([float(v) for v in row])
        except ValueError as exc:
            raise InvalidInputError(f"{path}:{lineno}: {exc}") from exc
    A = np.array(data)
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{path}: non-finite value")
    return A


def _read_vector(path) -> np.ndarray:
    A = read_csv_matrix(path)
    if A.shape[1] != 1:
        raise InvalidInputError(f"{path}: expected a single column, got {A.shape[1]}")
    return A[:, 0]


def _write_coefficients(w, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "coefficient"])
        for i, v in enumerate(w):
            writer.writerow([i, _fmt(v)])


def _load_problem(args) -> Problem:
    """Problem from ``--X/--y`` files, or a synthetic draw otherwise."""
    if args.X or args.y:
        if not (args.X and args.y):
            raise InvalidInputError("--X and --y must be given together")
        X = read_csv_matrix(args.X)
        y = _read_vector(args.y)
    else:
        spec = CovarianceSpec.named(args.design, args.p)
        X = sample_design(args.n, spec, args.seed)
        truth = sample_ground_truth(args.p, args.k, args.seed)
        y = sample_response(X, truth.w_star, args.sigma, args.seed)
    if args.normalize_columns:
        X = normalize_columns(X)
    return Problem(X, y)


def cmd_solve(args) -> int:
    problem = _load_problem(args)
    lam = args.lam
    if args.method == "trace" and lam >= zero_certificate(problem.X, problem.y):
        # certified zero solution, same screening as the path
        res = SolveResult(w=np.zeros(problem.p), iterations=0, converged=True)
        obj = objective(problem, res.w, lam)
    elif args.method == "trace":
        res = irls_solve(problem, SolverConfig(lam=lam, max_outer=args.max_outer))
        obj = objective(problem, res.w, lam)
    elif args.method == "lasso":
        res = lasso_solve(problem, lam)
        obj = res.objective
    elif args.method == "ridge":
        res = ridge_solve(problem, lam)
        obj = res.objective
    else:
        res = elastic_net_solve(problem, lam, args.lambda2)
        obj = res.objective
    out = _out_path(args.out, "coefficients.csv")
    _write_coefficients(res.w, out)
    print(f"objective {_fmt(obj)}")
    print(f"iterations {res.iterations}")
    print(f"converged {str(res.converged).lower()}")
    return 0


def cmd_path(args) -> int:
    problem = _load_problem(args)
    path = reg_path(problem, args.grid_points, args.decades,
                    SolverConfig(lam=1.0, max_outer=args.max_outer))
    out = _out_path(args.out, "path.csv")
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "objective", "iterations"] + [f"w{j}" for j in range(problem.p)])
        for lam, sol in zip(path.lambdas, path.solutions):
            writer.writerow([_fmt(lam), _fmt(sol.objective), sol.iterations] + [_fmt(v) for v in sol.w])
    print(f"lambda_max {_fmt(path.lambda_max)}")
    print(f"points {len(path.lambdas)}")
    return 0


def cmd_experiment(args) -> int:
    config = ExperimentConfig(
        design=args.design, n=args.n, p=args.p, support_sizes=tuple(args.k),
        seeds=tuple(args.seeds), sigma=args.sigma, methods=tuple(args.methods),
        grid_points=args.grid_points, decades=args.decades,
        enet_l2=tuple(args.enet_l2), max_outer=args.max_outer, threads=args.threads,
    )
    results, failures = run_experiment(config)
    out = _out_path(args.out, "results.csv")
    write_results_csv(results, out)
    print(f"cells {len(results) + len(failures)} completed {len(results)} failed {len(failures)}")
    for msg in failures:
        print(f"failed: {msg}", file=sys.stderr)
    return 1 if failures else 0


def _gram_choices(args):
    if args.gram_file:
        return [("custom", read_csv_matrix(args.gram_file))]
    if args.gram == "all":
        return [(str(i), G) for i, G in enumerate(FIGURE_GRAMS, start=1)]
    if args.gram == "identity":
        return [("identity", np.eye(3))]
    return [(args.gram, FIGURE_GRAMS[int(args.gram) - 1])]


def cmd_ball(args) -> int:
    grams = _gram_choices(args)
    for name, G in grams:
        pts = unit_ball_slice(G, args.resolution)
        default = f"ball_{name}.csv"
        if args.out and len(grams) > 1:
            out = _out_path(str(Path(args.out) / default), default)
        else:
            out = _out_path(args.out, default)
        write_ball_csv(pts, out)
        print(f"{out} {len(pts)} points")
    return 0


def _perturb_instance(dims, rank, seed, diagonal):
    """``(M, Delta)`` with ``Delta`` scaled to ``0.99 s_r / 4`` in operator norm."""
    m, n = dims
    rng = np.random.default_rng(seed)
    if diagonal:
        r = min(m, n)
        M = np.zeros((m, n))
        M[np.arange(r), np.arange(r)] = rng.uniform(1.0, 2.0, r)
        Delta = np.zeros((m, n))
        Delta[np.arange(r), np.arange(r)] = rng.standard_normal(r)
    else:
        r = min(m, n) if rank is None else rank
        if not 0 <= r <= min(m, n):
            raise InvalidInputError(f"rank must lie in [0, {min(m, n)}]")
        M = rng.standard_normal((m, r)) @ rng.standard_normal((r, n))
        Delta = rng.standard_normal((m, n))
    s = svd(M).singular
    s_r = s[s > 1e-10 * s[0]][-1] if s.size and s[0] > 0 else 1.0
    Delta *= 0.99 * s_r / 4 / max(np.linalg.norm(Delta, 2), 1e-300)
    return M, Delta


def cmd_perturb_check(args) -> int:
    M, Delta = _perturb_instance(args.dims, args.rank, args.seed, args.diagonal)
    t_grid = sorted(args.t_grid, reverse=True)
    if any(not 0 <= t <= 1 for t in t_grid):
        raise InvalidInputError("t values must lie in [0, 1]")
    rows = expansion_residual_report(M, Delta, t_grid)
    out = _out_path(args.out, "perturbation.csv")
    write_residual_csv(rows, out)
    for t, res, ratio in rows:
        print(f"{t:.6g} {res:.3e} {ratio:.3e}")
    return 0


def cmd_norm(args) -> int:
    if bool(args.P) == bool(args.gram_file):
        raise InvalidInputError("give exactly one of --P and --gram-file")
    if args.P:
        P = read_csv_matrix(args.P)
        if args.normalize_columns:
            P = normalize_columns(P)
        pen = PenaltyMatrix.explicit(P)
    else:
        pen = PenaltyMatrix.gram(read_csv_matrix(args.gram_file))
    w = _read_vector(args.w)
    print(_fmt(omega(pen, w)))
    return 0


def _add_data_args(sp, need_lambda: bool) -> None:
    sp.add_argument("--X", help="design CSV (headed, n rows x p columns)")
    sp.add_argument("--y", help="response CSV (headed, one column)")
    sp.add_argument("--design", default="identity", choices=("identity", "block", "toeplitz"))
    sp.add_argument("--n", type=int, default=64)
    sp.add_argument("--p", type=int, default=128)
    sp.add_argument("--k", type=int, default=8)
    sp.add_argument("--sigma", type=float, default=1.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--normalize-columns", action="store_true",
                    help="rescale the columns of X to unit norm first")
    sp.add_argument("--max-outer", type=int, default=500)
    sp.add_argument("--out")
    if need_lambda:
        sp.add_argument("--lambda", dest="lam", type=float, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tracelasso", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="solve at one lambda and write the coefficients")
    _add_data_args(sp, need_lambda=True)
    sp.add_argument("--method", default="trace", choices=METHODS)
    sp.add_argument("--lambda2", type=float, default=0.0, help="ridge weight for --method enet")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("path", help="trace-Lasso regularization path")
    _add_data_args(sp, need_lambda=False)
    sp.add_argument("--grid-points", type=int, default=50)
    sp.add_argument("--decades", type=float, default=4.0)
    sp.set_defaults(func=cmd_path)

    sp = sub.add_parser("experiment", help="estimation-error sweep on a synthetic design")
    sp.add_argument("--design", default="identity", choices=("identity", "block", "toeplitz"))
    sp.add_argument("--n", type=int, default=256)
    sp.add_argument("--p", type=int, default=1024)
    sp.add_argument("--k", type=int, nargs="+", default=[8, 16, 32, 64])
    sp.add_argument("--sigma", type=float, default=1.0)
    sp.add_argument("--seeds", type=int, nargs="+", default=[0])
    sp.add_argument("--methods", nargs="+", default=list(METHODS), choices=METHODS)
    sp.add_argument("--grid-points", type=int, default=50)
    sp.add_argument("--decades", type=float, default=4.0)
    sp.add_argument("--enet-l2", type=float, nargs="+", default=[1e-3, 1e-2, 1e-1, 1.0],
                    help="elastic-net lambda2 values as multiples of ||X||_op^2")
    sp.add_argument("--max-outer", type=int, default=500)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("ball", help="boundary points of three-dimensional unit balls")
    sp.add_argument("--gram", default="all", choices=("1", "2", "3", "all", "identity"))
    sp.add_argument("--gram-file", help="3x3 Gram matrix CSV (overrides --gram)")
    sp.add_argument("--resolution", type=int, default=41)
    sp.add_argument("--out", help="output file, or directory when several balls are written")
    sp.set_defaults(func=cmd_ball)

    sp = sub.add_parser("perturb-check", help="second-order trace-norm expansion residuals")
    sp.add_argument("--dims", type=int, nargs=2, default=[6, 5], metavar=("M", "N"))
    sp.add_argument("--rank", type=int, help="rank of M (default: full)")
    sp.add_argument("--t-grid", type=float, nargs="+", default=list(DEFAULT_T_GRID))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--diagonal", action="store_true",
                    help="diagonal M and Delta, for which the expansion is exact")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_perturb_check)

    sp = sub.add_parser("norm", help="evaluate Omega_P(w)")
    sp.add_argument("--P", help="matrix CSV with unit-norm columns")
    sp.add_argument("--gram-file", help="Gram matrix P^T P CSV")
    sp.add_argument("--w", required=True, help="vector CSV (headed, one column)")
    sp.add_argument("--normalize-columns", action="store_true")
    sp.set_defaults(func=cmd_norm)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InvalidInputError, DomainError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
