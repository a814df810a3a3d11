"""Estimation-error sweeps on synthetic correlated designs.

For every (method, k, seed) cell a dataset is drawn, each method is run
over its regularization grid and the smallest l2 estimation error along the
grid is kept, together with the lambda achieving it.

Grids (``m = grid_points`` log-spaced values over ``decades`` decades):

* trace: :func:`tracelasso.solver.reg_path` (from ``lambda_max`` down,
  warm-started IRLS, certified-zero points skipped)
* lasso: from ``||X^T y||_inf`` (smallest lambda with zero solution) down
* ridge: from ``10 ||X||_op^2`` down
* enet: the lasso grid for ``lam1`` crossed with
  ``lam2 = f * ||X||_op^2`` for each factor ``f`` in ``enet_l2``
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import elastic_net_solve, lasso_solve, ridge_solve
from .datagen import (CovarianceSpec, estimation_error, sample_design,
                      sample_ground_truth, sample_response)
from .exceptions import InvalidInputError
from .linalg import operator_norm
from .solver import Problem, SolverConfig, lambda_grid, reg_path

__all__ = ["ExperimentConfig", "CellResult", "run_cell", "run_experiment",
           "write_results_csv", "METHODS", "RESULT_COLUMNS"]

logger = logging.getLogger(__name__)

METHODS = ("trace", "lasso", "ridge", "enet")
RESULT_COLUMNS = ("method", "design", "k", "seed", "best_error", "best_lambda")


@dataclass(frozen=True)
class ExperimentConfig:
    design: str = "identity"
    n: int = 256
    p: int = 1024
    support_sizes: tuple = (8, 16, 32, 64)
    seeds: tuple = (0,)
    sigma: float = 1.0
    methods: tuple = METHODS
    grid_points: int = 50
    decades: float = 4.0
    enet_l2: tuple = (1e-3, 1e-2, 1e-1, 1.0)
    max_outer: int = 500
    threads: int = 1
    lasso_tol: float = 1e-6

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise InvalidInputError("n and p must be >= 1")
        if not self.support_sizes or not self.seeds:
            raise InvalidInputError("support_sizes and seeds must be non-empty")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise InvalidInputError(f"unknown methods {sorted(unknown)}")
        if self.grid_points < 2:
            raise InvalidInputError("grid_points must be >= 2")
        CovarianceSpec.named(self.design, self.p)

    @property
    def spec(self) -> CovarianceSpec:
        return CovarianceSpec.named(self.design, self.p)


@dataclass
class CellResult:
    method: str
    design: str
    k: int
    seed: int
    best_error: float
    best_lambda: float
    errors: list = field(default_factory=list, repr=False)

    def row(self):
        return (self.method, self.design, self.k, self.seed, self.best_error, self.best_lambda)


def make_dataset(config: ExperimentConfig, k: int, seed: int):
    X = sample_design(config.n, config.spec, seed)
    truth = sample_ground_truth(config.p, k, seed)
    y = sample_response(X, truth.w_star, config.sigma, seed)
    return Problem(X, y), truth.w_star


def _sweep_trace(problem, w_star, config):
    path = reg_path(problem, config.grid_points, config.decades,
                    SolverConfig(lam=1.0, max_outer=config.max_outer))
    return path.lambdas, [estimation_error(w, w_star) for w in path.coefs]


def _sweep_lasso(problem, w_star, config, lam2=0.0, L=None):
    X, y = problem.X, problem.y
    L = operator_norm(X) ** 2 if L is None else L
    top = float(np.max(np.abs(X.T @ y)))
    lambdas = lambda_grid(top, config.grid_points, config.decades)
    errors, w = [], None
    for lam in lambdas:
        w = elastic_net_solve(problem, lam, lam2, w0=w, tol=config.lasso_tol, lipschitz=L).w
        errors.append(estimation_error(w, w_star))
    return lambdas, errors


def _sweep_ridge(problem, w_star, config):
    top = 10.0 * operator_norm(problem.X) ** 2
    lambdas = lambda_grid(top, config.grid_points, config.decades)
    errors = [estimation_error(ridge_solve(problem, lam).w, w_star) for lam in lambdas]
    return lambdas, errors


def run_cell(config: ExperimentConfig, method: str, k: int, seed: int) -> CellResult:
    """Run one method on one dataset and keep the best grid point."""
    problem, w_star = make_dataset(config, k, seed)
    if method == "trace":
        lambdas, errors = _sweep_trace(problem, w_star, config)
    elif method == "lasso":
        lambdas, errors = _sweep_lasso(problem, w_star, config)
    elif method == "ridge":
        lambdas, errors = _sweep_ridge(problem, w_star, config)
    elif method == "enet":
        L = operator_norm(problem.X) ** 2
        lambdas, errors = [], []
        for f in config.enet_l2:
            lam1s, errs = _sweep_lasso(problem, w_star, config, lam2=f * L, L=L)
            lambdas.extend(lam1s)
            errors.extend(errs)
    else:
        raise InvalidInputError(f"unknown method {method!r}")
    i = int(np.argmin(errors))
    return CellResult(method, config.design, k, seed, float(errors[i]), float(lambdas[i]), list(errors))


def _run_cell_safe(args):
    config, method, k, seed = args
    try:
        return run_cell(config, method, k, seed), None
    except Exception as exc:  # noqa: BLE001 - a failed cell must not stop the sweep
        return None, f"{method} k={k} seed={seed}: {type(exc).__name__}: {exc}"


def run_experiment(config: ExperimentConfig):
    """Run every (method, k, seed) cell.

    Returns
    -------
    results : list of CellResult
        In method, k, seed order.
    failures : list of str
        One message per failed cell (those cells are skipped).
    """
    cells = [(config, m, k, s) for m in config.methods
             for k in config.support_sizes for s in config.seeds]
    if config.threads > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            outcomes = list(pool.map(_run_cell_safe, cells))
    else:
        outcomes = [_run_cell_safe(c) for c in cells]
    results = [r for r, _ in outcomes if r is not None]
    failures = [f for _, f in outcomes if f is not None]
    for f in failures:
        logger.warning("cell failed: %s", f)
    return results, failures


def _fmt(x):
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.17g}"
    return str(x)


def write_results_csv(results, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for r in results:
            writer.writerow([_fmt(v) for v in r.row()])
