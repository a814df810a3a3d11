"""Square-loss regression penalized by the trace Lasso.

Solves::

    min_w  1/2 ||y - X w||^2 + lam * ||X Diag(w)||_*

by iteratively reweighted least squares. The trace norm is replaced by its
variational form ``1/2 inf_S tr(M^T S^-1 M) + tr(S)``; alternating over
``S`` (closed form) and ``w`` (a reweighted ridge system solved by CG)
decreases the smoothed objective at every sweep.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import ConvergenceError, InvalidInputError
from .linalg import cg_solve, operator_norm, psd_inverse_sqrt, sym_eigen, trace_norm

__all__ = [
    "Problem",
    "SolverConfig",
    "SolveResult",
    "RegPath",
    "UniquenessReport",
    "objective",
    "smoothed_objective",
    "eta_bound",
    "irls_solve",
    "lambda_max",
    "zero_certificate",
    "lambda_grid",
    "reg_path",
    "uniqueness_probe",
    "geometric_mu_schedule",
    "MU_FLOOR",
]

logger = logging.getLogger(__name__)

MU_FLOOR = 10 * np.finfo(float).eps


@dataclass(frozen=True)
class Problem:
    """Design matrix ``X`` (n x p) and response ``y`` (n,)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise InvalidInputError(f"X must be a non-empty 2-d array, got shape {X.shape}")
        if y.shape[0] != X.shape[0]:
            raise InvalidInputError(f"y has {y.shape[0]} entries, X has {X.shape[0]} rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InvalidInputError("X and y must be finite")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def geometric_mu_schedule(n: int, start: float = 1.0, end: float = MU_FLOOR) -> np.ndarray:
    """``n`` values decaying geometrically from ``start`` to ``end``."""
    if n == 1:
        return np.array([end])
    return np.geomspace(start, end, n)


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of :func:`irls_solve`.

    ``init`` is ``"ridge"`` (ridge solution at the same ``lam``), ``"zeros"``,
    ``"random"`` (standard normal draw from ``seed``) or an explicit vector.
    ``mu_schedule`` defaults to :func:`geometric_mu_schedule` over
    ``max_outer`` iterations. ``cg_max_iter=None`` means ``5 p``.
    """

    lam: float
    max_outer: int = 500
    mu_schedule: Sequence[float] | None = None
    cg_tol: float = 1e-10
    cg_max_iter: int | None = None
    w_tol: float = 1e-8
    init: object = "ridge"
    seed: int | None = None

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidInputError("lam must be positive")
        if self.max_outer < 1:
            raise InvalidInputError("max_outer must be >= 1")
        if self.mu_schedule is not None:
            mu = np.asarray(self.mu_schedule, dtype=float)
            if mu.ndim != 1 or mu.size < 1 or np.any(mu <= 0) or np.any(np.diff(mu) > 0):
                raise InvalidInputError("mu_schedule must be positive and nonincreasing")
            if not np.isclose(mu[-1], MU_FLOOR, rtol=1e-6, atol=0):
                raise InvalidInputError("mu_schedule must end at 10 * machine epsilon")
            if mu.size > self.max_outer:
                raise InvalidInputError("mu_schedule is longer than max_outer")

    def mus(self) -> np.ndarray:
        if self.mu_schedule is None:
            return geometric_mu_schedule(self.max_outer)
        mu = np.asarray(self.mu_schedule, dtype=float)
        # hold the last value for the remaining iterations
        return np.concatenate([mu, np.full(self.max_outer - mu.size, mu[-1])])

    def with_lam(self, lam: float, **changes) -> "SolverConfig":
        fields = {f: getattr(self, f) for f in self.__dataclass_fields__}
        fields.update(lam=lam, **changes)
        return SolverConfig(**fields)


@dataclass
class SolveResult:
    """Outcome of an iterative solve.

    ``final_residual`` is the last relative change of the iterate for the
    iterative solvers (0 for direct solves).
    """

    w: np.ndarray
    objective_trace: list = field(default_factory=list)
    converged: bool = True
    iterations: int = 0
    final_residual: float = 0.0
    objective: float = float("nan")
    cg_iterations: int = 0


@dataclass
class RegPath:
    lambdas: np.ndarray
    solutions: list
    lambda_max: float

    @property
    def coefs(self) -> np.ndarray:
        """Coefficients stacked as an array of shape (n_lambdas, p)."""
        return np.array([s.w for s in self.solutions])

    @property
    def objectives(self) -> np.ndarray:
        return np.array([s.objective for s in self.solutions])


def _check_w(problem: Problem, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (problem.p,):
        raise InvalidInputError(f"w must have shape ({problem.p},), got {w.shape}")
    return w


def objective(problem: Problem, w, lam: float) -> float:
    """``1/2 ||y - X w||^2 + lam ||X Diag(w)||_*``."""
    w = _check_w(problem, w)
    r = problem.y - problem.X @ w
    penalty = trace_norm(problem.X * w) if lam != 0 else 0.0
    return 0.5 * float(r @ r) + lam * penalty


def smoothed_objective(problem: Problem, w, lam: float, mu: float) -> float:
    """Objective with the trace norm replaced by ``tr (X Diag(w)^2 X^T + mu I)^{1/2}``.

    This is the variational objective minimized over ``S`` (including the
    ``mu/2 tr S^-1`` smoothing term). It decreases to :func:`objective` as
    ``mu -> 0``.
    """
    w = _check_w(problem, w)
    XW = problem.X * w
    s = np.maximum(sym_eigen(XW @ XW.T).values, 0.0)
    r = problem.y - problem.X @ w
    return 0.5 * float(r @ r) + lam * float(np.sum(np.sqrt(s + mu)))


def eta_bound(M, S) -> float:
    """Variational upper bound ``1/2 (tr(M^T S^-1 M) + tr S) >= ||M||_*``.

    Raises
    ------
    InvalidInputError
        If ``S`` is not symmetric positive definite.
    """
    M = np.asarray(M, dtype=float)
    eig = sym_eigen(S)
    if eig.values[-1] <= 0:
        raise InvalidInputError("S must be positive definite")
    U = eig.vectors
    B = U.T @ M
    return 0.5 * (float(np.sum(B**2 / eig.values[:, None])) + float(np.sum(eig.values)))


def lambda_max(X, y) -> float:
    """``||X||_op * ||X^T y||_inf``, an upper bound on the smallest ``lam`` with zero solution."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    return operator_norm(X) * float(np.max(np.abs(X.T @ y)))


def zero_certificate(X, y) -> float:
    """Smallest certified ``lam`` at which ``w = 0`` is optimal.

    With column norms ``c`` and ``u = X^T y``, ``Z = X Diag(u / c^2)`` scaled to
    unit operator norm is dual feasible, hence
    ``Omega^*(u) <= ||X Diag(u / c^2)||_op``. Never larger than
    :func:`lambda_max` when the columns have norm at least 1.
    """
    X = np.asarray(X, dtype=float)
    u = X.T @ np.asarray(y, dtype=float)
    c2 = np.einsum("ij,ij->j", X, X)
    a = np.divide(u, c2, out=np.zeros_like(u), where=c2 > 0)
    return operator_norm(X * a)


def _ridge(X, y, lam):
    n, p = X.shape
    if n < p:
        # (X^T X + lam I)^-1 X^T y = X^T (X X^T + lam I)^-1 y
        return X.T @ np.linalg.solve(X @ X.T + lam * np.eye(n), y)
    return np.linalg.solve(X.T @ X + lam * np.eye(p), X.T @ y)


def _initial_guess(problem: Problem, config: SolverConfig) -> np.ndarray:
    init = config.init
    if isinstance(init, str):
        if init == "ridge":
            return _ridge(problem.X, problem.y, config.lam)
        if init == "zeros":
            return np.zeros(problem.p)
        if init == "random":
            return np.random.default_rng(config.seed).standard_normal(problem.p)
        raise InvalidInputError(f"unknown init policy {init!r}")
    return _check_w(problem, init).copy()


def irls_solve(problem: Problem, config: SolverConfig) -> SolveResult:
    """Iteratively reweighted least squares for the trace Lasso.

    Each outer iteration ``i``:

    1. eigendecompose ``X Diag(w)^2 X^T = U Diag(s) U^T`` (n x n),
    2. ``S^-1 = U Diag(1 / sqrt(s + mu_i)) U^T``,
    3. ``D = diag(X^T S^-1 X)``,
    4. solve ``(X^T X + lam Diag(D)) w = X^T y`` by Jacobi-preconditioned CG,
       warm-started at the previous ``w``; the operator is applied
       matrix-free at O(np) per product.

    Stops after ``max_outer`` iterations or when the relative change of
    ``w`` drops below ``w_tol``. The second test only applies once
    ``sqrt(mu_i) <= 10 w_tol``: coefficients that are zero at the optimum
    are of order ``sqrt(mu_i)`` and may look stationary long before that. ``objective_trace[i]`` is the smoothed
    objective at ``mu_i`` evaluated at ``w^i``; it is nonincreasing.

    Raises
    ------
    ConvergenceError
        If an inner CG solve fails; the message carries the outer iteration.
    """
    X, y, lam = problem.X, problem.y, config.lam
    n, p = X.shape
    mus = config.mus()
    cg_max_iter = 5 * p if config.cg_max_iter is None else config.cg_max_iter
    Xty = X.T @ y
    col_sq = np.einsum("ij,ij->j", X, X)
    w = _initial_guess(problem, config)

    trace = []
    converged = False
    change = np.inf
    cg_total = 0
    it = 0
    eig = sym_eigen(_gram_rows(X, w))
    for it in range(1, config.max_outer + 1):
        mu = mus[it - 1]
        s = np.maximum(eig.values, 0.0)
        inv_root = 1.0 / np.sqrt(s + mu)
        B = eig.vectors.T @ X
        D = inv_root @ (B * B)

        def apply(v, D=D):
            return X.T @ (X @ v) + lam * D * v

        try:
            w_new, info = cg_solve(apply, Xty, x0=w, tol=config.cg_tol,
                                   max_iter=cg_max_iter, precond=col_sq + lam * D,
                                   full_output=True)
        except ConvergenceError as exc:
            raise ConvergenceError(
                f"IRLS outer iteration {it} (mu={mu:.3e}): {exc}",
                iterations=it, residual=exc.residual, x=exc.x,
            ) from exc
        cg_total += info["iterations"]
        change = np.linalg.norm(w_new - w) / max(np.linalg.norm(w), 1e-12)
        w = w_new
        eig = sym_eigen(_gram_rows(X, w))
        r = y - X @ w
        s = np.maximum(eig.values, 0.0)
        trace.append(0.5 * float(r @ r) + lam * float(np.sum(np.sqrt(s + mu))))
        # zero coordinates sit at O(sqrt(mu)); only stop once that is negligible
        if change <= config.w_tol and np.sqrt(mu) <= 10 * config.w_tol:
            converged = True
            break

    result = SolveResult(
        w=w,
        objective_trace=trace,
        converged=converged,
        iterations=it,
        final_residual=float(change),
        objective=objective(problem, w, lam),
        cg_iterations=cg_total,
    )
    logger.debug("irls: lam=%.3e iters=%d cg=%d converged=%s obj=%.10g",
                 lam, it, cg_total, converged, result.objective)
    return result


def _gram_rows(X, w):
    XW = X * w
    G = XW @ XW.T
    return 0.5 * (G + G.T)


def lambda_grid(lam_max: float, n_lambdas: int, decades: float) -> np.ndarray:
    """Logarithmic grid from ``lam_max`` down ``decades`` orders of magnitude."""
    if n_lambdas < 2:
        raise InvalidInputError("n_lambdas must be >= 2")
    return lam_max * np.logspace(0.0, -decades, n_lambdas)


def reg_path(problem: Problem, n_lambdas: int = 50, decades: float = 4.0,
             config: SolverConfig | None = None, screen_zero: bool = True) -> RegPath:
    """Trace-Lasso regularization path from :func:`lambda_max` downwards.

    Each solve is warm-started from the previous solution. ``config.lam`` is
    ignored; the other settings apply to every solve. With ``screen_zero``,
    grid points at or above :func:`zero_certificate` get the exact solution
    ``w = 0`` without running IRLS.
    """
    lam0 = lambda_max(problem.X, problem.y)
    if lam0 == 0:
        raise InvalidInputError("X^T y = 0: the zero vector is optimal for every lambda")
    lambdas = lambda_grid(lam0, n_lambdas, decades)
    base = config if config is not None else SolverConfig(lam=lam0)
    lam_zero = zero_certificate(problem.X, problem.y) if screen_zero else np.inf
    zero_obj = 0.5 * float(problem.y @ problem.y)
    solutions = []
    w = None
    for i, lam in enumerate(lambdas):
        if lam >= lam_zero:
            solutions.append(SolveResult(w=np.zeros(problem.p), objective_trace=[zero_obj],
                                         converged=True, iterations=0, objective=zero_obj))
            continue
        cfg = base.with_lam(lam) if w is None else base.with_lam(lam, init=w)
        try:
            res = irls_solve(problem, cfg)
        except ConvergenceError as exc:
            raise ConvergenceError(f"path index {i} (lambda={lam:.6g}): {exc}",
                                   iterations=exc.iterations, residual=exc.residual,
                                   x=exc.x) from exc
        solutions.append(res)
        w = res.w
    return RegPath(lambdas=lambdas, solutions=solutions, lambda_max=lam0)


@dataclass
class UniquenessReport:
    solutions: np.ndarray
    objectives: np.ndarray
    coef_spread: float
    objective_spread: float


def uniqueness_probe(problem: Problem, lam: float, restarts: int = 8, seed=0,
                     config: SolverConfig | None = None) -> UniquenessReport:
    """Solve from ``restarts`` random starting points and measure disagreement.

    ``coef_spread`` is the largest pairwise sup-norm distance between the
    solutions, ``objective_spread`` the range of their objective values.
    """
    if restarts < 2:
        raise InvalidInputError("restarts must be >= 2")
    base = config if config is not None else SolverConfig(lam=lam)
    rng = np.random.default_rng(seed)
    sols, objs = [], []
    for _ in range(restarts):
        w0 = rng.standard_normal(problem.p)
        res = irls_solve(problem, base.with_lam(lam, init=w0))
        sols.append(res.w)
        objs.append(res.objective)
    sols = np.array(sols)
    objs = np.array(objs)
    spread = float(np.max(np.abs(sols[:, None, :] - sols[None, :, :])))
    return UniquenessReport(sols, objs, spread, float(objs.max() - objs.min()))
