"""Reference regularizers: ridge, Lasso and elastic net (square loss).

Objectives::

    ridge        1/2 ||y - Xw||^2 + lam/2 ||w||^2
    lasso        1/2 ||y - Xw||^2 + lam ||w||_1
    elastic net  1/2 ||y - Xw||^2 + lam1 ||w||_1 + lam2/2 ||w||^2

Lasso and elastic net share one proximal gradient solver (monotone FISTA,
step ``1 / (||X||_op^2 + lam2)``). The elastic net is a Lasso on the
augmented design ``[X; sqrt(lam2) I]``, which gives a duality gap for both.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ConvergenceError, InvalidInputError
from .linalg import operator_norm
from .solver import Problem, SolveResult

__all__ = [
    "ridge_solve",
    "lasso_solve",
    "elastic_net_solve",
    "soft_threshold",
    "ridge_objective",
    "elastic_net_objective",
    "duality_gap",
]


STALL_WINDOW = 100
EPS = np.finfo(float).eps


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def ridge_objective(problem: Problem, w, lam: float) -> float:
    r = problem.y - problem.X @ w
    return 0.5 * float(r @ r) + 0.5 * lam * float(w @ w)


def elastic_net_objective(problem: Problem, w, lam1: float, lam2: float = 0.0) -> float:
    r = problem.y - problem.X @ w
    return 0.5 * float(r @ r) + lam1 * float(np.sum(np.abs(w))) + 0.5 * lam2 * float(w @ w)


def duality_gap(problem: Problem, w, lam1: float, lam2: float = 0.0) -> float:
    """Duality gap of the elastic net (Lasso when ``lam2 = 0``) at ``w``.

    Uses the residual of the augmented problem, rescaled into the dual
    feasible set ``||X_aug^T theta||_inf <= lam1``.
    """
    X, y = problem.X, problem.y
    r = y - X @ w
    r_aug = np.concatenate([r, -np.sqrt(lam2) * w])
    corr = X.T @ r - lam2 * w
    cmax = float(np.max(np.abs(corr))) if corr.size else 0.0
    scale = 1.0 if cmax <= lam1 else lam1 / cmax
    theta = scale * r_aug
    y_aug = np.concatenate([y, np.zeros_like(w)])
    dual = 0.5 * float(y @ y) - 0.5 * float((y_aug - theta) @ (y_aug - theta))
    return elastic_net_objective(problem, w, lam1, lam2) - dual


def ridge_solve(problem: Problem, lam: float) -> SolveResult:
    """Closed-form ridge estimate ``(X^T X + lam I)^-1 X^T y``."""
    if not lam > 0:
        raise InvalidInputError("lam must be positive")
    X, y = problem.X, problem.y
    n, p = X.shape
    if n < p:
        w = X.T @ np.linalg.solve(X @ X.T + lam * np.eye(n), y)
    else:
        w = np.linalg.solve(X.T @ X + lam * np.eye(p), X.T @ y)
    obj = ridge_objective(problem, w, lam)
    return SolveResult(w=w, objective_trace=[obj], converged=True, iterations=1,
                       final_residual=0.0, objective=obj)


def elastic_net_solve(problem: Problem, lam1: float, lam2: float = 0.0, w0=None,
                      tol: float = 1e-10, max_iter: int = 100_000,
                      accelerated: bool = True, lipschitz: float | None = None) -> SolveResult:
    """Proximal gradient for ``1/2 ||y - Xw||^2 + lam1 ||w||_1 + lam2/2 ||w||^2``.

    Runs monotone FISTA (or plain ISTA with ``accelerated=False``); both
    never increase the objective. Stops when the duality gap is below
    ``tol * ||y||^2 / 2`` (the objective at ``w = 0``), when the objective
    has not improved beyond rounding over the last 100 iterations, or, for
    ISTA, when the iterate stops moving (sup-norm change below
    ``tol * max(1, ||w||_inf)``).

    ``lipschitz`` may be passed to reuse ``||X||_op^2`` across a grid.

    Raises
    ------
    ConvergenceError
        If neither criterion is met within ``max_iter`` iterations.
    """
    if lam1 < 0 or lam2 < 0 or (lam1 == 0 and lam2 == 0):
        raise InvalidInputError("need lam1 >= 0, lam2 >= 0, not both zero")
    X, y = problem.X, problem.y
    L = (operator_norm(X) ** 2 if lipschitz is None else lipschitz) + lam2
    step = 1.0 / L
    Xty = X.T @ y

    def grad(v):
        return X.T @ (X @ v) - Xty + lam2 * v

    def F(v):
        return elastic_net_objective(problem, v, lam1, lam2)

    w = np.zeros(problem.p) if w0 is None else np.array(w0, dtype=float)
    f_w = F(w)
    gap_tol = tol * max(0.5 * float(y @ y), 1e-300)
    trace = [f_w]
    v = w.copy()
    t = 1.0
    change = np.inf
    for it in range(1, max_iter + 1):
        z = soft_threshold(v - step * grad(v), step * lam1)
        f_z = F(z)
        w_prev = w
        if f_z <= f_w:
            w, f_w = z, f_z
        if accelerated and f_z > trace[-1]:
            # adaptive restart: drop the momentum once it stops paying off
            v, t = w, 1.0
        elif accelerated:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            v = w + (t / t_next) * (z - w) + ((t - 1.0) / t_next) * (w - w_prev)
            t = t_next
        else:
            v = w
        trace.append(f_w)
        change = float(np.max(np.abs(w - w_prev)))
        moved_little = change <= tol * max(1.0, float(np.max(np.abs(w))))
        if moved_little and not accelerated:
            break
        if it % 10 == 0 or moved_little:
            gap = duality_gap(problem, w, lam1, lam2)
            if gap <= gap_tol:
                break
        # the gap is first order in the error of w while the objective is second
        # order, so a tight gap can be out of reach in floating point
        if it >= STALL_WINDOW and trace[-STALL_WINDOW - 1] - f_w <= 4 * EPS * abs(f_w):
            break
    else:
        raise ConvergenceError(
            f"proximal gradient did not converge in {max_iter} iterations",
            iterations=max_iter, residual=change, x=w,
        )
    return SolveResult(w=w, objective_trace=trace, converged=True, iterations=it,
                       final_residual=change, objective=f_w)


def lasso_solve(problem: Problem, lam: float, **kwargs) -> SolveResult:
    """Lasso ``1/2 ||y - Xw||^2 + lam ||w||_1``; see :func:`elastic_net_solve`."""
    if not lam > 0:
        raise InvalidInputError("lam must be positive")
    return elastic_net_solve(problem, lam, 0.0, **kwargs)
