"""Second-order expansions of the trace norm.

:func:`trace_norm_expansion` expands ``||M + Delta||_*`` around an arbitrary
(possibly rank-deficient) ``M``; :func:`lasso_neighborhood_expansion` is the
special case ``M = Diag(w)``, ``Delta -> Delta Diag(w)`` with symmetric
``Delta``, i.e. the trace Lasso of a nearly orthogonal design.

Both are accurate to third order in ``||Delta||``; the residual helpers
measure that against a direct SVD.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, InvalidInputError
from .linalg import operator_norm, trace_norm

__all__ = [
    "ExpansionResult",
    "trace_norm_expansion",
    "lasso_neighborhood_expansion",
    "expansion_residual_report",
    "lasso_expansion_residuals",
    "write_residual_csv",
    "RANK_RTOL",
]

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class ExpansionResult:
    """Terms of the expansion; ``total`` is their sum.

    ``zeroth`` is ``||M||_*``, ``first`` the linear term ``tr(V U^T Delta)``,
    ``second`` the two quadratic double sums (positive/positive pairs and
    positive/null couplings), ``q_term`` the trace norm of the projected
    perturbation acting on the null spaces of ``M``.
    """

    zeroth: float
    first: float
    second: float
    q_term: float
    total: float


def trace_norm_expansion(M, Delta, rank_rtol: float = RANK_RTOL) -> ExpansionResult:
    """Second-order expansion of ``||M + Delta||_*``.

    With ``M = U Diag(s) V^T`` (positive singular values only) and
    orthonormal completions ``U0``, ``V0`` of the null spaces, write
    ``A = U^T Delta V``, ``A12 = U^T Delta V0``, ``A21 = U0^T Delta V`` and
    ``A22 = U0^T Delta V0``. Then, up to ``O(||Delta||^3)``::

        ||M + Delta||_* = ||M||_* + tr(A)
                          + sum_{j,k} (A_jk - A_kj)^2 / (4 (s_j + s_k))
                          + sum_k (||A21[:, k]||^2 + ||A12[k, :]||^2) / (2 s_k)
                          + ||A22 - A21 Diag(s)^-1 A12||_*

    Equal singular values need no special treatment: the pair term has no
    ``s_j - s_k`` denominator, and every term is invariant under rotations
    inside a block of equal singular values.

    Raises
    ------
    DomainError
        If ``||Delta||_op >= s_r / 4`` with ``s_r`` the smallest positive
        singular value of ``M``.
    """
    M = np.asarray(M, dtype=float)
    Delta = np.asarray(Delta, dtype=float)
    if M.ndim != 2 or M.shape != Delta.shape:
        raise InvalidInputError(f"shape mismatch: M {M.shape}, Delta {Delta.shape}")
    U_full, s_all, Vt_full = np.linalg.svd(M, full_matrices=True)
    V_full = Vt_full.T
    r = int(np.sum(s_all > rank_rtol * s_all[0])) if s_all.size and s_all[0] > 0 else 0
    s = s_all[:r]
    if r and operator_norm(Delta) >= s[-1] / 4:
        raise DomainError(
            f"||Delta||_op = {operator_norm(Delta):.3e} must be below s_r/4 = {s[-1] / 4:.3e}"
        )
    U, U0 = U_full[:, :r], U_full[:, r:]
    V, V0 = V_full[:, :r], V_full[:, r:]

    A = U.T @ Delta @ V
    A12 = U.T @ Delta @ V0
    A21 = U0.T @ Delta @ V
    A22 = U0.T @ Delta @ V0

    zeroth = float(np.sum(s))
    first = float(np.trace(A))
    skew = A - A.T
    pairs = float(np.sum(skew**2 / (4.0 * (s[:, None] + s[None, :])))) if r else 0.0
    null_coupling = float(np.sum((np.sum(A21**2, axis=0) + np.sum(A12**2, axis=1)) / (2.0 * s))) if r else 0.0
    Q = A22 - (A21 / s) @ A12 if r else A22
    q_term = trace_norm(Q) if Q.size else 0.0
    second = pairs + null_coupling
    return ExpansionResult(zeroth, first, second, q_term, zeroth + first + second + q_term)


def lasso_neighborhood_expansion(w, Delta) -> float:
    """Second-order approximation of ``||(I + Delta) Diag(w)||_*`` for symmetric ``Delta``::

        ||w||_1 + diag(Delta)^T |w| + sum_{i,j} Delta_ij^2 (|w_i| - |w_j|)^2 / (4 (|w_i| + |w_j|))

    where a pair with ``w_i = w_j = 0`` contributes 0.
    """
    w = np.asarray(w, dtype=float)
    Delta = np.asarray(Delta, dtype=float)
    p = w.shape[0]
    if Delta.shape != (p, p):
        raise InvalidInputError(f"Delta must have shape ({p}, {p})")
    if np.max(np.abs(Delta - Delta.T), initial=0.0) > 1e-12 * max(np.max(np.abs(Delta)), 1e-300):
        raise InvalidInputError("Delta must be symmetric")
    a = np.abs(w)
    num = Delta**2 * (a[:, None] - a[None, :]) ** 2
    den = 4.0 * (a[:, None] + a[None, :])
    both_zero = den == 0
    quad = np.sum(np.where(both_zero, 0.0, num / np.where(both_zero, 1.0, den)))
    return float(np.sum(a) + np.diag(Delta) @ a + quad)


def expansion_residual_report(M, Delta, t_grid) -> list[tuple[float, float, float]]:
    """Rows ``(t, residual, residual / t^2)`` for the expansion of ``||M + t Delta||_*``.

    ``residual`` is the absolute gap between the expansion and a direct SVD.
    For ``t = 0`` the last column is reported as 0.

    Raises
    ------
    DomainError
        If some ``t Delta`` violates the validity condition.
    """
    M = np.asarray(M, dtype=float)
    Delta = np.asarray(Delta, dtype=float)
    rows = []
    for t in t_grid:
        t = float(t)
        approx = trace_norm_expansion(M, t * Delta).total
        residual = abs(trace_norm(M + t * Delta) - approx)
        rows.append((t, residual, residual / t**2 if t else 0.0))
    return rows


def lasso_expansion_residuals(w, Delta, t_grid) -> list[tuple[float, float, float]]:
    """Same report as :func:`expansion_residual_report` for the near-identity case."""
    w = np.asarray(w, dtype=float)
    Delta = np.asarray(Delta, dtype=float)
    eye = np.eye(w.shape[0])
    rows = []
    for t in t_grid:
        t = float(t)
        exact = trace_norm((eye + t * Delta) * w)
        residual = abs(exact - lasso_neighborhood_expansion(w, t * Delta))
        rows.append((t, residual, residual / t**2 if t else 0.0))
    return rows


def write_residual_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "residual", "residual_over_t2"])
        for row in rows:
            writer.writerow([f"{x:.17g}" for x in row])
