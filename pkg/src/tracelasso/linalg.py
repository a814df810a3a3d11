"""Dense linear-algebra kernels.

Eigen and singular value decompositions are thin wrappers around LAPACK
(through numpy) that fix ordering conventions and validate input. The
conjugate gradient solver is matrix-free: it only needs a callable that
applies the operator to a vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import ConvergenceError, InvalidInputError

__all__ = [
    "SymEigen",
    "Svd",
    "sym_eigen",
    "svd",
    "cg_solve",
    "psd_inverse_sqrt",
    "psd_sqrt",
    "operator_norm",
    "trace_norm",
]

SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class SymEigen:
    """Eigendecomposition ``A = vectors @ diag(values) @ vectors.T``.

    ``values`` are sorted in descending order, ``vectors`` holds the matching
    orthonormal eigenvectors as columns.
    """

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


@dataclass(frozen=True)
class Svd:
    """Thin SVD ``M = left @ diag(singular) @ right.T`` with r = min(n, p).

    Zero singular values are kept, so ``singular`` always has length
    ``min(n, p)``.
    """

    left: np.ndarray
    singular: np.ndarray
    right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singular) @ self.right.T

    def rank(self, rtol: float = 1e-10) -> int:
        if self.singular.size == 0 or self.singular[0] == 0.0:
            return 0
        return int(np.sum(self.singular > rtol * self.singular[0]))


def _as_matrix(M, name="M") -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise InvalidInputError(f"{name} must be a non-empty 2-d array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return M


def _check_symmetric(A: np.ndarray, name="A") -> None:
    if A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {A.shape}")
    scale = np.max(np.abs(A))
    if scale > 0 and np.max(np.abs(A - A.T)) > SYMMETRY_RTOL * scale:
        raise InvalidInputError(f"{name} is not symmetric")


def sym_eigen(A) -> SymEigen:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Raises
    ------
    InvalidInputError
        If ``A`` is not square or not symmetric to 1e-12 relative.
    """
    A = _as_matrix(A, "A")
    _check_symmetric(A)
    values, vectors = np.linalg.eigh(A)
    return SymEigen(values=values[::-1].copy(), vectors=vectors[:, ::-1].copy())


def svd(M) -> Svd:
    """Thin singular value decomposition, singular values descending."""
    M = _as_matrix(M)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    return Svd(left=U, singular=s, right=Vt.T)


def cg_solve(
    apply: Callable[[np.ndarray], np.ndarray],
    b,
    x0=None,
    tol: float = 1e-10,
    max_iter: int | None = None,
    precond=None,
    full_output: bool = False,
):
    """Solve ``A x = b`` for symmetric positive definite ``A`` by conjugate gradient.

    Parameters
    ----------
    apply : callable
        ``apply(v)`` returns ``A @ v``. The matrix itself is never needed.
    b : array_like, shape (p,)
        Right-hand side.
    x0 : array_like, optional
        Starting point (warm start). Defaults to zero.
    tol : float
        Stop once ``||A x - b|| <= tol * ||b||``.
    max_iter : int, optional
        Iteration cap, defaults to ``p``.
    precond : array_like or callable, optional
        Preconditioner. An array is taken as the diagonal of ``M`` (Jacobi,
        applied as ``r / precond``); a callable must return ``M^{-1} r``.
    full_output : bool
        Also return a dict with ``iterations`` and ``residual`` (relative).

    Raises
    ------
    ConvergenceError
        If the tolerance is not met within ``max_iter`` iterations. The
        exception carries the final relative residual and iterate.
    """
    b = np.asarray(b, dtype=float)
    p = b.shape[0]
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    if max_iter is None:
        max_iter = p
    x = np.zeros(p) if x0 is None else np.array(x0, dtype=float)

    if precond is None:
        def psolve(r):
            return r
    elif callable(precond):
        psolve = precond
    else:
        diag = np.asarray(precond, dtype=float)
        if np.any(diag <= 0):
            raise InvalidInputError("diagonal preconditioner must be positive")

        def psolve(r):
            return r / diag

    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        x = np.zeros(p)
        return (x, {"iterations": 0, "residual": 0.0}) if full_output else x
    threshold = tol * bnorm

    r = b - apply(x)
    rnorm = np.linalg.norm(r)
    it = 0
    if rnorm > threshold:
        z = psolve(r)
        d = z.copy()
        rz = r @ z
        while it < max_iter:
            Ad = apply(d)
            curvature = d @ Ad
            if curvature <= 0:
                raise InvalidInputError("operator is not positive definite")
            alpha = rz / curvature
            x += alpha * d
            r -= alpha * Ad
            it += 1
            rnorm = np.linalg.norm(r)
            if rnorm <= threshold:
                break
            z = psolve(r)
            rz_new = r @ z
            d = z + (rz_new / rz) * d
            rz = rz_new
        else:
            # recursive residual can drift; confirm with a true one
            rnorm = np.linalg.norm(b - apply(x))
            if rnorm > threshold:
                raise ConvergenceError(
                    f"CG did not converge in {max_iter} iterations "
                    f"(relative residual {rnorm / bnorm:.3e} > {tol:.1e})",
                    iterations=it,
                    residual=rnorm / bnorm,
                    x=x,
                )
    if full_output:
        return x, {"iterations": it, "residual": rnorm / bnorm}
    return x


def psd_inverse_sqrt(A, mu: float, eig: SymEigen | None = None) -> np.ndarray:
    """Return ``(A + mu I)^{-1/2}`` for symmetric PSD ``A``.

    Computed as ``U diag(1 / sqrt(s_k + mu)) U^T`` from the eigendecomposition
    ``A = U diag(s) U^T``; ``eig`` can be passed to reuse a decomposition.
    Small negative eigenvalues from roundoff are clipped to zero.
    """
    if mu <= 0:
        raise InvalidInputError("mu must be positive")
    if eig is None:
        eig = sym_eigen(A)
    s = eig.values
    scale = max(abs(s[0]), abs(s[-1]))
    if s[-1] < -1e-8 * scale:
        raise InvalidInputError(f"matrix is not PSD (eigenvalue {s[-1]:.3e})")
    s = np.maximum(s, 0.0)
    U = eig.vectors
    return (U / np.sqrt(s + mu)) @ U.T


def psd_sqrt(A, atol: float = 1e-10) -> np.ndarray:
    """Symmetric square root of a PSD matrix.

    Eigenvalues in ``[-atol * max(1, ||A||), 0)`` are treated as roundoff and
    clipped; anything more negative is rejected. Eigenvalues below
    ``10 n eps ||A||`` are indistinguishable from zero and are set to zero,
    so that exactly singular inputs keep an accurate root.
    """
    eig = sym_eigen(A)
    s = eig.values
    if s[-1] < -atol * max(1.0, abs(s[0])):
        raise InvalidInputError(f"matrix is not PSD (eigenvalue {s[-1]:.3e})")
    floor = 10 * s.size * np.finfo(float).eps * max(abs(s[0]), 0.0)
    root = np.sqrt(np.where(s > floor, s, 0.0))
    return (eig.vectors * root) @ eig.vectors.T


def operator_norm(M) -> float:
    """Largest singular value."""
    return float(svd(M).singular[0])


def trace_norm(M) -> float:
    """Sum of singular values (nuclear norm)."""
    return float(np.sum(svd(M).singular))
