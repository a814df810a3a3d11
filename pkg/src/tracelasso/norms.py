"""Trace-norm based penalties ``Omega_P(w) = ||P Diag(w)||_*``.

A :class:`PenaltyMatrix` is either an explicit k x p matrix ``P`` with unit
columns, or the p x p Gram matrix ``G = P^T P`` (unit diagonal). The norm
only depends on ``G``, so both forms evaluate to the same value:
``||P Diag(w)||_* = ||G^{1/2} Diag(w)||_*``.

Special cases:

* ``P = I`` gives the l1 norm,
* ``P`` with identical columns gives the l2 norm,
* the block matrix of :func:`group_lasso_matrix` gives the group Lasso,
* ``P = X`` (normalized design) gives the trace Lasso.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import InvalidInputError
from .linalg import operator_norm, psd_sqrt, svd, trace_norm

__all__ = [
    "PenaltyMatrix",
    "GroupPartition",
    "omega",
    "omega_gram_equivalent",
    "trace_lasso",
    "dual_norm_upper",
    "dual_norm_lower_estimate",
    "group_lasso_matrix",
    "group_lasso_norm",
    "identical_columns_matrix",
    "normalize_columns",
    "unit_ball_slice",
    "write_ball_csv",
    "FIGURE_GRAMS",
]

UNIT_TOL = 1e-8

# The three P^T P matrices whose unit balls are drawn in the original figure.
FIGURE_GRAMS = (
    np.array([[1.0, 0.9, 0.1], [0.9, 1.0, 0.1], [0.1, 0.1, 1.0]]),
    np.array([[1.0, 0.7, 0.49], [0.7, 1.0, 0.7], [0.49, 0.7, 1.0]]),
    np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
)


@dataclass(frozen=True, eq=False)
class PenaltyMatrix:
    """Matrix defining ``Omega_P``, held in explicit or Gram form.

    Use :meth:`explicit` or :meth:`gram` to build one; both validate the
    unit-norm condition. The factor used for evaluation (``P`` itself, or
    ``G^{1/2}``) is computed once and cached.
    """

    form: str
    matrix: np.ndarray
    _factor: np.ndarray = field(repr=False)

    @classmethod
    def explicit(cls, P) -> "PenaltyMatrix":
        P = np.array(P, dtype=float, ndmin=2)
        if P.ndim != 2 or not np.all(np.isfinite(P)):
            raise InvalidInputError("P must be a finite 2-d array")
        norms = np.linalg.norm(P, axis=0)
        if np.any(np.abs(norms - 1.0) > UNIT_TOL):
            raise InvalidInputError("every column of P must have unit l2 norm")
        P.setflags(write=False)
        return cls("explicit", P, P)

    @classmethod
    def gram(cls, G) -> "PenaltyMatrix":
        G = np.array(G, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise InvalidInputError("Gram matrix must be square")
        if np.any(np.abs(np.diag(G) - 1.0) > UNIT_TOL):
            raise InvalidInputError("Gram matrix must have unit diagonal")
        root = psd_sqrt(G)
        G.setflags(write=False)
        root.setflags(write=False)
        return cls("gram", G, root)

    @property
    def p(self) -> int:
        return self.matrix.shape[1]

    @property
    def dims(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def factor(self) -> np.ndarray:
        """A matrix ``F`` with ``F^T F = P^T P`` (``P`` or ``G^{1/2}``)."""
        return self._factor

    def gram_matrix(self) -> np.ndarray:
        if self.form == "gram":
            return self.matrix
        return self.matrix.T @ self.matrix

    def to_gram(self) -> "PenaltyMatrix":
        if self.form == "gram":
            return self
        G = self.gram_matrix()
        # enforce exact symmetry and unit diagonal lost to roundoff
        G = 0.5 * (G + G.T)
        np.fill_diagonal(G, 1.0)
        return PenaltyMatrix.gram(G)


def _as_penalty(P) -> PenaltyMatrix:
    if isinstance(P, PenaltyMatrix):
        return P
    return PenaltyMatrix.explicit(P)


def _as_vector(w, p: int, name="w") -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.shape[0] != p:
        raise InvalidInputError(f"{name} must have shape ({p},), got {w.shape}")
    return w


def omega(P, w) -> float:
    """Evaluate ``Omega_P(w) = ||P Diag(w)||_*``.

    ``P`` may be a :class:`PenaltyMatrix` or a plain array (taken as explicit
    form, unit columns required).
    """
    P = _as_penalty(P)
    w = _as_vector(w, P.p)
    return trace_norm(P.factor * w)


def omega_gram_equivalent(P, w) -> float:
    """Evaluate ``Omega_P(w)`` through the Gram matrix ``P^T P`` only."""
    P = _as_penalty(P)
    w = _as_vector(w, P.p)
    return trace_norm(P.to_gram().factor * w)


def normalize_columns(X) -> np.ndarray:
    """Rescale the columns of ``X`` to unit l2 norm."""
    X = np.asarray(X, dtype=float)
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0):
        raise InvalidInputError("cannot normalize a zero column")
    return X / norms


def trace_lasso(X, w, normalize: bool = False) -> float:
    """Trace Lasso ``||X Diag(w)||_*``, optionally on column-normalized ``X``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InvalidInputError("X must be 2-d")
    w = _as_vector(w, X.shape[1])
    if normalize:
        X = normalize_columns(X)
    return trace_norm(X * w)


def dual_norm_upper(P, u) -> float:
    """Upper bound ``||P Diag(u)||_op`` on the dual norm ``Omega_P^*(u)``."""
    P = _as_penalty(P)
    u = _as_vector(u, P.p, "u")
    return operator_norm(P.factor * u)


def dual_norm_lower_estimate(P, u, trials: int = 200, seed=0) -> float:
    """Lower estimate of ``Omega_P^*(u) = max {u^T v : Omega_P(v) <= 1}``.

    Takes the best ratio ``u^T v / Omega_P(v)`` over a set of candidate
    directions: the canonical basis (both signs), ``u``, ``sign(u)``, the
    top right singular vector of ``P Diag(u)`` scaled by ``u``, and
    ``trials`` Gaussian directions. Any such ratio is a valid lower bound.
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    P = _as_penalty(P)
    u = _as_vector(u, P.p, "u")
    if not np.any(u):
        return 0.0
    p = P.p
    rng = np.random.default_rng(seed)
    F = P.factor
    top = svd(F * u).right[:, 0]
    candidates = [np.eye(p), -np.eye(p), np.stack([u, np.sign(u), top * u, -top * u]),
                  rng.standard_normal((trials, p))]
    best = 0.0
    for v in np.concatenate(candidates):
        if not np.any(v):
            continue
        best = max(best, float(u @ v) / trace_norm(F * v))
    return best


@dataclass(frozen=True)
class GroupPartition:
    """Disjoint groups of coordinate indices (0-based) covering ``range(p)``."""

    groups: tuple[tuple[int, ...], ...]

    def __init__(self, groups: Sequence[Sequence[int]]):
        groups = tuple(tuple(int(i) for i in g) for g in groups)
        if not groups or any(len(g) == 0 for g in groups):
            raise InvalidInputError("groups must be non-empty")
        flat = sorted(i for g in groups for i in g)
        if flat != list(range(len(flat))):
            raise InvalidInputError("groups must be disjoint and cover 0..p-1")
        object.__setattr__(self, "groups", groups)

    @property
    def p(self) -> int:
        return sum(len(g) for g in self.groups)

    @classmethod
    def contiguous(cls, p: int, size: int) -> "GroupPartition":
        if size < 1 or p % size:
            raise InvalidInputError("group size must divide p")
        return cls([range(s, s + size) for s in range(0, p, size)])


def group_lasso_matrix(partition: GroupPartition) -> PenaltyMatrix:
    """p x p matrix with ``1/sqrt(|S|)`` on each within-group block."""
    if not isinstance(partition, GroupPartition):
        partition = GroupPartition(partition)
    P = np.zeros((partition.p, partition.p))
    for g in partition.groups:
        idx = np.array(g)
        P[np.ix_(idx, idx)] = 1.0 / np.sqrt(len(g))
    return PenaltyMatrix.explicit(P)


def group_lasso_norm(w, partition: GroupPartition) -> float:
    """Direct group-Lasso value ``sum_j ||w_{S_j}||_2``."""
    if not isinstance(partition, GroupPartition):
        partition = GroupPartition(partition)
    w = np.asarray(w, dtype=float)
    return float(sum(np.linalg.norm(w[list(g)]) for g in partition.groups))


def identical_columns_matrix(p: int, k: int = 1, seed=None) -> PenaltyMatrix:
    """k x p matrix whose columns all equal one unit vector (l2 special case)."""
    if k == 1:
        col = np.ones(1)
    else:
        col = np.random.default_rng(seed).standard_normal(k)
        col /= np.linalg.norm(col)
    return PenaltyMatrix.explicit(np.repeat(col[:, None], p, axis=1))


def _sphere_directions(resolution: int) -> np.ndarray:
    theta = np.linspace(0.0, np.pi, resolution)
    phi = np.linspace(0.0, 2 * np.pi, 2 * resolution, endpoint=False)
    T, F = np.meshgrid(theta, phi, indexing="ij")
    pts = np.stack([np.sin(T) * np.cos(F), np.sin(T) * np.sin(F), np.cos(T)], axis=-1)
    pts = pts.reshape(-1, 3)
    pts = np.concatenate([np.eye(3), -np.eye(3), pts])
    # poles repeat once per longitude
    pts = np.round(pts, 14) + 0.0
    _, keep = np.unique(pts, axis=0, return_index=True)
    return pts[np.sort(keep)]


def unit_ball_slice(G, resolution: int = 41) -> np.ndarray:
    """Points on the boundary of the unit ball of ``Omega_G`` in R^3.

    Directions come from a latitude/longitude grid with ``resolution``
    latitudes (plus the six axis directions); each is rescaled to
    ``w / Omega(w)``.

    Returns
    -------
    ndarray, shape (m, 3)
    """
    if resolution < 2:
        raise InvalidInputError("resolution must be >= 2")
    P = G if isinstance(G, PenaltyMatrix) else PenaltyMatrix.gram(G)
    if P.p != 3:
        raise InvalidInputError("unit balls are only drawn for p = 3")
    dirs = _sphere_directions(resolution)
    values = np.array([trace_norm(P.factor * d) for d in dirs])
    return dirs / values[:, None]


def write_ball_csv(points: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["w1", "w2", "w3"])
        for row in points:
            writer.writerow([f"{x:.17g}" for x in row])
