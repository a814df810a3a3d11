"""Synthetic correlated-design benchmarks.

Covariances (all with unit diagonal):

* ``identity``
* ``block_diagonal``: blocks ``(1 - within) I + within 11^T`` of size
  ``block_size``; the defaults (8, 0.8) give clusters of eight variables
  with blocks ``0.2 I + 0.8 11^T``
* ``toeplitz``: ``Sigma_ij = rho^|i-j|``, default ``rho = 0.95``

Randomness: every draw uses its own PCG64 stream seeded by
``SeedSequence([seed, STREAM])`` where ``STREAM`` identifies the quantity
(design, ground truth, noise). Draws are therefore reproducible across
platforms and independent of the order in which they are requested.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import InvalidInputError

__all__ = [
    "CovarianceSpec",
    "GroundTruth",
    "build_sigma",
    "sample_design",
    "sample_ground_truth",
    "sample_response",
    "estimation_error",
    "rng_for",
    "write_dataset",
    "STREAM_DESIGN",
    "STREAM_TRUTH",
    "STREAM_NOISE",
]

STREAM_DESIGN = 0
STREAM_TRUTH = 1
STREAM_NOISE = 2

KINDS = ("identity", "block_diagonal", "toeplitz")


def rng_for(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(stream)])))


@dataclass(frozen=True)
class CovarianceSpec:
    kind: str
    p: int
    block_size: int = 8
    within: float = 0.8
    base: float = 0.2
    rho: float = 0.95

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown covariance kind {self.kind!r}")
        if self.p < 1:
            raise InvalidInputError("p must be >= 1")
        if self.kind == "block_diagonal":
            if self.block_size < 1 or self.p % self.block_size:
                raise InvalidInputError("block_size must divide p")
            if not np.isclose(self.within + self.base, 1.0):
                raise InvalidInputError("within + base must equal 1 (unit diagonal)")
        if self.kind == "toeplitz" and not abs(self.rho) < 1:
            raise InvalidInputError("|rho| must be < 1")

    @classmethod
    def named(cls, name: str, p: int) -> "CovarianceSpec":
        """Short names used on the command line: identity, block, toeplitz."""
        aliases = {"identity": "identity", "block": "block_diagonal",
                   "block_diagonal": "block_diagonal", "toeplitz": "toeplitz"}
        if name not in aliases:
            raise InvalidInputError(f"unknown design {name!r}")
        return cls(aliases[name], p)


def build_sigma(spec: CovarianceSpec) -> np.ndarray:
    p = spec.p
    if spec.kind == "identity":
        sigma = np.eye(p)
    elif spec.kind == "block_diagonal":
        b = spec.block_size
        block = spec.base * np.eye(b) + spec.within * np.ones((b, b))
        sigma = np.kron(np.eye(p // b), block)
    else:
        idx = np.arange(p)
        sigma = spec.rho ** np.abs(idx[:, None] - idx[None, :])
    if np.linalg.eigvalsh(sigma)[0] < -1e-10:
        raise RuntimeError(f"covariance for {spec} is not PSD")
    return sigma


def _factor(sigma: np.ndarray) -> np.ndarray:
    """``F`` with ``F F^T = sigma`` (eigen-based; Cholesky fails on singular blocks)."""
    vals, vecs = np.linalg.eigh(sigma)
    return vecs * np.sqrt(np.maximum(vals, 0.0))


def sample_design(n: int, spec: CovarianceSpec, seed: int) -> np.ndarray:
    """``n`` i.i.d. rows drawn from ``N(0, Sigma)``."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    sigma = build_sigma(spec)
    Z = rng_for(seed, STREAM_DESIGN).standard_normal((n, spec.p))
    if spec.kind == "identity":
        return Z
    return Z @ _factor(sigma).T


@dataclass(frozen=True)
class GroundTruth:
    support_size: int
    w_star: np.ndarray
    seed: int


def sample_ground_truth(p: int, k: int, seed: int) -> GroundTruth:
    """Weights ``2 (b_i - 1/2)``, ``b_i ~ U[0, 1]``, on the first ``k`` coordinates."""
    if not 1 <= k <= p:
        raise InvalidInputError(f"need 1 <= k <= p, got k={k}, p={p}")
    w = np.zeros(p)
    b = rng_for(seed, STREAM_TRUTH).random(k)
    w[:k] = 2.0 * (b - 0.5)
    return GroundTruth(k, w, seed)


def sample_response(X, w_star, sigma: float, seed: int) -> np.ndarray:
    """``y = X w* + eps`` with ``eps ~ N(0, sigma^2 I)``."""
    if sigma < 0:
        raise InvalidInputError("sigma must be >= 0")
    X = np.asarray(X, dtype=float)
    y = X @ np.asarray(w_star, dtype=float)
    if sigma > 0:
        y = y + sigma * rng_for(seed, STREAM_NOISE).standard_normal(X.shape[0])
    return y


def estimation_error(w_hat, w_star) -> float:
    """l2 distance ``||w_hat - w*||_2``."""
    w_hat = np.asarray(w_hat, dtype=float)
    w_star = np.asarray(w_star, dtype=float)
    if w_hat.shape != w_star.shape:
        raise InvalidInputError("length mismatch")
    return float(np.linalg.norm(w_hat - w_star))


def write_dataset(prefix, X, y, w_star, spec: CovarianceSpec, seed: int, sigma: float, k: int) -> None:
    """Write ``<prefix>_X.csv``, ``<prefix>_y.csv`` and ``<prefix>_meta.json``."""
    X = np.asarray(X)
    with open(f"{prefix}_X.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j}" for j in range(X.shape[1])])
        writer.writerows([[f"{v:.17g}" for v in row] for row in X])
    with open(f"{prefix}_y.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y"])
        writer.writerows([[f"{v:.17g}"] for v in y])
    meta = {"spec": asdict(spec), "seed": seed, "sigma": sigma, "k": k,
            "w_star": [float(v) for v in w_star]}
    with open(f"{prefix}_meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
