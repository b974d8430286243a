"""Nonnegative factorization of stacked contribution matrices.

The signed M x N contribution matrix is split into its positive and
negative parts and stacked into a nonnegative 2M x N matrix: row i
carries max(phi_ij, 0) and row M+i carries max(-phi_ij, 0), so the
original matrix is recovered exactly as the difference of the halves.

The stacked matrix is factored as V ~= W H with multiplicative
updates minimizing the Frobenius residual.  Columns of W are the base
explanation vectors; columns of H are the embedded explanations that
the clustering stage consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RankTooLarge
from .explain import ContributionMatrix

_EPS = 1e-12


@dataclass(frozen=True)
class StackedMatrix:
    """Nonnegative 2M x N stacking of a signed contribution matrix."""

    values: np.ndarray
    target_category: int
    labels: np.ndarray

    @property
    def num_features(self) -> int:
        return self.values.shape[0] // 2

    def positive_part(self) -> np.ndarray:
        return self.values[: self.num_features]

    def negative_part(self) -> np.ndarray:
        return self.values[self.num_features:]

    def original(self) -> np.ndarray:
        """The signed matrix; exact, not just within rounding."""
        return self.positive_part() - self.negative_part()


def stack_nonnegative(matrix: ContributionMatrix) -> StackedMatrix:
    phi = matrix.values
    stacked = np.vstack([np.maximum(phi, 0.0), np.maximum(-phi, 0.0)])
    return StackedMatrix(values=stacked, target_category=matrix.target_category,
                         labels=matrix.labels)


@dataclass(frozen=True)
class Factorization:
    """W H ~= V with nonnegative factors.

    ``objective`` is the Frobenius norm of the final residual;
    ``objective_history`` records it after every update pass and is
    nonincreasing.
    """

    W: np.ndarray
    H: np.ndarray
    objective: float
    iterations: int
    converged: bool
    objective_history: tuple = ()

    @property
    def rank(self) -> int:
        return self.W.shape[1]


def _objective(V, W, H) -> float:
    return float(np.linalg.norm(V - W @ H))


def nmf(values, rank: int, max_iters: int = 500, tol: float = 1e-5,
        seed: int = 0) -> Factorization:
    """Multiplicative-update factorization of a nonnegative matrix.

    Stops after ``max_iters`` passes or when the relative decrease of
    the residual norm falls below ``tol``.  Deterministic for a given
    seed.  Raises RankTooLarge when rank exceeds min(rows, cols).
    """
    V = np.asarray(values, dtype=float)
    if V.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    if not np.isfinite(V).all() or (V < 0).any():
        raise ValueError("matrix entries must be finite and nonnegative")
    rows, cols = V.shape
    if rank < 1:
        raise ValueError("rank must be >= 1")
    if rank > min(rows, cols):
        raise RankTooLarge(
            f"rank {rank} exceeds min(rows, cols) = {min(rows, cols)}")

    if not V.any():
        return Factorization(W=np.zeros((rows, rank)), H=np.zeros((rank, cols)),
                             objective=0.0, iterations=0, converged=True,
                             objective_history=(0.0,))

    rng = np.random.default_rng(seed)
    scale = np.sqrt(V.mean() / rank)
    # 1 - random() keeps entries in (0, 1]: a zero entry would be a fixed
    # point of the multiplicative update and could never activate.
    W = (1.0 - rng.random((rows, rank))) * scale
    # H starts column-constant so that identical columns of V receive
    # identical embeddings; the updates preserve the equality.
    H = np.tile((1.0 - rng.random((rank, 1))) * scale, (1, cols))

    history = [_objective(V, W, H)]
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        H *= (W.T @ V) / (W.T @ W @ H + _EPS)
        W *= (V @ H.T) / (W @ (H @ H.T) + _EPS)
        current = _objective(V, W, H)
        previous = history[-1]
        history.append(current)
        if previous > 0 and (previous - current) / previous < tol:
            converged = True
            break
    return Factorization(W=W, H=H, objective=history[-1], iterations=iterations,
                         converged=converged, objective_history=tuple(history))


def embed_explanations(matrix: ContributionMatrix, rank: int,
                       max_iters: int = 500, tol: float = 1e-5,
                       seed: int = 0) -> tuple[StackedMatrix, Factorization]:
    """Stack a contribution matrix and factor it in one step."""
    stacked = stack_nonnegative(matrix)
    return stacked, nmf(stacked.values, rank, max_iters=max_iters, tol=tol, seed=seed)
