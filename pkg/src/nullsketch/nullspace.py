"""Sketch-and-solve for trailing right singular subspaces.

Given a tall ``A`` (``m x n``) and a sketch ``S`` (``s x m``, ``s >= n``),
the trailing ``k`` right singular vectors of the small matrix ``S @ A``
approximate those of ``A`` at ``O(mn log m + n^3)`` cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matcore import as_matrix, svd
from .sketch import SketchOperator

__all__ = [
    "NullspaceResult",
    "SRFT_RESIDUAL_FACTOR",
    "solve_k",
    "solve_tol",
    "residual_certificate",
    "residual_suboptimality_bound",
]

# sigma_max / sigma_min of an SRFT-embedded orthonormal basis at theory size
SRFT_RESIDUAL_FACTOR = 1.48 / 0.4


@dataclass
class NullspaceResult:
    W: np.ndarray
    sketched_singular_values: np.ndarray
    k: int
    residual_fro: float | None = None

    @property
    def sketched_residual(self) -> float:
        """``||(SA) W||_F``: root-sum-square of the ``k`` smallest sketched singular values."""
        tail = self.sketched_singular_values[len(self.sketched_singular_values) - self.k :]
        return float(np.sqrt(np.sum(tail**2)))


def _sketch_svd(A, S: SketchOperator):
    A = as_matrix(A)
    m, n = A.shape
    if S.m_effective != m:
        raise ValueError(f"sketch expects {S.m_effective} rows, A has {m}")
    if S.s < n:
        raise ValueError(f"sketch size {S.s} is smaller than the column count {n}")
    return A, svd(S @ A)


def _result(A, F, k, certificate):
    n = A.shape[1]
    W = F.V[:, n - k :]
    res = NullspaceResult(W=W, sketched_singular_values=F.S, k=k)
    if certificate:
        res.residual_fro = residual_certificate(A, W)
    return res


def solve_k(A, k: int, S: SketchOperator, certificate: bool = False) -> NullspaceResult:
    """Trailing ``k`` right singular vectors of ``S @ A``.

    ``0 <= k < n``.  The residual ``||A W||_F`` costs an extra pass over
    ``A`` and is only computed when ``certificate`` is set.
    """
    A = as_matrix(A)
    n = A.shape[1]
    if not 0 <= k < n:
        raise ValueError(f"k must satisfy 0 <= k < n = {n}, got {k}")
    A, F = _sketch_svd(A, S)
    return _result(A, F, k, certificate)


def solve_tol(A, eps: float, S: SketchOperator, certificate: bool = False) -> NullspaceResult:
    """Right singular vectors of ``S @ A`` for sketched singular values below ``eps``.

    The threshold is compared against the *sketched* singular values, which
    track the true ones only up to the embedding distortion.  ``eps`` of
    order unit roundoff times ``sigma_1`` gives a numerical null space.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    A, F = _sketch_svd(A, S)
    n = A.shape[1]
    k = int(np.count_nonzero(F.S < eps))
    if k >= n:
        raise ValueError(
            f"all {n} sketched singular values are below eps={eps:g}; "
            "the trailing subspace would be the whole space"
        )
    return _result(A, F, k, certificate)


def residual_certificate(A, W) -> float:
    """``||A W||_F`` in one pass over ``A``."""
    A = as_matrix(A)
    W = as_matrix(W, "W")
    if A.shape[1] != W.shape[0]:
        raise ValueError(f"A has {A.shape[1]} columns but W has {W.shape[0]} rows")
    if W.shape[1] == 0:
        return 0.0
    return float(np.linalg.norm(A @ W))


def residual_suboptimality_bound(delta: float) -> float:
    """``(1 + delta) / (1 - delta)`` for a sketch with singular-value distortion ``delta``."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return (1 + delta) / (1 - delta)
