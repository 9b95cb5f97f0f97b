"""Dense matrix kernels shared by every other module.

Matrices are plain 2-D numpy arrays; ``float64`` arrays stay on the real
path and ``complex128`` arrays on the complex path.  Subspace bases are
arrays with orthonormal columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

__all__ = [
    "FTOL",
    "UNIT_ROUNDOFF",
    "SvdConvergenceError",
    "SvdFactorization",
    "as_matrix",
    "svd",
    "singular_values",
    "thin_qr",
    "orth_complement",
    "canonical_angles",
    "sin_theta_norm",
    "haar_orthonormal",
    "make_test_matrix",
    "geometric_spectrum",
]

FTOL = 1e-12
UNIT_ROUNDOFF = np.finfo(np.float64).eps / 2


class SvdConvergenceError(np.linalg.LinAlgError):
    """Raised when the dense SVD fails to converge or produces non-finite output."""


@dataclass(frozen=True)
class SvdFactorization:
    """Thin SVD ``A = U @ diag(S) @ V.conj().T`` with ``S`` non-increasing."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.S) @ self.V.conj().T


def as_matrix(A, name: str = "A") -> np.ndarray:
    """Coerce ``A`` to a 2-D float64 or complex128 array."""
    A = np.asarray(A)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {A.shape}")
    if np.iscomplexobj(A):
        return A.astype(np.complex128, copy=False)
    return A.astype(np.float64, copy=False)


def svd(A, full_matrices: bool = False) -> SvdFactorization:
    """Dense SVD with an explicit failure mode.

    LAPACK ``gesdd`` is tried first; on non-convergence the slower but more
    robust ``gesvd`` driver is used.  Output containing NaN or Inf raises
    :class:`SvdConvergenceError` instead of being returned.
    """
    A = as_matrix(A)
    if A.size == 0:
        raise ValueError("svd of an empty matrix")
    if not np.all(np.isfinite(A)):
        raise SvdConvergenceError("input contains NaN or Inf")
    try:
        U, S, Vh = la.svd(A, full_matrices=full_matrices, lapack_driver="gesdd")
    except la.LinAlgError:
        try:
            U, S, Vh = la.svd(A, full_matrices=full_matrices, lapack_driver="gesvd")
        except la.LinAlgError as exc:
            raise SvdConvergenceError(str(exc)) from exc
    if not (np.all(np.isfinite(S)) and np.all(np.isfinite(Vh))):
        raise SvdConvergenceError("SVD produced non-finite values")
    return SvdFactorization(U=U, S=S, V=Vh.conj().T)


def singular_values(A) -> np.ndarray:
    A = as_matrix(A)
    try:
        return la.svdvals(A)
    except la.LinAlgError as exc:
        raise SvdConvergenceError(str(exc)) from exc


def thin_qr(A):
    """Thin QR with the diagonal of ``R`` made real and non-negative.

    The sign convention makes ``R`` unique for full-rank input, so quantities
    such as ``R - inv(R).conj().T`` are reproducible.
    """
    A = as_matrix(A)
    m, n = A.shape
    if m < n:
        raise ValueError(f"thin_qr needs rows >= cols, got {A.shape}")
    Q, R = la.qr(A, mode="economic")
    d = np.diag(R)
    phase = np.ones_like(d)
    nz = np.abs(d) > 0
    phase[nz] = d[nz] / np.abs(d[nz])
    Q = Q * phase
    R = phase.conj()[:, None] * R
    # exact zero imaginary parts on the diagonal
    idx = np.arange(n)
    R[idx, idx] = np.abs(np.diag(R))
    return Q, R


def orth_complement(Q) -> np.ndarray:
    """Orthonormal basis for the orthogonal complement of ``range(Q)``."""
    Q = as_matrix(Q, "Q")
    n, k = Q.shape
    if k == 0:
        return np.eye(n, dtype=Q.dtype)
    full, _ = la.qr(Q, mode="full")
    return full[:, k:]


def _check_pair(U, V):
    U = as_matrix(U, "U")
    V = as_matrix(V, "V")
    if U.shape[0] != V.shape[0]:
        raise ValueError(
            f"ambient dimensions differ: {U.shape[0]} vs {V.shape[0]}"
        )
    return U, V


def canonical_angles(U, V) -> np.ndarray:
    """Canonical angles in radians, ascending, between ``range(U)`` and ``range(V)``.

    Both inputs must have orthonormal columns.  ``min(k1, k2)`` angles are
    returned.  Angles whose cosine exceeds ``1/sqrt(2)`` are recovered from
    the sines (singular values of the residual ``V - U U^* V``), since
    ``arccos`` of a cosine near one loses half the digits.
    """
    U, V = _check_pair(U, V)
    if U.shape[1] < V.shape[1]:
        U, V = V, U
    p = V.shape[1]
    if p == 0:
        return np.zeros(0)
    M = U.conj().T @ V
    cos = np.clip(singular_values(M), 0.0, 1.0)
    cos = np.sort(cos)[::-1][:p]
    theta = np.arccos(cos)
    small = cos**2 >= 0.5
    if np.any(small):
        # V has p <= k columns, so its residual against range(U) has p singular values
        sin = np.clip(singular_values(V - U @ M), 0.0, 1.0)
        sin = np.sort(sin)
        theta[small] = np.arcsin(sin[small])
    return np.sort(theta)


def sin_theta_norm(U, V, norm: str = "spectral") -> float:
    """Norm of ``sin Theta(U, V)``: ``'spectral'`` (largest sine) or ``'frobenius'``."""
    theta = canonical_angles(U, V)
    if theta.size == 0:
        return 0.0
    s = np.sin(theta)
    if norm == "spectral":
        return float(s.max())
    if norm == "frobenius":
        return float(np.sqrt(np.sum(s**2)))
    raise ValueError(f"unknown norm {norm!r}")


def haar_orthonormal(m: int, n: int, rng, dtype=np.float64) -> np.ndarray:
    """``m x n`` matrix with Haar-distributed orthonormal columns."""
    if np.issubdtype(np.dtype(dtype), np.complexfloating):
        G = (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / np.sqrt(2)
    else:
        G = rng.standard_normal((m, n))
    Q, _ = thin_qr(G)
    return Q


def geometric_spectrum(n: int, first: float = 1.0, last: float = 1e-10) -> np.ndarray:
    return np.geomspace(first, last, n)


def make_test_matrix(
    m: int,
    n: int,
    spectrum,
    left_mode: str = "haar",
    right_mode: str = "haar",
    seed: int = 0,
) -> np.ndarray:
    """Real ``m x n`` matrix ``U @ diag(spectrum) @ V.T`` with prescribed singular values.

    ``left_mode='coherent'`` uses ``U = [I_n; 0]``, the hard case for
    subsampled transforms; ``'haar'`` draws ``U`` from the Haar measure.
    """
    spectrum = np.asarray(spectrum, dtype=np.float64)
    if m < n:
        raise ValueError(f"need m >= n, got {m} < {n}")
    if spectrum.shape != (n,):
        raise ValueError(f"spectrum must have length {n}")
    if np.any(spectrum < 0) or np.any(np.diff(spectrum) > 0):
        raise ValueError("spectrum must be non-negative and non-increasing")
    if right_mode != "haar":
        raise ValueError(f"unknown right_mode {right_mode!r}")
    rng = np.random.default_rng(seed)
    if left_mode == "haar":
        U = haar_orthonormal(m, n, rng)
    elif left_mode == "coherent":
        U = np.zeros((m, n))
        U[:n, :n] = np.eye(n)
    else:
        raise ValueError(f"unknown left_mode {left_mode!r}")
    V = haar_orthonormal(n, n, rng)
    return (U * spectrum) @ V.T
