"""Total least squares with multiple right-hand sides.

The TLS solution of ``A X ~ B`` comes from the trailing ``k`` right singular
vectors ``V_k = [V_k1; V_k2]`` of ``[A | B]`` as ``X = -V_k1 V_k2^{-1}``.
The sketched solver takes ``V_k`` from a sketch of ``[A | B]`` instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matcore import (
    FTOL,
    as_matrix,
    geometric_spectrum,
    make_test_matrix,
    sin_theta_norm,
    singular_values,
    svd,
    thin_qr,
)
from .sketch import SketchOperator

__all__ = [
    "COND_LIMIT",
    "TlsError",
    "TlsNonexistenceError",
    "TlsIllConditionedError",
    "TlsProblem",
    "TlsSolution",
    "tls_solve_exact",
    "tls_solve_sketched",
    "tls_error_metrics",
    "make_tls_problem",
]

COND_LIMIT = 1e12


class TlsError(ValueError):
    pass


class TlsNonexistenceError(TlsError):
    def __init__(self, sigma_n_A, sigma_n1_AB):
        super().__init__(
            f"TLS solution not guaranteed: sigma_n(A) = {sigma_n_A:.6g} does not exceed "
            f"sigma_(n+1)([A|B]) = {sigma_n1_AB:.6g}"
        )
        self.sigma_n_A = sigma_n_A
        self.sigma_n1_AB = sigma_n1_AB


class TlsIllConditionedError(TlsError):
    def __init__(self, cond):
        super().__init__(f"V_k2 is numerically singular (condition estimate {cond:.3g})")
        self.cond = cond


@dataclass
class TlsProblem:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        self.A = as_matrix(self.A, "A")
        self.B = as_matrix(self.B, "B")
        m, n = self.A.shape
        if self.B.shape[0] != m:
            raise ValueError(f"A has {m} rows but B has {self.B.shape[0]}")
        k = self.B.shape[1]
        if m < n + k:
            raise ValueError(f"need m >= n + k, got m={m}, n={n}, k={k}")
        if n < k:
            raise ValueError(f"need n >= k, got n={n}, k={k}")

    @property
    def shape(self):
        return self.A.shape[0], self.A.shape[1], self.B.shape[1]

    def augmented(self) -> np.ndarray:
        return np.hstack([self.A, self.B])


@dataclass
class TlsSolution:
    """``tls_residual`` is ``||[E | R]||_F``; for the sketched solver it is the
    sketch-based estimate unless a certificate was requested."""

    X: np.ndarray
    Vk: np.ndarray
    tls_residual: float
    cond_Vk2: float
    residual_is_estimate: bool = False


def _solution_from_Vk(Vk, n, residual, estimate):
    V1, V2 = Vk[:n], Vk[n:]
    cond = np.linalg.cond(V2)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise TlsIllConditionedError(cond)
    # X V2 = -V1
    X = -np.linalg.solve(V2.T, V1.T).T
    return TlsSolution(X=X, Vk=Vk, tls_residual=residual, cond_Vk2=float(cond),
                       residual_is_estimate=estimate)


def tls_solve_exact(p: TlsProblem) -> TlsSolution:
    """Dense-SVD TLS solution; raises if ``sigma_n(A) > sigma_{n+1}([A|B])`` fails."""
    m, n, k = p.shape
    F = svd(p.augmented())
    s_n1 = F.S[n]
    s_nA = singular_values(p.A)[n - 1]
    if not s_nA - s_n1 > FTOL * F.S[0]:
        raise TlsNonexistenceError(s_nA, s_n1)
    Vk = F.V[:, n:]
    residual = float(np.sqrt(np.sum(F.S[n:] ** 2)))
    return _solution_from_Vk(Vk, n, residual, estimate=False)


def tls_solve_sketched(p: TlsProblem, S: SketchOperator, certificate: bool = False) -> TlsSolution:
    """TLS from the trailing subspace of ``S @ [A | B]``.

    Without ``certificate`` the residual is the root-sum-square of the
    trailing sketched singular values; with it, ``||[A|B] Vtil_k||_F`` is
    computed exactly (one extra pass).
    """
    m, n, k = p.shape
    if S.s < n + k:
        raise ValueError(f"sketch size {S.s} is smaller than n + k = {n + k}")
    # sketching the blocks separately avoids forming the m x (n+k) augmented matrix
    F = svd(np.hstack([S @ p.A, S @ p.B]))
    Vk = F.V[:, n:]
    if certificate:
        residual = float(np.linalg.norm(p.A @ Vk[:n] + p.B @ Vk[n:]))
    else:
        residual = float(np.sqrt(np.sum(F.S[n:] ** 2)))
    return _solution_from_Vk(Vk, n, residual, estimate=not certificate)


def tls_error_metrics(exact: TlsSolution, sk: TlsSolution):
    """``(||X - Xt||_2 / ||X||_2, ||sin Theta(X, Xt)||_2, ||sin Theta(V_k, Vt_k)||_2)``."""
    X, Xt = exact.X, sk.X
    if X.shape != Xt.shape:
        raise ValueError(f"solution shapes differ: {X.shape} vs {Xt.shape}")
    nX = np.linalg.norm(X, 2)
    if nX == 0:
        raise ValueError("exact solution is zero; relative error undefined")
    rel = float(np.linalg.norm(X - Xt, 2) / nX)
    sin_x = sin_theta_norm(thin_qr(X)[0], thin_qr(Xt)[0])
    sin_v = sin_theta_norm(exact.Vk, sk.Vk)
    return rel, sin_x, sin_v


def make_tls_problem(m: int, n: int, k: int, noise: float, seed: int = 0,
                     last_singular_value: float = 1e-3):
    """Synthetic TLS instance: ``B = A C + N`` with ``||A C||_F = ||A||_F``.

    ``A`` has Haar factors and singular values decaying geometrically from 1
    to ``last_singular_value``; ``C`` is seeded Gaussian; ``N`` has
    i.i.d. ``N(0, noise^2 / m)`` entries.  Returns ``(problem, C)``.
    """
    rng = np.random.default_rng([seed, 1])
    A = make_test_matrix(m, n, geometric_spectrum(n, 1.0, last_singular_value), seed=seed)
    C = rng.standard_normal((n, k))
    AC = A @ C
    scale = np.linalg.norm(A) / np.linalg.norm(AC)
    C *= scale
    B = AC * scale + rng.standard_normal((m, k)) * (noise / np.sqrt(m))
    return TlsProblem(A, B), C
