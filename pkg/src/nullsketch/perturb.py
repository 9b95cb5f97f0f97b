"""Multiplicative perturbation bounds for trailing right singular subspaces.

For ``Atil = S @ A`` with ``A = U Sigma V^*`` and the thin QR ``S U = Q R``,
the sine of the angle between trailing subspaces of ``A`` and ``Atil`` is
at most ``||R - R^{-*}|| / chi(alpha^2, (alpha + delta)^2)`` whenever the
two spectra are separated by ``(alpha, alpha + delta)``.  When the sketch
is a good embedding, ``||R - R^{-*}||_2 <= 2.1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .matcore import as_matrix, canonical_angles, svd, thin_qr
from .sketch import SketchOperator

__all__ = [
    "EMBEDDING_R_DEVIATION",
    "GapParams",
    "AngleReport",
    "chi",
    "r_deviation",
    "theorem_bound_R",
    "bound_from_R",
    "corollary_bound",
    "apriori_bound_same_dim",
    "apriori_bound_diff_dim",
    "measure_angles",
]

# max of |x - 1/x| over the embedding interval [0.4, 1.6]
EMBEDDING_R_DEVIATION = 2.1


@dataclass(frozen=True)
class GapParams:
    """Spectral separation: one side's values ``<= alpha``, the other's ``>= alpha + delta``.

    ``alpha = 0`` is allowed as the limit of an exact null space.
    """

    alpha: float
    delta: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.delta)):
            raise ValueError("alpha and delta must be finite")
        if self.alpha < 0 or self.delta <= 0:
            raise ValueError(f"need alpha >= 0 and delta > 0, got {self.alpha}, {self.delta}")

    @classmethod
    def from_pair(cls, alpha, upper):
        """Params for ``alpha`` below and ``upper = alpha + delta`` above, or None."""
        if not upper > alpha or alpha < 0:
            return None
        return cls(float(alpha), float(upper - alpha))

    @property
    def upper(self) -> float:
        return self.alpha + self.delta


def chi(a: float, b: float) -> float:
    """Relative gap ``|a - b| / sqrt(|ab|)`` with ``0/0 = 0`` and ``x/0 = inf``."""
    num = abs(a - b)
    den = math.sqrt(abs(a * b))
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return num / den


def _inv_chi_sq(params: GapParams) -> float:
    """``1 / chi(alpha^2, (alpha+delta)^2) = alpha (alpha+delta) / ((alpha+delta)^2 - alpha^2)``.

    The right-hand form, evaluated as ``(a / delta) * (b / (a + b))``, avoids
    cancellation and over/underflow in ``chi``.
    """
    a, b = params.alpha, params.upper
    return (a / params.delta) * (b / (a + b))


def r_deviation(R, norm: str = "spectral") -> float:
    """``||R - R^{-*}||`` for square invertible ``R``."""
    R = as_matrix(R, "R")
    n = R.shape[0]
    if R.shape != (n, n):
        raise ValueError("R must be square")
    if np.array_equal(R, np.triu(R)):
        d = np.abs(np.diag(R))
        if d.min() <= n * np.finfo(float).eps * d.max():
            raise np.linalg.LinAlgError("R is numerically singular (X*U rank deficient)")
        Rinv = la.solve_triangular(R, np.eye(n, dtype=R.dtype))
    else:
        Rinv = np.linalg.inv(R)
    M = R - Rinv.conj().T
    if norm == "spectral":
        return float(np.linalg.norm(M, 2))
    if norm == "frobenius":
        return float(np.linalg.norm(M, "fro"))
    raise ValueError(f"unknown norm {norm!r}")


def bound_from_R(R, params: GapParams, norm: str = "spectral") -> float:
    return r_deviation(R, norm) * _inv_chi_sq(params)


def theorem_bound_R(X, U, params: GapParams, norm: str = "spectral") -> float:
    """Computable bound ``||R - R^{-*}|| / chi(alpha^2, (alpha+delta)^2)``.

    ``X`` is the sketch, either a :class:`SketchOperator` (materialized, test
    scale only) or the explicit ``s x m`` array applied on the left.  ``U``
    is the ``m x n`` left singular factor of ``A``.  Valid for both hypothesis
    branches and for the different-dimension comparison, whichever the
    caller has checked ``params`` against.
    """
    if isinstance(X, SketchOperator):
        X = X.to_matrix()
    X = as_matrix(X, "X")
    U = as_matrix(U, "U")
    if X.shape[1] != U.shape[0]:
        raise ValueError(f"sketch has {X.shape[1]} columns, U has {U.shape[0]} rows")
    _, R = thin_qr(X @ U)
    return bound_from_R(R, params, norm)


def corollary_bound(params: GapParams) -> float:
    """``2.1 / chi(alpha^2, (alpha+delta)^2)``."""
    return EMBEDDING_R_DEVIATION * _inv_chi_sq(params)


def apriori_bound_same_dim(sigma_gap: float, sigma_tail: float, branch: str = "b1"):
    """A priori bound on ``||sin Theta(V_2, Vtil_2)||_2`` from the true spectrum alone.

    ``sigma_gap = sigma_{n-k}``, ``sigma_tail = sigma_{n-k+1}``.  Branch
    ``'b1'`` needs ``sigma_gap > 1.6 sigma_tail`` and ``'b2'`` needs
    ``0.4 sigma_gap > sigma_tail``.  Returns None when not applicable.
    """
    if sigma_gap < 0 or sigma_tail < 0:
        raise ValueError("singular values must be non-negative")
    g, t = float(sigma_gap), float(sigma_tail)
    if branch == "b1":
        if not g > 1.6 * t:
            return None
        return 3.36 * g * t / (g**2 - 2.56 * t**2)
    if branch == "b2":
        if not 0.4 * g > t:
            return None
        return 3.36 * g * t / (0.16 * g**2 - t**2)
    raise ValueError(f"unknown branch {branch!r}")


def apriori_bound_diff_dim(sigma_gap: float, sigma_tail: float, branch: str = "b3"):
    """A priori bound for subspaces of different dimension (``l < k``).

    ``sigma_gap = sigma_{n-k}``, ``sigma_tail = sigma_{n-l+1}``.  ``'b3'``
    bounds ``sin Theta(V_3, [Vtil_2, Vtil_3])`` and needs
    ``0.4 sigma_gap > sigma_tail``; ``'b4'`` bounds
    ``sin Theta([V_2, V_3], Vtil_3)`` and needs ``sigma_gap > 1.6 sigma_tail``.
    """
    if branch == "b3":
        return apriori_bound_same_dim(sigma_gap, sigma_tail, "b2")
    if branch == "b4":
        return apriori_bound_same_dim(sigma_gap, sigma_tail, "b1")
    if sigma_gap < 0 or sigma_tail < 0:
        raise ValueError("singular values must be non-negative")
    raise ValueError(f"unknown branch {branch!r}")


@dataclass
class AngleReport:
    """Measured canonical angles with the gap parameters read off both spectra.

    Same-dimension mode (``l is None``): ``angles`` are between the trailing
    ``k`` subspaces of ``A`` and ``Atil``; both entries of ``candidates``
    bound them.

    Different-dimension mode: ``angles`` compare the trailing ``l`` vectors
    of ``A`` with the trailing ``k`` of ``Atil`` (bounded by the
    ``'orig_tail'`` candidate) and ``angles_alt`` compare the trailing ``k``
    of ``A`` with the trailing ``l`` of ``Atil`` (``'sketch_tail'``).
    """

    k: int
    l: int | None
    angles: np.ndarray
    sigma: np.ndarray
    sigma_tilde: np.ndarray
    candidates: dict = field(default_factory=dict)
    angles_alt: np.ndarray | None = None
    V: np.ndarray | None = field(default=None, repr=False)
    V_tilde: np.ndarray | None = field(default=None, repr=False)
    U: np.ndarray | None = field(default=None, repr=False)

    def sin_norm(self, which: str = "angles", norm: str = "spectral") -> float:
        theta = self.angles if which == "angles" else self.angles_alt
        if theta is None or theta.size == 0:
            return 0.0
        s = np.sin(theta)
        return float(s.max() if norm == "spectral" else np.sqrt(np.sum(s**2)))

    def corollary_bounds(self) -> dict:
        return {
            name: (corollary_bound(p) if p is not None else None)
            for name, p in self.candidates.items()
        }

    def best_corollary_bound(self) -> float:
        vals = [v for v in self.corollary_bounds().values() if v is not None]
        return min(vals) if vals else math.inf


def measure_angles(A, Atil, k: int, l: int | None = None) -> AngleReport:
    """Canonical angles between trailing right singular subspaces of ``A`` and ``Atil``.

    Candidate gap params (None where inadmissible):

    * same dimension: ``'sketch_tail'`` uses ``(sigmatil_{n-k+1}, sigma_{n-k})``
      and ``'orig_tail'`` uses ``(sigma_{n-k+1}, sigmatil_{n-k})``;
    * different dimension: ``'sketch_tail'`` uses ``(sigmatil_{n-l+1}, sigma_{n-k})``,
      ``'orig_tail'`` uses ``(sigma_{n-l+1}, sigmatil_{n-k})``.
    """
    A = as_matrix(A)
    Atil = as_matrix(Atil, "Atil")
    n = A.shape[1]
    if Atil.shape[1] != n:
        raise ValueError(f"column counts differ: {n} vs {Atil.shape[1]}")
    if not 0 < k < n:
        raise ValueError(f"need 0 < k < n, got k={k}, n={n}")
    if l is not None and not 0 < l < k:
        raise ValueError(f"need 0 < l < k, got l={l}, k={k}")
    F = svd(A)
    Ft = svd(Atil)
    sig, sigt = F.S, Ft.S
    if len(sig) < n or len(sigt) < n:
        raise ValueError("both matrices need at least n rows")
    V, Vt = F.V, Ft.V
    if l is None:
        angles = canonical_angles(V[:, n - k :], Vt[:, n - k :])
        cands = {
            "sketch_tail": GapParams.from_pair(sigt[n - k], sig[n - k - 1]),
            "orig_tail": GapParams.from_pair(sig[n - k], sigt[n - k - 1]),
        }
        return AngleReport(k, None, angles, sig, sigt, cands, None, V, Vt, F.U)
    angles = canonical_angles(V[:, n - l :], Vt[:, n - k :])
    alt = canonical_angles(V[:, n - k :], Vt[:, n - l :])
    cands = {
        "sketch_tail": GapParams.from_pair(sigt[n - l], sig[n - k - 1]),
        "orig_tail": GapParams.from_pair(sig[n - l], sigt[n - k - 1]),
    }
    return AngleReport(k, l, angles, sig, sigt, cands, alt, V, Vt, F.U)
