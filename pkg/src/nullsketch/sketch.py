"""Sketching operators and incremental sketch maintenance.

Three kinds are supported:

``gaussian``
    ``S = G / sqrt(s)`` with ``G`` an ``s x m`` standard normal matrix.
``srft``
    ``S = sqrt(m/s) R F^* D``: random signs ``D``, the unitary DFT of length
    exactly ``m`` (no padding), and ``R`` restricting to ``s`` coordinates
    sampled without replacement.
``srdct``
    As ``srft`` with the orthonormal DCT-II in place of ``F^*``; keeps real
    input real.

The operator acts on an index space of ``m_effective = m + appended`` rows.
Row updates append a Gaussian column ``g / sqrt(s)`` drawn from a private
stream; row downdates record the row in ``zeroed_rows`` and the operator
ignores it from then on, which is the same as dropping the corresponding
column of ``S``.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .matcore import as_matrix

__all__ = [
    "KINDS",
    "SketchOperator",
    "SketchedMatrix",
    "SketchSizeWarning",
    "draw",
    "apply",
    "update_column",
    "downdate_column",
    "update_row",
    "downdate_row",
    "default_sketch_size",
    "srft_theory_sketch_size",
]

KINDS = ("gaussian", "srft", "srdct")

# explicit materialization is for test-scale operators only
MATERIALIZE_LIMIT = 4096
TRANSFORM_BLOCK_ELEMS = 1 << 20


class SketchSizeWarning(UserWarning):
    """Too few live rows remain for sketching to pay off."""


def _fft_workers() -> int:
    try:
        return max(1, int(os.environ.get("NULLSKETCH_THREADS", "1")))
    except ValueError:
        return 1


def default_sketch_size(kind: str, n: int) -> int:
    """``4n`` for Gaussian sketches, ``2n`` for subsampled transforms."""
    if kind == "gaussian":
        return 4 * n
    if kind in ("srft", "srdct"):
        return 2 * n
    raise ValueError(f"unknown sketch kind {kind!r}")


def srft_theory_sketch_size(m: int, n: int) -> int:
    """Smallest ``s`` satisfying ``4 (sqrt(n) + sqrt(8 log(mn)))^2 log(n) <= s``.

    Usually far above the practical ``2n`` and often above ``m``.
    """
    val = 4.0 * (np.sqrt(n) + np.sqrt(8.0 * np.log(m * n))) ** 2 * np.log(n)
    return int(np.ceil(val))


class SketchOperator:
    """Stateful ``s x m_effective`` sketching operator.

    Construct with :func:`draw`.  ``S @ A`` applies the operator to an array
    with ``m_effective`` rows and returns a plain array.
    """

    def __init__(self, kind: str, s: int, m: int, seed: int = 0):
        if kind not in KINDS:
            raise ValueError(f"unknown sketch kind {kind!r}; expected one of {KINDS}")
        s, m = int(s), int(m)
        if s < 1 or m < 1:
            raise ValueError("s and m must be positive")
        if kind != "gaussian" and s > m:
            raise ValueError(f"subsampled transform needs s <= m (s={s}, m={m})")
        self.kind = kind
        self.s = s
        self.m = m
        self.seed = int(seed)
        build_ss, update_ss = np.random.SeedSequence(self.seed).spawn(2)
        build = np.random.Generator(np.random.Philox(build_ss))
        self._update_rng = np.random.Generator(np.random.Philox(update_ss))
        self.appended: list[np.ndarray] = []
        self.zeroed_rows: set[int] = set()
        if kind == "gaussian":
            self._G = build.standard_normal((s, m))
            self.signs = None
            self.rows = None
        else:
            self._G = None
            self.signs = build.choice(np.array([-1.0, 1.0]), size=m)
            self.rows = np.sort(build.choice(m, size=s, replace=False))

    @property
    def m_effective(self) -> int:
        return self.m + len(self.appended)

    @property
    def live_rows(self) -> int:
        return self.m_effective - len(self.zeroed_rows)

    @property
    def shape(self):
        return (self.s, self.m_effective)

    def __repr__(self):
        return (
            f"SketchOperator(kind={self.kind!r}, s={self.s}, m={self.m}, seed={self.seed}, "
            f"appended={len(self.appended)}, zeroed={len(self.zeroed_rows)})"
        )

    def _transform(self, X: np.ndarray) -> np.ndarray:
        m, n = X.shape
        dtype = np.complex128 if (self.kind == "srft" or np.iscomplexobj(X)) else np.float64
        out = np.empty((self.s, n), dtype=dtype)
        # column blocks bound the temporaries to about TRANSFORM_BLOCK_ELEMS entries
        width = max(1, TRANSFORM_BLOCK_ELEMS // max(m, 1))
        scale = np.sqrt(self.m / self.s)
        for j in range(0, n, width):
            blk = self.signs[:, None] * X[:, j : j + width]
            if self.kind == "srft":
                Y = scipy.fft.ifft(blk, axis=0, norm="ortho", overwrite_x=True,
                                   workers=_fft_workers())
            else:
                Y = scipy.fft.dct(blk, type=2, axis=0, norm="ortho", overwrite_x=True,
                                  workers=_fft_workers())
            out[:, j : j + width] = scale * Y[self.rows]
        return out

    def __matmul__(self, A) -> np.ndarray:
        vector = np.ndim(A) == 1
        A = as_matrix(A)
        if A.shape[0] != self.m_effective:
            raise ValueError(
                f"operator expects {self.m_effective} rows, got {A.shape[0]}"
            )
        if self.kind == "srdct" and np.iscomplexobj(A):
            raise ValueError("srdct sketches real input only; use srft for complex data")
        if self.zeroed_rows:
            A = A.copy()
            A[sorted(self.zeroed_rows)] = 0
        head = A[: self.m]
        if self.kind == "gaussian":
            out = (self._G @ head) / np.sqrt(self.s)
        else:
            out = self._transform(head)
        if self.appended:
            Gp = np.column_stack(self.appended)
            out = out + (Gp @ A[self.m :]) / np.sqrt(self.s)
        return out[:, 0] if vector else out

    def sketch_basis_vector(self, j: int) -> np.ndarray:
        """``S e_j`` for the current operator, ignoring the zeroed-row mask."""
        j = int(j)
        if not 0 <= j < self.m_effective:
            raise IndexError(f"row index {j} out of range [0, {self.m_effective})")
        if j >= self.m:
            return self.appended[j - self.m] / np.sqrt(self.s)
        if self.kind == "gaussian":
            return self._G[:, j] / np.sqrt(self.s)
        e = np.zeros((self.m, 1))
        e[j, 0] = 1.0
        return self._transform(e)[:, 0]

    def to_matrix(self, live_only: bool = False) -> np.ndarray:
        """Explicit ``s x m_effective`` matrix (test scale only).

        Zeroed rows appear as zero columns, or are dropped when ``live_only``.
        """
        if self.m_effective > MATERIALIZE_LIMIT:
            raise ValueError(
                f"refusing to materialize a sketch over {self.m_effective} rows "
                f"(limit {MATERIALIZE_LIMIT})"
            )
        dtype = np.complex128 if self.kind == "srft" else np.float64
        M = np.zeros((self.s, self.m_effective), dtype=dtype)
        for j in range(self.m_effective):
            if j not in self.zeroed_rows:
                M[:, j] = self.sketch_basis_vector(j)
        if live_only:
            keep = [j for j in range(self.m_effective) if j not in self.zeroed_rows]
            M = M[:, keep]
        return M

    def _append_gaussian_column(self) -> np.ndarray:
        g = self._update_rng.standard_normal(self.s)
        self.appended.append(g)
        return g

    def descriptor(self) -> dict:
        """Small JSON-able description sufficient for :meth:`from_descriptor`."""
        return {
            "kind": self.kind,
            "s": self.s,
            "m": self.m,
            "seed": self.seed,
            "appended": len(self.appended),
            "zeroed_rows": sorted(self.zeroed_rows),
        }

    def to_json(self) -> str:
        return json.dumps(self.descriptor())

    @classmethod
    def from_descriptor(cls, d: dict) -> "SketchOperator":
        op = cls(d["kind"], d["s"], d["m"], d.get("seed", 0))
        for _ in range(int(d.get("appended", 0))):
            op._append_gaussian_column()
        op.zeroed_rows = {int(j) for j in d.get("zeroed_rows", [])}
        return op

    @classmethod
    def from_json(cls, text: str) -> "SketchOperator":
        return cls.from_descriptor(json.loads(text))


@dataclass
class SketchedMatrix:
    """An ``s x n`` sketch together with the operator that produced it."""

    data: np.ndarray
    operator: SketchOperator = field(repr=False)

    @property
    def shape(self):
        return self.data.shape

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


def draw(kind: str, s: int, m: int, seed: int = 0) -> SketchOperator:
    """Draw a sketching operator; deterministic for fixed ``(kind, s, m, seed)``."""
    return SketchOperator(kind, s, m, seed)


def apply(S: SketchOperator, A) -> SketchedMatrix:
    return SketchedMatrix(S @ as_matrix(A), S)


def _check_owner(SA: SketchedMatrix, S: SketchOperator):
    if SA.operator is not S:
        raise ValueError("sketch was produced by a different operator")


def update_column(SA: SketchedMatrix, S: SketchOperator, a_col, position: int | None = None) -> SketchedMatrix:
    """Insert the sketch of a new column at ``position`` (append when ``None``).

    Entries of ``a_col`` at zeroed rows are ignored.
    """
    _check_owner(SA, S)
    ncols = SA.data.shape[1]
    if position is None:
        position = ncols
    if not 0 <= position <= ncols:
        raise IndexError(f"column position {position} out of range [0, {ncols}]")
    a_col = np.asarray(a_col)
    if a_col.shape != (S.m_effective,):
        raise ValueError(f"column must have length {S.m_effective}, got shape {a_col.shape}")
    y = S @ a_col
    data = SA.data
    if np.iscomplexobj(y) and not np.iscomplexobj(data):
        data = data.astype(np.complex128)
    return SketchedMatrix(np.insert(data, position, y, axis=1), S)


def downdate_column(SA: SketchedMatrix, position: int) -> SketchedMatrix:
    ncols = SA.data.shape[1]
    if not 0 <= position < ncols:
        raise IndexError(f"column position {position} out of range [0, {ncols})")
    return SketchedMatrix(np.delete(SA.data, position, axis=1), SA.operator)


def update_row(SA: SketchedMatrix, S: SketchOperator, a_row):
    """Sketch of ``[A; a_row]``  = ``SA + g a_row / sqrt(s)`` with fresh ``g``.

    ``S`` gains the column ``g / sqrt(s)``; returns ``(new_sketch, S)``.
    """
    _check_owner(SA, S)
    a_row = np.asarray(a_row)
    if a_row.shape != (SA.data.shape[1],):
        raise ValueError(f"row must have length {SA.data.shape[1]}, got shape {a_row.shape}")
    g = S._append_gaussian_column()
    data = SA.data + np.outer(g, a_row) / np.sqrt(S.s)
    return SketchedMatrix(data, S), S


def downdate_row(SA: SketchedMatrix, S: SketchOperator, j: int, a_row_j):
    """Remove row ``j`` (with current contents ``a_row_j``) from the sketched matrix.

    The update is ``SA - (S e_j) a_row_j``.  For gaussian operators ``S e_j``
    is read straight from the stored column; for transforms it costs one
    transform of length ``m``.  Returns ``(new_sketch, S)``.
    """
    _check_owner(SA, S)
    j = int(j)
    if not 0 <= j < S.m_effective:
        raise IndexError(f"row index {j} out of range [0, {S.m_effective})")
    if j in S.zeroed_rows:
        raise ValueError(f"row {j} was already removed")
    a_row_j = np.asarray(a_row_j)
    if a_row_j.shape != (SA.data.shape[1],):
        raise ValueError(f"row must have length {SA.data.shape[1]}, got shape {a_row_j.shape}")
    e_j = S.sketch_basis_vector(j)
    data = SA.data - np.outer(e_j, a_row_j)
    S.zeroed_rows.add(j)
    if S.live_rows < 2 * S.s:
        warnings.warn(
            f"only {S.live_rows} live rows remain for sketch size {S.s}; "
            "sketching no longer reduces the problem much",
            SketchSizeWarning,
            stacklevel=2,
        )
    return SketchedMatrix(data, S), S
