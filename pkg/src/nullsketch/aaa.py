"""AAA rational approximation, exact and with a maintained sketch.

Each AAA step moves the worst-approximated sample into the support set,
which adds one column to the Loewner matrix and removes one row.  The
exact variant takes an SVD of the ``(m - k) x k`` Loewner matrix every
step.  The sketched variant keeps an ``s x k`` sketch of it, applying one
row downdate and one column update per step, and takes the SVD of the
sketch instead.
"""

from __future__ import annotations

import csv
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .matcore import svd
from .sketch import SketchedMatrix, SketchSizeWarning, draw, downdate_row, update_column

__all__ = [
    "FUNCTIONS",
    "SampleSet",
    "BarycentricRational",
    "AaaStep",
    "AaaTrace",
    "evaluate",
    "loewner_matrix",
    "max_sample_error",
    "aaa_exact",
    "aaa_sketched",
    "sample_domain",
    "sample_function",
]

DEFAULT_TOL = 1e-9


@dataclass
class SampleSet:
    z: np.ndarray
    f: np.ndarray
    name: str | None = None

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=np.complex128).ravel()
        self.f = np.asarray(self.f, dtype=np.complex128).ravel()
        if self.z.shape != self.f.shape:
            raise ValueError(f"{self.z.size} points but {self.f.size} values")
        if self.z.size == 0:
            raise ValueError("empty sample set")
        if np.unique(self.z).size != self.z.size:
            raise ValueError("sample points must be distinct")
        if not (np.all(np.isfinite(self.z)) and np.all(np.isfinite(self.f))):
            raise ValueError("sample points and values must be finite")

    def __len__(self):
        return self.z.size


@dataclass
class BarycentricRational:
    """``r(z) = sum_j w_j f_j / (z - z_j)  /  sum_j w_j / (z - z_j)``."""

    support_z: np.ndarray
    support_f: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.support_z = np.asarray(self.support_z, dtype=np.complex128)
        self.support_f = np.asarray(self.support_f, dtype=np.complex128)
        self.weights = np.asarray(self.weights, dtype=np.complex128)
        if not (self.support_z.shape == self.support_f.shape == self.weights.shape):
            raise ValueError("support points, values and weights must have equal length")

    @property
    def degree(self) -> int:
        return self.support_z.size

    def __call__(self, z):
        return evaluate(self, z)

    def to_dict(self) -> dict:
        def pairs(v):
            return [[float(x.real), float(x.imag)] for x in v]

        return {
            "support_points": pairs(self.support_z),
            "support_values": pairs(self.support_f),
            "weights": pairs(self.weights),
        }


def evaluate(r: BarycentricRational, z):
    """Evaluate ``r``; support points return their support value exactly."""
    z = np.asarray(z, dtype=np.complex128)
    zv = z.ravel()
    with np.errstate(divide="ignore", invalid="ignore"):
        C = 1.0 / (zv[:, None] - r.support_z[None, :])
        out = (C @ (r.weights * r.support_f)) / (C @ r.weights)
    hit_rows, hit_cols = np.nonzero(zv[:, None] == r.support_z[None, :])
    out[hit_rows] = r.support_f[hit_cols]
    return out.reshape(z.shape) if z.ndim else out[0]


def loewner_matrix(samples: SampleSet, support_idx, active_idx) -> np.ndarray:
    """``L[i, j] = (f_i - f_{s_j}) / (z_i - z_{s_j})`` for active rows ``i`` and support ``s_j``."""
    s = np.asarray(support_idx, dtype=int)
    a = np.asarray(active_idx, dtype=int)
    if np.intersect1d(s, a).size:
        raise ValueError("support and active index sets overlap")
    if np.unique(s).size != s.size or np.unique(a).size != a.size:
        raise ValueError("duplicate indices")
    z, f = samples.z, samples.f
    return (f[a][:, None] - f[s][None, :]) / (z[a][:, None] - z[s][None, :])


def max_sample_error(r: BarycentricRational, samples: SampleSet, active=None):
    """``(max |f_i - r(z_i)|, argmax)`` over ``active`` (all samples by default).

    Ties go to the lowest index.
    """
    err = np.abs(samples.f - evaluate(r, samples.z))
    if active is None:
        idx = np.arange(len(samples))
    else:
        idx = np.asarray(active, dtype=int)
    if idx.size == 0:
        return 0.0, -1
    p = int(np.argmax(err[idx]))
    return float(err[idx][p]), int(idx[p])


@dataclass
class AaaStep:
    degree: int
    support_index: int
    max_error: float
    sigma_min: float
    seconds: float
    consistency: float | None = None


@dataclass
class AaaTrace:
    variant: str
    steps: list = field(default_factory=list)
    converged: bool = False
    sketch: dict | None = None

    @property
    def degree(self) -> int:
        return self.steps[-1].degree if self.steps else 0

    def to_rows(self):
        return [
            {
                "degree": st.degree,
                "support_index": st.support_index,
                "max_error": st.max_error,
                "sigma_min": st.sigma_min,
                "seconds": st.seconds,
                "consistency": "" if st.consistency is None else st.consistency,
            }
            for st in self.steps
        ]

    def to_csv(self, path) -> None:
        rows = self.to_rows()
        with open(path, "w", newline="") as fh:
            fh.write("# schema: nullsketch.aaa_trace v1\n")
            w = csv.DictWriter(fh, fieldnames=list(AaaStep.__dataclass_fields__))
            w.writeheader()
            w.writerows(rows)


def _normalize_phase(w):
    w = w / np.linalg.norm(w)
    p = int(np.argmax(np.abs(w)))
    w = w * (np.conj(w[p]) / abs(w[p]))
    w[p] = abs(w[p])
    return w


class _ExactWeights:
    def start(self, m, max_degree):
        pass

    def step(self, j, k, L, active):
        A = L[active, :k]
        F = svd(A, full_matrices=A.shape[0] < k)
        sigma_min = F.S[-1] if A.shape[0] >= k else 0.0
        return F.V[:, -1], float(sigma_min), None


class _SketchedWeights:
    def __init__(self, kind, sketch_size, seed, check_consistency):
        self.kind = kind
        self.sketch_size = sketch_size
        self.seed = seed
        self.check = check_consistency

    def start(self, m, max_degree):
        s = self.sketch_size if self.sketch_size is not None else 2 * max_degree
        if s > m:
            raise ValueError(f"sketch size {s} exceeds the number of samples {m}")
        if m - max_degree < 2 * s:
            warnings.warn(
                f"sketch size {s} is large for {m} samples; the sketched solve saves little",
                SketchSizeWarning,
                stacklevel=4,
            )
        self.S = draw(self.kind, s, m, self.seed)
        dtype = np.float64 if self.kind == "gaussian" else np.complex128
        self.SA = SketchedMatrix(np.zeros((s, 0), dtype=dtype), self.S)

    def step(self, j, k, L, active):
        # row j leaves the least-squares system, its new column joins with support rows zeroed
        with warnings.catch_warnings():
            # reported once in start()
            warnings.simplefilter("ignore", SketchSizeWarning)
            self.SA, _ = downdate_row(self.SA, self.S, j, L[j, : k - 1])
        self.SA = update_column(self.SA, self.S, L[:, k - 1])
        F = svd(self.SA.data)
        consistency = None
        if self.check:
            ref = self.S @ L[:, :k]
            scale = np.linalg.norm(L[active, :k])
            consistency = float(np.linalg.norm(self.SA.data - ref) / scale) if scale else 0.0
        return F.V[:, -1], float(F.S[-1]), consistency

    def describe(self):
        return self.S.descriptor()


def _aaa(samples: SampleSet, tol: float, max_degree: int, solver, variant: str):
    z, f = samples.z, samples.f
    m = len(samples)
    if not 1 <= max_degree < m:
        raise ValueError(f"need 1 <= max_degree < m = {m}, got {max_degree}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    solver.start(m, max_degree)
    fnorm = float(np.max(np.abs(f)))
    target = tol * fnorm

    active = np.ones(m, dtype=bool)
    support: list[int] = []
    C = np.zeros((m, max_degree), dtype=np.complex128)
    L = np.zeros((m, max_degree), dtype=np.complex128)
    err = np.abs(f - np.mean(f))
    trace = AaaTrace(variant=variant)
    w = np.ones(1, dtype=np.complex128)

    for k in range(1, max_degree + 1):
        t0 = time.perf_counter()
        # lowest index wins ties
        j = int(np.argmax(np.where(active, err, -1.0)))
        support.append(j)
        active[j] = False
        with np.errstate(divide="ignore", invalid="ignore"):
            c = 1.0 / (z - z[j])
        c[j] = 0.0
        C[:, k - 1] = c
        L[:, k - 1] = (f - f[j]) * c

        w, sigma_min, consistency = solver.step(j, k, L, active)
        w = _normalize_phase(w)
        sup = np.asarray(support)
        with np.errstate(divide="ignore", invalid="ignore"):
            r_vals = (C[:, :k] @ (w * f[sup])) / (C[:, :k] @ w)
        r_vals[sup] = f[sup]
        err = np.abs(f - r_vals)
        err[~np.isfinite(err)] = np.inf
        max_err = float(err[active].max()) if active.any() else 0.0
        trace.steps.append(
            AaaStep(k, j, max_err, sigma_min, time.perf_counter() - t0, consistency)
        )
        if max_err <= target:
            trace.converged = True
            break

    sup = np.asarray(support)
    r = BarycentricRational(z[sup], f[sup], w)
    if hasattr(solver, "describe"):
        trace.sketch = solver.describe()
    return r, trace


def aaa_exact(samples: SampleSet, tol: float = DEFAULT_TOL, max_degree: int = 100):
    """Classical AAA; stops when the max sampled error is ``<= tol * ||f||_inf``.

    Returns ``(r, trace)``; ``trace.converged`` is False if ``max_degree``
    was reached first.
    """
    return _aaa(samples, tol, max_degree, _ExactWeights(), "exact")


def aaa_sketched(
    samples: SampleSet,
    tol: float = DEFAULT_TOL,
    max_degree: int = 100,
    seed: int = 0,
    kind: str = "srft",
    sketch_size: int | None = None,
    check_consistency: bool = False,
):
    """AAA with the Loewner least-squares step solved on a maintained sketch.

    One sketch of size ``2 * max_degree`` (unless ``sketch_size`` is given)
    is drawn over all ``m`` rows.  ``check_consistency`` recomputes the
    sketch from scratch each step and records the relative discrepancy in
    the trace; it is for testing and costs ``O(k m log m)`` per step.
    """
    solver = _SketchedWeights(kind, sketch_size, seed, check_consistency)
    return _aaa(samples, tol, max_degree, solver, "sketched")


def _f_logz4(z):
    return np.log(2 + z**4) / (1 - 16 * z**4)


def _f_sqrtbranch(z):
    return np.sqrt(z * (1 - z)) * np.sqrt((z - 1j) * (1 + 1j - z))


def _f_tan128(z):
    return np.tan(128 * z)


def _f_tan256(z):
    return np.tan(256 * z)


# name -> (function, domain, degree reported at one million samples)
FUNCTIONS = {
    "logz4": (_f_logz4, "circle", 32),
    "sqrtbranch": (_f_sqrtbranch, "square", 60),
    "tan128": (_f_tan128, "disk", 105),
    "tan256": (_f_tan256, "disk", 190),
}


def sample_domain(domain: str, m: int, rng) -> np.ndarray:
    """``m`` uniform random points on the unit circle, unit square or unit disk."""
    if domain == "circle":
        return np.exp(2j * np.pi * rng.random(m))
    if domain == "square":
        return rng.random(m) + 1j * rng.random(m)
    if domain == "disk":
        out = np.empty(0, dtype=np.complex128)
        while out.size < m:
            need = m - out.size
            cand = 2 * rng.random(2 * need) - 1 + 1j * (2 * rng.random(2 * need) - 1)
            out = np.concatenate([out, cand[np.abs(cand) <= 1]])
        return out[:m]
    raise ValueError(f"unknown domain {domain!r}")


def sample_function(name: str, m: int, seed: int = 0) -> SampleSet:
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}; choose from {sorted(FUNCTIONS)}")
    fn, domain, _ = FUNCTIONS[name]
    rng = np.random.default_rng(seed)
    z = sample_domain(domain, m, rng)
    return SampleSet(z, fn(z), name=name)
