"""Randomized sketch-and-solve for trailing singular subspaces of tall matrices."""

from .matcore import canonical_angles, make_test_matrix, sin_theta_norm, svd, thin_qr
from .sketch import SketchOperator, SketchedMatrix, apply, draw
from .nullspace import NullspaceResult, residual_certificate, solve_k, solve_tol
from .perturb import chi, corollary_bound, measure_angles, theorem_bound_R
from .tls import TlsProblem, TlsSolution, tls_solve_exact, tls_solve_sketched
from .aaa import BarycentricRational, SampleSet, aaa_exact, aaa_sketched

__version__ = "0.1.0"

__all__ = [
    "canonical_angles", "make_test_matrix", "sin_theta_norm", "svd", "thin_qr",
    "SketchOperator", "SketchedMatrix", "apply", "draw",
    "NullspaceResult", "residual_certificate", "solve_k", "solve_tol",
    "chi", "corollary_bound", "measure_angles", "theorem_bound_R",
    "TlsProblem", "TlsSolution", "tls_solve_exact", "tls_solve_sketched",
    "BarycentricRational", "SampleSet", "aaa_exact", "aaa_sketched",
]
