import warnings

import numpy as np
import pytest
import scipy.linalg as la
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from nullsketch.matcore import haar_orthonormal, singular_values
from nullsketch.sketch import (
    MATERIALIZE_LIMIT,
    SketchOperator,
    SketchSizeWarning,
    apply,
    default_sketch_size,
    downdate_column,
    downdate_row,
    draw,
    srft_theory_sketch_size,
    update_column,
    update_row,
)

KINDS = ["gaussian", "srft", "srdct"]


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def dct2_matrix(m):
    j = np.arange(m)
    C = np.sqrt(2.0 / m) * np.cos(np.pi * j[:, None] * (2 * j[None, :] + 1) / (2 * m))
    C[0] /= np.sqrt(2.0)
    return C


@pytest.mark.parametrize("kind", KINDS)
def test_same_seed_same_operator(kind):
    a, b = draw(kind, 8, 40, seed=5), draw(kind, 8, 40, seed=5)
    assert np.array_equal(a.to_matrix(), b.to_matrix())
    assert not np.array_equal(a.to_matrix(), draw(kind, 8, 40, seed=6).to_matrix())


@pytest.mark.parametrize("kind", KINDS)
def test_apply_matches_materialized(kind, rng):
    S = draw(kind, 12, 50, seed=1)
    A = rng.standard_normal((50, 4))
    assert rel(S @ A, S.to_matrix() @ A) < 1e-13


@pytest.mark.parametrize("kind", KINDS)
@given(seed=st.integers(0, 2**31), a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_linearity(kind, seed, a, b):
    r = np.random.default_rng(seed)
    X, Y = r.standard_normal((30, 3)), r.standard_normal((30, 3))
    S = draw(kind, 10, 30, seed=seed)
    lhs = S @ (a * X + b * Y)
    rhs = a * (S @ X) + b * (S @ Y)
    assert np.allclose(lhs, rhs, atol=1e-12 * (1 + abs(a) + abs(b)))


def test_srft_explicit_formula():
    m, s = 16, 6
    S = draw("srft", s, m, seed=2)
    Fstar = la.dft(m, scale="sqrtn").conj()
    ref = np.sqrt(m / s) * Fstar[S.rows] * S.signs[None, :]
    assert np.allclose(S.to_matrix(), ref, atol=1e-14)


def test_srdct_explicit_formula():
    m, s = 21, 7
    S = draw("srdct", s, m, seed=2)
    ref = np.sqrt(m / s) * dct2_matrix(m)[S.rows] * S.signs[None, :]
    assert np.allclose(S.to_matrix(), ref, atol=1e-14)


@pytest.mark.parametrize("kind,m", [("srft", 16), ("srft", 15), ("srdct", 12), ("srdct", 13)])
def test_full_size_transform_is_unitary(kind, m):
    M = draw(kind, m, m, seed=0).to_matrix()
    assert np.allclose(M.conj().T @ M, np.eye(m), atol=1e-13)


def test_vector_in_vector_out(rng):
    S = draw("srft", 5, 20)
    y = S @ rng.standard_normal(20)
    assert y.shape == (5,)


def test_srdct_rejects_complex(rng):
    with pytest.raises(ValueError, match="real"):
        draw("srdct", 4, 10) @ (1j * np.ones((10, 2)))


def test_blocked_transform_matches_single_pass(rng, monkeypatch):
    import nullsketch.sketch as sk

    A = rng.standard_normal((64, 9))
    S = draw("srdct", 10, 64, seed=4)
    full = S @ A
    monkeypatch.setattr(sk, "TRANSFORM_BLOCK_ELEMS", 64 * 2)
    assert rel(S @ A, full) < 1e-15


@pytest.mark.parametrize("kw", [dict(kind="nope", s=2, m=4), dict(kind="srft", s=5, m=4), dict(kind="gaussian", s=0, m=4)])
def test_invalid_operators(kw):
    with pytest.raises(ValueError):
        draw(**kw)


def test_gaussian_may_have_more_rows_than_m():
    assert draw("gaussian", 10, 4).shape == (10, 4)


def test_materialize_guard():
    with pytest.raises(ValueError, match="materialize"):
        draw("srft", 2, MATERIALIZE_LIMIT + 1).to_matrix()


def test_default_sizes():
    assert default_sketch_size("gaussian", 10) == 40
    assert default_sketch_size("srft", 10) == 20
    # 4 (sqrt(100) + sqrt(8 log(1e5)))^2 log(100)
    expected = 4 * (10 + np.sqrt(8 * np.log(1e5))) ** 2 * np.log(100)
    assert srft_theory_sketch_size(1000, 100) == int(np.ceil(expected))


def test_gaussian_entries_scaled():
    S = draw("gaussian", 200, 500, seed=0).to_matrix()
    # entries N(0, 1/s)
    assert abs(S.var() * 200 - 1) < 0.02
    assert abs(S.mean()) < 5 * np.sqrt(1 / 200) / np.sqrt(S.size)


@pytest.mark.filterwarnings("ignore::nullsketch.sketch.SketchSizeWarning")
@pytest.mark.parametrize("trial", range(20))
def test_gaussian_row_downdate_matches_delete_oracle(trial):
    r = np.random.default_rng(100 + trial)
    m, n, s = int(r.integers(20, 80)), int(r.integers(1, 6)), int(r.integers(5, 30))
    A = r.standard_normal((m, n))
    S = draw("gaussian", s, m, seed=trial)
    G = S.to_matrix()
    SA = apply(S, A)
    j = int(r.integers(m))
    SA, _ = downdate_row(SA, S, j, A[j])
    ref = np.delete(G, j, axis=1) @ np.delete(A, j, axis=0)
    assert rel(SA.data, ref) <= 1e-12


@pytest.mark.parametrize("kind", ["srft", "srdct"])
@pytest.mark.parametrize("trial", range(5))
def test_transform_row_downdate_matches_zeroed_row_oracle(kind, trial):
    r = np.random.default_rng(200 + trial)
    m, n, s = 64, 4, 16
    A = r.standard_normal((m, n))
    S = draw(kind, s, m, seed=trial)
    SA = apply(S, A)
    rows = r.choice(m, size=3, replace=False)
    for j in rows:
        SA, _ = downdate_row(SA, S, int(j), A[j])
    Az = A.copy()
    Az[rows] = 0
    ref = draw(kind, s, m, seed=trial) @ Az
    assert rel(SA.data, ref) <= 1e-12


def test_downdate_errors(rng):
    A = rng.standard_normal((50, 2))
    S = draw("srft", 4, 50)
    SA = apply(S, A)
    SA, _ = downdate_row(SA, S, 3, A[3])
    with pytest.raises(ValueError, match="already"):
        downdate_row(SA, S, 3, A[3])
    with pytest.raises(IndexError):
        downdate_row(SA, S, 50, A[0])
    with pytest.raises(ValueError):
        downdate_row(SA, S, 4, A[4, :1])


def test_downdated_rows_are_ignored_by_apply(rng):
    A = rng.standard_normal((40, 3))
    S = draw("gaussian", 6, 40, seed=1)
    SA = apply(S, A)
    SA, _ = downdate_row(SA, S, 7, A[7])
    B = A.copy()
    B[7] = 1e6
    assert rel(S @ B, SA.data) < 1e-13


def test_row_downdate_warns_when_few_rows_live(rng):
    A = rng.standard_normal((10, 2))
    S = draw("gaussian", 5, 10)
    SA = apply(S, A)
    with pytest.warns(SketchSizeWarning):
        downdate_row(SA, S, 0, A[0])


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("trial", range(20))
def test_column_update_and_downdate_round_trip(kind, trial):
    r = np.random.default_rng(300 + trial)
    m, n = 40, int(r.integers(2, 7))
    A = r.standard_normal((m, n))
    S = draw(kind, 10, m, seed=trial)
    SA = apply(S, A[:, :-1])
    pos = int(r.integers(0, n))
    cols = [c for c in range(n) if c != n - 1]
    new_col = A[:, n - 1]
    SA2 = update_column(SA, S, new_col, position=pos)
    cols.insert(pos, n - 1)
    assert rel(SA2.data, S @ A[:, cols]) <= 1e-12
    SA3 = downdate_column(SA2, pos)
    assert rel(SA3.data, SA.data) <= 1e-12


def test_update_column_rejects_foreign_sketch(rng):
    A = rng.standard_normal((20, 2))
    SA = apply(draw("srft", 4, 20, seed=0), A)
    with pytest.raises(ValueError, match="different operator"):
        update_column(SA, draw("srft", 4, 20, seed=0), A[:, 0])


@pytest.mark.parametrize("kind", KINDS)
def test_row_update_matches_extended_operator(kind, rng):
    A = rng.standard_normal((30, 3))
    S = draw(kind, 8, 30, seed=2)
    SA = apply(S, A)
    extra = rng.standard_normal((2, 3))
    for row in extra:
        SA, S = update_row(SA, S, row)
    assert S.shape == (8, 32)
    assert rel(SA.data, S.to_matrix() @ np.vstack([A, extra])) < 1e-13


def test_row_update_columns_are_standard_normal():
    # KS test: appended columns are N(0,1) entries scaled by 1/sqrt(s)
    S = draw("srft", 50, 100, seed=11)
    SA = apply(S, np.zeros((100, 1)))
    for _ in range(40):
        SA, S = update_row(SA, S, np.zeros(1))
    g = np.concatenate(S.appended)
    assert stats.kstest(g, "norm").pvalue > 1e-3


@pytest.mark.parametrize("kind", KINDS)
def test_descriptor_replay(kind, rng):
    A = rng.standard_normal((30, 2))
    S = draw(kind, 6, 30, seed=9)
    SA = apply(S, A)
    SA, S = update_row(SA, S, rng.standard_normal(2))
    SA, _ = downdate_row(SA, S, 4, A[4])
    T = SketchOperator.from_json(S.to_json())
    assert np.array_equal(T.to_matrix(), S.to_matrix())
    assert T.descriptor() == S.descriptor()


def test_gaussian_extreme_singular_values():
    # sqrt(s) - sqrt(n) <= E sigma_min <= E sigma_max <= sqrt(s) + sqrt(n)
    s, n = 200, 20
    lo, hi = [], []
    for seed in range(30):
        G = np.random.default_rng(seed).standard_normal((s, n))
        sv = singular_values(G)
        lo.append(sv[-1])
        hi.append(sv[0])
    assert np.mean(hi) <= np.sqrt(s) + np.sqrt(n)
    assert np.mean(lo) >= np.sqrt(s) - np.sqrt(n)
    t = 2.0
    # tail bound exp(-t^2/2) ~ 0.135 per side
    assert np.mean(np.array(hi) >= np.sqrt(s) + np.sqrt(n) + t) <= 0.135 + 0.15


def test_gaussian_embedding_success_rate():
    m, n = 2000, 20
    ok = 0
    for seed in range(20):
        r = np.random.default_rng(seed)
        U = haar_orthonormal(m, n, r)
        sv = singular_values(draw("gaussian", 4 * n, m, seed=seed) @ U)
        ok += bool(sv[0] <= 1.6 and sv[-1] >= 0.4)
    assert ok >= 19


def test_apply_zeroes_rows_for_transform_kinds(rng):
    A = rng.standard_normal((32, 2))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SketchSizeWarning)
        S = draw("srdct", 8, 32, seed=0)
        SA = apply(S, A)
        SA, _ = downdate_row(SA, S, 0, A[0])
    assert rel(S @ A, SA.data) < 1e-13
