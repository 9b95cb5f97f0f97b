import csv
import json
import math

import numpy as np
import pytest

from nullsketch.bench import (
    BenchConfig,
    fig1_panels,
    median_times,
    run_fig1,
    run_fig2,
    run_fig3,
    run_table1,
    run_table2,
    sub_seed,
    write_rows,
)
from nullsketch.perturb import GapParams, corollary_bound

TIMING = {"speedup", "t_exact_s", "t_sketched_s"}


def strip_timing(rows):
    return [{k: v for k, v in r.items() if k not in TIMING} for r in rows]


def small_fig1(**kw):
    return BenchConfig("fig1", m=300, n=20, seeds=[0, 1], ratios=4, **kw)


def test_config_defaults_and_validation():
    assert (BenchConfig("fig1").m, BenchConfig("fig1").n, BenchConfig("fig1").k) == (1000, 100, 1)
    assert BenchConfig("fig2").l == 1
    assert BenchConfig("table1").n == 200
    with pytest.raises(ValueError):
        BenchConfig("fig9")
    with pytest.raises(ValueError):
        BenchConfig("table1", repeats=0)
    with pytest.raises(ValueError):
        BenchConfig("fig1", m=10**6)


def test_sub_seed():
    assert sub_seed(3, 1) == sub_seed(3, 1)
    assert len({sub_seed(3, t) for t in range(50)}) == 50


def test_panels():
    names = [p[0] for p in fig1_panels(100)]
    assert len(names) == 5
    assert fig1_panels(100)[-1][3] == math.ceil(2 * 100 * math.log(100))


def test_fig1_rows_and_bound_column():
    rows = run_fig1(small_fig1())
    assert len(rows) == 5 * 4 * 2
    assert {r["ratio"] for r in rows} == set(np.geomspace(10, 1e10, 4))
    for r in rows:
        p = GapParams.from_pair(r["sigma_tilde_n"], r["sigma_n_minus_1"])
        assert r["bound"] == corollary_bound(p)
        assert r["sigma_n_minus_1"] == pytest.approx(0.1, rel=1e-12)
        assert r["satisfied"] == int(r["sin_theta"] <= r["bound"])


def test_fig1_deterministic_and_parallel_equal():
    a = run_fig1(small_fig1())
    assert a == run_fig1(small_fig1())
    assert a == run_fig1(small_fig1(jobs=2))


def test_fig2_columns_and_last_k_finite():
    rows = run_fig2(BenchConfig("fig2", m=200, n=25, seeds=[0]))
    assert {r["spectrum"] for r in rows} == {"geometric", "step"}
    ks = sorted({r["k"] for r in rows})
    assert ks == list(range(2, 25))
    last = [r for r in rows if r["k"] == 24]
    assert all(math.isfinite(r["bound"]) for r in last)


def test_fig2_geometric_bound_tracks_sigma_ratio():
    rows = [r for r in run_fig2(BenchConfig("fig2", m=400, n=40, seeds=[0]), spectra=("geometric",))]
    sig = np.geomspace(1, 1e-10, 40)
    for r in rows:
        if r["k"] > 5:
            guide = sig[-1] / sig[40 - r["k"] - 1]
            assert 0.1 * guide <= r["bound"] <= 20 * guide
            assert r["sin_theta"] <= r["bound"]


def test_fig3_small():
    rows = run_fig3(BenchConfig("fig3", m=800, n=20, k=3, seeds=[0], noise_levels=[1e-4, 1e-8]))
    assert [r["noise"] for r in rows] == [1e-4, 1e-8]
    assert rows[1]["sin_Vk"] < rows[0]["sin_Vk"]
    assert all(r["rel_residual"] >= 1 - 1e-9 for r in rows)


def test_table1_small():
    rows = run_table1(BenchConfig("table1", n=20, k=2, m_values=[512, 1024], repeats=1))
    assert [r["m"] for r in rows] == [512, 1024]
    assert all(1 - 1e-9 <= r["rel_residual"] < 4 for r in rows)
    assert strip_timing(rows) == strip_timing(
        run_table1(BenchConfig("table1", n=20, k=2, m_values=[512, 1024], repeats=1))
    )


@pytest.mark.slow
def test_table1_desk_scale_residual_below_four():
    rows = run_table1(BenchConfig("table1", m_values=[2**14], repeats=1))
    assert rows[0]["rel_residual"] < 4


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="noise N(0, tau^2/m) with sigma_n(A) = 1e-3 leaves a relative gap near 1 at tau = 1e-3")
def test_table1_error_columns_at_noise_1e3():
    row = run_table1(BenchConfig("table1", m_values=[2**14], repeats=1))[0]
    assert row["rel_err"] < 1e-4 and row["sin_Vk"] < 1e-4


@pytest.mark.slow
@pytest.mark.parametrize("name", ["logz4", "tan128", "tan256"])
def test_table2_degree_near_reference(name):
    row = run_table2(BenchConfig("table2", functions=[name], repeats=1))[0]
    assert row["converged_exact"] and row["converged_sketched"]
    for col in ("degree_exact", "degree_sketched"):
        assert abs(row[col] - row["reference_degree"]) <= 10


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="branch-point resolution needs more than 1e4 samples")
def test_table2_sqrtbranch_degree_near_reference():
    row = run_table2(BenchConfig("table2", functions=["sqrtbranch"], repeats=1))[0]
    assert abs(row["degree_exact"] - row["reference_degree"]) <= 10


def test_median_times_interleaves():
    calls = []
    (a, b), ts = median_times([lambda: calls.append("a") or 1, lambda: calls.append("b") or 2], 3)
    assert (a, b) == (1, 2)
    assert calls == ["a", "b"] * 4
    assert all(t >= 0 for t in ts)


def test_write_rows_csv_and_json(tmp_path):
    rows = [{"k": 1, "x": 0.1}, {"k": 2, "x": 1e-300}]
    p = tmp_path / "t.csv"
    write_rows(p, rows, "fig2")
    lines = p.read_text().splitlines()
    assert lines[0] == "# schema: nullsketch.fig2 v1"
    back = list(csv.DictReader(lines[1:]))
    assert float(back[1]["x"]) == 1e-300
    j = tmp_path / "t.json"
    write_rows(j, rows, "fig2", "json", BenchConfig("fig2"))
    payload = json.loads(j.read_text())
    assert payload["schema"] == "nullsketch.fig2 v1" and payload["rows"] == rows
    assert payload["config"]["experiment"] == "fig2"
    with pytest.raises(ValueError):
        write_rows(j, rows, "fig2", "xml")
