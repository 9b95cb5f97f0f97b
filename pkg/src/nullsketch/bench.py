"""Desk-scale benchmark recipes: fig1, fig2, fig3, table1 and table2.

Every runner takes a :class:`BenchConfig` and returns a list of row dicts;
:func:`write_rows` emits them as CSV preceded by a schema line.  Results
depend only on the config and seed list, except the timing columns, which
are machine-dependent and only ever reported.
"""

from __future__ import annotations

import csv
import gc
import json
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .aaa import FUNCTIONS, aaa_exact, aaa_sketched, sample_function
from .matcore import geometric_spectrum, make_test_matrix, singular_values
from .perturb import apriori_bound_diff_dim, corollary_bound, measure_angles
from .sketch import default_sketch_size, draw
from .tls import make_tls_problem, tls_error_metrics, tls_solve_exact, tls_solve_sketched

__all__ = [
    "SCHEMA_VERSION",
    "EXPERIMENTS",
    "BenchConfig",
    "fig1_panels",
    "run_fig1",
    "run_fig2",
    "run_fig3",
    "run_table1",
    "run_table2",
    "run",
    "write_rows",
    "sub_seed",
    "median_time",
    "median_times",
]

SCHEMA_VERSION = 1
EXPERIMENTS = ("fig1", "fig2", "fig3", "table1", "table2")


@dataclass
class BenchConfig:
    experiment: str
    m: int | None = None
    n: int | None = None
    k: int | None = None
    l: int | None = None
    seeds: list = field(default_factory=lambda: [0])
    sketch_kind: str | None = None
    sketch_size: int | None = None
    out: str | None = None
    repeats: int = 5
    jobs: int = 1
    # experiment-specific knobs
    ratios: int = 12
    noise_levels: list | None = None
    m_values: list | None = None
    functions: list | None = None
    tol: float = 1e-9
    max_degree: int | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        defaults = {
            "fig1": dict(m=1000, n=100, k=1),
            "fig2": dict(m=1000, n=100, l=1),
            "fig3": dict(m=10_000, n=100, k=10),
            "table1": dict(n=200, k=10),
            "table2": dict(m=10_000),
        }[self.experiment]
        for key, val in defaults.items():
            if getattr(self, key) is None:
                setattr(self, key, val)
        if self.experiment in ("fig1", "fig2") and self.m is not None and self.m > 200_000:
            raise ValueError("fig1/fig2 compute full SVDs of A; keep m <= 200000")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")


def sub_seed(seed: int, *tags: int) -> int:
    """Independent integer seed derived from ``seed`` and ``tags``."""
    return int(np.random.SeedSequence([int(seed), *map(int, tags)]).generate_state(1)[0])


def median_time(fn, repeats: int):
    """Run ``fn`` ``repeats`` times; return ``(last_result, median_seconds)``."""
    (out,), (t,) = median_times([fn], repeats)
    return out, t


def median_times(fns, repeats: int, warmup: bool = True):
    """Median wall time of each callable, interleaved so drift hits all of them alike.

    Returns ``(results, medians)`` with the result of each callable's last run.
    """
    if warmup:
        for fn in fns:
            fn()
    times = [[] for _ in fns]
    results = [None] * len(fns)
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(repeats):
            for i, fn in enumerate(fns):
                t0 = time.perf_counter()
                results[i] = fn()
                times[i].append(time.perf_counter() - t0)
    finally:
        if gc_was_enabled:
            gc.enable()
    return results, [statistics.median(t) for t in times]


def _pmap(fn, tasks, jobs):
    if jobs <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, *zip(*tasks)))


def fig1_panels(n: int):
    """``(name, left_mode, kind, s)`` for the five fig1 panels."""
    rescue = int(math.ceil(2 * n * math.log(n)))
    return [
        ("haar_gaussian", "haar", "gaussian", 4 * n),
        ("haar_srft", "haar", "srft", 2 * n),
        ("coherent_gaussian", "coherent", "gaussian", 4 * n),
        ("coherent_srft", "coherent", "srft", 2 * n),
        ("coherent_srft_nlogn", "coherent", "srft", rescue),
    ]


def fig1_trial(m, n, left_mode, kind, s, ratio, seed):
    spectrum = np.ones(n)
    spectrum[-2] = 0.1
    spectrum[-1] = 0.1 / ratio
    A = make_test_matrix(m, n, spectrum, left_mode=left_mode, seed=seed)
    S = draw(kind, min(s, m) if kind != "gaussian" else s, m, sub_seed(seed, 1))
    rep = measure_angles(A, S @ A, k=1)
    params = rep.candidates["sketch_tail"]
    bound = corollary_bound(params) if params is not None else math.inf
    return rep.sin_norm(), bound, float(rep.sigma_tilde[-1]), float(rep.sigma[-2])


def run_fig1(cfg: BenchConfig, panels=None):
    """Sine of the angle between exact and sketched trailing vectors against the 2.1/chi bound."""
    m, n = cfg.m, cfg.n
    ratios = np.geomspace(10, 1e10, cfg.ratios)
    panels = panels or fig1_panels(n)
    tasks = []
    for name, left, kind, s in panels:
        for ratio in ratios:
            for seed in cfg.seeds:
                tasks.append((m, n, left, kind, s, float(ratio), seed))
    results = _pmap(fig1_trial, tasks, cfg.jobs)
    rows = []
    labels = [(name, left, kind, s) for name, left, kind, s in panels for _ in ratios for _ in cfg.seeds]
    for (name, left, kind, s), task, (sin, bound, sig_t, sig_gap) in zip(labels, tasks, results):
        rows.append({
            "panel": name, "left_mode": left, "sketch": kind, "s": s, "seed": task[-1],
            "ratio": task[-2], "sin_theta": sin, "bound": bound,
            "sigma_tilde_n": sig_t, "sigma_n_minus_1": sig_gap, "satisfied": int(sin <= bound),
        })
    return rows


def fig2_trial(m, n, l, spectrum_name, kind, s, seed):
    if spectrum_name == "geometric":
        spectrum = geometric_spectrum(n, 1.0, 1e-10)
    elif spectrum_name == "step":
        n_small = max(1, n // 5)
        spectrum = np.r_[np.ones(n - n_small), np.full(n_small, 1e-10)]
    else:
        raise ValueError(f"unknown spectrum {spectrum_name!r}")
    A = make_test_matrix(m, n, spectrum, left_mode="coherent", seed=seed)
    S = draw(kind, s, m, sub_seed(seed, 2))
    At = S @ A
    out = []
    for k in range(l + 1, n):
        rep = measure_angles(A, At, k=k, l=l)
        params = rep.candidates["orig_tail"]
        bound = corollary_bound(params) if params is not None else math.inf
        apriori = apriori_bound_diff_dim(rep.sigma[n - k - 1], rep.sigma[n - l], "b3")
        out.append((k, rep.sin_norm("angles"), bound, math.inf if apriori is None else apriori))
    return out


def run_fig2(cfg: BenchConfig, spectra=("geometric", "step")):
    """Angle between the trailing ``l`` exact vectors and the trailing ``k`` sketched ones, swept over ``k``."""
    kind = cfg.sketch_kind or "srft"
    s = cfg.sketch_size or default_sketch_size(kind, cfg.n)
    tasks = [(cfg.m, cfg.n, cfg.l, sp, kind, s, seed) for sp in spectra for seed in cfg.seeds]
    results = _pmap(fig2_trial, tasks, cfg.jobs)
    rows = []
    for task, res in zip(tasks, results):
        for k, sin, bound, apriori in res:
            rows.append({
                "spectrum": task[3], "seed": task[-1], "k": k, "l": cfg.l,
                "sin_theta": sin, "bound": bound, "apriori_b3": apriori,
            })
    return rows


def fig3_trial(m, n, k, noise, kind, s, seed):
    p, _ = make_tls_problem(m, n, k, noise, seed=seed)
    exact = tls_solve_exact(p)
    S = draw(kind, s, m, sub_seed(seed, 3))
    sk = tls_solve_sketched(p, S, certificate=True)
    rel, sin_x, sin_v = tls_error_metrics(exact, sk)
    sig_ab = singular_values(p.augmented())
    sig_a = singular_values(p.A)
    return {
        "noise": noise, "seed": seed,
        "rel_gap": float(sig_ab[n] / sig_a[n - 1]),
        "rel_err": rel, "sin_X": sin_x, "sin_Vk": sin_v,
        "tls_error": exact.tls_residual,
        "rel_residual": sk.tls_residual / exact.tls_residual,
    }


def run_fig3(cfg: BenchConfig):
    """Three TLS error metrics across a noise sweep."""
    kind = cfg.sketch_kind or "srdct"
    s = cfg.sketch_size or default_sketch_size(kind, cfg.n + cfg.k)
    levels = cfg.noise_levels or list(np.geomspace(1e-3, 1e-12, 10))
    tasks = [(cfg.m, cfg.n, cfg.k, float(t), kind, s, seed) for t in levels for seed in cfg.seeds]
    return _pmap(fig3_trial, tasks, cfg.jobs)


def run_table1(cfg: BenchConfig, noise: float = 1e-3):
    """Exact against sketched TLS over growing ``m`` at fixed ``n`` and ``k``."""
    kind = cfg.sketch_kind or "srdct"
    s = cfg.sketch_size or default_sketch_size(kind, cfg.n + cfg.k)
    m_values = cfg.m_values or [2**12, 2**13, 2**14, 2**15]
    rows = []
    for m in m_values:
        for seed in cfg.seeds:
            p, _ = make_tls_problem(m, cfg.n, cfg.k, noise, seed=seed)
            op_seed = sub_seed(seed, 4)
            (exact, _), (t_exact, t_sk) = median_times(
                [lambda: tls_solve_exact(p),
                 lambda: tls_solve_sketched(p, draw(kind, s, m, op_seed))],
                cfg.repeats,
            )
            sk = tls_solve_sketched(p, draw(kind, s, m, op_seed), certificate=True)
            rel, _, sin_v = tls_error_metrics(exact, sk)
            rows.append({
                "m": m, "seed": seed,
                "speedup": t_exact / t_sk,
                "tls_error": exact.tls_residual,
                "rel_residual": sk.tls_residual / exact.tls_residual,
                "rel_err": rel, "sin_Vk": sin_v,
                "t_exact_s": t_exact, "t_sketched_s": t_sk,
            })
    return rows


def run_table2(cfg: BenchConfig):
    """Exact against sketched AAA on the four test functions."""
    names = cfg.functions or list(FUNCTIONS)
    max_degree = cfg.max_degree or 250
    rows = []
    for name in names:
        _, domain, reference_degree = FUNCTIONS[name]
        for seed in cfg.seeds:
            smp = sample_function(name, cfg.m, seed=seed)
            op_seed = sub_seed(seed, 5)
            ((r1, tr1), (r2, tr2)), (t_exact, t_sk) = median_times(
                [lambda: aaa_exact(smp, cfg.tol, max_degree),
                 lambda: aaa_sketched(smp, cfg.tol, max_degree, seed=op_seed,
                                      sketch_size=cfg.sketch_size)],
                cfg.repeats, warmup=False,
            )
            fnorm = float(np.max(np.abs(smp.f)))
            rows.append({
                "function": name, "domain": domain, "m": cfg.m, "seed": seed,
                "degree_exact": tr1.degree, "degree_sketched": tr2.degree,
                "reference_degree": reference_degree,
                "converged_exact": int(tr1.converged), "converged_sketched": int(tr2.converged),
                "rel_err_exact": tr1.steps[-1].max_error / fnorm,
                "rel_err_sketched": tr2.steps[-1].max_error / fnorm,
                "max_diff": float(np.max(np.abs(r1(smp.z) - r2(smp.z))) / fnorm),
                "speedup": t_exact / t_sk,
                "t_exact_s": t_exact, "t_sketched_s": t_sk,
            })
    return rows


RUNNERS = {
    "fig1": run_fig1,
    "fig2": run_fig2,
    "fig3": run_fig3,
    "table1": run_table1,
    "table2": run_table2,
}


def run(cfg: BenchConfig):
    return RUNNERS[cfg.experiment](cfg)


def write_rows(path, rows, experiment: str, fmt: str = "csv", config: BenchConfig | None = None):
    """Write rows as CSV (schema line, header, data) or JSON."""
    schema = f"nullsketch.{experiment} v{SCHEMA_VERSION}"
    if fmt == "json":
        payload = {"schema": schema, "rows": rows}
        if config is not None:
            payload["config"] = asdict(config)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, default=float)
        return
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {schema}\n")
        if not rows:
            return
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for row in rows:
            w.writerow({key: (repr(v) if isinstance(v, float) else v) for key, v in row.items()})
