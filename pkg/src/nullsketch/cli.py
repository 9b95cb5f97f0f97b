"""``nullsketch`` command line: solvers on matrix files and the benchmark recipes."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import bench
from .aaa import FUNCTIONS, SampleSet, aaa_exact, aaa_sketched, sample_function
from .matcore import svd, thin_qr
from .mmio import MatrixFormatError, read_matrix, write_matrix
from .nullspace import solve_k, solve_tol
from .perturb import (
    apriori_bound_diff_dim,
    apriori_bound_same_dim,
    bound_from_R,
    measure_angles,
)
from .sketch import KINDS, default_sketch_size, draw
from .tls import TlsError, TlsProblem, tls_error_metrics, tls_solve_exact, tls_solve_sketched

EXIT_NUMERICAL = 1


def _parse_seeds(text: str) -> list[int]:
    """``"0-19"`` or ``"1,4,9"`` or a mix such as ``"0-3,10"``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty seed range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("no seeds given")
    return out


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # suppressed defaults let the flags appear before or after the subcommand
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=d(0), help="base random seed (default 0)")
    p.add_argument("--out", default=d("."), help="output directory (default: current)")
    p.add_argument("--format", choices=("csv", "json"), default=d("csv"),
                   help="tabular output format (default csv)")
    return p


def _add_sketch_flags(p, default_kind="srft"):
    p.add_argument("--sketch", choices=KINDS, default=default_kind)
    p.add_argument("--sketch-size", type=int, default=None,
                   help="sketch rows (default: 4n gaussian, 2n otherwise)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nullsketch",
        description="Sketched null-space, total least squares and AAA solvers.",
        parents=[_global_flags(False)],
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = _global_flags(True)

    p = sub.add_parser("nullspace", parents=[common], help="trailing right singular vectors of a sketch")
    p.add_argument("--a", required=True, help="input matrix (.mtx or .csv)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--k", type=int, help="null space dimension")
    g.add_argument("--eps", type=float, help="keep sketched singular values below this")
    _add_sketch_flags(p)
    p.add_argument("--certificate", action="store_true", help="compute ||A W||_F exactly")

    p = sub.add_parser("tls", parents=[common], help="total least squares A X ~ B")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    _add_sketch_flags(p, "srdct")
    p.add_argument("--exact-baseline", action="store_true",
                   help="also solve exactly and report error metrics")

    p = sub.add_parser("aaa", parents=[common], help="AAA rational approximation")
    p.add_argument("--fn", choices=[*FUNCTIONS, "file"], required=True)
    p.add_argument("--samples", help="two-column file of points z and values f (with --fn file)")
    p.add_argument("--m", type=int, default=10_000, help="number of random samples")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-degree", type=int, default=100)
    p.add_argument("--variant", choices=("exact", "sketched"), default="sketched")
    p.add_argument("--sketch", choices=KINDS, default="srft")
    p.add_argument("--sketch-size", type=int, default=None)

    p = sub.add_parser("bound", parents=[common], help="measured angles against perturbation bounds")
    p.add_argument("--a", required=True)
    p.add_argument("--atil", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, default=None)
    p.add_argument("--sketch", dest="sketch_matrix", default=None,
                   help="explicit s x m sketch matrix, enables the R-based bound")

    p = sub.add_parser("bench", parents=[common], help="run a benchmark recipe at desk scale")
    p.add_argument("experiment", choices=bench.EXPERIMENTS)
    for name in ("m", "n", "k", "l"):
        p.add_argument(f"--{name}", type=int, default=None)
    p.add_argument("--seeds", type=_parse_seeds, default=None,
                   help="seed list such as 0-19 or 1,2,5 (default: --seed)")
    p.add_argument("--sketch", choices=KINDS, default=None)
    p.add_argument("--sketch-size", type=int, default=None)
    p.add_argument("--repeats", type=int, default=5, help="timing repetitions (median reported)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes across seeds")
    p.add_argument("--m-values", type=_parse_seeds, default=None, help="table1 row counts")
    p.add_argument("--functions", default=None, help="table2 comma-separated function names")
    p.add_argument("--max-degree", type=int, default=None)
    return parser


def _out_path(args, name) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _dump(args, name, payload):
    path = _out_path(args, name)
    path.write_text(json.dumps(payload, indent=2, default=float) + "\n")
    return path


def _cmd_nullspace(args):
    A = read_matrix(args.a)
    m, n = A.shape
    s = args.sketch_size or default_sketch_size(args.sketch, n)
    S = draw(args.sketch, s, m, args.seed)
    if args.k is not None:
        res = solve_k(A, args.k, S, certificate=args.certificate)
    else:
        res = solve_tol(A, args.eps, S, certificate=args.certificate)
    w_path = _out_path(args, "W.mtx")
    write_matrix(w_path, res.W)
    _dump(args, "nullspace.json", {
        "k": res.k,
        "sketched_singular_values": res.sketched_singular_values.tolist(),
        "sketched_residual": res.sketched_residual,
        "residual_fro": res.residual_fro,
        "sketch": S.descriptor(),
        "W": str(w_path),
    })
    print(f"k={res.k} sketched_residual={res.sketched_residual:.6e} -> {w_path}")


def _cmd_tls(args):
    p = TlsProblem(read_matrix(args.a), read_matrix(args.b))
    m, n, k = p.shape
    s = args.sketch_size or default_sketch_size(args.sketch, n + k)
    S = draw(args.sketch, s, m, args.seed)
    sol = tls_solve_sketched(p, S, certificate=True)
    x_path = _out_path(args, "X.mtx")
    write_matrix(x_path, sol.X)
    summary = {
        "shape": [m, n, k],
        "tls_residual": sol.tls_residual,
        "cond_Vk2": sol.cond_Vk2,
        "sketch": S.descriptor(),
        "X": str(x_path),
    }
    if args.exact_baseline:
        exact = tls_solve_exact(p)
        rel, sin_x, sin_v = tls_error_metrics(exact, sol)
        summary.update(exact_residual=exact.tls_residual,
                       rel_residual=sol.tls_residual / exact.tls_residual,
                       rel_err=rel, sin_X=sin_x, sin_Vk=sin_v)
    _dump(args, "tls.json", summary)
    print(f"tls_residual={sol.tls_residual:.6e} -> {x_path}")


def _read_samples(path) -> SampleSet:
    M = read_matrix(path)
    if M.ndim != 2 or M.shape[1] != 2:
        raise MatrixFormatError(f"samples need two columns (z, f), got shape {M.shape}", path)
    return SampleSet(M[:, 0], M[:, 1], name=Path(path).stem)


def _cmd_aaa(args):
    if args.fn == "file":
        if not args.samples:
            raise SystemExit("nullsketch aaa: --fn file needs --samples")
        samples = _read_samples(args.samples)
    else:
        samples = sample_function(args.fn, args.m, seed=args.seed)
    if args.variant == "exact":
        r, trace = aaa_exact(samples, args.tol, args.max_degree)
    else:
        r, trace = aaa_sketched(samples, args.tol, args.max_degree, seed=args.seed,
                                kind=args.sketch, sketch_size=args.sketch_size)
    trace_path = _out_path(args, "aaa_trace.csv")
    trace.to_csv(trace_path)
    _dump(args, "aaa.json", {
        "function": samples.name, "m": len(samples), "variant": trace.variant,
        "degree": trace.degree, "converged": trace.converged,
        "max_error": trace.steps[-1].max_error if trace.steps else None,
        "approximant": r.to_dict(), "sketch": trace.sketch,
    })
    status = "converged" if trace.converged else "max degree reached"
    print(f"{samples.name}: degree {trace.degree}, {status}")


def _cmd_bound(args):
    A = read_matrix(args.a)
    Atil = read_matrix(args.atil)
    rep = measure_angles(A, Atil, args.k, args.l)
    n = A.shape[1]
    sig = rep.sigma
    if args.l is None:
        apriori = {b: apriori_bound_same_dim(sig[n - args.k - 1], sig[n - args.k], b)
                   for b in ("b1", "b2")}
    else:
        apriori = {b: apriori_bound_diff_dim(sig[n - args.k - 1], sig[n - args.l], b)
                   for b in ("b3", "b4")}
    out = {
        "k": args.k, "l": args.l,
        "sin_theta": rep.sin_norm("angles"),
        "sin_theta_alt": rep.sin_norm("alt") if args.l is not None else None,
        "corollary_bounds": rep.corollary_bounds(),
        "apriori_bounds": apriori,
    }
    if args.sketch_matrix:
        X = read_matrix(args.sketch_matrix)
        U = svd(A).U
        _, R = thin_qr(X @ U)
        out["theorem_bounds"] = {
            name: (bound_from_R(R, params) if params is not None else None)
            for name, params in rep.candidates.items()
        }
    _dump(args, "bound.json", out)
    print(json.dumps(out, default=float))


def _cmd_bench(args):
    cfg = bench.BenchConfig(
        experiment=args.experiment, m=args.m, n=args.n, k=args.k, l=args.l,
        seeds=args.seeds or [args.seed], sketch_kind=args.sketch,
        sketch_size=args.sketch_size, out=args.out, repeats=args.repeats, jobs=args.jobs,
        m_values=args.m_values,
        functions=args.functions.split(",") if args.functions else None,
        max_degree=args.max_degree,
    )
    rows = bench.run(cfg)
    path = _out_path(args, f"{args.experiment}.{args.format}")
    bench.write_rows(path, rows, args.experiment, args.format, cfg)
    print(f"{len(rows)} rows -> {path}")


COMMANDS = {
    "nullspace": _cmd_nullspace,
    "tls": _cmd_tls,
    "aaa": _cmd_aaa,
    "bound": _cmd_bound,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    threads = os.environ.get("NULLSKETCH_THREADS")
    try:
        if threads:
            with threadpool_limits(limits=int(threads)):
                COMMANDS[args.command](args)
        else:
            COMMANDS[args.command](args)
    except (MatrixFormatError, TlsError, np.linalg.LinAlgError, ValueError, OSError) as exc:
        print(f"nullsketch {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
