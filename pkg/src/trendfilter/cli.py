"""Command-line front end.

Subcommands: fit, path, predict, simulate, bench. Data goes in as CSV
(x,y columns or a single y column; "-" reads stdin), fit results come
out as JSON documents tagged with "schema": 1, predictions and simulated
series as CSV. Exit codes: 0 success, 2 usage or parse problems,
3 solver input rejected (unsorted x, non-finite y, bad lambda, ...).
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time

import numpy as np

from .admm import (
    SolverOptions,
    TFProblem,
    kkt_residual,
    solve_path,
    solve_specialized,
    solve_standard,
)
from .banded import NotPositiveDefinite
from .baselines import solve_dual_pg
from .diffops import lambda_max
from .extensions import (
    solve_isotonic_tf,
    solve_mixed_tf,
    solve_nearly_isotonic_tf,
    solve_outlier_tf,
    solve_sparse_tf,
)
from .predict import evaluate_fit, tf_coefficients
from .signals import DESIGNS, KINDS, SignalSpec, simulate

EXTENSIONS = ("none", "sparse", "mixed", "outlier", "isotonic", "nearly-isotonic")


class CLIError(Exception):
    """Usage or parse problem; maps to exit code 2."""


def _read_text(path):
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc}") from exc


def _parse_table(text, what):
    """Rows of floats from CSV-ish text: optional header, comma or
    whitespace delimited, # comments skipped."""
    rows = []
    for ln, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = [p for p in s.replace(",", " ").split() if p]
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            if not rows:
                continue  # header line
            raise CLIError(f"{what} line {ln}: cannot parse {s!r}") from None
        rows.append(vals)
    if rows and len({len(r) for r in rows}) != 1:
        raise CLIError(f"{what}: rows have inconsistent column counts")
    return rows


def _read_dataset(path):
    rows = _parse_table(_read_text(path), path)
    if len(rows) < 2:
        raise CLIError(f"{path}: need at least 2 data rows")
    cols = len(rows[0])
    if cols == 1:
        return None, np.array([r[0] for r in rows])
    if cols == 2:
        return (np.array([r[0] for r in rows]),
                np.array([r[1] for r in rows]))
    raise CLIError(f"{path}: expected 1 (y) or 2 (x,y) columns, got {cols}")


def _read_queries(path):
    rows = _parse_table(_read_text(path), path)
    if not rows:
        return np.empty(0)
    if len(rows[0]) != 1:
        raise CLIError(f"{path}: query file must have a single column")
    return np.array([r[0] for r in rows])


def _emit(text, output):
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)


def _csv_floats(arg, flag):
    try:
        return [float(p) for p in arg.split(",") if p.strip()]
    except ValueError:
        raise CLIError(f"{flag}: cannot parse {arg!r}") from None


def _csv_ints(arg, flag):
    try:
        return [int(p) for p in arg.split(",") if p.strip()]
    except ValueError:
        raise CLIError(f"{flag}: cannot parse {arg!r}") from None


def _solver_options(args):
    return SolverOptions(rho=args.rho, max_iter=args.max_iter, tol=args.tol,
                         init=args.init, record_trace=args.trace)


def _fit_document(args, x_eff, fit, extra):
    doc = {
        "schema": 1,
        "k": extra.pop("k", args.k),
        "x": [float(v) for v in x_eff],
        "beta": [float(v) for v in fit.beta],
        "iterations": int(fit.iterations),
        "converged": bool(fit.converged),
    }
    doc.update(extra)
    if args.trace:
        doc["criterion_trace"] = [float(v) for v in fit.criterion_trace]
    return doc


def cmd_fit(args):
    x, y = _read_dataset(args.input)
    opts = _solver_options(args)
    x_eff = np.arange(1.0, y.size + 1) if x is None else x

    if args.extension == "mixed":
        if args.orders is None or args.lambdas is None:
            raise CLIError("--extension mixed requires --orders and --lambdas")
        orders = _csv_ints(args.orders, "--orders")
        lams = _csv_floats(args.lambdas, "--lambdas")
        fit = solve_mixed_tf(y, x, orders, lams, opts)
        doc = _fit_document(args, x_eff, fit, {
            "k": max(orders), "extension": "mixed",
            "orders": orders, "lambdas": lams,
        })
    elif args.extension != "none":
        if args.lam is None:
            raise CLIError("fit requires --lambda")
        extra = {"extension": args.extension, "lambda": args.lam}
        if args.extension == "isotonic":
            fit = solve_isotonic_tf(y, x, args.k, args.lam, opts)
        else:
            if args.lambda2 is None:
                raise CLIError(f"--extension {args.extension} requires --lambda2")
            extra["lambda2"] = args.lambda2
            solver = {"sparse": solve_sparse_tf,
                      "outlier": solve_outlier_tf,
                      "nearly-isotonic": solve_nearly_isotonic_tf}[args.extension]
            fit = solver(y, x, args.k, args.lam, args.lambda2, opts)
        doc = _fit_document(args, x_eff, fit, extra)
        if fit.z is not None:
            doc["z"] = [float(v) for v in fit.z]
    else:
        if args.lam is None:
            raise CLIError("fit requires --lambda")
        problem = TFProblem(y, x, args.k)
        if args.method == "specialized":
            fit = solve_specialized(problem, args.lam, opts)
        elif args.method == "standard":
            fit = solve_standard(problem, args.lam, opts)
        else:
            fit = solve_dual_pg(problem, args.lam, iters=args.max_iter)
        kkt = kkt_residual(problem, fit.beta, args.lam) if args.lam > 0 else None
        doc = _fit_document(args, x_eff, fit, {
            "lambda": args.lam, "method": args.method, "kkt_residual": kkt,
        })
    _emit(json.dumps(doc) + "\n", args.output)
    return 0


def cmd_path(args):
    x, y = _read_dataset(args.input)
    problem = TFProblem(y, x, args.k)
    opts = _solver_options(args)
    grid = None
    if args.lambdas is not None:
        grid = np.array(_csv_floats(args.lambdas, "--lambdas"))
    result = solve_path(problem, lambdas=grid, nlambda=args.nlambda,
                        min_ratio=args.lambda_min_ratio, opts=opts,
                        warm=args.warm)
    fits = []
    for lam, fit in zip(result.lambdas, result.fits):
        entry = {
            "lambda": float(lam),
            "iterations": int(fit.iterations),
            "converged": bool(fit.converged),
            "beta": [float(v) for v in fit.beta],
        }
        if args.trace:
            entry["criterion_trace"] = [float(v) for v in fit.criterion_trace]
        fits.append(entry)
    doc = {
        "schema": 1,
        "k": args.k,
        "warm": bool(args.warm),
        "x": [float(v) for v in problem.x],
        "lambdas": [float(v) for v in result.lambdas],
        "total_iterations": int(result.total_iterations),
        "fits": fits,
    }
    _emit(json.dumps(doc) + "\n", args.output)
    return 0


def cmd_predict(args):
    try:
        doc = json.loads(_read_text(args.fit))
    except json.JSONDecodeError as exc:
        raise CLIError(f"{args.fit}: not valid JSON ({exc})") from exc
    for field in ("x", "beta", "k"):
        if field not in doc:
            raise CLIError(f"{args.fit}: fit document missing {field!r}")
    queries = _read_queries(args.at)
    lines = ["x,fhat"]
    if queries.size:
        coef = tf_coefficients(np.array(doc["beta"], dtype=np.float64),
                               np.array(doc["x"], dtype=np.float64),
                               int(doc["k"]))
        vals = evaluate_fit(coef, queries)
        lines += [f"{float(q)!r},{float(v)!r}" for q, v in zip(queries, vals)]
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def cmd_simulate(args):
    try:
        spec = SignalSpec(args.kind, args.n, args.noise_sd, args.design,
                          args.seed)
    except ValueError as exc:
        raise CLIError(str(exc)) from exc
    x, y = simulate(spec)
    lines = ["x,y"] + [f"{float(a)!r},{float(b)!r}" for a, b in zip(x, y)]
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def cmd_bench(args):
    sizes = _csv_ints(args.sizes, "--sizes")
    if len(sizes) < 2:
        raise CLIError("--sizes needs at least 2 values")
    orders = _csv_ints(args.orders, "--orders")
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in ("specialized", "standard", "dual-pg"):
            raise CLIError(f"unknown method {m!r}")
    rows = []
    for n in sizes:
        spec = SignalSpec("doppler", n, 0.1, "even", args.seed)
        x, y = simulate(spec)
        for k in orders:
            problem = TFProblem(y, x, k)
            lam = lambda_max(y, x, k) / 10.0
            for method in methods:
                sec = _time_method(problem, lam, method, args.iters, args.reps)
                rows.append({"method": method, "n": n, "k": k,
                             "lambda": lam, "sec_per_iter": sec})
    doc = {"schema": 1, "iters": args.iters, "reps": args.reps, "rows": rows}
    _emit(json.dumps(doc) + "\n", args.output)
    return 0


def _time_method(problem, lam, method, iters, reps):
    # tol too small to ever trigger, so every run does exactly `iters`
    # sweeps; the first (untimed) call absorbs one-off setup costs.
    opts = SolverOptions(max_iter=iters, tol=1e-300)

    def run():
        if method == "specialized":
            solve_specialized(problem, lam, opts)
        elif method == "standard":
            solve_standard(problem, lam, opts)
        else:
            solve_dual_pg(problem, lam, iters=iters)

    run()
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        run()
        times.append(time.perf_counter() - t0)
    return statistics.median(times) / iters


def _add_solver_flags(p):
    p.add_argument("--k", type=int, default=2, help="trend order (default 2)")
    p.add_argument("--rho", type=float, default=None,
                   help="fixed ADMM penalty (default: scaled lambda)")
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--init", choices=("data", "zeros"), default="data")
    p.add_argument("--trace", action="store_true",
                   help="include per-iteration criterion values")
    p.add_argument("--output", "-o", default=None, help="file (default stdout)")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="trendfilter",
        description="Fit piecewise polynomial trends by L1-penalized regression.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="solve at one lambda")
    p.add_argument("input", nargs="?", default="-",
                   help="CSV of y or x,y ('-' for stdin)")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--method", choices=("specialized", "standard", "dual-pg"),
                   default="specialized")
    p.add_argument("--extension", choices=EXTENSIONS, default="none")
    p.add_argument("--lambda2", type=float, default=None,
                   help="second penalty for sparse/outlier/nearly-isotonic")
    p.add_argument("--orders", default=None,
                   help="comma-separated orders for --extension mixed")
    p.add_argument("--lambdas", default=None,
                   help="comma-separated lambdas for --extension mixed")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("path", help="solve a lambda grid")
    p.add_argument("input", nargs="?", default="-")
    p.add_argument("--nlambda", type=int, default=20)
    p.add_argument("--lambda-min-ratio", type=float, default=1e-5)
    p.add_argument("--lambdas", default=None,
                   help="explicit comma-separated grid (overrides auto)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--warm", dest="warm", action="store_true")
    g.add_argument("--cold", dest="warm", action="store_false")
    p.set_defaults(warm=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_path)

    p = sub.add_parser("predict", help="evaluate a fit at new points")
    p.add_argument("fit", help="fit JSON ('-' for stdin)")
    p.add_argument("--at", required=True, help="CSV of query points")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="generate a synthetic series")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--noise-sd", type=float, default=0.0)
    p.add_argument("--design", choices=DESIGNS, default="even")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="per-iteration timing table")
    p.add_argument("--sizes", required=True, help="comma-separated n values")
    p.add_argument("--orders", default="2")
    p.add_argument("--methods", default="specialized")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--iters", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, NotPositiveDefinite) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
