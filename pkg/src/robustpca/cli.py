"""Command-line front end.

Subcommands: ``synth`` (generate a problem), ``decompose`` (run a solver on
a matrix file), ``background`` (split an image stack into background and
foreground frames), ``anomaly`` (flag outlier columns), ``bench`` (wall-time
scaling runs).  Every command writes a ``manifest.json`` next to its
outputs echoing the full configuration, seed, tool version, and wall time,
so any artifact can be regenerated from its manifest.

Exit codes: 0 success (and solver convergence), 2 usage or argument error,
3 iteration-cap exit with outputs still written, 4 I/O or file-format error.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import compute_metrics, anomaly_detect, benchmark_csv, linear_fit_r2, \
    scaling_benchmark, top_m_columns
from .dataio import FormatError, load_frame_stack, read_matrix, write_frame, \
    write_matrix, write_report
from .datagen import make_problem
from .solvers import DivergenceError, SolverConfig, lambda_sweep, solve_fffp, \
    solve_ialm, solve_uffp

USAGE_ERROR = 2
ITERATION_CAP_EXIT = 3
IO_ERROR = 4


def _write_manifest(out_dir, command, config, inputs, outputs, seed, wall_time):
    manifest = {
        "command": command,
        "config": config,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "seed": seed,
        "version": __version__,
        "wall_time": wall_time,
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_from_args(args, k):
    return SolverConfig(
        k=k,
        lam=getattr(args, "lam", None),
        rho0=args.rho0,
        kappa=args.kappa,
        tol=args.tol,
        max_iter=args.max_iter,
        init=args.init,
        seed=args.seed,
    )


def cmd_synth(args):
    start = time.perf_counter()
    problem = make_problem(args.d, args.n, args.rank, args.fraction,
                           magnitude=args.magnitude, seed=args.seed)
    out = _out_dir(args)
    paths = [out / "X.ffpm", out / "L_star.ffpm", out / "S_star.ffpm"]
    for path, matrix in zip(paths, (problem.x, problem.l_star, problem.s_star)):
        write_matrix(path, matrix)
    config = {"d": args.d, "n": args.n, "rank": args.rank, "fraction": args.fraction,
              "magnitude": args.magnitude}
    _write_manifest(out, "synth", config, [], paths, args.seed, time.perf_counter() - start)
    return 0


def _solve_with_method(x, args, cfg):
    """Dispatch one decomposition; returns (l_dense, factors_or_none, s, report, extra)."""
    if args.method == "fffp":
        factors, s, report = solve_fffp(x, cfg)
        return factors.dense(), factors, s, report, {}
    if args.method == "ialm":
        l, s, report = solve_ialm(x, cfg)
        return l, None, s, report, {}
    if args.lambda_sweep:
        entries, selected = lambda_sweep(x, cfg, n_jobs=args.jobs)
        chosen = entries[selected]
        sweep_table = [
            {"lam": e.lam, "rank": e.report.final_rank,
             "residual": e.report.final_residual, "iterations": e.report.iterations,
             "converged": e.report.converged}
            for e in entries
        ]
        extra = {"sweep": sweep_table, "selected_lam": chosen.lam}
        return chosen.factors.dense(), chosen.factors, chosen.s, chosen.report, extra
    factors, s, report = solve_uffp(x, cfg)
    return factors.dense(), factors, s, report, {}


def cmd_decompose(args):
    if args.method == "uffp" and args.lam is None and not args.lambda_sweep:
        print("decompose: --method uffp needs --lambda or --lambda-sweep", file=sys.stderr)
        return USAGE_ERROR
    start = time.perf_counter()
    x = read_matrix(args.input)
    cfg = _config_from_args(args, args.k)
    l, factors, s, report, extra = _solve_with_method(x, args, cfg)

    out = _out_dir(args)
    outputs = []
    if factors is not None:
        for name, matrix in (("U", factors.u), ("C", factors.c), ("V", factors.v)):
            path = out / ("%s.ffpm" % name)
            write_matrix(path, matrix)
            outputs.append(path)
    else:
        path = out / "L.ffpm"
        write_matrix(path, l)
        outputs.append(path)
    s_path = out / "S.ffpm"
    write_matrix(s_path, s)
    outputs.append(s_path)

    l_star = read_matrix(args.truth) if args.truth else None
    metrics = compute_metrics(x, l, s, l_star=l_star)
    report_path = out / "report.json"
    write_report(report_path, report, config=cfg, metrics=metrics, extra=extra)
    outputs.append(report_path)

    config = dict(vars(args))
    config.pop("func")
    _write_manifest(out, "decompose", _stringify(config), [args.input], outputs,
                    args.seed, time.perf_counter() - start)
    return 0 if report.converged else ITERATION_CAP_EXIT


def cmd_background(args):
    start = time.perf_counter()
    stack = load_frame_stack(args.frames, args.downsample)
    cfg = _config_from_args(args, args.k)
    l, _, s, report, extra = _solve_with_method(stack.matrix, args, cfg)

    out = _out_dir(args)
    outputs = []
    foreground = np.abs(s)
    for j, name in enumerate(stack.frame_names):
        stem = Path(name).stem
        bg_path = out / ("background_%s.pgm" % stem)
        fg_path = out / ("foreground_%s.pgm" % stem)
        write_frame(l[:, j], stack.frame_height, stack.frame_width, bg_path)
        write_frame(foreground[:, j], stack.frame_height, stack.frame_width, fg_path)
        outputs += [bg_path, fg_path]

    report_path = out / "report.json"
    write_report(report_path, report, config=cfg,
                 metrics=compute_metrics(stack.matrix, l, s), extra=extra)
    outputs.append(report_path)
    config = dict(vars(args))
    config.pop("func")
    _write_manifest(out, "background", _stringify(config), [args.frames], outputs,
                    args.seed, time.perf_counter() - start)
    return 0 if report.converged else ITERATION_CAP_EXIT


def cmd_anomaly(args):
    start = time.perf_counter()
    x = read_matrix(args.input)
    cfg = _config_from_args(args, args.k)
    factors, s, report = solve_fffp(x, cfg)
    scores = np.linalg.norm(s, axis=0)
    if args.threshold is not None:
        flagged = anomaly_detect(s, args.threshold).flagged
    else:
        flagged = top_m_columns(scores, min(args.top_m, scores.size))

    out = _out_dir(args)
    scores_path = out / "scores.csv"
    lines = ["index,score"] + ["%d,%.17g" % (j, score) for j, score in enumerate(scores)]
    scores_path.write_text("\n".join(lines) + "\n")
    flagged_path = out / "flagged.csv"
    flagged_path.write_text("\n".join(["index"] + [str(j) for j in flagged]) + "\n")
    report_path = out / "report.json"
    write_report(report_path, report, config=cfg,
                 extra={"flagged": [int(j) for j in flagged]})

    config = dict(vars(args))
    config.pop("func")
    _write_manifest(out, "anomaly", _stringify(config), [args.input],
                    [scores_path, flagged_path, report_path], args.seed,
                    time.perf_counter() - start)
    return 0


def cmd_bench(args):
    start = time.perf_counter()
    factors = [float(f) for f in args.factors.split(",") if f.strip()]
    if not factors:
        print("bench: --factors must list at least one positive scale", file=sys.stderr)
        return USAGE_ERROR
    base = {"d": args.base_d, "n": args.base_n, "r": args.rank,
            "fraction": args.fraction, "seed": args.seed}
    rows = scaling_benchmark(base, args.axis, factors, args.iters, method=args.method,
                             k=args.k, lam=args.lam, repeats=args.repeats, seed=args.seed)
    r2 = linear_fit_r2(rows)

    out = _out_dir(args)
    csv_path = out / "scaling.csv"
    csv_path.write_text(benchmark_csv(rows))
    fit_path = out / "fit.json"
    fit_json = None if np.isnan(r2) else r2  # a single row has no line to fit
    fit_path.write_text(json.dumps({"r2": fit_json, "rows": rows}, indent=2) + "\n")
    print("linear fit R^2 = %.4f over %d sizes" % (r2, len(rows)))

    config = dict(vars(args))
    config.pop("func")
    _write_manifest(out, "bench", _stringify(config), [], [csv_path, fit_path],
                    args.seed, time.perf_counter() - start)
    return 0


def _stringify(config):
    return {key: (str(value) if isinstance(value, Path) else value)
            for key, value in config.items()}


def _add_solver_flags(parser, require_k=True):
    parser.add_argument("--k", type=int, required=require_k, default=None if require_k else 1,
                        help="factor width (upper bound on the recovered rank)")
    parser.add_argument("--lambda", dest="lam", type=float, default=None,
                        help="balance weight (uffp; ialm derives a default)")
    parser.add_argument("--rho0", type=float, default=1e-4, help="initial penalty weight")
    parser.add_argument("--kappa", type=float, default=1.5, help="penalty growth per iteration")
    parser.add_argument("--tol", type=float, default=1e-3, help="relative-residual stop threshold")
    parser.add_argument("--max-iter", type=int, default=200, help="iteration cap")
    parser.add_argument("--init", choices=("truncated-svd", "random-orthonormal"),
                        default="truncated-svd", help="factor initialization strategy")
    parser.add_argument("--seed", type=int, default=0, help="seed for seeded strategies")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="robustpca",
        description="Decompose matrices into low-rank plus sparse parts.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", help="generate a synthetic problem with ground truth")
    synth.add_argument("--d", type=int, required=True, help="rows")
    synth.add_argument("--n", type=int, required=True, help="columns")
    synth.add_argument("--rank", type=int, required=True, help="true rank of the low-rank part")
    synth.add_argument("--fraction", type=float, required=True, help="corrupted-entry fraction")
    synth.add_argument("--magnitude", type=float, default=None,
                       help="corruption range (default: 10x the low-rank RMS)")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True, help="output directory")
    synth.set_defaults(func=cmd_synth)

    dec = commands.add_parser("decompose", help="run a solver on a matrix file")
    dec.add_argument("input", help="matrix file (.ffpm or .csv)")
    dec.add_argument("--method", choices=("fffp", "uffp", "ialm"), required=True)
    dec.add_argument("--lambda-sweep", action="store_true",
                     help="sweep the uffp weight over a data-scaled grid")
    dec.add_argument("--jobs", type=int, default=1, help="parallel solves within a sweep")
    dec.add_argument("--truth", default=None, help="ground-truth low-rank matrix for recovery error")
    dec.add_argument("--out", required=True)
    _add_solver_flags(dec)
    dec.set_defaults(func=cmd_decompose)

    bg = commands.add_parser("background", help="split an image stack into background/foreground")
    bg.add_argument("frames", help="directory of equally sized .pgm frames")
    bg.add_argument("--method", choices=("fffp", "uffp", "ialm"), default="fffp")
    bg.add_argument("--lambda-sweep", action="store_true")
    bg.add_argument("--jobs", type=int, default=1)
    bg.add_argument("--downsample", type=int, default=1,
                    help="keep every f-th pixel along each axis")
    bg.add_argument("--out", required=True)
    _add_solver_flags(bg)
    bg.set_defaults(func=cmd_background)

    anom = commands.add_parser("anomaly", help="flag outlier columns by sparse-part norms")
    anom.add_argument("input", help="matrix file (.ffpm or .csv)")
    anom.add_argument("--threshold", type=float, default=None,
                      help="flag columns whose score reaches this value")
    anom.add_argument("--top-m", type=int, default=10,
                      help="flag the m highest-scoring columns when no threshold is given")
    anom.add_argument("--out", required=True)
    _add_solver_flags(anom, require_k=False)
    anom.set_defaults(func=cmd_anomaly)

    bench = commands.add_parser("bench", help="measure wall time against problem size")
    bench.add_argument("--axis", choices=("samples", "dimension"), required=True)
    bench.add_argument("--factors", required=True, help="comma-separated ascending scales")
    bench.add_argument("--method", choices=("fffp", "uffp", "ialm"), default="fffp")
    bench.add_argument("--base-d", type=int, default=1000)
    bench.add_argument("--base-n", type=int, default=1000)
    bench.add_argument("--rank", type=int, default=5, help="true rank of the generated problems")
    bench.add_argument("--fraction", type=float, default=0.05)
    bench.add_argument("--k", type=int, default=5)
    bench.add_argument("--lambda", dest="lam", type=float, default=None)
    bench.add_argument("--iters", type=int, default=50, help="fixed iteration count per run")
    bench.add_argument("--repeats", type=int, default=3)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", required=True)
    bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return args.func(args)
    except FormatError as exc:
        print("robustpca: format error: %s" % exc, file=sys.stderr)
        return IO_ERROR
    except OSError as exc:
        print("robustpca: I/O error: %s" % exc, file=sys.stderr)
        return IO_ERROR
    except DivergenceError as exc:
        print("robustpca: %s" % exc, file=sys.stderr)
        return 1
    except ValueError as exc:
        print("robustpca: %s" % exc, file=sys.stderr)
        print(parser.format_usage(), file=sys.stderr, end="")
        return USAGE_ERROR


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
