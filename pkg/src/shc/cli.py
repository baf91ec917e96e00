"""Command-line entry point: ``shc test``, ``shc preprocess`` and ``shc simulate``.

Exit codes: 0 success, 1 usage error, 2 data or I/O error.
"""
from __future__ import annotations

import argparse
import sys

from .engine import ShcConfig, run_shc
from .errors import ShcError
from .io import ExpressionMatrix, PreprocessConfig, preprocess, read_expression, read_matrix, write_matrix
from .report import to_json, write_report
from .sim import MixtureDesign, emit_table, run_study


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shc", description="Statistical significance of hierarchical clustering.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("test", help="run SHC on a data matrix")
    t.add_argument("matrix")
    t.add_argument("--variant", choices=["shc1", "shc2-l", "shc2-2"], default="shc2-2")
    t.add_argument("--linkage", choices=["ward", "single", "complete", "average"], default="ward")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--n-sim", type=int, default=100)
    t.add_argument("--n-min", type=int, default=10)
    t.add_argument("--eigen", choices=["soft", "hard", "sample"], default="soft")
    t.add_argument("--p-value", choices=["empirical", "gaussian"], default="empirical",
                   help="p-value used for rejection decisions")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--threads", type=int, default=None)
    t.add_argument("--rows-are", choices=["observations", "genes"], default="observations")
    t.add_argument("--out", help="JSON report path (default: stdout)")
    t.add_argument("--svg")
    t.add_argument("--newick")

    p = sub.add_parser("preprocess", help="normalize and filter a genes x samples matrix")
    p.add_argument("matrix")
    p.add_argument("--uq", action="store_true", help="upper-quartile normalization")
    p.add_argument("--replace-zeros", action="store_true")
    p.add_argument("--top-genes", type=int, default=None)
    p.add_argument("--no-log", action="store_true")
    p.add_argument("--filter-before-log", action="store_true")
    p.add_argument("--out", required=True)

    s = sub.add_parser("simulate", help="run a simulation study and write a CSV summary")
    s.add_argument("--design", required=True, choices=[
        "spike-null", "two-cluster", "line3", "triangle3", "square4",
        "tetrahedron4", "rectangle4", "stretched-tetra4"])
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--delta", type=float, default=0.0)
    s.add_argument("--n-per-k", type=int, default=50)
    s.add_argument("--spike-w", type=int, default=1)
    s.add_argument("--spike-v", type=float, default=100.0)
    s.add_argument("--variant", choices=["shc1", "shc2-l", "shc2-2"], default="shc2-2")
    s.add_argument("--replicates", type=int, default=20)
    s.add_argument("--n-sim", type=int, default=100)
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--eigen", choices=["soft", "hard", "sample"], default="soft")
    s.add_argument("--p-value", choices=["empirical", "gaussian"], default="empirical")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=int, default=None)
    s.add_argument("--no-timing", action="store_true",
                   help="write nan for median time so output is byte-reproducible")
    s.add_argument("--out", required=True)
    return parser


def _cmd_test(args) -> int:
    data = read_matrix(args.matrix, args.rows_are)
    if isinstance(data, ExpressionMatrix):
        data = data.to_data_matrix()
    config = ShcConfig(variant=args.variant, n_sim=args.n_sim, alpha=args.alpha, n_min=args.n_min,
                       eigen_method=args.eigen, linkage=args.linkage, seed=args.seed,
                       p_value=args.p_value, n_jobs=args.threads)
    report = run_shc(data, config)
    if args.out:
        write_report(report, "json", args.out)
    else:
        sys.stdout.write(to_json(report))
    if args.svg:
        write_report(report, "svg", args.svg)
    if args.newick:
        write_report(report, "newick", args.newick)
    print(f"K_hat={report.k_hat} significant={list(report.significant)}", file=sys.stderr)
    return 0


def _cmd_preprocess(args) -> int:
    expr = read_expression(args.matrix)
    config = PreprocessConfig(uq_normalize=args.uq, replace_zeros=args.replace_zeros,
                              top_genes=args.top_genes, log=not args.no_log,
                              filter_before_log=args.filter_before_log)
    write_matrix(preprocess(expr, config), args.out)
    return 0


def _cmd_simulate(args) -> int:
    design = MixtureDesign(args.design, args.p, args.n_per_k, args.delta,
                           spike=(args.spike_w, args.spike_v) if args.design == "spike-null" else None)
    config = ShcConfig(variant=args.variant, n_sim=args.n_sim, alpha=args.alpha,
                       eigen_method=args.eigen, seed=args.seed, p_value=args.p_value,
                       n_jobs=args.threads)

    def progress(r, outcome):
        print(f"replicate {r + 1}/{args.replicates}: K_hat={outcome.k_hat}", file=sys.stderr)

    result = run_study(design, args.variant, args.replicates, config, progress=progress)
    emit_table([result], args.out, timing=not args.no_timing)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    handler = {"test": _cmd_test, "preprocess": _cmd_preprocess, "simulate": _cmd_simulate}[args.command]
    try:
        return handler(args)
    except ShcError as exc:
        print(f"shc: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"shc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
