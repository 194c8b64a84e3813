"""Command-line front end: solve one instance or sweep a benchmark.

Exit status: 0 when every run returned a primal solution, 2 when some run
ended with a certificate only, 1 on any solver error, 64 on bad usage.
"""

import argparse
import csv
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .errors import LpError
from .instances import RandomGraphSpec, RandomMatrixSpec, gen_random_graph, gen_random_matrix, load_csv
from .report import ALIASES, REPORT_FIELDS, emit_plot_data, read_jsonl, run_solver

EXIT_OK, EXIT_ERROR, EXIT_CERT, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise UsageError(message)


def _add_instance_args(sp):
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--gen", choices=["matrix", "graph"])
    src.add_argument("--csv", metavar="PATH")
    sp.add_argument("--target", help="target column for --csv")
    sp.add_argument("--rows", type=int, default=50)
    sp.add_argument("--cols", type=int, default=40)
    sp.add_argument("--nodes", type=int, default=100)
    sp.add_argument("--labeled", type=int, default=10)
    sp.add_argument("--eps", type=float, default=1e-8)
    sp.add_argument("--solver", choices=sorted(ALIASES), default="auto")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", metavar="PATH", help="append reports here instead of stdout")
    sp.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")


def build_parser():
    ap = Parser(prog="lpirls", description="l_p regression by primal-dual IRLS")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=Parser)

    sp = sub.add_parser("solve", help="solve one instance")
    _add_instance_args(sp)
    sp.add_argument("--p", type=float, default=4.0)
    sp.add_argument("--reps", type=int, default=1)

    bp = sub.add_parser("bench", help="repeat solves over a parameter sweep")
    _add_instance_args(bp)
    bp.add_argument("--p", type=float, default=4.0)
    bp.add_argument("--sweep", metavar="p=V1,V2,...", help="comma-separated p values")
    bp.add_argument("--reps", type=int, default=5)
    bp.add_argument("--workers", type=int, default=1)

    pp = sub.add_parser("plot-data", help="summarise JSON-lines reports as CSV")
    pp.add_argument("reports", nargs="+", metavar="FILE")
    return ap


def parse_sweep(text):
    key, sep, values = (text or "").partition("=")
    if key.strip() != "p" or not sep:
        raise UsageError(f"--sweep expects p=V1,V2,..., got {text!r}")
    try:
        ps = [float(v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad --sweep value list {values!r}") from None
    if not ps:
        raise UsageError("--sweep has no values")
    return ps


def make_instance(args, p, seed):
    if args.csv:
        inst = load_csv(args.csv, args.target)
        inst.p = p
        return inst
    if args.gen == "matrix":
        return gen_random_matrix(RandomMatrixSpec(args.rows, args.cols, seed), p=p)
    return gen_random_graph(RandomGraphSpec(args.nodes, n_labeled=args.labeled, p=p, seed=seed))


def _check(args):
    if args.csv and not args.target:
        raise UsageError("--csv needs --target")
    if args.p <= 1:
        raise UsageError("--p must exceed 1")
    if not 0 < args.eps < 1:
        raise UsageError("--eps must lie in (0, 1)")
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")


class Writer:
    """Single serialising writer; files are opened in append mode."""

    def __init__(self, path, fmt):
        self.fmt = fmt
        self.fh = open(path, "a", encoding="utf-8", newline="") if path else sys.stdout
        self.own = path is not None
        self.csv = None
        if fmt == "csv":
            self.csv = csv.DictWriter(self.fh, fieldnames=REPORT_FIELDS, lineterminator="\n")
            if not self.own or self.fh.tell() == 0:
                self.csv.writeheader()

    def write(self, report):
        if self.csv:
            self.csv.writerow(vars(report))
        else:
            self.fh.write(report.to_json() + "\n")
        self.fh.flush()

    def close(self):
        if self.own:
            self.fh.close()


def _one(args, p, seed):
    inst = make_instance(args, p, seed)
    return run_solver(inst, args.solver, p, args.eps, seed=seed)[1]


def run_jobs(args, jobs, workers=1):
    writer = Writer(args.out, args.format)
    reports = []
    try:
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            futures = [pool.submit(_one, args, p, seed) for p, seed in jobs]
            # results are written in submission order regardless of finish order
            for fut in futures:
                rep = fut.result()
                writer.write(rep)
                reports.append(rep)
    finally:
        writer.close()
    return reports


def exit_code(reports):
    outcomes = {r.outcome for r in reports}
    if "error" in outcomes:
        return EXIT_ERROR
    if "certificate" in outcomes:
        return EXIT_CERT
    return EXIT_OK


def cli_run(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        if args.command == "plot-data":
            reports = []
            for path in args.reports:
                with open(path, encoding="utf-8") as fh:
                    reports.extend(read_jsonl(fh))
            sys.stdout.write(emit_plot_data(reports))
            return EXIT_OK
        _check(args)
        ps = parse_sweep(args.sweep) if getattr(args, "sweep", None) else [args.p]
        if args.command == "bench" and args.sweep:
            for p in ps:
                if p <= 1:
                    raise UsageError("--sweep values must exceed 1")
        jobs = [(p, args.seed + rep) for p in ps for rep in range(args.reps)]
        reports = run_jobs(args, jobs, getattr(args, "workers", 1))
        if args.command == "bench":
            sys.stderr.write(emit_plot_data(reports))
        return exit_code(reports)
    except UsageError as exc:
        if not str(exc).startswith(("argument", "the following", "unrecognized", "invalid")):
            sys.stderr.write(f"lpirls: error: {exc}\n")
        return EXIT_USAGE
    except (LpError, OSError) as exc:
        sys.stderr.write(f"lpirls: {exc}\n")
        return EXIT_ERROR


def main():
    sys.exit(cli_run())


if __name__ == "__main__":
    main()
