"""``solvcheck`` command-line interface."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import report
from .cindex import index_report
from .netmodel import CaseError, load_case, reduce
from .pfsolve import Divergence, SolveOptions, solve
from .sweep import (
    InsolvableCaseError,
    SweepConfig,
    apply_penetration,
    convert_dgs,
    impedance_sensitivity,
    power_factor_sensitivity,
    run_sweep,
)
from .verify import case_suite, random_suite
from .wjac import build_F

log = logging.getLogger("solvcheck")

VERBS = ("solve", "index", "sweep", "sensitivity", "fmatrix", "verify")
DG_MODE = {"power": "hold_constant_power", "current": "hold_constant_current"}


class UsageError(Exception):
    pass


def _penetrations(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid penetration list {text!r}")
    if not values or any(v < 0 for v in values):
        raise argparse.ArgumentTypeError("penetration must be one or more non-negative percentages")
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="solvcheck", description="Power-flow solvability and C-index toolkit.")
    p.add_argument("verb", choices=VERBS)
    p.add_argument("--case", required=True, help="case file, or 'random' for verify")
    p.add_argument("--out", help="output file (CSV)")
    p.add_argument("--step", type=float, default=0.01, help="sweep step as a fraction of base load")
    p.add_argument("--max-loading", type=float, default=20.0)
    p.add_argument("--loading", type=float, default=1.0, help="load scaling for solve/index/fmatrix")
    p.add_argument("--penetration", type=_penetrations, help="DG penetration %%, comma-separated for several")
    p.add_argument("--dg-mode", choices=sorted(DG_MODE), default="power")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--n", type=int, default=None, help="bus count for random verify cases")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--impedance-scale", type=float, help="admittance scale a in (0, 1]")
    p.add_argument("--pf", type=float, help="target load power factor")
    p.add_argument("--base-pf", type=float, help="reference load power factor")
    return p


def _emit(data: bytes, out=None) -> None:
    if out:
        report.write_atomic(out, data)
    else:
        sys.stdout.write(data.decode())


def _prepare(args, pct=None):
    case = load_case(args.case)
    pct = pct if pct is not None else (args.penetration[0] if args.penetration else None)
    mode = DG_MODE[args.dg_mode]
    if pct is not None:
        return apply_penetration(case, pct, mode)
    return convert_dgs(case, mode)


def _options(args) -> SolveOptions:
    return SolveOptions(tol=args.tol, max_iter=args.max_iter)


def _snapshot(args):
    case = _prepare(args)
    net = reduce(case)
    try:
        return net, solve(net, loading=args.loading, options=_options(args))
    except Divergence as exc:
        raise InsolvableCaseError(f"no power-flow solution at loading {args.loading:g}: {exc.reason}") from exc


def cmd_solve(args) -> int:
    _, snap = _snapshot(args)
    table = report.emit_report(snap, "csv")
    sys.stdout.write(report.emit_report(snap, "structured-text").decode())
    if args.out:
        report.write_atomic(args.out, table)
    else:
        sys.stdout.write("\n" + table.decode())
    return 0


def cmd_index(args) -> int:
    net, snap = _snapshot(args)
    rep = index_report(net, snap)
    sys.stdout.write(report.emit_report(rep, "structured-text").decode())
    if args.out:
        report.write_atomic(args.out, report.emit_report(rep, "csv"))
    return 0


def cmd_fmatrix(args) -> int:
    net, snap = _snapshot(args)
    _emit(report.emit_matrix(build_F(net, snap), net.pq_ids), args.out)
    return 0


def _sweep_one(job):
    path, pct, mode, step, max_loading, tol, max_iter = job
    case = load_case(path)
    case = apply_penetration(case, pct, mode) if pct is not None else convert_dgs(case, mode)
    config = SweepConfig(step=step, max_loading=max_loading, options=SolveOptions(tol, max_iter))
    return run_sweep(case, config)


def cmd_sweep(args) -> int:
    pcts = args.penetration or [None]
    jobs = [(args.case, p, DG_MODE[args.dg_mode], args.step, args.max_loading, args.tol, args.max_iter)
            for p in pcts]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    for pct, rep in zip(pcts, results):
        if pct is not None and len(pcts) > 1:
            sys.stdout.write(f"penetration={report.fmt(float(pct))}\n")
        sys.stdout.write(report.emit_report(rep, "structured-text").decode())
        if args.out:
            out = args.out
            if len(pcts) > 1:
                root, ext = os.path.splitext(out)
                out = f"{root}_p{report.fmt(float(pct))}{ext}"
            report.write_atomic(out, report.emit_report(rep, "csv"))
    return 0


def cmd_sensitivity(args) -> int:
    if (args.impedance_scale is None) == (args.pf is None):
        raise UsageError("sensitivity needs exactly one of --impedance-scale or --pf")
    case = _prepare(args)
    if args.impedance_scale is not None:
        rep = impedance_sensitivity(case, args.impedance_scale, args.loading, _options(args))
    else:
        rep = power_factor_sensitivity(case, args.pf, args.base_pf, args.loading, _options(args))
    sys.stdout.write(report.emit_report(rep, "structured-text").decode())
    if args.out:
        report.write_atomic(args.out, report.emit_report(rep, "csv"))
    return 0


def cmd_verify(args) -> int:
    if args.case == "random":
        n = args.n if args.n is not None else (2, 8)
        result = random_suite(args.trials, n, args.seed)
    else:
        result = case_suite(_prepare(args), step=max(args.step, 0.05))
    sys.stdout.write(result.verdict() + "\n")
    sys.stdout.write(
        f"trials={result.trials} theorem1_max={report.fmt(result.theorem1_max)} "
        f"lemma2_max={report.fmt(result.lemma2_mag_max)} "
        f"theorem2_checked={result.theorem2_checked} wirtinger_max={report.fmt(result.wirtinger_max)}\n"
    )
    for line in result.failures:
        sys.stderr.write(line + "\n")
    return 0 if result.ok else 1


COMMANDS = {
    "solve": cmd_solve,
    "index": cmd_index,
    "sweep": cmd_sweep,
    "sensitivity": cmd_sensitivity,
    "fmatrix": cmd_fmatrix,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    level = os.environ.get("SOLVCHECK_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.jobs < 1 or args.step <= 0 or args.tol <= 0 or args.max_iter < 1:
        parser.print_usage(sys.stderr)
        sys.stderr.write("solvcheck: error: --jobs, --step, --tol and --max-iter must be positive\n")
        return 2
    if args.case == "random" and args.verb != "verify":
        sys.stderr.write("solvcheck: error: --case random is only valid with verify\n")
        return 2
    try:
        return COMMANDS[args.verb](args)
    except UsageError as exc:
        sys.stderr.write(f"solvcheck: error: {exc}\n")
        return 2
    except (CaseError, InsolvableCaseError, Divergence, ValueError, OSError) as exc:
        sys.stderr.write(f"solvcheck: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
