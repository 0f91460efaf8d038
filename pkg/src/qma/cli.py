"""Command line driver: solve problems, run check suites, emit standard
problems, inspect field files, render figures from solver logs.

Every numeric import happens inside a command function so the thread cap
from QMA_THREADS (and the --deterministic override) lands in the
environment before the BLAS/OpenMP pools are configured.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
)


def _thread_limits(value):
    """Env overrides capping every BLAS/OpenMP pool at `value` threads."""
    n = int(str(value))
    if n < 1:
        raise ValueError(f"thread cap must be a positive integer, got {value!r}")
    return {var: str(n) for var in _THREAD_VARS}


def _seed_arg(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _fail(err, code):
    print(f"error: {err}", file=sys.stderr)
    return code


def cmd_solve(args):
    from .ma_solver import ContinuationError, continuity_solve
    from .problems import parse_config
    from .torus_field import HermitianField, ScalarField, hess_H, read_qmaf, write_qmaf

    with open(args.config) as fh:
        cfg = json.load(fh)
    parsed = parse_config(cfg)
    phi0 = None
    if args.init is not None:
        phi0 = read_qmaf(args.init)
        if not isinstance(phi0, ScalarField):
            raise ValueError(f"{args.init}: initial guess must be a scalar field")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log_path = Path(args.log) if args.log else out / "log.csv"
    log_path.parent.mkdir(parents=True, exist_ok=True)

    try:
        state, report = continuity_solve(parsed.problem, parsed.solver, phi0=phi0)
    except ContinuationError as err:
        # keep whatever history exists so the stall can be inspected
        if getattr(err, "report", None) is not None:
            log_path.write_text(err.report.to_csv())
        raise

    write_qmaf(out / "phi.qmaf", state.phi)
    U = HermitianField(
        parsed.problem.grid,
        parsed.problem.G0.components + hess_H(state.phi, scheme=report.scheme).components,
    )
    write_qmaf(out / "U.qmaf", U)
    log_path.write_text(report.to_csv())
    summary = {
        "A": state.A,
        "residual_linf": report.final_residual_linf,
        "pogorelov_sup_max": max(row[6] for row in report.rows),
    }
    (out / "state.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(
        f"{report.status}: A={state.A:.17g} "
        f"residual_linf={report.final_residual_linf:.17g} "
        f"stages={len(report.stages)} log={log_path}"
    )
    return 0


def cmd_check(args):
    from . import estimates

    rows = estimates.run_suite(args.suite, seed=args.seed, trials=args.trials)
    csv_text = estimates.reports_to_csv(rows)
    json_text = estimates.reports_to_json(rows)
    sys.stdout.write(csv_text)
    sys.stderr.write(json_text)
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"check_{args.suite}.csv").write_text(csv_text)
        (out / f"check_{args.suite}.json").write_text(json_text)
    return 0 if all(r.passed for r in rows) else 1


def cmd_make(args):
    from .problems import (
        make_manufactured2,
        make_poisson1,
        make_random,
        make_slice2d,
        parse_config,
        poisson_oracle,
    )
    from .torus_field import sample_trigpoly, write_qmaf

    makers = {
        "poisson1": make_poisson1,
        "manufactured2": make_manufactured2,
        "slice2d": make_slice2d,
        "random": make_random,
    }
    kwargs = {"seed": args.seed}
    if args.size is not None:
        if args.kind == "slice2d":
            raise ValueError("slice2d has a fixed grid; --size does not apply")
        kwargs["size"] = args.size
    if args.scheme is not None:
        if args.kind != "manufactured2":
            raise ValueError("--scheme only applies to manufactured2")
        kwargs["scheme"] = args.scheme
    cfg = makers[args.kind](**kwargs)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    if args.kind == "poisson1":
        parsed = parse_config(cfg)
        write_qmaf(out / "oracle.qmaf", poisson_oracle(parsed.problem))
    elif args.kind == "manufactured2":
        parsed = parse_config(cfg)
        write_qmaf(
            out / "phi_star.qmaf", sample_trigpoly(parsed.phi_star, parsed.problem.grid)
        )
        write_qmaf(out / "f.qmaf", parsed.problem.f)
    print(str(out / "config.json"))
    return 0


def cmd_info(args):
    from .torus_field import read_qmaf_header

    print(json.dumps(read_qmaf_header(args.path), indent=2))
    return 0


def cmd_report(args):
    from .report import render_log

    for path in render_log(args.log, args.out):
        print(str(path))
    return 0


def _build_parser():
    p = argparse.ArgumentParser(
        prog="qma",
        description="Quaternionic Monge-Ampere toolkit: continuity-method solver, "
        "verifier suites, problem generators, and QMAF field files.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="run the continuity solver on a JSON config")
    ps.add_argument("--config", required=True, help="problem config (JSON)")
    ps.add_argument(
        "--out", required=True, help="output directory: phi.qmaf, U.qmaf, state.json"
    )
    ps.add_argument("--log", default=None, help="CSV iteration log (default <out>/log.csv)")
    ps.add_argument("--init", default=None, help="QMAF scalar field used as initial guess")
    ps.add_argument(
        "--deterministic",
        action=argparse.BooleanOptionalAction,
        default=False,
        help="force single-threaded reductions for byte-stable output",
    )
    ps.set_defaults(func=cmd_solve)

    pc = sub.add_parser("check", help="run a verifier suite and report margins")
    pc.add_argument("suite", choices=("algebra", "calculus", "estimates", "all"))
    pc.add_argument("--seed", type=_seed_arg, default=0)
    pc.add_argument("--trials", type=int, default=500)
    pc.add_argument("--out", default=None, help="also write check_<suite>.csv/.json here")
    pc.add_argument(
        "--deterministic",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="single-threaded reductions (on by default for check)",
    )
    pc.set_defaults(func=cmd_check)

    pm = sub.add_parser("make", help="emit a standard problem config plus oracle fields")
    pm.add_argument("kind", choices=("poisson1", "manufactured2", "slice2d", "random"))
    pm.add_argument("--seed", type=_seed_arg, default=0)
    pm.add_argument("--out", required=True, help="output directory")
    pm.add_argument("--size", type=int, default=None, help="points per active axis")
    pm.add_argument(
        "--scheme",
        choices=("spectral", "fd2", "fd4"),
        default=None,
        help="solver scheme baked into the config (manufactured2 only)",
    )
    pm.set_defaults(func=cmd_make)

    pi = sub.add_parser("info", help="print the JSON header of a QMAF file")
    pi.add_argument("path")
    pi.set_defaults(func=cmd_info)

    pr = sub.add_parser("report", help="render figures from a solver CSV log")
    pr.add_argument("--log", required=True, help="CSV log written by qma solve")
    pr.add_argument("--out", required=True, help="directory for the rendered figures")
    pr.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = _build_parser().parse_args(argv)

    cap = os.environ.get("QMA_THREADS")
    limits = None
    if cap is not None:
        try:
            limits = _thread_limits(cap)
        except ValueError:
            return _fail(f"QMA_THREADS must be a positive integer, got {cap!r}", 2)
    if getattr(args, "deterministic", False):
        limits = _thread_limits("1")
    if limits:
        os.environ.update(limits)

    from .ma_solver import ConfigError, ConvergenceError, PositivityError

    try:
        return args.func(args)
    except ConfigError as err:
        return _fail(err, 2)
    except PositivityError as err:
        return _fail(err, 3)
    except ConvergenceError as err:
        return _fail(err, 4)
    except OSError as err:
        return _fail(err, 2)
    except ValueError as err:
        return _fail(err, 2)


if __name__ == "__main__":
    raise SystemExit(main())
