"""Command line entry point.

::

    qstefan solve PROBLEM [PROBLEM ...] [--backend classical|hhl|both]
                  [--clock-qubits N] [--truncation N] [--collocation K]
                  [--probe-times T,T,...] [--out PATH] [--format json|csv]
                  [--jobs J]
    qstefan schema

Exit codes: 0 success, 1 error (nothing written), 2 verification failure
(report written, residuals above tolerance). The tolerance defaults to 1e-8
and can be changed with the ``QSTEFAN_TOLERANCE`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import QStefanError
from .runner import (
    EXIT_ERROR,
    EXIT_OK,
    EXIT_VERIFY,
    TOLERANCE_ENV,
    RunConfig,
    default_output_name,
    load_schema,
    render,
    run_many,
    tolerance_from_env,
    write_atomic,
)


def _times(text: str):
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals or any(not v > 0 for v in vals):
        raise argparse.ArgumentTypeError("probe times must be positive")
    return vals


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


class _Parser(argparse.ArgumentParser):
    # Usage errors share exit code 1 with every other error; 2 means verification failure.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qstefan", description="Inverse Stefan problems via heat series and simulated HHL.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="assemble, solve and verify problem files")
    s.add_argument("problems", nargs="+", metavar="PROBLEM", help="problem definition file(s)")
    s.add_argument("--backend", choices=("classical", "hhl", "both"), default="classical")
    s.add_argument("--clock-qubits", type=_positive_int, help="clock register size n_l (required for hhl/both)")
    s.add_argument("--truncation", type=_nonneg_int, help="override the series truncation N")
    s.add_argument("--collocation", type=_positive_int, help="override the collocation count k (two-phase)")
    s.add_argument("--probe-times", type=_times, help="comma-separated verification times")
    s.add_argument("--out", help="output file (one problem) or directory (several); stdout if omitted")
    s.add_argument("--format", choices=("json", "csv"), default="json")
    s.add_argument("--jobs", type=_positive_int, default=1, help="problems solved concurrently")
    s.add_argument("--hhl-mode", choices=("exact", "sampled"), default="exact")
    s.add_argument("--shots", type=_positive_int, default=8192)
    s.add_argument("--seed", type=int, default=0)

    sub.add_parser("schema", help="print the report JSON schema")
    return ap


def _targets(args):
    if args.out is None:
        return [None] * len(args.problems)
    out = Path(args.out)
    if len(args.problems) == 1 and not out.is_dir():
        return [out]
    if not out.is_dir():
        raise QStefanError(f"--out must be an existing directory when solving {len(args.problems)} problems")
    names = [default_output_name(p, args.format) for p in args.problems]
    if len(set(names)) != len(names):
        raise QStefanError("problem files share a stem; their reports would collide in --out")
    return [out / n for n in names]


def _solve(args) -> int:
    tol = tolerance_from_env()
    if args.backend != "classical" and args.clock_qubits is None:
        raise QStefanError(f"--backend {args.backend} requires --clock-qubits")
    targets = _targets(args)
    configs = [
        RunConfig(
            problem_file=p,
            backend=args.backend,
            clock_qubits=args.clock_qubits,
            truncation=args.truncation,
            collocation_count=args.collocation,
            probe_times=args.probe_times,
            output_path=None if t is None else str(t),
            output_format=args.format,
            hhl_mode=args.hhl_mode,
            shots=args.shots,
            seed=args.seed,
            tolerance=tol,
        )
        for p, t in zip(args.problems, targets)
    ]
    code = EXIT_OK
    for cfg, (outcome, err) in zip(configs, run_many(configs, args.jobs)):
        if err is not None:
            print(f"qstefan: error: {cfg.problem_file}: {err}", file=sys.stderr)
            code = EXIT_ERROR
            continue
        for w in outcome.warnings:
            print(f"qstefan: warning: {cfg.problem_file}: {w}", file=sys.stderr)
        text = render(outcome.report, cfg.output_format)
        if cfg.output_path is None:
            sys.stdout.write(text)
        else:
            write_atomic(cfg.output_path, text)
        if outcome.exit_code == EXIT_VERIFY:
            r = outcome.report["residuals"]
            print(
                f"qstefan: verification failed: {cfg.problem_file}: boundary residual "
                f"{r['boundary_max_residual']!r}, PDE residual {r['pde_max_residual']!r} "
                f"(tolerance {cfg.tolerance!r}, set {TOLERANCE_ENV} to change)",
                file=sys.stderr,
            )
            if code == EXIT_OK:
                code = EXIT_VERIFY
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "schema":
            sys.stdout.write(json.dumps(load_schema(), indent=2) + "\n")
            return EXIT_OK
        return _solve(args)
    except QStefanError as exc:
        print(f"qstefan: error [{exc.module}]: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"qstefan: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
