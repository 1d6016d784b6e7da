"""Command-line entry point: ``seqrac <command> [flags]``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import expsim, optics, protocol
from .protocol import CLASSICAL_LIMIT, CROSSING_WITNESS


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # one-line diagnostics instead of argparse's usage block
    def error(self, message):
        self.exit(2, f"{self.prog}: error: {message}\n")


def _unit_interval(name):
    def parse(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}") from None
        if not 0.0 <= v <= 1.0:
            raise argparse.ArgumentTypeError(f"{name} must lie in [0, 1], got {v}")
        return v

    return parse


def _int_at_least(name, lo):
    def parse(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer, got {text!r}") from None
        if v < lo:
            raise argparse.ArgumentTypeError(f"{name} must be >= {lo}, got {v}")
        return v

    return parse


def _nonneg_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if v < 0 or not np.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {v}")
    return v


def _flag(w: float) -> str:
    return "nonclassical" if w > CLASSICAL_LIMIT else "classical"


def cmd_theory(args, out):
    eta = args.eta
    n = args.receivers
    strengths = [eta] if n == 1 else [eta] * (n - 1) + [1.0]
    chain = protocol.witness_chain(strengths)
    names = ["W_AB", "W_AC"] if n == 2 else ["W_AB"] if n == 1 else [f"W_AR{k}" for k in range(1, n + 1)]
    print(f"eta = {eta:.6f}", file=out)
    for name, w in zip(names, chain):
        print(f"{name:<6} = {w:.6f}  {_flag(w)}", file=out)
    print(f"W_ABC  = {protocol.witness_abc(eta):.6f}", file=out)


def _target(path, out):
    """Output path, or the stdout stream when no path (or "-") is given."""
    if path in (None, "-"):
        return out
    p = Path(path)
    if not p.parent.is_dir():
        raise OSError(f"cannot write {p}: directory {p.parent} does not exist")
    return p


def _report_written(target, what):
    if isinstance(target, Path):
        print(f"wrote {what} to {target}", file=sys.stderr)


def cmd_sweep(args, out):
    rows = expsim.theory_curve(args.steps)
    target = _target(args.out, out)
    expsim.write_curve(rows, target)
    _report_written(target, f"{len(rows)} rows")


def cmd_simulate(args, out):
    table = expsim.simulate_counts(args.eta, args.mean_counts, args.seed)
    target = _target(args.out, out)
    expsim.write_counts(table, target)
    _report_written(target, f"{len(table.records)} records")


def cmd_analyze(args, out):
    path = Path(args.counts) if args.counts else expsim.FIXTURE_PATH
    if not path.is_file():
        raise FileNotFoundError(f"count table {path} not found")
    table = expsim.read_counts(path)
    result = expsim.analyze_table(table, args.resamples, args.seed)
    for eta in result.skipped:
        print(f"warning: eta_set={eta} incomplete, skipped", file=sys.stderr)
    target = _target(args.out, out)
    expsim.write_analysis(result, target)
    _report_written(target, f"{len(result)} strength points")


def cmd_verify_optics(args, out):
    path = Path(args.table) if args.table else expsim.FIXTURE_PATH
    if not path.is_file():
        raise FileNotFoundError(f"settings table {path} not found")
    rows = optics.read_settings(path)
    etas = [round(e, 12) for e in np.linspace(0, 1, 11)] if args.etas is None else args.etas
    report = optics.verify_angle_table(rows, etas)
    for bits, eta, dev in report.failures:
        print("mismatch x={}{} y={} b={} z={} c={}".format(*bits) + f" eta={eta}: deviation {dev:.3e}", file=out)
    print(report.summary(), file=out)
    return 0 if report.passed else 1


def cmd_bounds(args, out):
    if args.wab is None and args.wac is None:
        raise UsageError("bounds: give at least one of --wab, --wac")
    if args.wab is not None:
        try:
            tb = protocol.tradeoff_bound(args.wab)
        except protocol.DomainError as exc:
            raise UsageError(f"--wab: {exc}") from None
        print(f"eta_low = {protocol.eta_low(args.wab):.6f}", file=out)
        print(f"tradeoff_bound(W_AB) = {tb:.6f}  (max W_AC)", file=out)
    if args.wac is not None:
        try:
            up = protocol.eta_up(args.wac)
            inv = protocol.inverse_tradeoff_bound(args.wac)
        except protocol.DomainError as exc:
            raise UsageError(f"--wac: {exc}") from None
        print(f"eta_up  = {up:.6f}", file=out)
        print(f"inverse_tradeoff_bound(W_AC) = {inv:.6f}  (max W_AB)", file=out)
        crossing = args.wac > CROSSING_WITNESS
        print(f"crossing (W_AC > {CROSSING_WITNESS:.6f}): {str(crossing).lower()}", file=out)


def cmd_no_go(args, out):
    res = protocol.no_go_search()
    print(f"max W_AR3 = {res.value:.6f}  at eta1 = {res.eta1:.6f}, eta2 = {res.eta2:.6f}, eta3 = 1", file=out)
    print(f"gap to 3/4 = {CLASSICAL_LIMIT - res.value:.6f}", file=out)
    print(f"closed form = {protocol.NO_GO_CLOSED_FORM:.6f}", file=out)
    e1 = 1 / np.sqrt(2)
    e2 = 2 * (np.sqrt(2) - 1)
    w = protocol.witness_chain([e1, e2])
    print(f"boundary: eta1 = 1/sqrt2 -> W_AR1 = {w[0]:.6f}; eta2 = 2(sqrt2-1) -> W_AR2 = {w[1]:.6f}", file=out)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seqrac", description="Sequential quantum random access code toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="closed-form witnesses at one strength")
    p.add_argument("--eta", type=_unit_interval("--eta"), required=True)
    p.add_argument("--receivers", type=_int_at_least("--receivers", 1), default=2)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("sweep", help="theory curve CSV over an even strength grid")
    p.add_argument("--steps", type=_int_at_least("--steps", 2), default=11)
    p.add_argument("--out", default=None, help="output CSV (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="synthetic Poisson count table")
    p.add_argument("--eta", type=_unit_interval("--eta"), required=True)
    p.add_argument("--mean-counts", type=_nonneg_float, default=8000.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output CSV (default: stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="witnesses and error bars from a count table")
    p.add_argument("--counts", default=None, help="count CSV (default: bundled published table)")
    p.add_argument("--resamples", type=_int_at_least("--resamples", 2), default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output JSON (default: stdout)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify-optics", help="check plate angles against the protocol")
    p.add_argument("--table", default=None, help="CSV with angle columns (default: bundled table)")
    p.add_argument("--etas", type=_unit_interval("--etas"), nargs="*", default=None)
    p.set_defaults(func=cmd_verify_optics)

    p = sub.add_parser("bounds", help="strength bounds and trade-off checks from witnesses")
    p.add_argument("--wab", type=float, default=None)
    p.add_argument("--wac", type=float, default=None)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("no-go", help="best third-receiver witness")
    p.set_defaults(func=cmd_no_go)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out) or 0
    except (UsageError, OSError, ValueError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"seqrac {args.command}: error: {msg}", file=sys.stderr)
        return 2 if isinstance(exc, UsageError) else 1


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
