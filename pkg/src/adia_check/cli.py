"""Command-line entry point ``adia-check``.

Exit status: 0 on success, 2 for usage errors, 3 for configuration errors,
4 for propagation failures (unitarity drift, degenerate spectrum).
"""

import argparse
import sys

from . import scenario as sc
from .errors import (
    AdiaCheckError,
    ConfigError,
    DegenerateSpectrumError,
    EnsembleMemberError,
    IntegrationDivergedError,
    InvalidArgumentError,
)

EXIT_OK = 0
EXIT_CONFIG = 3
EXIT_PROPAGATION = 4


def _emit(report, out):
    if out:
        report.write(out)
    else:
        sys.stdout.write(report.to_text())


def _cmd_run(args):
    config = sc.load_config(args.config)
    report = sc.run_scenario(config)
    _emit(report, args.out or config.output)


def _cmd_ensemble(args):
    config = sc.load_config(args.config)
    report = sc.cmd_ensemble(config)
    _emit(report, args.out or config.output)


def _cmd_fig1(args):
    _emit(sc.cmd_fig1(args.steps), args.out)


def _cmd_lzt(args):
    report = sc.cmd_lzt(args.omega, args.sweep, args.window, args.steps)
    _emit(report, args.out)
    q_final = report.column("q_numeric")[-1]
    reference = sc.landau_zener_adiabatic_probability(args.omega, args.sweep)
    print(f"final Q = {q_final:.12g} (asymptotic Landau-Zener value {reference:.12g})", file=sys.stderr)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="adia-check",
        description="Exact two-level propagation and adiabatic-theorem consistency diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario config and write CSV")
    p.add_argument("config")
    p.add_argument("--out", help="CSV path (default: [output] path, else stdout)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("fig1", help="fidelity against the H + i[dP/dt, P] evolution, omega0=1, tau=20 pi")
    p.add_argument("--steps", type=int, default=4000)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_fig1)

    p = sub.add_parser("lzt", help="Landau-Zener sweep over [-T, T]")
    p.add_argument("--omega", type=float, required=True, help="coupling Omega")
    p.add_argument("--sweep", type=float, required=True, help="sweep rate")
    p.add_argument("--window", type=float, required=True, help="half-width T of the time window")
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_lzt)

    p = sub.add_parser("ensemble", help="classical ensemble from [ensemble.N] sections")
    p.add_argument("config")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_ensemble)
    return parser


def _propagation_failure(exc):
    if isinstance(exc, EnsembleMemberError):
        exc = exc.cause
    return isinstance(exc, (IntegrationDivergedError, DegenerateSpectrumError))


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, InvalidArgumentError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AdiaCheckError as exc:
        kind = "propagation failure" if _propagation_failure(exc) else "error"
        print(f"{kind}: {exc}", file=sys.stderr)
        return EXIT_PROPAGATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
