"""
Command-line tool: single-realization optimization, rate sweeps and the
oracle suite.

Exit codes: 0 success, 1 usage error, 2 configuration error, 3 computation
error, 4 verification failure.
"""

import argparse
import csv
from dataclasses import replace
import logging
import sys

import numpy as np

from . import experiments, mimo, oracles, siso
from .channel import ChannelStreams
from .config import RunConfig, parse_config
from .errors import ConfigError, ConstraintViolated, DegenerateChannel, DomainError, NoConvergence, NotPositiveDefinite
from .experiments import Family, write_csv
from .mimo import Variant

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_COMPUTE = 3
EXIT_VERIFY = 4

SWEEPS = {
    "sweep-rho": Family.RATE_VS_RHO,
    "sweep-antennas": Family.RATE_VS_ANTENNAS,
    "sweep-distance-siso": Family.RATE_VS_DISTANCE_SISO,
    "sweep-distance-mimo": Family.RATE_VS_DISTANCE_MIMO,
}

log = logging.getLogger("efa_relay")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _u64(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="scenario file (JSON)")
    common.add_argument("--seed", type=_u64, help="master seed (overrides the scenario)")
    common.add_argument("--out", help="output path (default: scenario 'output' or stdout)")
    common.add_argument("--trials", type=_positive, help="Monte Carlo trials (overrides the scenario)")
    common.add_argument("--quiet", action="store_true", help="suppress progress messages")

    parser = _Parser(prog="efa-relay", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.add_parser("optimize", parents=[common],
                   help="optimize one channel realization and print the solution")
    for name, family in SWEEPS.items():
        sub.add_parser(name, parents=[common], help=f"run the {family} sweep and write CSV")
    sub.add_parser("verify", parents=[common], help="run the oracle suite")
    return parser


def _load(args):
    cfg = parse_config(args.config) if args.config else RunConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["n_trials"] = args.trials
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


def _open_out(path):
    return open(path, "w", newline="", encoding="utf-8") if path else None


def _optimize(cfg, out):
    ch = ChannelStreams(cfg.seed, cfg.path_loss_exponent).realize(0, cfg.geometry, cfg.r)
    lines = []
    if cfg.r == 1:
        sc = siso.SisoChannel.from_realization(ch)
        for name, sol in (
            ("EFA", siso.optimize_ps_closed_form(sc, cfg.budgets, cfg.noise)),
            ("EFA-fractional", siso.optimize_ps_fractional(sc, cfg.budgets, cfg.noise)),
            ("NoEF", siso.optimize_no_ef(sc, cfg.P_S, cfg.noise)),
        ):
            lines.append(f"[{name}] rho_star={sol.rho_star:.12g} f_sq={sol.f_sq:.12g} "
                         f"gamma1={sol.gamma1:.12g} rate={sol.rate:.12g}")
    else:
        variants = cfg.variants or tuple(str(v) for v in Variant)
        for v in variants:
            sol = mimo.grid_search_ps(ch, cfg.budgets, cfg.noise, v, cfg.ps_grid)
            extra = f" eta={sol.eta:.12g}" if sol.eta is not None else f" g_norm={sol.g_norm:.12g}"
            lines.append(f"[{v}] rho={sol.rho:.12g} gamma2={sol.gamma2:.12g} rate={sol.rate:.12g}"
                         f"{extra} frobenius_norm_F={np.linalg.norm(sol.F):.12g}")
    text = "\n".join(lines) + "\n"
    (out or sys.stdout).write(text)


def _verify(cfg, args, out):
    instances = args.trials if args.trials is not None else 40
    reports = oracles.run_suite(cfg.seed, instances=instances)
    writer = csv.writer(out or sys.stdout, lineterminator="\n")
    writer.writerow(["name", "instances", "worst_relative_gap", "tolerance", "passed"])
    for rep in reports:
        writer.writerow([rep.name, rep.instances, format(rep.worst_relative_gap, ".6e"),
                         format(rep.tolerance, ".1e"), "true" if rep.passed else "false"])
        log.info("%-26s %s", rep.name, "PASS" if rep.passed else "FAIL")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY


def _sweep(cfg, family, out):
    spec = cfg.sweep_spec(family)
    log.info("running %s: %d values x %d variants, %d trials",
             family, len(spec.sweep_values), len(spec.variants), cfg.n_trials)
    result = experiments.run_sweep(spec, cfg.monte_carlo)
    write_csv(result, out or sys.stdout)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(format="%(message)s", stream=sys.stderr,
                        level=logging.WARNING if args.quiet else logging.INFO, force=True)

    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    # the scenario's output path names the sweep CSV; other commands print unless --out is given
    path = args.out or (cfg.output if args.command in SWEEPS else None)
    try:
        out = _open_out(path)
        try:
            if args.command in SWEEPS:
                _sweep(cfg, SWEEPS[args.command], out)
                return EXIT_OK
            if args.command == "optimize":
                _optimize(cfg, out)
                return EXIT_OK
            return _verify(cfg, args, out)
        finally:
            if out is not None:
                out.close()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, DegenerateChannel, NoConvergence, NotPositiveDefinite,
            ConstraintViolated, ArithmeticError, OSError) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
