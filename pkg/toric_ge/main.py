# Copyright 2023 by Ilias Charitos.
# All rights reserved.
# This file is part of the Toric GE package,
# and is released under the "MIT License Agreement". Please see the LICENSE
# file that should have been included as part of this package.

"""
Source file that holds the command line entry point: argument parsing, logging setup and exit codes.

Run as ``python -m toric_ge.main <subcommand> [options]``.

Functions in the source file:
    * :class:`UsageArgumentParser`: Argument parser that exits with the usage error code.
    * :func:`build_parser`: Build the parser of every subcommand.
    * :func:`main`: The main application that parses the arguments and runs a command.
"""

import argparse
import logging
import sys

from toric_ge import cli_runner
from toric_ge import data_handling as dh
from toric_ge.constants import (
    ALGORITHMS,
    BETA_CRITICAL,
    DEFAULT_BETA_GRID,
    DEFAULT_LOG_FILE,
    DEFAULT_OUTPUT_DIR,
    EXIT_TOLERANCE,
    EXIT_USAGE
)

ORACLE_SIZES = [2, 3, 4]
ORACLE_BETAS = [0.2, 0.44, 0.8]
QUANTUM_BETAS = [0.0, 0.2, 0.441, 0.8, 2.0]


class UsageArgumentParser(argparse.ArgumentParser):
    """Argument parser whose errors exit with the usage error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    """Build the parser of every subcommand. Option defaults are None so that configuration files can fill them."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help="run configuration file (key = value lines)")
    common.add_argument('--out', dest='output_dir', help=f"output directory (default {DEFAULT_OUTPUT_DIR})")
    common.add_argument('--log-file', default=DEFAULT_LOG_FILE, help="log file")
    common.add_argument('--seed', dest='master_seed', type=int, help="master seed")
    common.add_argument('--size', dest='sizes', type=int, nargs='+', help="linear lattice size(s)")
    common.add_argument('--sweeps', dest='n_therm', type=int, help="thermalization sweeps per chain")
    common.add_argument('--measure', dest='n_measure', type=int, help="measurements per chain")
    common.add_argument('--interval', dest='measure_interval', type=int, help="sweeps between measurements")
    common.add_argument('--algorithm', choices=ALGORITHMS, help="update algorithm")
    common.add_argument('--bins', dest='n_bins', type=int, help="jackknife bins per chain")
    common.add_argument('--chains', type=int, help="independent chains per (L, beta) cell")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument('--beta-start', type=float, help=f"first coupling (default {DEFAULT_BETA_GRID['beta_start']})")
    grid.add_argument('--beta-stop', type=float, help=f"last coupling (default {DEFAULT_BETA_GRID['beta_stop']})")
    grid.add_argument('--beta-step', type=float, help=f"grid spacing (default {DEFAULT_BETA_GRID['beta_step']})")
    grid.add_argument('--refine-start', type=float, help="start of a finer grid window")
    grid.add_argument('--refine-stop', type=float, help="end of a finer grid window")
    grid.add_argument('--refine-step', type=float, help="spacing inside the finer grid window")

    parser = UsageArgumentParser(prog='toric_ge', description="Global entanglement of the perturbed toric code "
                                                                "from Monte Carlo of the 2D Ising model.")
    subparsers = parser.add_subparsers(dest='command', required=True, parser_class=UsageArgumentParser)

    sweep = subparsers.add_parser('sweep', parents=[common, grid], help="Monte Carlo sweep over sizes and couplings")
    sweep.add_argument('--threshold', type=float, help="error bar above which a row is flagged")

    oracle = subparsers.add_parser('oracle', parents=[common], help="Monte Carlo against exact enumeration")
    oracle.add_argument('--beta', type=float, nargs='+', default=ORACLE_BETAS, help="couplings to check")
    oracle.add_argument('--allow-large', action='store_true', help="permit L = 5 enumeration")

    quantum = subparsers.add_parser('quantum-check', parents=[common], help="exact ground state against the mapping")
    quantum.add_argument('--beta', type=float, nargs='+', default=QUANTUM_BETAS, help="couplings to check")
    quantum.add_argument('--sparse', action='store_true', help="use the 3 x 3 torus (18 qubits)")

    scaling = subparsers.add_parser('scaling', parents=[common], help="finite-size scaling of sweep results")
    scaling.add_argument('--sweep-dir', help="directory holding the sweep CSVs (default: the output directory)")
    scaling.add_argument('--beta-star', type=float, default=BETA_CRITICAL, help="critical coupling")

    correlate = subparsers.add_parser('correlate', parents=[common], help="energy-energy correlation profile")
    correlate.add_argument('--beta', type=float, nargs=1, required=True, help="coupling")

    subparsers.add_parser('selftest', parents=[common], help="quick self test")

    subparsers.add_parser('analytic', parents=[common, grid], help="thermodynamic-limit curves")
    return parser


def _cli_values(args):
    names = ['master_seed', 'sizes', 'n_therm', 'n_measure', 'measure_interval', 'algorithm', 'n_bins', 'chains',
             'output_dir', 'beta_start', 'beta_stop', 'beta_step', 'refine_start', 'refine_stop', 'refine_step',
             'threshold']
    return {name: getattr(args, name, None) for name in names}


def run_command(args, parser) -> int:
    """Build the manifest and dispatch one parsed command to the runner."""
    cli_values = _cli_values(args)
    if args.command == 'oracle' and cli_values['sizes'] is None:
        cli_values['sizes'] = ORACLE_SIZES
    if args.command == 'correlate' and (cli_values['sizes'] is None or len(cli_values['sizes']) != 1):
        parser.error("correlate needs exactly one --size")
    manifest = cli_runner.build_manifest(cli_values, args.config)
    runner = cli_runner.Runner()

    if args.command == 'sweep':
        return runner.cmd_sweep(manifest)
    if args.command == 'oracle':
        return runner.cmd_oracle(manifest, args.beta, allow_large=args.allow_large)
    if args.command == 'quantum-check':
        return runner.cmd_quantum_check(args.beta, manifest.output_dir, sparse=args.sparse)
    if args.command == 'scaling':
        sizes = list(cli_values['sizes']) if cli_values['sizes'] else None
        return runner.cmd_scaling(args.sweep_dir or manifest.output_dir, manifest.output_dir, sizes, args.beta_star)
    if args.command == 'correlate':
        return runner.cmd_correlate(manifest, manifest.sizes[0], args.beta[0])
    if args.command == 'selftest':
        return runner.cmd_selftest()
    return runner.cmd_analytic(manifest.betas(), manifest.output_dir)


def main(argv=None) -> int:
    """The main application that parses the arguments, sets up logging and runs one command."""
    parser = build_parser()
    args = parser.parse_args(argv)

    # Logging setup
    logging.basicConfig(filename=args.log_file, level=logging.DEBUG, filemode='w',
                        format='%(asctime)s: %(filename)s: %(lineno)d: %(funcName)s: %(levelname)s: %(message)s')
    logger = logging.getLogger(__name__)
    logger.debug(f"Command '{args.command}' has started.")

    try:
        return run_command(args, parser)
    except (dh.ConfigFileError, cli_runner.InvalidManifestError, FileNotFoundError) as e:
        logger.error("Invalid run settings.", exc_info=True)
        print(f"Invalid run settings: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        logger.critical("Application has failed. Error is shown below:", exc_info=True)
        return EXIT_TOLERANCE


if __name__ == '__main__':
    sys.exit(main())
