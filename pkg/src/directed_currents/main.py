"""
Main entry point for the directed-currents application.

This module provides the command-line interface.
"""

import sys
import argparse
import logging
from typing import List, Optional

from .controllers.application_controller import ApplicationController
from .controllers.experiment_controller import COMMANDS
from .models.run_config import RunConfig, parse_profile_option


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='directed-currents',
        description='Numerical experiments on harmonic currents near a hyperbolic singularity',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s leaf                            # Sample the leaf and the exhaustion
  %(prog)s mass --profile log_power:1      # Mass scan for a log-power profile
  %(prog)s lemmas --a 0 --b 1              # Lemma checks for eta = i
  %(prog)s sharpness --config run.ini      # Headline table from a config file
        """
    )

    parser.add_argument(
        'command',
        nargs='?',
        choices=COMMANDS,
        help='Experiment to run'
    )
    parser.add_argument(
        '--config',
        help='INI configuration file (flags override its values)'
    )
    parser.add_argument(
        '--out',
        help='Output directory (default: runs)'
    )
    parser.add_argument(
        '--a',
        type=float,
        help='Real part of eta (default: 1)'
    )
    parser.add_argument(
        '--b',
        type=float,
        help='Imaginary part of eta, non-zero (default: 1)'
    )
    parser.add_argument(
        '--profile',
        help='power:P, log_power:ALPHA or tabulated:PATH (default: power:0.5)'
    )
    parser.add_argument(
        '--A',
        dest='amplitude',
        type=float,
        help='Profile amplitude (default: 10)'
    )
    parser.add_argument(
        '--threads',
        type=int,
        help='Worker threads (default: 1)'
    )
    parser.add_argument(
        '--seed',
        type=int,
        help='Seed for sampled checks (default: 0)'
    )
    parser.add_argument(
        '--verbose',
        action='store_true',
        help='Debug logging'
    )
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """
    Combine defaults, the config file and command-line flags.

    Raises:
        ValueError: If any value is invalid
    """
    config = RunConfig.from_file(args.config) if args.config else RunConfig.build()
    overrides = {
        'out': args.out,
        'a': args.a,
        'b': args.b,
        'amplitude': args.amplitude,
        'threads': args.threads,
        'seed': args.seed,
    }
    if args.profile:
        overrides.update(parse_profile_option(args.profile))
    return config.with_overrides(**overrides)


def main(argv: Optional[List[str]] = None) -> None:
    """
    Main command-line interface entry point.
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_usage(sys.stderr)
        sys.exit(2)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s: %(message)s",
    )

    try:
        config = load_config(args)
        app = ApplicationController(config)
        sys.exit(app.run(args.command))

    except KeyboardInterrupt:
        print("\nOperation cancelled.")
        sys.exit(1)
    except Exception as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
