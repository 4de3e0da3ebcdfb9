#!/usr/bin/env python3
"""
dynperc

Command-line entry for the dynamical percolation toolkit. Each subcommand
is served by a command module; artifacts land in the output directory.
"""

import argparse
import logging
import sys

from command_modules import (command_service, revealment_cmd, simulate_cmd, spectrum_cmd,
                             tree_exact_cmd, verify_cmd)
from dynperc.errors import ConfigError
from utils.run_config import apply_overrides, load_config

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'

logger = logging.getLogger('dynperc')

MODULES = [tree_exact_cmd, spectrum_cmd, simulate_cmd, revealment_cmd, verify_cmd]


def register_modules():
    """Map subcommand name to its command module class"""
    commands = {}
    for mod in MODULES:
        cls, mod_name = mod.register()
        commands[mod_name] = cls
    return commands


def parse_args(argv, commands):
    parser = argparse.ArgumentParser(prog='dynperc', description='Dynamical percolation experiments')
    parser.add_argument('command', choices=sorted(commands))
    parser.add_argument('--config', help='JSON or YAML run config')
    parser.add_argument('--out', help='output directory (overrides config)')
    parser.add_argument('--seed', type=int, help='master seed (overrides config)')
    parser.add_argument('--threads', type=int, help='worker threads (overrides config)')
    parser.add_argument('--verbose', '-v', action='store_true', help='debug logging')
    return parser.parse_args(argv)


def setup_logging(verbose):
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def main(argv=None):
    commands = register_modules()
    args = parse_args(sys.argv[1:] if argv is None else argv, commands)
    setup_logging(args.verbose)

    try:
        raw = load_config(args.config) if args.config else {}
    except ConfigError as e:
        logger.error('%s', e)
        return command_service.EXIT_CONFIG_ERROR
    raw = apply_overrides(raw, seed=args.seed, out=args.out, threads=args.threads)

    module = commands[args.command](args.command)
    rc, msg = module.run(raw)
    if rc == command_service.EXIT_SUCCESS:
        logger.info('%s: done, %d artifact(s)', args.command, len(module.written))
    else:
        logger.error('%s: exit %d: %s', args.command, rc, msg)
    return rc


if __name__ == "__main__":
    sys.exit(main())
