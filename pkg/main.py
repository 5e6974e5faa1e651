#!/usr/bin/env python3
import argparse
import logging
import sys
import traceback

from rich.console import Console
from rich.logging import RichHandler

from cmc import commands, setup_run
from cmc.exceptions import CmcError, InputError, ModelError
from cmc.method import Method

log = logging.getLogger("cmc")

COMMANDS = {
    "estimate-p": commands.cmd_estimate_p,
    "estimate": commands.cmd_estimate,
    "simulate": commands.cmd_simulate,
    "sample-feasible": commands.cmd_sample_feasible,
    "synth": commands.cmd_synth,
    "compare": commands.cmd_compare,
}

# (flag, type, help); every flag is also a config-file key.
FLAGS = [
    ("--panel", str, "rating panel CSV (company_id,sector,year,rating)"),
    ("--matrix", str, "transition matrix CSV, M+1 rows"),
    ("--params", str, "parameter JSON written by estimate or synth"),
    ("--checkpoint", str, "optimizer checkpoint; resumed when it exists, rewritten at the end"),
    ("--out-dir", str, "output directory"),
    ("--seed", int, "master random seed"),
    ("--classes", int, "number of non-default classes M"),
    ("--sectors", int, "number of sectors S"),
    ("--iters", int, "iteration limit"),
    ("--swarm-size", int, "particles in the swarm"),
    ("--c0", float, "velocity inertia weight"),
    ("--c1", float, "weight of a particle's own best"),
    ("--c2", float, "weight of the swarm's best"),
    ("--var-threshold", float, "stop the swarm when value variance drops below this"),
    ("--max-bounces", int, "wall reflections per particle move"),
    ("--elite", int, "elites kept per generation"),
    ("--crossover", int, "crossover children per generation (even)"),
    ("--mutants", int, "mutants per generation"),
    ("--random", int, "random additions per generation"),
    ("--init-population", int, "size of the first generation"),
    ("--functionals", int, "random linear functionals for vertex search"),
    ("--k-directions", int, "sampling directions through the centroid"),
    ("--l-samples", int, "target number of tendency samples"),
    ("--runs", int, "repeat estimation over this many seeds and report stability"),
    ("--companies", int, "companies to synthesize or simulate"),
    ("--periods", int, "periods of a synthetic panel"),
    ("--horizon", int, "simulated periods"),
    ("--replications", int, "simulated scenarios"),
]


def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps unset flags out of the namespace so config-file values survive
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="key = value file mirroring the flags")
    common.add_argument("--method", type=Method, choices=list(Method), help="pso or ea")
    for flag, cast, help_text in FLAGS:
        common.add_argument(flag, type=cast, help=help_text)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")

    parser = argparse.ArgumentParser(description="Coupled Markov chain rating model estimation and simulation.")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        subparsers.add_parser(name, parents=[common])
    return parser


def configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=verbose)],
        force=True,
    )


def main(argv=None) -> int:
    try:
        args = vars(build_parser().parse_args(argv))
    except SystemExit as e:
        # usage errors count as input errors
        return 1 if e.code else 0
    command = args.pop("command")
    config_file = args.pop("config", None)
    verbose = args.pop("verbose", False)
    quiet = args.pop("quiet", False)
    configure_logging(verbose, quiet)

    console = Console(stderr=True)
    try:
        config = setup_run.load_config(config_file, args)
        COMMANDS[command](config, console)
    except InputError as e:
        log.error("input error: %s", e)
        return 1
    except ModelError as e:
        log.error("model error: %s", e)
        if verbose:
            traceback.print_exc()
        return 2
    except CmcError as e:
        log.error("%s", e)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
