"""Command line entry point"""
import argparse
import logging
import os
import sys

from . import config as cfg
from . import controller
from . import errors
from . import scenario as scn
from . import scheduler
from . import toy

LOG = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_STUCK = 3


def make_parser():
    parser = argparse.ArgumentParser(
            prog="wayfarer",
            description="Agent-based multimodal transport simulation")
    parser.add_argument("--log-level", default="INFO",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="simulate the configured iterations")
    run.add_argument("--config", required=True, help="YAML configuration")
    run.add_argument("--iterations", type=int,
                     help="iterations to run, overriding lastIteration + 1")
    run.add_argument("--seed", type=int, help="run seed")
    run.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="KEY=VALUE", help="override a configuration value")
    run.add_argument("--workers", type=int,
                     help="threads for per-person work between days")
    run.add_argument("--output", help="output directory")

    validate = commands.add_parser("validate",
                                   help="check a scenario without running it")
    validate.add_argument("--config", required=True)
    validate.add_argument("--set", dest="overrides", action="append",
                          default=[], metavar="KEY=VALUE")

    make = commands.add_parser("make-toy", help="write the toy scenario")
    make.add_argument("--output", required=True, help="scenario directory")
    make.add_argument("--size", type=int, default=10,
                      help="grid nodes per side")
    make.add_argument("--persons", type=int, default=1000)
    make.add_argument("--seed", type=int, default=42)
    return parser


def load_config(args):
    config = cfg.Config.load(args.config, args.overrides)
    if getattr(args, "seed", None) is not None:
        config.set("seed", args.seed)
    if getattr(args, "iterations", None) is not None:
        if args.iterations < 1:
            raise cfg.ConfigError("at least one iteration is needed")
        config.set("simulation.lastIteration", args.iterations - 1)
    if getattr(args, "workers", None) is not None:
        config.set("simulation.workers", args.workers)
    if getattr(args, "output", None) is not None:
        config.set("outputDirectory", os.path.abspath(args.output))
    return config


def run(args):
    config = load_config(args)
    scenario = scn.load_scenario(config.path("inputDirectory"), config)
    issues = scn.validate_scenario(scenario)
    for issue in issues:
        LOG.error("%s", issue)
        print(f"error: {issue}", file=sys.stderr)
    if issues:
        return EXIT_INPUT
    result = controller.Controller(config, scenario).run()
    print(f"relaxation gap {result.relaxation_gap:.6f}")
    print(f"outputs in {result.output_dir}")
    return EXIT_OK


def validate(args):
    config = load_config(args)
    scenario = scn.load_scenario(config.path("inputDirectory"), config)
    issues = scn.validate_scenario(scenario)
    for issue in issues:
        print(issue)
    if issues:
        print(f"{len(issues)} problems found")
        return EXIT_INPUT
    print(f"{len(scenario.persons)} persons, {len(scenario.network.links)} "
          f"links: scenario is valid")
    return EXIT_OK


def make_toy(args):
    path = toy.make_toy(args.output, args.size, args.persons, args.seed)
    print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {"run": run, "validate": validate, "make-toy": make_toy}


def main(argv=None):
    """
    Run a subcommand

    Returns:
        int: 0 on success, 2 for bad input, 3 when a day got stuck
    """
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT)
    try:
        code = COMMANDS[args.command](args)
    except scheduler.SchedulerStuck as exc:
        LOG.error("simulation stuck: %s", exc)
        code = EXIT_STUCK
    except errors.InputError as exc:
        LOG.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_INPUT
    if argv is None:
        sys.exit(code)
    return code
