#!/usr/bin/env python

import argparse
import dataclasses
import logging
import os
import sys
from typing import List, Optional

from ztac_py.runtime_utils.env_validation import env_int, validate_environment
from ztac_py.runtime_utils.process_logger import ProcessLogger

from .adversary import load_script
from .bench import DEFAULT_ITERATIONS, bench_primitives, render_bench
from .error import InvariantViolation, SimnetException
from .report import render_report, report_ok, split_sections, summarize_report, write_report
from .runner import run_scenario
from .scenario import load_scenario

logging.getLogger().setLevel("INFO")

DESCRIPTION = """Entry Point to the ZTAC protocol simulator"""


def parse_args(args: List[str]) -> argparse.Namespace:
    """parse args for running this entrypoint script"""
    parser = argparse.ArgumentParser(prog="ztac_sim", description=DESCRIPTION)
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run a scenario and write its report")
    run.add_argument("scenario", help="scenario file")
    run.add_argument("--seed", type=int, default=None, dest="seed", help="overrides the scenario seed")
    run.add_argument("--report", default=None, dest="report", help="report path, stdout if unset")

    attack = commands.add_parser("attack", help="run a scenario under an adversary script")
    attack.add_argument("scenario", help="scenario file")
    attack.add_argument("--script", required=True, dest="script", help="adversary script")
    attack.add_argument("--seed", type=int, default=None, dest="seed", help="overrides the scenario seed")
    attack.add_argument("--report", default=None, dest="report", help="report path, stdout if unset")

    bench = commands.add_parser("bench", help="time every cost model primitive")
    bench.add_argument(
        "--iters",
        type=int,
        default=None,
        dest="iters",
        help=f"iterations per primitive, ZTAC_BENCH_ITERS or {DEFAULT_ITERATIONS} if unset",
    )

    inspect = commands.add_parser("inspect", help="summarize a report file")
    inspect.add_argument("report", help="report file")

    return parser.parse_args(args)


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    written = write_report(text, path)
    logging.info("report written to %s", written)


def run_command(args: argparse.Namespace, script: Optional[str] = None) -> None:
    """run (or attack) a scenario; InvariantViolation after the report is written"""
    config = load_scenario(args.scenario)
    if script is not None:
        load_script(script)
        config = dataclasses.replace(config, adversary=script)

    report = run_scenario(config, seed=args.seed)
    _emit(render_report(report), args.report)
    if not report.ok:
        raise InvariantViolation(report.violations)


def bench_command(args: argparse.Namespace) -> None:
    """print the construction declaration and a TIMINGS section"""
    iterations = args.iters if args.iters is not None else env_int("ZTAC_BENCH_ITERS", DEFAULT_ITERATIONS)
    if iterations < 1:
        raise SimnetException(f"--iters must be at least 1, got {iterations}")
    sys.stdout.write(render_bench(bench_primitives(iterations)))


def inspect_command(args: argparse.Namespace) -> None:
    """print a report summary; InvariantViolation if the report records one"""
    try:
        with open(args.report, "r", encoding="utf-8") as report_file:
            text = report_file.read()
    except OSError as exception:
        raise SimnetException(f"can not read {args.report}: {exception.strerror}") from exception

    sys.stdout.write(summarize_report(text))
    if not report_ok(text):
        invariants = split_sections(text).get("INVARIANTS", [])
        raise InvariantViolation([line.partition("=")[2] for line in invariants if line.startswith("violation=")])


def main(args: argparse.Namespace) -> None:
    """entrypoint into the simulator commands"""
    main_process_logger = ProcessLogger("main", **vars(args))
    main_process_logger.log_start()

    try:
        if args.command == "run":
            run_command(args)
        elif args.command == "attack":
            run_command(args, script=args.script)
        elif args.command == "bench":
            bench_command(args)
        elif args.command == "inspect":
            inspect_command(args)
        main_process_logger.log_complete()
    except Exception as exception:
        main_process_logger.log_failure(exception)
        raise


def start(args: Optional[List[str]] = None) -> None:
    """configure and start the simulator"""
    # parse arguments from the command line
    parsed_args = parse_args(sys.argv[1:] if args is None else args)

    # configure the environment
    os.environ["SERVICE_NAME"] = "ztac_sim"
    validate_environment(
        required_variables=[],
        optional_variables=["ZTAC_SEED", "ZTAC_BENCH_ITERS", "ZTAC_REPORT_DIR"],
    )

    try:
        main(parsed_args)
    except (SimnetException, OSError) as exception:
        sys.stderr.write(f"ztac_sim: {exception}\n")
        sys.exit(1)


if __name__ == "__main__":
    start()
