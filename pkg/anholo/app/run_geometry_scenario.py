#!/usr/bin/env python3
from dotenv import load_dotenv

load_dotenv()
import os
import sys
import argparse
from typing import List, Optional

from pydantic import ValidationError

from anholo.utils.logging import LOGGER
from anholo.schemas.conf.run import (
    CHERN_TASKS,
    COVER_TASKS,
    SPIN_TASKS,
    RunConfig,
    SelftestConf,
)
from anholo.data.pipes.config_files import LocalJSONPipeline
from anholo.data.store.stores import REPORT_DATA_STORE as report_store
from anholo.models.scenarios.scenario_dispatcher import create_scenario
from anholo.utils.errors import ConfigurationError, ExpressionSyntaxError
from anholo.utils.globals import DEFAULT_SEED

"""
Command line entry point. `run` executes the task list of a JSON run
configuration and writes the report to stdout or --out; `cech`, `dirac` and
`chern` run one task family; `selftest` runs the built-in corpus of checks.
Exit codes: 0 success, 1 configuration error, 2 task or check failure.
"""

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_TASK_FAILURE = 2

FAMILIES = {"cech": COVER_TASKS, "dirac": SPIN_TASKS, "chern": CHERN_TASKS}


def default_seed() -> int:
    return int(os.getenv("ANHOLO_SEED", DEFAULT_SEED))


def cover_config(path: str) -> RunConfig:
    """
    Run configuration of a bare cover file: cohomology always, the chain and
    section tasks when the file carries them
    """
    bundle = LocalJSONPipeline(file_path=path, data_type="cover").load()
    tasks = ["cohomology"]
    if bundle.chain is not None:
        tasks += ["cocycle", "spin_obstruction"]
        if bundle.sections is not None:
            tasks.append("glue")
    return RunConfig(source={"kind": "cover", "file": path}, tasks=tasks)


def load_config(path: str, family: Optional[str] = None) -> RunConfig:
    pipeline = LocalJSONPipeline(file_path=path, data_type="run-config")
    document = pipeline.document()
    if family == "cech" and isinstance(document, dict) and "elements" in document:
        return cover_config(path)
    config = pipeline.load()
    if family is None:
        return config
    tags = FAMILIES[family]
    tasks = [t for t in config.tasks if t in tags]
    if not tasks:
        raise ConfigurationError(f"Config {path} lists no {family} tasks")
    return config.copy(update={"tasks": tasks})


def write_output(text: str, out: Optional[str]):
    if out:
        report_store.write_file(out, text + "\n")
        LOGGER.info(f"Report written to {out}")
    else:
        sys.stdout.write(text + "\n")


def run_selftest(args) -> int:
    seed = DEFAULT_SEED if args.seed is None else args.seed
    config = SelftestConf(seed=seed, tol_scale=args.tol_scale)
    table = create_scenario(config).run(progress_bar=args.progress)
    write_output(table.to_string(index=False), args.out)
    failed = table[~table["passed"]]
    LOGGER.info(f"Selftest: {len(table) - len(failed)} of {len(table)} checks passed")
    for _, row in failed.iterrows():
        LOGGER.error(f"Check {row['module']}.{row['check']} failed: {row['residual']}")
    return EXIT_TASK_FAILURE if len(failed) else EXIT_OK


def run_config(args) -> int:
    family = None if args.command == "run" else args.command
    config = load_config(args.config, family)
    seed = args.seed if args.seed is not None else config.seed
    scenario = create_scenario(config, tol_scale=args.tol_scale, seed=seed)
    report = scenario.run(progress_bar=args.progress)
    write_output(report.to_json(pretty=args.pretty), args.out)
    if report.failed:
        for result in report.results:
            if result.status == "failed":
                LOGGER.error(f"Task {result.task} failed: {result.error}")
        return EXIT_TASK_FAILURE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anholo", description="N-anholonomic geometry engine"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    commands = {
        "run": "Run every task of a configuration",
        "cech": "Run the cover tasks of a configuration or a bare cover file",
        "dirac": "Run the spin geometry tasks of a configuration",
        "chern": "Run the Chern tasks of a configuration",
        "selftest": "Run the built-in corpus of named checks",
    }
    for name, description in commands.items():
        sub = subparsers.add_parser(name, help=description)
        required = sub.add_argument_group("required arguments")
        optional = sub.add_argument_group("optional arguments")
        if name != "selftest":
            required.add_argument("config", help="Path to a JSON configuration")
        optional.add_argument("--out", "-o", default=None, help="Output file path")
        optional.add_argument(
            "--seed",
            type=int,
            default=None,
            help="Seed of the randomized checks, defaults to ANHOLO_SEED",
        )
        optional.add_argument(
            "--tol-scale",
            type=float,
            default=1.0,
            help="Multiplies every tolerance",
        )
        output = optional.add_mutually_exclusive_group()
        output.add_argument(
            "--json", action="store_false", dest="pretty", help="Compact JSON"
        )
        output.add_argument(
            "--pretty", action="store_true", dest="pretty", help="Indented JSON"
        )
        optional.add_argument(
            "--progress",
            action="store_true",
            help="Shows a progress bar over tasks",
        )
        sub.set_defaults(pretty=False)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is None and "ANHOLO_SEED" in os.environ:
        args.seed = default_seed()
    try:
        if args.command == "selftest":
            return run_selftest(args)
        return run_config(args)
    except (ValidationError, ConfigurationError, ExpressionSyntaxError) as e:
        LOGGER.error(f"Configuration error: {e}")
        return EXIT_CONFIG_ERROR
    except (ValueError, ArithmeticError) as e:
        LOGGER.error(f"Run failed: {type(e).__name__}: {e}")
        return EXIT_TASK_FAILURE


if __name__ == "__main__":
    sys.exit(main())
