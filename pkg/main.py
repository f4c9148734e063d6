#!/usr/bin/env python3

import sys
import logging
from pathlib import Path
from typing import List, Optional, Tuple
import traceback
from datetime import datetime
import argparse
import os

from config import COMMANDS, RunConfig, parse_nk, parse_sweep
from suites import CheckResult, SuiteBuilder, run_checks

# Configure basic logging first
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    handlers=[logging.StreamHandler(sys.stdout)],
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_INTERNAL_ERROR = 3


class ConfigError(ValueError):
    """Raised for anything wrong with the command line or configuration file"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polylab",
        description="Verify the explicit mathematics of higher-order Q-curvature analysis",
    )
    parser.add_argument("command", choices=COMMANDS, help="Suite to run")
    parser.add_argument("--nk", action="append", default=[], metavar="N,K", help="Dimension pair (repeatable)")
    parser.add_argument("--tol", type=float, help="Tolerance override for tolerance-driven checks")
    parser.add_argument("--sweep", help="Sweep grids, e.g. 'rho=10,100;xi=0,0.5'")
    parser.add_argument("-c", "--config", help="Path to configuration file")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--seed", type=int, help="Random seed for property checks")
    parser.add_argument("--csv", action="store_true", help="Also write report.csv")
    parser.add_argument("--svg", action="store_true", help="Also render SVG plots")
    parser.add_argument("--xlsx", action="store_true", help="Also write report.xlsx")
    parser.add_argument("--workers", type=int, help="Worker processes for independent checks")
    parser.add_argument("--timings", action="store_true", help="Record runtime_ms per check")
    parser.add_argument("--log-dir", help="Directory for the run log file")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """JSON file first, then command-line flags on top"""
    try:
        if args.config:
            if not os.path.exists(args.config):
                raise FileNotFoundError(f"Configuration file not found: {args.config}")
            config = RunConfig.load_from_json(args.config, command=args.command)
        else:
            config = RunConfig(command=args.command)

        if args.nk:
            config.dimensions = [parse_nk(text) for text in args.nk]
        if args.tol is not None:
            config.tol = args.tol
        if args.sweep:
            config.sweep.update(parse_sweep(args.sweep))
        if args.out:
            config.out_dir = args.out
        if args.seed is not None:
            config.seed = args.seed
        if args.workers is not None:
            config.workers = args.workers
        if args.log_dir:
            config.log_dir = args.log_dir
        config.csv = config.csv or args.csv
        config.svg = config.svg or args.svg
        config.xlsx = config.xlsx or args.xlsx
        config.timings = config.timings or args.timings

        config.validate()
    except (ValueError, TypeError, OSError) as e:
        raise ConfigError(str(e)) from e
    return config


def enhance_logging(config: RunConfig, base_logger: logging.Logger) -> Tuple[logging.Logger, logging.Handler]:
    """Enhance logging with file output"""
    log_dir = config.resolved_log_dir
    log_dir.mkdir(parents=True, exist_ok=True)

    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    log_file = log_dir / f"polylab_{config.command}_{timestamp}.log"

    file_handler = logging.FileHandler(log_file)
    file_handler.setFormatter(logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s"))

    logging.getLogger().addHandler(file_handler)
    base_logger.setLevel(logging.INFO)

    return base_logger, file_handler


def write_outputs(config: RunConfig, results: List[CheckResult]) -> List[str]:
    from report_writer import ReportWriter

    files_created = ReportWriter(config).write_all(results)
    if config.svg:
        from plot_renderer import PlotRenderer

        files_created += PlotRenderer().write_all(results, config.out_dir)
    return files_created


def execute(config: RunConfig) -> Tuple[bool, List[CheckResult]]:
    """Build the suite, run it, write the reports"""
    checks = SuiteBuilder(config).build()
    logger.info(f"Running {len(checks)} checks for '{config.command}' with {config.workers} workers")
    results = run_checks(checks, workers=config.workers)
    files_created = write_outputs(config, results)
    logger.info(f"Created {len(files_created)} report files")

    failed = [result.name for result in results if not result.passed]
    for name in failed:
        logger.error(f"Check failed: {name}")
    return not failed, results


def print_summary(
    start_time: datetime, status: str, config: Optional[RunConfig], results: Optional[List[CheckResult]] = None
) -> None:
    """Print execution summary"""
    end_time = datetime.now()
    duration = end_time - start_time

    print("\nExecution Summary:")
    if config:
        print(f"Command: {config.command}")
    print(f"Status: {status}")
    if results is not None:
        passed = sum(1 for result in results if result.passed)
        print(f"Checks passed: {passed}/{len(results)}")
    if config:
        print(f"Report: {Path(config.out_dir) / 'report.json'}")
    print(f"Started at: {start_time:%Y-%m-%d %H:%M:%S}")
    print(f"Ended at: {end_time:%Y-%m-%d %H:%M:%S}")
    print(f"Total duration: {duration}")


def run(argv: Optional[List[str]] = None) -> int:
    """Run one polylab command; returns the process exit status"""
    start_time = datetime.now()
    config = None
    results = None
    file_handler = None
    try:
        args = build_parser().parse_args(argv)
        config = load_config(args)

        global logger
        logger, file_handler = enhance_logging(config, logger)
        logger.info(f"Configuration: {config.config_echo()}")

        success, results = execute(config)
        status, code = ("SUCCESS", EXIT_OK) if success else ("FAILURE", EXIT_CHECK_FAILED)

    except SystemExit as e:
        # argparse already printed its usage message
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG_ERROR
    except ConfigError as e:
        logger.error(f"Configuration error: {str(e)}")
        print(f"Configuration error: {str(e)}", file=sys.stderr)
        status, code, config = "FAILURE (Configuration error)", EXIT_CONFIG_ERROR, None
    except Exception as e:
        logger.error(f"Critical error in polylab run: {str(e)}")
        logger.error(traceback.format_exc())
        status, code = "FAILURE (Internal error)", EXIT_INTERNAL_ERROR
    finally:
        if file_handler is not None:
            logging.getLogger().removeHandler(file_handler)
            file_handler.close()

    print_summary(start_time, status, config, results)
    return code


def main():
    """Main entry point for the application"""
    sys.exit(run())


if __name__ == "__main__":
    main()
