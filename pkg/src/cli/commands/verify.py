import argparse

from src.cli.dependencies import CliCommand, CommandContext
from src.core.config.logger import logger
from src.exceptions.errors import ExitCode
from src.services.verify_service import verify_service


def arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--quick", action="store_true", help="skip the worker-count, experiment-level, depth-trend and Schottky checks")


def verify(context: CommandContext) -> int:
    report = verify_service.verify_suite(
        context.config, context.seed, include_slow=not context.args.quick, threads=context.threads
    )
    with context.results() as uow:
        uow.write_json("report.json", report)
    for check in report.failed:
        logger.error(f"Check {check.name} failed: value {check.value!r}, threshold {check.threshold!r} {check.detail}")
    return 0 if report.passed else ExitCode.CHECKS_FAILED


verify_command = CliCommand(
    "verify", "run the invariant batteries of every module", verify, arguments, config_required=False
)
