import argparse

from src.cli.commands.counting import bisector_command, count_command, symmetric_count_command
from src.cli.commands.enumerate import enumerate_command
from src.cli.commands.estimates import growth_indicator_command, limit_cone_command
from src.cli.commands.ps_measure import ps_measure_command
from src.cli.commands.verify import verify_command
from src.cli.dependencies import common_arguments

all_commands = [
    enumerate_command,
    limit_cone_command,
    growth_indicator_command,
    count_command,
    bisector_command,
    symmetric_count_command,
    ps_measure_command,
    verify_command,
]


def build_parser() -> argparse.ArgumentParser:
    """Top-level parser with one subparser per command; the chosen command is stored as ``command``."""
    parser = argparse.ArgumentParser(prog="anosov", description="Orbit counting experiments for discrete subgroups")
    subparsers = parser.add_subparsers(dest="name", required=True)
    common = common_arguments()
    for command in all_commands:
        sub = subparsers.add_parser(command.name, help=command.help, parents=[common])
        if command.arguments is not None:
            command.arguments(sub)
        sub.set_defaults(command=command)
    return parser
