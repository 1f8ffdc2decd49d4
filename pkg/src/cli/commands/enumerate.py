import argparse

from src.cli.dependencies import CliCommand, CommandContext
from src.schemas.results import TableSummary
from src.services.experiment_service import experiment_service
from src.services.schottky_service import schottky_service


def arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--flags", action="store_true", help="also store the attracting flag of every row")
    parser.add_argument("--schottky", action="store_true", help="run the sampled Schottky check on the generators")
    parser.add_argument("--samples", type=int, default=200, help="samples per neighbourhood of the Schottky check")


def enumerate_table(context: CommandContext) -> int:
    """
    Builds the orbit table of the configured generators into the cache.

    Writes summary.json and, with ``--schottky``, schottky.json.
    """
    config = context.require_config()
    gens = config.group.generator_system()
    depth = config.experiment.params.depth
    table = experiment_service.orbit_table(gens, depth, context.args.flags, context.threads, context.cache)
    summary = TableSummary(
        p=table.p,
        depth=table.depth,
        rows=len(table),
        digest=table.digest.hex(),
        flags=table.has_flags,
        path=str(context.cache.path_for(gens, depth)),
    )
    with context.results() as uow:
        uow.write_json("summary.json", summary)
        if context.args.schottky:
            uow.write_json("schottky.json", schottky_service.schottky_check(gens, context.args.samples, context.seed))
    return 0


enumerate_command = CliCommand(
    "enumerate", "enumerate the ball of reduced words into the cache", enumerate_table, arguments
)
