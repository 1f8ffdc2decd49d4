from src.cli.dependencies import CliCommand, CommandContext
from src.services.experiment_service import experiment_service


def limit_cone(context: CommandContext) -> int:
    record = experiment_service.run_limit_cone(context.require_config(), context.threads, context.cache)
    with context.results() as uow:
        uow.write_json("estimate.json", record)
    return 0


def growth_indicator(context: CommandContext) -> int:
    """estimate.json with the per-direction values and concavity.json with the shape diagnostics."""
    record, concavity = experiment_service.run_growth_indicator(
        context.require_config(), context.threads, context.cache, context.seed
    )
    with context.results() as uow:
        uow.write_json("estimate.json", record)
        uow.write_json("concavity.json", concavity)
    return 0


limit_cone_command = CliCommand("limit-cone", "estimate the limit cone from Jordan or Cartan projections", limit_cone)
growth_indicator_command = CliCommand(
    "growth-indicator", "estimate the growth indicator on a direction grid", growth_indicator
)
