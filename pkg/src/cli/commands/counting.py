from src.cli.dependencies import CliCommand, CommandContext
from src.models.experiments import CountOutcome
from src.services.experiment_service import experiment_service


def write_outcome(context: CommandContext, outcome: CountOutcome) -> int:
    """results.csv, fit.json, report.json and, when plotting is on, scatter.svg."""
    with context.results() as uow:
        uow.write_series(outcome.record)
        uow.write_json("fit.json", outcome.report.fit)
        uow.write_json("report.json", outcome.report)
        if context.require_config().experiment.params.plot:
            uow.write_scatter(outcome.record, outcome.report.fit)
    return 0


def count(context: CommandContext) -> int:
    """Directional count of the orbit in a cone of the positive Weyl chamber."""
    outcome = experiment_service.run_cone_count(context.require_config(), context.threads, context.cache)
    return write_outcome(context, outcome)


def bisector(context: CommandContext) -> int:
    """Bisector count in the generalized Cartan decomposition of the configured pair."""
    outcome = experiment_service.run_bisector_experiment(context.require_config(), context.threads, context.cache)
    return write_outcome(context, outcome)


def symmetric_count(context: CommandContext) -> int:
    """Coset count on the affine symmetric space of the configured pair."""
    outcome = experiment_service.run_symmetric_count(
        context.require_config(), context.threads, context.cache, context.seed
    )
    return write_outcome(context, outcome)


count_command = CliCommand("count", "count orbit points in a cone and fit the growth rate", count)
bisector_command = CliCommand("bisector", "bisector count for a symmetric pair", bisector)
symmetric_count_command = CliCommand("symmetric-count", "coset count on an affine symmetric space", symmetric_count)
