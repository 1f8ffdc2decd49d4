from src.cli.dependencies import CliCommand, CommandContext
from src.services.boundary_service import boundary_service
from src.services.experiment_service import experiment_service


def ps_measure(context: CommandContext) -> int:
    """atoms.csv with one row per atom and report.json with cylinder masses and the conformality residual."""
    measure, report = experiment_service.run_ps_measure(context.require_config(), context.threads, context.cache)
    header, rows = boundary_service.atoms_table(measure)
    with context.results() as uow:
        uow.write_csv("atoms.csv", header, rows)
        uow.write_json("report.json", report)
    return 0


ps_measure_command = CliCommand("ps-measure", "atomic Patterson-Sullivan approximation on the flag variety", ps_measure)
