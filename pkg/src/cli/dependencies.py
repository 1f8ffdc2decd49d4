import argparse
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from src.core.config.app_settings import settings
from src.core.config.logger import logger
from src.exceptions.errors import ConfigurationError
from src.repositories.orbit_tables import OrbitTableRepository
from src.schemas.config import ExperimentConfig
from src.services.experiment_service import experiment_service
from src.utils.unitofwork import ResultsUnitOfWork

Handler = Callable[["CommandContext"], int]


@dataclass(frozen=True)
class CliCommand:
    """
    A subcommand: its name, help line, handler and optional extra arguments.

    Attributes:
        name (str): Subcommand name.
        help (str): One-line description shown by ``--help``.
        handler (Handler): Function of the resolved context returning an exit code.
        arguments (Callable | None): Adds command-specific arguments to its parser.
        config_required (bool): Whether ``--config`` must be given.
    """

    name: str
    help: str
    handler: Handler
    arguments: Callable[[argparse.ArgumentParser], None] | None = None
    config_required: bool = True


@dataclass(frozen=True)
class CommandContext:
    """
    Everything a command needs after the common flags are resolved.

    Attributes:
        args (argparse.Namespace): Parsed arguments, for command-specific flags.
        config (ExperimentConfig | None): Loaded configuration with ``--depth`` applied.
        out (Path): Output directory.
        seed (int): Effective random seed.
        threads (int): Worker count.
        cache (OrbitTableRepository): Orbit table cache.
    """

    args: argparse.Namespace
    config: ExperimentConfig | None
    out: Path
    seed: int
    threads: int
    cache: OrbitTableRepository

    def require_config(self) -> ExperimentConfig:
        if self.config is None:
            raise ConfigurationError("this command needs --config")
        return self.config

    def results(self) -> ResultsUnitOfWork:
        return ResultsUnitOfWork(self.out)


def common_arguments() -> argparse.ArgumentParser:
    """Parent parser with the flags shared by every subcommand."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", type=Path, help="experiment configuration (.json, .yaml or .yml)")
    parser.add_argument("--depth", type=int, help="word-length radius L, overrides the configuration")
    parser.add_argument("--out", type=Path, help="output directory (default: configuration output or ./results)")
    parser.add_argument("--seed", type=int, help="random seed, overrides the configuration")
    parser.add_argument("--threads", type=int, help=f"worker count (default {settings.THREADS})")
    parser.add_argument("--cache-dir", type=Path, help="orbit cache directory, overrides ANOSOV_CACHE_DIR")
    return parser


def resolve_context(args: argparse.Namespace, command: CliCommand) -> CommandContext:
    """
    Loads the configuration and applies the command-line overrides.

    Raises:
        ConfigurationError: On a missing required configuration or a bad override.
    """
    config = None
    if args.config is not None:
        config = ExperimentConfig.load(args.config)
        if args.depth is not None:
            if args.depth < 0:
                raise ConfigurationError(f"--depth must be non-negative, got {args.depth}")
            params = config.experiment.params.model_copy(update={"depth": args.depth})
            config = config.model_copy(update={"experiment": config.experiment.model_copy(update={"params": params})})
    elif command.config_required:
        raise ConfigurationError(f"{command.name} needs --config")
    if args.seed is not None and args.seed < 0:
        raise ConfigurationError(f"--seed must be non-negative, got {args.seed}")
    threads = args.threads if args.threads is not None else settings.THREADS
    if threads < 1:
        raise ConfigurationError(f"--threads must be at least 1, got {threads}")

    out = args.out or (config.output if config is not None and config.output is not None else Path("results"))
    if config is not None:
        seed = experiment_service.resolve_seed(config, args.seed)
    else:
        seed = args.seed if args.seed is not None else settings.SEED
    cache = OrbitTableRepository(args.cache_dir)
    logger.debug(f"{command.name}: out={out}, seed={seed}, threads={threads}, cache={cache.cache_dir}")
    return CommandContext(args=args, config=config, out=Path(out), seed=seed, threads=threads, cache=cache)
