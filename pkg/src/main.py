import sys
from typing import Sequence

from src.cli.dependencies import resolve_context
from src.cli.main_commands import build_parser
from src.exceptions.error_handler import ExceptionHandler


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point of the ``anosov`` command; returns the process exit code."""
    args = build_parser().parse_args(argv)

    def run() -> int:
        return args.command.handler(resolve_context(args, args.command))

    return ExceptionHandler().dispatch(run)


if __name__ == "__main__":
    sys.exit(main())
