import inspect
import sys
from typing import Callable

from src.core.config.logger import logger
from src.exceptions.errors import ExitCode
from src.exceptions.handlers import exception_handlers


class ExceptionHandler:
    """
    Guard around a CLI command.

    Known errors are turned into a JSON error payload on stderr and the exit code of their class.
    Anything else is logged with the file, line number and function where it was raised, and
    the command exits with ``ExitCode.UNHANDLED``.
    """

    def __init__(self, handlers: list | None = None) -> None:
        self.handlers = handlers if handlers is not None else exception_handlers

    def dispatch(self, command: Callable[[], int]) -> int:
        """
        Runs the command and converts raised exceptions into exit codes.

        Args:
            command: Zero-argument callable returning an exit code.

        Returns:
            int: The command's exit code, or the code mapped from the raised exception.
        """
        try:
            return command()
        except Exception as err:
            for exception, handler in self.handlers:
                if isinstance(err, exception):
                    response = handler(err)
                    logger.error(response.message)
                    sys.stderr.write(response.model_dump_json() + "\n")
                    return response.exit_code
            trace = inspect.trace()[-1]
            logger.error(
                f"""
                                Message: {str(err)}
                                File: {trace.filename}
                                Line number: {trace.lineno}
                                Function: {trace.function}
                                """
            )
            return ExitCode.UNHANDLED
