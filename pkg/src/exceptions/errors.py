from typing import Any, Sequence


class ExitCode:
    UNHANDLED = 1
    INVALID_INPUT = 2
    PRECONDITION = 3
    DECOMPOSITION = 4
    RESOURCE = 5
    NON_FREE = 6
    CACHE = 7
    DATA = 8
    ABORTED = 9
    CHECKS_FAILED = 10


class AnosovError(Exception):
    def __init__(self, msg: str, exit_code: int = ExitCode.UNHANDLED) -> None:
        self.msg = msg
        self.exit_code = exit_code
        super().__init__(self.msg)


class InvalidInputError(AnosovError):
    def __init__(self, what: str) -> None:
        super().__init__(f"Invalid input: {what}.", ExitCode.INVALID_INPUT)


class DimensionMismatchError(AnosovError):
    def __init__(self, left: Any, right: Any) -> None:
        super().__init__(f"Dimension mismatch: {left} vs {right}.", ExitCode.INVALID_INPUT)


class ConfigurationError(AnosovError):
    def __init__(self, what: str) -> None:
        super().__init__(f"Configuration error: {what}.", ExitCode.INVALID_INPUT)


class PreconditionError(AnosovError):
    def __init__(self, what: str) -> None:
        super().__init__(f"Precondition violated: {what}.", ExitCode.PRECONDITION)


class DecompositionError(AnosovError):
    def __init__(self, what: str, residual: float | None = None) -> None:
        suffix = f" (residual {residual!r})" if residual is not None else ""
        super().__init__(f"Decomposition failed: {what}{suffix}.", ExitCode.DECOMPOSITION)
        self.residual = residual


class AmbiguityError(DecompositionError):
    def __init__(self, what: str) -> None:
        super().__init__(f"ambiguous decomposition, {what}")


class ResourceBudgetError(AnosovError):
    def __init__(self, estimated: int, bound: int) -> None:
        super().__init__(
            f"Estimated {estimated} rows exceed the memory budget MEMORY_BUDGET_ROWS={bound}.",
            ExitCode.RESOURCE,
        )
        self.estimated = estimated
        self.bound = bound


class MatrixOverflowError(AnosovError):
    def __init__(self, word: Sequence[int], cap: float) -> None:
        super().__init__(f"Matrix entries exceed {cap!r} at word {tuple(word)}.", ExitCode.RESOURCE)
        self.word = tuple(word)


class NonFreeInputError(AnosovError):
    def __init__(self, first: Sequence[int], second: Sequence[int]) -> None:
        super().__init__(
            f"Distinct reduced words {tuple(first)} and {tuple(second)} give the same matrix; "
            "the generators do not generate a free group at this depth.",
            ExitCode.NON_FREE,
        )
        self.words = (tuple(first), tuple(second))


class StaleCacheError(AnosovError):
    def __init__(self, path: Any) -> None:
        super().__init__(f"Orbit cache {path} was built from different generators or depth.", ExitCode.CACHE)


class CorruptCacheError(AnosovError):
    def __init__(self, path: Any, reason: str) -> None:
        super().__init__(f"Orbit cache {path} is corrupt: {reason}.", ExitCode.CACHE)


class InsufficientDataError(AnosovError):
    def __init__(self, what: str) -> None:
        super().__init__(f"Insufficient data: {what}.", ExitCode.DATA)


class FitError(AnosovError):
    def __init__(self, what: str) -> None:
        super().__init__(f"Fit failed: {what}.", ExitCode.DATA)


class DegenerateMeasureError(AnosovError):
    def __init__(self) -> None:
        super().__init__("All atom weights underflow; the measure is degenerate.", ExitCode.DATA)


class NumericalError(AnosovError):
    def __init__(self, what: str) -> None:
        super().__init__(f"Numerical failure: {what}.", ExitCode.DATA)


class ExperimentAbortedError(AnosovError):
    def __init__(self, what: str) -> None:
        super().__init__(f"Experiment aborted: {what}.", ExitCode.ABORTED)
