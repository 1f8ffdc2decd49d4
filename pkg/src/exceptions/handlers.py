from src.exceptions.errors import (
    AnosovError,
    CorruptCacheError,
    DecompositionError,
    ExperimentAbortedError,
    MatrixOverflowError,
    NonFreeInputError,
    ResourceBudgetError,
    StaleCacheError,
)
from src.schemas.reports import ErrorResponse


def resource_error_handler(exc: ResourceBudgetError | MatrixOverflowError) -> ErrorResponse:
    return ErrorResponse(kind="resource", message=exc.msg, exit_code=exc.exit_code)


def non_free_handler(exc: NonFreeInputError) -> ErrorResponse:
    return ErrorResponse(
        kind="non-free-input",
        message=exc.msg,
        exit_code=exc.exit_code,
        details={"words": [list(word) for word in exc.words]},
    )


def cache_error_handler(exc: StaleCacheError | CorruptCacheError) -> ErrorResponse:
    return ErrorResponse(kind="cache", message=exc.msg, exit_code=exc.exit_code)


def decomposition_error_handler(exc: DecompositionError) -> ErrorResponse:
    details = {"residual": exc.residual} if exc.residual is not None else {}
    return ErrorResponse(kind="decomposition", message=exc.msg, exit_code=exc.exit_code, details=details)


def experiment_aborted_handler(exc: ExperimentAbortedError) -> ErrorResponse:
    return ErrorResponse(kind="aborted", message=exc.msg, exit_code=exc.exit_code)


def anosov_error_handler(exc: AnosovError) -> ErrorResponse:
    return ErrorResponse(kind=type(exc).__name__, message=exc.msg, exit_code=exc.exit_code)


# Most specific first; the first matching entry wins.
exception_handlers = [
    (ResourceBudgetError, resource_error_handler),
    (MatrixOverflowError, resource_error_handler),
    (NonFreeInputError, non_free_handler),
    (StaleCacheError, cache_error_handler),
    (CorruptCacheError, cache_error_handler),
    (DecompositionError, decomposition_error_handler),
    (ExperimentAbortedError, experiment_aborted_handler),
    (AnosovError, anosov_error_handler),
]
