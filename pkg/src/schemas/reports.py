from typing import Any, Literal

from pydantic import BaseModel, Field


class ErrorResponse(BaseModel):
    """
    Machine-readable error payload written to stderr by the CLI.

    Attributes:
        kind (str): Error family.
        message (str): Human-readable message.
        exit_code (int): Process exit code.
        details (dict): Extra structured data, e.g. the colliding words of a non-free input.
    """

    kind: str
    message: str
    exit_code: int
    details: dict[str, Any] = Field(default_factory=dict)


class CheckResult(BaseModel):
    """
    One entry of the verification report.

    Attributes:
        name (str): Check identifier.
        module (str): Library area the check belongs to.
        passed (bool): Outcome.
        hard (bool): Hard checks gate the exit code; diagnostics do not.
        value (float | None): Measured quantity, e.g. a maximal error.
        threshold (float | None): Bound the value is compared against.
        detail (str): Free-form explanation.
    """

    name: str
    module: str
    passed: bool
    hard: bool = True
    value: float | None = None
    threshold: float | None = None
    detail: str = ""


class VerifyReport(BaseModel):
    """
    Outcome of the verification suite.

    Attributes:
        seed (int): Seed used for every randomized check.
        passed (bool): Whether all hard checks passed.
        checks (list[CheckResult]): Individual results in execution order.
    """

    seed: int
    passed: bool
    checks: list[CheckResult]

    @property
    def failed(self) -> list[CheckResult]:
        return [check for check in self.checks if check.hard and not check.passed]


class SchottkyReport(BaseModel):
    """
    Result of the sampled Schottky check.

    Attributes:
        verdict: ``pass`` only if all conditions hold at both sample sizes.
        conditions (dict[str, bool]): Outcome per condition for the selected radii.
        epsilon_hat (float): Largest sampled Lipschitz ratio of a generator on its big neighbourhood.
        small_radius (float): Radius of the neighbourhoods b.
        big_radius (float): Radius of the neighbourhoods B.
        sample_count (int): Samples per neighbourhood in the first pass.
    """

    verdict: Literal["pass", "fail", "inconclusive"]
    conditions: dict[str, bool]
    epsilon_hat: float
    small_radius: float
    big_radius: float
    sample_count: int
